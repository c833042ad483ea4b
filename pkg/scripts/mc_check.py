"""Monte-Carlo check of the channel against the analytic variances and information density.

Runs g in {0, ln 3} x correction in {none, ideal} with shared draws and
prints per-run variance z-scores, reality defect and J comparison.
"""

import argparse
import math
import time

import numpy as np

from densecode.capacity import information_density
from densecode.channel import ChannelConfig, SignalEnsemble
from densecode.opa import Correction, OpaParams
from densecode.simulator import Lattice, RunConfig, estimate_capacity, lattice_information, simulate_many


def run(seed, samples, threads, shape, P, d_A):
    lattice = Lattice(shape)
    ens = SignalEnsemble(P, d_A)
    runs = [
        RunConfig(seed, samples, ChannelConfig.from_params(OpaParams(g=g), c), ensemble=ens,
                  lattice=lattice, threads=threads)
        for g in (0.0, math.log(3)) for c in (Correction.NONE, Correction.IDEAL)
    ]
    t0 = time.perf_counter()
    results = simulate_many(runs)
    print(f"simulated {len(runs)} runs x {samples} samples in {time.perf_counter() - t0:.1f} s")
    rep = np.arange(lattice.size) <= lattice.negation
    for r, res in zip(runs, results):
        z = max(
            float(np.max(np.abs(((res.variance(s) - res.analytic_variance(s)) / res.standard_error(s))
                                .reshape(2, -1)[:, rep])))
            for s in (0, 1)
        )
        J, half = estimate_capacity(res)
        cont = information_density(r.channel, ens, tol=1e-10).J
        lat = lattice_information(r)
        print(
            f"g={r.channel.g:.4f} {r.channel.correction.value:>6}: max|z|={z:.2f} "
            f"defect={res.reality_defect:.1e} J_emp={J:.5f}+-{half:.5f} "
            f"J_lattice={lat:.5f} J_continuum={cont:.5f}"
        )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--shape", type=int, nargs=3, default=(64, 64, 16))
    ap.add_argument("--P", type=float, default=1.0)
    ap.add_argument("--d_A", type=float, default=1.0)
    a = ap.parse_args()
    run(a.seed, a.samples, a.threads, tuple(a.shape), a.P, a.d_A)
