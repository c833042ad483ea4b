"""Command-line front end: ``densecode MODE [--config PATH] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import CapacityResult, information_density, sweep, vacuum_information_density
from .channel import ChannelConfig, SignalEnsemble, noise_variance, signal_variance
from .config import MODES, ConfigError, JobSpec, help_text, parse_config, render, update
from .opa import Correction, OpaParams, build_spectrum
from .simulator import InsufficientSamples, Lattice, RunConfig, estimate_capacity, simulate

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_IO = 0, 2, 3, 4

# keys that only affect execution, never the numbers; left out of headers
EXECUTION_KEYS = ("threads",)

FIG_SQUEEZING = 3.0  # exp r(0,0) for the spectrum figures
FIG_CAPACITY_SQUEEZING = 10.0
FIG_FLUXES = {"fig4a": 1.0, "fig4b": 10.0}
FIG_D_A = tuple(float(x) for x in np.geomspace(0.1, 20.0, 25))


class Failure(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{x:.12g}"


def header_lines(spec: JobSpec) -> list[str]:
    lines = [f"densecode {__version__}"]
    lines += [ln for ln in render(spec).splitlines() if ln.split("=")[0].strip() not in EXECUTION_KEYS]
    return ["# " + ln for ln in lines]


def write_csv(path: Path, spec: JobSpec, columns, rows, extra_header=()):
    text = header_lines(spec) + [f"# {h}" for h in extra_header]
    text.append(",".join(columns))
    text += [",".join(fmt(v) for v in row) for row in rows]
    try:
        path.write_text("\n".join(text) + "\n")
    except OSError as exc:
        raise Failure(f"cannot write {path}: {exc}", EXIT_IO) from None
    return path


def _params(spec: JobSpec, g=None) -> OpaParams:
    return OpaParams(
        g=spec["g"] if g is None else g,
        detuning_offset=spec["detuning_offset"],
        temporal_dispersion=spec["temporal_dispersion"],
        qc_convention=spec["qc_convention"],
    )


def _ensemble(spec: JobSpec, P=None) -> SignalEnsemble:
    return SignalEnsemble(spec["P"] if P is None else P, spec["d_A"], spec["temporal_band"])


def _kappa_grid(spec: JobSpec):
    return np.linspace(0.0, spec["kappa_max"], spec["n_kappa"])


def _axis_value(spec: JobSpec, result: CapacityResult):
    return {"d_A": result.d_A, "P": result.photon_flux, "g": result.g}[spec["axis"]]


def _summary(result: CapacityResult, units: str) -> str:
    return (
        f"g={fmt(result.g)} P={fmt(result.photon_flux)} d_A={fmt(result.d_A)} "
        f"correction={result.correction} J={fmt(result.value(units))} {units} "
        f"quad_error={fmt(result.quadrature_error)} status={result.status}"
    )


def run_spectrum(spec, out):
    s = build_spectrum(_params(spec), spec["correction"], _kappa_grid(spec), spec["omega"])
    rows = [
        (k, w, U.real, U.imag, V.real, V.imag, r, psi, phi)
        for k, w, U, V, r, psi, phi in s.rows()
    ]
    cols = ("kappa", "omega", "re_U", "im_U", "re_V", "im_V", "r", "psi", "phi")
    write_csv(out / "spectrum.csv", spec, cols, rows)
    return EXIT_OK


def _inverse_noise_curves(params, kappa):
    curves = {}
    for c in Correction:
        curves[c.value] = noise_variance(ChannelConfig.from_params(params, c), 1, kappa, 0.0)
    return curves


def run_variance(spec, out):
    kappa = _kappa_grid(spec)
    sigma = _inverse_noise_curves(_params(spec), kappa)
    sigma_A = signal_variance(_ensemble(spec), kappa, 0.0)
    rows = zip(kappa, sigma["none"], sigma["quadratic_lens"], sigma["ideal"], sigma_A)
    cols = ("kappa", "sigma_BA_none", "sigma_BA_lens", "sigma_BA_ideal", "sigma_A")
    write_csv(out / "variance.csv", spec, cols, rows)
    return EXIT_OK


def _capacity_rows(spec, results):
    units = spec["units"]
    rows = []
    for res in results:
        print(_summary(res, units))
        rows.append((
            _axis_value(spec, res), res.J, res.J_bits, res.quadrature_error,
            res.correction, res.g, res.photon_flux, res.d_A,
        ))
    return rows


CAPACITY_COLUMNS = ("axis_value", "J_nats", "J_bits", "quad_error", "correction_mode", "g", "P", "d_A")


def run_capacity(spec, out, values=None):
    config = ChannelConfig.from_params(_params(spec), spec["correction"])
    ensemble = _ensemble(spec)
    if values is None:
        values = [{"d_A": ensemble.d_A, "P": ensemble.photon_flux, "g": config.g}[spec["axis"]]]
    results = sweep(config, ensemble, spec["axis"], values, spec["tol"], workers=spec["threads"])
    name = "capacity.csv" if spec.mode == "capacity" else "sweep.csv"
    write_csv(out / name, spec, CAPACITY_COLUMNS, _capacity_rows(spec, results))
    failed = [r for r in results if r.status != "ok"]
    if failed:
        raise Failure(f"{len(failed)} point(s) failed: {failed[0].status}", EXIT_TOLERANCE)
    return EXIT_OK


def run_sweep(spec, out):
    return run_capacity(spec, out, values=spec["values"])


def run_simulate(spec, out):
    channel = ChannelConfig.from_params(_params(spec), spec["correction"])
    ensemble = _ensemble(spec) if spec["P"] > 0 else None
    lattice = Lattice((spec["nx"], spec["ny"], spec["nt"]), spec["kappa_step"], spec["omega_step"])
    run = RunConfig(
        seed=spec["seed"], n_samples=spec["n_samples"], channel=channel, ensemble=ensemble,
        lattice=lattice, blocks=spec["blocks"], threads=spec["threads"],
    )
    result = simulate(run)
    state = 1 if ensemble is not None else 0
    emp, ana = result.variance(state), result.analytic_variance(state)
    kappa, omega = lattice.kappa.ravel(), lattice.omega.ravel()
    rows = zip(kappa, omega, emp[0].ravel(), ana[0].ravel(), emp[1].ravel(), ana[1].ravel())
    cols = ("kappa", "omega", "var_i1_emp", "var_i1_analytic", "var_i2_emp", "var_i2_analytic")
    extra = [f"seed = {run.seed}", f"n_samples = {run.n_samples}"]

    units = spec["units"]
    scale = 1.0 if units == "nats" else 1 / math.log(2)
    from .simulator import lattice_information

    code = EXIT_OK
    try:
        J_emp, conf = estimate_capacity(result)
    except InsufficientSamples as exc:
        J_emp, conf, code = math.nan, math.nan, EXIT_TOLERANCE
        print(f"error: {exc}", file=sys.stderr)
    J_ana = lattice_information(run)
    summary = f"J_emp={fmt(J_emp * scale)} J_analytic={fmt(J_ana * scale)} conf={fmt(conf * scale)} units={units}"
    extra.append(summary)
    write_csv(out / "simulate.csv", spec, cols, rows, extra)
    print(summary)
    return code


def _figure_spectra(spec, exp_r, kappa):
    params = _params(spec, g=math.log(exp_r))
    return {c.value: build_spectrum(params, c, kappa, (0.0,)) for c in Correction}


def run_figures(spec, out):
    kappa = _kappa_grid(spec)
    spectra = _figure_spectra(spec, FIG_SQUEEZING, kappa)
    rows = zip(
        kappa,
        spectra["none"].r[:, 0], spectra["none"].psi[:, 0],
        spectra["quadratic_lens"].r[:, 0], spectra["quadratic_lens"].psi[:, 0],
        spectra["ideal"].r[:, 0], spectra["ideal"].psi[:, 0],
    )
    write_csv(out / "fig2.csv", spec,
              ("kappa", "r_none", "psi_none", "r_lens", "psi_lens", "r_ideal", "psi_ideal"), rows,
              [f"exp_r00 = {FIG_SQUEEZING:g}"])

    sigma = _inverse_noise_curves(_params(spec, g=math.log(FIG_SQUEEZING)), kappa)
    rows = zip(kappa, np.ones_like(kappa), 1 / sigma["none"], 1 / sigma["ideal"], 1 / sigma["quadratic_lens"])
    write_csv(out / "fig3.csv", spec,
              ("kappa", "curve1_vacuum", "curve2_none", "curve3_ideal", "curve4_lens"), rows,
              [f"exp_r00 = {FIG_SQUEEZING:g}", "inverse noise variance of detector 1 at omega = 0"])

    units = spec["units"]
    params = _params(spec, g=math.log(FIG_CAPACITY_SQUEEZING))
    configs = {c.value: ChannelConfig.from_params(params, c) for c in Correction}
    failed = 0
    for name, P in FIG_FLUXES.items():
        ensemble = _ensemble(spec, P=P)
        curves = {"vacuum": [vacuum_information_density(P, d) * (1 if units == "nats" else 1 / math.log(2))
                             for d in FIG_D_A]}
        for key, config in configs.items():
            res = sweep(config, ensemble, "d_A", FIG_D_A, spec["tol"], workers=spec["threads"])
            failed += sum(r.status != "ok" for r in res)
            curves[key] = [r.value(units) for r in res]
        rows = zip(FIG_D_A, curves["vacuum"], curves["none"], curves["quadratic_lens"], curves["ideal"])
        write_csv(out / f"{name}.csv", spec,
                  ("d_A", f"J_vacuum_{units}", f"J_none_{units}", f"J_lens_{units}", f"J_ideal_{units}"), rows,
                  [f"exp_r00 = {FIG_CAPACITY_SQUEEZING:g}", f"P = {P:g}"])
    if failed:
        raise Failure(f"{failed} capacity point(s) missed the tolerance", EXIT_TOLERANCE)
    return EXIT_OK


RUNNERS = {
    "spectrum": run_spectrum,
    "variance": run_variance,
    "capacity": run_capacity,
    "sweep": run_sweep,
    "simulate": run_simulate,
    "figures": run_figures,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densecode",
        description="Dense coding of optical images with multimode squeezed light.",
        epilog="config keys (key = value, '#' comments):\n" + help_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"densecode {__version__}")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--units", choices=("nats", "bits"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--threads", type=int)
    return parser


def load_spec(args) -> JobSpec:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise Failure(f"cannot read config {args.config}: {exc}", EXIT_IO) from None
    spec = parse_config(text, mode=args.mode)
    return update(spec, units=args.units, seed=args.seed, tol=args.tol, threads=args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise Failure(f"cannot create {args.out}: {exc}", EXIT_IO) from None
        return RUNNERS[spec.mode](spec, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        # parameter combinations the physics layer rejects
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
