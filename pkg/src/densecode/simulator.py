"""Wigner-sampling Monte Carlo of the full dense-coding optical train.

Vacuum inputs -> two OPAs -> BS1 -> modulator (signal on beam 1) -> BS2 ->
two homodyne detectors. Vacuum amplitudes are circular complex Gaussians
with ``<|c|^2> = 1/2``; this is exact for the all-Gaussian circuit.

Random numbers are counter-based: the draw for (stream, sample) comes from
a Philox generator keyed by the master seed with the sample and stream
indices in the counter, so results do not depend on batching or threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .channel import ChannelConfig, SignalEnsemble, detector_noise, signal_variance

VACUUM_STREAMS = (0, 1)
SIGNAL_STREAM = 2
_KEY_SALT = 0x9E3779B97F4A7C15
_INV_SQRT2 = 1 / math.sqrt(2)


class InsufficientSamples(ValueError):
    def __init__(self, message, achieved_error):
        super().__init__(message)
        self.achieved_error = achieved_error


@dataclass(frozen=True)
class Lattice:
    """Periodic (q_x, q_y, Omega) lattice in FFT index order, ``q_c = 1`` units.

    Negation is taken modulo the lattice size, so Nyquist planes pair with
    themselves. The spectrum depends on ``|kappa|`` and ``omega**2`` only,
    so this matches the physical pairing there.
    """

    shape: tuple[int, int, int] = (64, 64, 16)
    kappa_step: float = 0.125
    omega_step: float = 1 / 15

    def __post_init__(self):
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise ValueError(f"lattice shape must be three positive ints, got {self.shape}")
        if not (self.kappa_step > 0 and self.omega_step > 0):
            raise ValueError("lattice steps must be positive")

    @property
    def L(self) -> float:
        return 2 * np.pi / self.kappa_step

    @property
    def T(self) -> float:
        return 2 * np.pi / self.omega_step

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def axes(self):
        nx, ny, nt = self.shape
        kx = np.fft.fftfreq(nx, 1 / nx) * self.kappa_step
        ky = np.fft.fftfreq(ny, 1 / ny) * self.kappa_step
        w = np.fft.fftfreq(nt, 1 / nt) * self.omega_step
        return kx, ky, w

    @cached_property
    def kappa(self) -> np.ndarray:
        kx, ky, _ = self.axes
        k = np.sqrt(kx[:, None, None] ** 2 + ky[None, :, None] ** 2)
        return np.broadcast_to(k, self.shape)

    @cached_property
    def omega(self) -> np.ndarray:
        return np.broadcast_to(self.axes[2][None, None, :], self.shape)

    @cached_property
    def negation(self) -> np.ndarray:
        """Flat index of ``(-q, -Omega)`` for every flat mode index."""
        idx = [(-np.arange(n)) % n for n in self.shape]
        grid = np.ix_(*idx)
        return np.arange(self.size).reshape(self.shape)[grid].ravel()


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Complex mode amplitudes on a lattice; leading axes are samples."""

    modes: np.ndarray
    lattice: Lattice = field(default_factory=Lattice)

    def __post_init__(self):
        if self.modes.shape[-3:] != self.lattice.shape:
            raise ValueError(f"modes shape {self.modes.shape} does not end with lattice {self.lattice.shape}")

    @property
    def L(self) -> float:
        return self.lattice.L

    @property
    def T(self) -> float:
        return self.lattice.T

    def negated(self) -> np.ndarray:
        """Amplitudes at ``(-q, -Omega)``."""
        lead = self.modes.shape[:-3]
        flat = self.modes.reshape(*lead, -1)
        return flat[..., self.lattice.negation].reshape(self.modes.shape)


def _check_same(a: FieldGrid, b: FieldGrid):
    if a.lattice != b.lattice or a.modes.shape != b.modes.shape:
        raise ValueError("field grids live on different lattices")


def _generator(seed: int, stream: int, sample: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, _KEY_SALT], dtype=np.uint64)
    counter = np.array([0, sample, stream, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def _complex_normal(seed, stream, samples, shape, scale):
    out = np.empty((len(samples), *shape), dtype=complex)
    for j, n in enumerate(samples):
        x = _generator(seed, stream, int(n)).standard_normal((2, *shape))
        out[j].real = x[0]
        out[j].imag = x[1]
    out *= scale
    return out


def sample_vacuum(lattice: Lattice, seed: int, samples=(0,), stream: int = 0) -> FieldGrid:
    """Vacuum Wigner amplitudes, one lattice per sample index, ``<|c|^2> = 1/2``."""
    return FieldGrid(_complex_normal(seed, stream, samples, lattice.shape, 0.5), lattice)


def sample_image(ensemble: SignalEnsemble, lattice: Lattice, seed: int, samples=(0,)) -> FieldGrid:
    """Random classical images with independent modes, ``<|a|^2> = sigma_A``."""
    sigma = signal_variance(ensemble, lattice.kappa, lattice.omega)
    modes = _complex_normal(seed, SIGNAL_STREAM, samples, lattice.shape, 1 / math.sqrt(2))
    return FieldGrid(modes * np.sqrt(sigma), lattice)


def lattice_coefficients(channel: ChannelConfig, opa: int, lattice: Lattice):
    return channel.coefficients(opa, lattice.kappa, lattice.omega)


def apply_squeezing(grid: FieldGrid, U, V) -> FieldGrid:
    """``s(q) = U(q) c(q) + V(q) conj(c(-q))``; every +/- pair is updated from the same inputs."""
    out = grid.negated()
    np.conjugate(out, out=out)
    out *= V
    out += U * grid.modes
    return FieldGrid(out, grid.lattice)


def beamsplit(grid1: FieldGrid, grid2: FieldGrid) -> tuple[FieldGrid, FieldGrid]:
    """Symmetric beamsplitter ``(1, 1; 1, -1) / sqrt(2)``."""
    _check_same(grid1, grid2)
    a, b = grid1.modes, grid2.modes
    plus, minus = a + b, a - b
    plus *= _INV_SQRT2
    minus *= _INV_SQRT2
    return FieldGrid(plus, grid1.lattice), FieldGrid(minus, grid1.lattice)


def add_signal(grid: FieldGrid, image) -> FieldGrid:
    """Modulator on beam 1: adds the classical image amplitude."""
    image = image.modes if isinstance(image, FieldGrid) else np.asarray(image)
    return FieldGrid(grid.modes + image, grid.lattice)


def homodyne(grid_B1: FieldGrid, grid_B2: FieldGrid) -> tuple[np.ndarray, np.ndarray]:
    """Photocurrent Fourier amplitudes with local oscillators ``1`` and ``i``."""
    i1 = grid_B1.negated()
    np.conjugate(i1, out=i1)
    i1 += grid_B1.modes
    i2 = grid_B2.negated()
    np.conjugate(i2, out=i2)
    np.subtract(grid_B2.modes, i2, out=i2)
    i2 *= -1j
    return i1, i2


def propagate(c1: FieldGrid, c2: FieldGrid, coeffs, image=None):
    """Run vacuum inputs through the optical train; returns the two photocurrents."""
    (U1, V1), (U2, V2) = coeffs
    s1 = apply_squeezing(c1, U1, V1)
    s2 = apply_squeezing(c2, U2, V2)
    e1, e2 = beamsplit(s1, s2)
    if image is not None:
        e1 = add_signal(e1, image)
    b1, b2 = beamsplit(e1, e2)
    return homodyne(b1, b2)


@dataclass(frozen=True, eq=False)
class RunConfig:
    """One Monte-Carlo experiment.

    ``ensemble`` draws a random image per sample; ``image`` is a fixed
    classical field on the lattice instead. With neither, only the
    signal-off currents are simulated. ``swap`` feeds OPA 2 into input 1
    and OPA 1 into input 2.
    """

    seed: int
    n_samples: int
    channel: ChannelConfig
    ensemble: SignalEnsemble | None = None
    image: np.ndarray | None = None
    lattice: Lattice = field(default_factory=Lattice)
    blocks: int = 10
    threads: int = 1
    tracked: int = 12
    swap: bool = False

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.ensemble is not None and self.image is not None:
            raise ValueError("give either an ensemble or a fixed image, not both")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")

    @property
    def has_signal(self) -> bool:
        return self.ensemble is not None or self.image is not None

    def analytic_noise(self) -> np.ndarray:
        """Noise variance per detector on the lattice, shape ``(2, *lattice.shape)``."""
        r, psi1, psi2 = self.channel.squeezing(self.lattice.kappa, self.lattice.omega)
        first, second = (psi2, psi1) if self.swap else (psi1, psi2)
        return np.stack([detector_noise(r, first, 1), detector_noise(r, second, 2)])

    def analytic_signal(self) -> np.ndarray:
        if self.ensemble is not None:
            return signal_variance(self.ensemble, self.lattice.kappa, self.lattice.omega)
        return np.zeros(self.lattice.shape)


def tracked_modes(lattice: Lattice, count: int, seed: int) -> np.ndarray:
    """Distinct flat mode indices with Omega > 0, none the negation of another."""
    positive = np.flatnonzero(lattice.omega.ravel() > 0)
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 7]))
    count = min(count, positive.size)
    return np.sort(rng.choice(positive, size=count, replace=False))


@dataclass(eq=False)
class SimulationResult:
    config: RunConfig
    # shape (blocks, state, detector, *lattice); state 0 = signal off, 1 = on
    block_count: np.ndarray
    block_sum: np.ndarray
    block_sum2: np.ndarray
    sum4: np.ndarray
    tracked_index: np.ndarray
    tracked_traces: np.ndarray  # (n_samples, state, detector, n_tracked)
    reality_defect: float
    kernel_mismatch: float = 0.0

    @property
    def n_samples(self) -> int:
        return int(self.block_count.sum())

    @staticmethod
    def _variance(n, s, s2):
        return (s2 - np.abs(s) ** 2 / n) / (n - 1)

    def variance(self, state: int = 0) -> np.ndarray:
        """Per-mode sample variance of both photocurrents, shape ``(2, *lattice)``."""
        n = self.n_samples
        return self._variance(n, self.block_sum[:, state].sum(0), self.block_sum2[:, state].sum(0))

    def standard_error(self, state: int = 0) -> np.ndarray:
        n = self.n_samples
        m2 = self.block_sum2[:, state].sum(0) / n
        m4 = self.sum4[state] / n
        return np.sqrt(np.maximum(m4 - m2**2, 0.0) / n)

    def analytic_variance(self, state: int = 0) -> np.ndarray:
        noise = self.config.analytic_noise()
        if state == 0:
            return noise
        return noise + self.config.analytic_signal()[None]

    def leave_out_variances(self, b: int, state: int):
        n = self.n_samples - self.block_count[b]
        s = self.block_sum[:, state].sum(0) - self.block_sum[b, state]
        s2 = self.block_sum2[:, state].sum(0) - self.block_sum2[b, state]
        return self._variance(n, s, s2)


def _draw_batch(run: RunConfig, samples):
    lat = run.lattice
    c1 = sample_vacuum(lat, run.seed, samples, VACUUM_STREAMS[0])
    c2 = sample_vacuum(lat, run.seed, samples, VACUUM_STREAMS[1])
    image = None
    if run.ensemble is not None:
        image = sample_image(run.ensemble, lat, run.seed, samples)
    elif run.image is not None:
        image = FieldGrid(np.broadcast_to(run.image, (len(samples), *lat.shape)), lat)
    return c1, c2, image


def _coefficients(run: RunConfig):
    pair = [lattice_coefficients(run.channel, n, run.lattice) for n in (1, 2)]
    return pair[::-1] if run.swap else pair


@numba.njit(cache=True, nogil=True)
def _train_kernel(c1, c2, a, U1, V1, U2, V2, neg, with_signal, s, s2, s4, slot, trace):
    """Fused optical train for one sample, accumulating photocurrent moments.

    Per mode m (partner n = -m): squeeze both OPAs, BS1, modulator, BS2 and
    homodyne, for signal off (state 0) and on (state 1). Currents of modes
    with ``slot[m] >= 0`` are written to ``trace[state, detector, slot]``.
    """
    h = 1 / np.sqrt(2.0)
    for m in range(c1.size):
        n = neg[m]
        s1 = U1[m] * c1[m] + V1[m] * np.conj(c1[n])
        s1n = U1[n] * c1[n] + V1[n] * np.conj(c1[m])
        t1 = U2[m] * c2[m] + V2[m] * np.conj(c2[n])
        t1n = U2[n] * c2[n] + V2[n] * np.conj(c2[m])
        e1, e2 = (s1 + t1) * h, (s1 - t1) * h
        e1n, e2n = (s1n + t1n) * h, (s1n - t1n) * h
        for state in range(2):
            if state == 1:
                if not with_signal:
                    for d in range(2):
                        s[1, d, m] = s[0, d, m]
                        s2[1, d, m] = s2[0, d, m]
                        s4[1, d, m] = s4[0, d, m]
                        if slot[m] >= 0:
                            trace[1, d, slot[m]] = trace[0, d, slot[m]]
                    break
                e1 = e1 + a[m]
                e1n = e1n + a[n]
            b1, b2 = (e1 + e2) * h, (e1 - e2) * h
            b1n, b2n = (e1n + e2n) * h, (e1n - e2n) * h
            i1 = b1 + np.conj(b1n)
            i2 = -1j * (b2 - np.conj(b2n))
            for d in range(2):
                cur = i1 if d == 0 else i2
                p = cur.real * cur.real + cur.imag * cur.imag
                s[state, d, m] += cur
                s2[state, d, m] += p
                s4[state, d, m] += p * p
                if slot[m] >= 0:
                    trace[state, d, slot[m]] = cur


class _Accumulator:
    """Moment sums of one run over one block, updated in sample order."""

    def __init__(self, lattice: Lattice, n_tracked: int, n_block: int):
        shape = (2, 2, lattice.size)  # (state, detector, mode)
        self.count = 0
        self.s = np.zeros(shape, dtype=complex)
        self.s2 = np.zeros(shape)
        self.s4 = np.zeros(shape)
        self.traces = np.zeros((n_block, 2, 2, n_tracked), dtype=complex)
        self.defect = 0.0
        self.mismatch = 0.0

    def finish(self, lattice: Lattice):
        shape = (2, 2, *lattice.shape)
        return self.s.reshape(shape), self.s2.reshape(shape), self.s4.reshape(shape)


def _run_block(runs, coeffs, samples, tracked):
    """Simulate one block of consecutive samples for every run."""
    first = runs[0]
    lat = first.lattice
    neg = lat.negation
    flat_coeffs = [[np.ascontiguousarray(x).ravel() for pair in co for x in pair] for co in coeffs]
    accs = [_Accumulator(lat, tracked.size, samples.size) for _ in runs]
    zeros = np.zeros(lat.size, dtype=complex)
    slot = np.full(lat.size, -1, dtype=np.int64)
    slot[tracked] = np.arange(tracked.size)
    for row, sample in enumerate(samples):
        c1, c2, image = _draw_batch(first, [sample])
        a = zeros if image is None else np.ascontiguousarray(image.modes[0]).ravel()
        for acc, co, fco in zip(accs, coeffs, flat_coeffs):
            _train_kernel(
                c1.modes[0].ravel(), c2.modes[0].ravel(), a, *fco, neg,
                image is not None, acc.s, acc.s2, acc.s4, slot, acc.traces[row],
            )
            acc.count += 1
            if row == 0:
                # modular chain on the block's first sample: reality constraint and kernel check
                off = propagate(c1, c2, co)
                on = off if image is None else propagate(c1, c2, co, image)
                check = np.empty((2, 2, lat.size), dtype=complex)
                for state, currents in enumerate((off, on)):
                    for d, cur in enumerate(currents):
                        flat = cur.reshape(-1)
                        check[state, d] = flat
                        acc.defect = max(acc.defect, float(np.max(np.abs(flat - np.conj(flat[neg])))))
                acc.mismatch = float(np.max(np.abs(acc.s - check)))
    return accs


def simulate_many(runs: list[RunConfig]) -> list[SimulationResult]:
    """Simulate several runs sharing the same random draws.

    All runs must agree on seed, sample count, lattice, blocks and signal
    source; each result equals what ``simulate`` would return for that run.
    Blocks of consecutive samples are the unit of parallel work; each block
    sums its samples in order, so results do not depend on ``threads``.
    """
    first = runs[0]
    for run in runs[1:]:
        same = (
            run.seed == first.seed and run.n_samples == first.n_samples
            and run.lattice == first.lattice
            and run.blocks == first.blocks and run.ensemble == first.ensemble
            and run.image is first.image and run.tracked == first.tracked
        )
        if not same:
            raise ValueError("runs do not share their sampling setup")
    lat = first.lattice
    n, blocks = first.n_samples, min(first.blocks, first.n_samples)
    coeffs = [_coefficients(run) for run in runs]
    tracked = tracked_modes(lat, first.tracked, first.seed)
    bounds = [(b * n) // blocks for b in range(blocks + 1)]
    block_samples = [np.arange(bounds[b], bounds[b + 1]) for b in range(blocks)]

    def work(samples):
        return _run_block(runs, coeffs, samples, tracked)

    if first.threads > 1:
        with ThreadPoolExecutor(first.threads) as pool:
            per_block = list(pool.map(work, block_samples))
    else:
        per_block = [work(b) for b in block_samples]

    results = []
    for k, run in enumerate(runs):
        accs = [blk[k] for blk in per_block]
        moments = [a.finish(lat) for a in accs]
        s4 = np.zeros_like(moments[0][2])
        for m in moments:
            s4 += m[2]
        results.append(SimulationResult(
            run,
            np.array([a.count for a in accs], dtype=np.int64),
            np.stack([m[0] for m in moments]),
            np.stack([m[1] for m in moments]),
            s4,
            tracked,
            np.concatenate([a.traces for a in accs]),
            max(a.defect for a in accs),
            max(a.mismatch for a in accs),
        ))
    return results


def simulate(run: RunConfig) -> SimulationResult:
    return simulate_many([run])[0]


def _information_sum(lattice: Lattice, ensemble: SignalEnsemble, sigma_A, sigma_BA) -> float:
    """Nondimensional information: ``dk^2 dw / Omega_A * (1/2) sum over modes and detectors``.

    Summing every lattice mode and halving counts each independent
    ``+/-(q, Omega)`` pair once, including the Omega = 0 plane.
    """
    in_band = np.abs(lattice.omega) <= ensemble.temporal_band / 2
    info = np.log1p(sigma_A / sigma_BA)
    total = 0.5 * np.sum(np.where(in_band[None], info, 0.0))
    return float(total * lattice.kappa_step**2 * lattice.omega_step / ensemble.temporal_band)


def lattice_information(run: RunConfig) -> float:
    """Information density the lattice sum gives with exact variances."""
    if run.ensemble is None:
        return 0.0
    noise = run.analytic_noise()
    return _information_sum(run.lattice, run.ensemble, run.analytic_signal()[None], noise)


def estimate_capacity(result: SimulationResult, level: float = 0.95) -> tuple[float, float]:
    """Empirical information density and its jackknife confidence half-width.

    Signal variance per mode is estimated as signal-on minus signal-off
    variance from the same vacuum draws.
    """
    from scipy.stats import norm

    run = result.config
    if run.ensemble is None:
        if run.image is not None:
            raise ValueError("a fixed image carries no ensemble information; use an ensemble")
        return 0.0, 0.0
    n = result.n_samples
    achieved = 1 / math.sqrt(max(n - 1, 1))
    if achieved > 0.1:
        raise InsufficientSamples(
            f"{n} samples give per-mode relative variance error {achieved:.3f} > 0.1", achieved
        )

    def J(off, on):
        sigma_A = np.maximum(on - off, -0.5 * off)
        return _information_sum(run.lattice, run.ensemble, sigma_A, off)

    full = J(result.variance(0), result.variance(1))
    B = result.block_count.size
    if B < 2:
        return full, math.inf
    loo = np.array([J(result.leave_out_variances(b, 0), result.leave_out_variances(b, 1)) for b in range(B)])
    se = math.sqrt((B - 1) / B * np.sum((loo - loo.mean()) ** 2))
    return full, float(norm.ppf(0.5 + level / 2) * se)
