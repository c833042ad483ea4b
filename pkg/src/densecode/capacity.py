"""Shannon mutual information density of the dense-coding channel."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import spence

from .channel import ChannelConfig, SignalEnsemble, noise_variance, signal_variance
from .opa import build_spectrum

DEFAULT_TOL = 1e-8
AXES = ("d_A", "P", "g")

_LOW = leggauss(8)
_HIGH = leggauss(16)


class ToleranceError(RuntimeError):
    """Quadrature did not reach the requested tolerance; ``result`` holds the best estimate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class CapacityResult:
    J: float  # nats per coherence area per frame time
    quadrature_error: float
    g: float
    photon_flux: float
    d_A: float
    correction: str
    status: str = "ok"

    @property
    def J_bits(self) -> float:
        return self.J / math.log(2)

    def value(self, units: str = "nats") -> float:
        if units == "nats":
            return self.J
        if units == "bits":
            return self.J_bits
        raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")


def mode_information(sigma_A, sigma_BA):
    """Gaussian-channel information ``ln(1 + sigma_A / sigma_BA)`` in nats."""
    sigma_A = np.asarray(sigma_A, dtype=float)
    sigma_BA = np.asarray(sigma_BA, dtype=float)
    if np.any(sigma_BA <= 0):
        raise ValueError("noise variance must be positive")
    if np.any(sigma_A < 0):
        raise ValueError("signal variance must be non-negative")
    out = np.log1p(sigma_A / sigma_BA)
    return float(out) if out.ndim == 0 else out


def vacuum_information_density(photon_flux: float, d_A: float) -> float:
    """Closed form of the shot-noise-limited density, ``-pi s^2 Li2(-P / (pi s^2))`` with ``s = d_A/2``."""
    area = math.pi * (d_A / 2) ** 2
    # scipy's spence(x) is Li2(1 - x)
    return float(-area * spence(1 + photon_flux / area))


def _gauss_panels(f, a, b, rule):
    x, w = rule
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return half * (f(nodes) @ w)


def adaptive_integral(f, a, b, tol, initial_step, max_iter=60, max_panels=400_000):
    """Globally adaptive composite Gauss-Legendre quadrature of a vectorized ``f`` on ``[a, b]``.

    Each panel is integrated with 8 and 16 nodes; the difference is the
    panel's error estimate. Panels above their share of ``tol`` are bisected.
    Returns ``(estimate, error_estimate, converged)``.
    """
    n = max(1, int(math.ceil((b - a) / initial_step)))
    edges = np.linspace(a, b, n + 1)
    lo, hi = edges[:-1], edges[1:]
    done_value = 0.0
    done_error = 0.0
    for _ in range(max_iter):
        high = _gauss_panels(f, lo, hi, _HIGH)
        err = np.abs(high - _gauss_panels(f, lo, hi, _LOW))
        total_err = done_error + err.sum()
        if total_err <= tol:
            return done_value + high.sum(), total_err, True
        # panels whose error is below their length share of the budget are final
        share = 0.5 * tol * (hi - lo) / (b - a)
        keep = err <= share
        done_value += high[keep].sum()
        done_error += err[keep].sum()
        lo, hi = lo[~keep], hi[~keep]
        if 2 * lo.size > max_panels:
            break
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    high = _gauss_panels(f, lo, hi, _HIGH)
    err = np.abs(high - _gauss_panels(f, lo, hi, _LOW))
    return done_value + high.sum(), done_error + err.sum(), False


def truncation_radius(config: ChannelConfig, ensemble: SignalEnsemble, tail: float) -> float:
    """Radius beyond which the integrand's contribution is below ``tail``.

    Uses ``ln(1 + x) <= x`` and ``sigma_BA >= exp(-2 g)``, so the discarded
    part is at most ``P exp(2 g) exp(-R^2 / s^2)``.
    """
    s = ensemble.width
    bound = ensemble.photon_flux * math.exp(2 * config.g) / tail
    return s * math.sqrt(math.log(bound)) if bound > 1 else 0.0


def _radial_density(config, ensemble, omega, tol):
    """Radial integral at one temporal frequency; returns ``(value, error, converged)``."""
    tail = tol / 10
    R = truncation_radius(config, ensemble, tail)
    if R == 0.0:
        return 0.0, tail, True
    s2 = ensemble.width**2
    scale = ensemble.peak_snr_scale

    def integrand(u):
        sigma = noise_variance(config, 1, np.sqrt(u), omega)
        return np.pi * np.log1p(scale * np.exp(-u / s2) / sigma)

    step = min(s2 / 4, 0.1)
    value, err, ok = adaptive_integral(integrand, 0.0, R * R, tol - tail, step)
    return float(value), float(err + tail), ok


def _band_average(config, ensemble, tol, nodes):
    x, w = leggauss(nodes)
    half = ensemble.temporal_band / 2
    parts = [_radial_density(config, ensemble, half / 2 * (1 + xi), tol) for xi in x]
    value = sum(wi * p[0] for wi, p in zip(w, parts)) / 2
    err = sum(wi * p[1] for wi, p in zip(w, parts)) / 2
    return value, err, all(p[2] for p in parts)


def information_density(
    config: ChannelConfig,
    ensemble: SignalEnsemble,
    tol: float = DEFAULT_TOL,
    raise_on_failure: bool = True,
) -> CapacityResult:
    """Dimensionless information stream density by radial quadrature.

    The isotropic 2-D integral is taken in ``u = kappa**2``, where the
    uncorrected noise variance oscillates at a roughly constant rate.
    With temporal dispersion the radial result is averaged over the signal
    band by Gauss-Legendre in omega; 8 and 16 nodes are compared.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    meta = dict(
        g=config.g, photon_flux=ensemble.photon_flux, d_A=ensemble.d_A,
        correction=config.correction.value,
    )
    if config.spectrum.params.temporal_dispersion == 0:
        value, err, ok = _radial_density(config, ensemble, 0.0, tol)
    else:
        coarse, _, _ = _band_average(config, ensemble, tol / 2, 8)
        value, err, ok = _band_average(config, ensemble, tol / 2, 16)
        err += abs(value - coarse)
        ok = ok and err <= tol
    result = CapacityResult(value, err, **meta)
    if not ok:
        result = dataclasses.replace(result, status=f"not converged (error {err:.3g} > tol {tol:.3g})")
        if raise_on_failure:
            raise ToleranceError(result.status, result)
    return result


def information_density_direct(
    config: ChannelConfig,
    ensemble: SignalEnsemble,
    q_c: float = 2.0,
    omega_c: float = 50.0,
    tol: float = 1e-10,
    nodes: int = 8,
    time_nodes: int = 2,
) -> float:
    """Dimensionless density from the raw spatio-temporal integral in physical units.

    Integrates ``(2 pi)^-3 sum_n ln(1 + sigma_A / sigma_n)`` over a Cartesian
    ``(q_x, q_y)`` square and ``0 < Omega <= Omega_A / 2``, with both detectors
    evaluated separately, then multiplies by ``S_c T_A``. ``q_c`` and
    ``omega_c`` set the physical scales; the signal band is
    ``Omega_A = temporal_band * omega_c``. Composite Gauss-Legendre,
    non-adaptive.
    """
    omega_A = ensemble.temporal_band * omega_c
    S_c = (2 * np.pi / q_c) ** 2
    T_A = 2 * np.pi / omega_A
    P = ensemble.photon_flux / (S_c * T_A)
    q_A = ensemble.d_A * q_c

    R = truncation_radius(config, ensemble, tol) * q_c
    if R == 0.0:
        return 0.0
    # phase of the uncorrected spectrum grows like 8 kappa^2; keep < 2 rad per panel
    h = min(q_A / 8, q_c / (8 * R / q_c))
    n_panels = int(math.ceil(R / h))
    x, w = leggauss(nodes)
    edges = np.linspace(0.0, R, n_panels + 1)
    half = np.diff(edges) / 2
    q = ((edges[:-1] + half)[:, None] + half[:, None] * x).ravel()
    wq = (half[:, None] * w).ravel()
    xt, wt = leggauss(time_nodes)
    Omega = omega_A / 4 * (1 + xt)
    wO = omega_A / 4 * wt

    qx, qy = np.meshgrid(q, q, indexing="ij")
    q2 = qx**2 + qy**2
    weights = np.outer(wq, wq)
    kappa = np.sqrt(q2) / q_c
    total = 0.0
    for Om, wOm in zip(Omega, wO):
        sigma_A = (2 * np.pi) ** 3 * P / (np.pi * (q_A / 2) ** 2) * np.exp(-q2 / (q_A / 2) ** 2) / omega_A
        for detector in (1, 2):
            sigma_n = noise_variance(config, detector, kappa, Om / omega_c)
            total += wOm * np.sum(weights * np.log1p(sigma_A / sigma_n))
    # quadrant symmetry of the integrand
    J = 4 * total / (2 * np.pi) ** 3
    return float(S_c * T_A * J)


def _with_axis(config: ChannelConfig, ensemble: SignalEnsemble, axis: str, value: float):
    if axis == "d_A":
        return config, dataclasses.replace(ensemble, d_A=value)
    if axis == "P":
        return config, dataclasses.replace(ensemble, photon_flux=value)
    if axis == "g":
        spectrum = config.spectrum
        params = dataclasses.replace(spectrum.params, g=value)
        return ChannelConfig(build_spectrum(params, spectrum.correction)), ensemble
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def _sweep_point(config, ensemble, axis, value, tol):
    try:
        point_config, point_ensemble = _with_axis(config, ensemble, axis, value)
    except ValueError as exc:
        return CapacityResult(
            math.nan, math.nan, config.g, ensemble.photon_flux, ensemble.d_A,
            config.correction.value, status=f"invalid: {exc}",
        )
    try:
        return information_density(point_config, point_ensemble, tol)
    except ToleranceError as exc:
        return exc.result


def sweep(
    config: ChannelConfig,
    ensemble: SignalEnsemble,
    axis: str,
    values,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> list[CapacityResult]:
    """One result per value, in order. Failed points carry a non-"ok" status."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    args = [(config, ensemble, axis, v, tol) for v in values]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda a: _sweep_point(*a), args))
    return [_sweep_point(*a) for a in args]
