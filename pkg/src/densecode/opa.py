"""Multimode squeezing of a type-I traveling-wave OPA.

All quantities are dimensionless: spatial frequency ``kappa = q / q_c`` and
temporal frequency ``omega`` in the units used by ``temporal_dispersion``.
With ``q_c / 2 = sqrt(2k / l)`` the diffraction term ``q**2 l / k`` becomes
``8 * kappa**2``, which is the default ``qc_convention``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SYMPLECTIC_TOL = 1e-9


class Correction(str, enum.Enum):
    NONE = "none"
    QUADRATIC_LENS = "quadratic_lens"
    IDEAL = "ideal"


@dataclass(frozen=True)
class OpaParams:
    g: float = 0.0
    detuning_offset: float = 0.0
    temporal_dispersion: float = 0.0
    qc_convention: float = 8.0

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError(f"coupling strength g must be >= 0, got {self.g}")

    @classmethod
    def from_squeezing(cls, exp_r00: float, **kwargs) -> "OpaParams":
        """Degenerate-matching parameters giving ``exp(r(0, 0)) == exp_r00``."""
        if not exp_r00 >= 1:
            raise ValueError(f"exp_r00 must be >= 1, got {exp_r00}")
        return cls(g=math.log(exp_r00), **kwargs)


def mismatch(params: OpaParams, kappa, omega):
    kappa = np.asarray(kappa, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return (
        params.detuning_offset
        + params.temporal_dispersion * omega**2
        - params.qc_convention * kappa**2
    )


def gamma(params: OpaParams, kappa, omega):
    """Parametric gain ``sqrt(g**2 - delta**2 / 4)``; positive imaginary branch below threshold."""
    arg = params.g**2 - mismatch(params, kappa, omega) ** 2 / 4
    root = np.sqrt(np.abs(arg))
    return np.where(arg >= 0, root + 0j, 1j * root)


def _cosh_and_sinhc(params: OpaParams, delta):
    # cosh(G) and sinh(G)/G as real functions of G**2, valid on both branches.
    arg = params.g**2 - delta**2 / 4
    x = np.sqrt(np.abs(arg))
    above = arg >= 0
    xa = np.where(above, x, 0.0)
    xb = np.where(above, 0.0, x)
    sinhc = np.where(xa < 1e-8, 1.0 + arg / 6, np.sinh(xa) / np.where(xa == 0, 1.0, xa))
    cosh = np.where(above, np.cosh(xa), np.cos(xb))
    sinhc = np.where(above, sinhc, np.sinc(xb / np.pi))
    return cosh, sinhc


def propagation_phase(params: OpaParams, kappa, omega):
    """``(k_z - k) l`` in paraxial form; the group-delay term linear in omega is dropped."""
    kappa = np.asarray(kappa, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return 0.5 * params.temporal_dispersion * omega**2 - 0.5 * params.qc_convention * kappa**2


def uv_coefficients(params: OpaParams, kappa, omega):
    """Bogoliubov coefficients ``(U, V)`` of the OPA at ``(kappa, omega)``."""
    delta = mismatch(params, kappa, omega)
    cosh, sinhc = _cosh_and_sinhc(params, delta)
    prefactor = np.exp(1j * (propagation_phase(params, kappa, omega) - delta / 2))
    U = prefactor * (cosh + 0.5j * delta * sinhc)
    V = prefactor * (params.g * sinhc)
    return U, V


def reduce_angle(psi, low=-np.pi / 2):
    """Reduce an ellipse orientation (defined modulo pi) into ``[low, low + pi)``."""
    return np.mod(np.asarray(psi, dtype=float) - low, np.pi) + low


def ellipse_geometry(U, V, U_minus, V_minus, tol=SYMPLECTIC_TOL):
    """Degree of squeezing ``r``, orientation ``psi`` and amplified-quadrature phase ``phi``.

    ``U_minus``, ``V_minus`` are the coefficients at the negated frequency
    ``(-q, -Omega)``. ``psi`` is returned in ``[-pi/2, pi/2)``.
    """
    U, V, U_minus, V_minus = (np.asarray(a, dtype=complex) for a in (U, V, U_minus, V_minus))
    absU, absV = np.abs(U), np.abs(V)
    defect = np.abs(absU**2 - absV**2 - 1) / np.maximum(absU**2, 1.0)
    if np.any(defect > tol):
        raise ValueError(
            f"coefficients violate |U|^2 - |V|^2 = 1 (max relative defect {np.max(defect):.3g})"
        )
    r = np.maximum(np.log(absU + absV), 0.0)
    psi = reduce_angle(0.5 * np.angle(U * V_minus))
    phi = -0.5 * np.angle(U * np.conj(V_minus))
    return r, psi, phi


class SpectrumPoint(NamedTuple):
    U: np.ndarray
    V: np.ndarray
    U_minus: np.ndarray
    V_minus: np.ndarray
    r: np.ndarray
    psi: np.ndarray
    phi: np.ndarray


def _raw_psi(params: OpaParams, kappa, omega):
    U, V = uv_coefficients(params, kappa, omega)
    Um, Vm = uv_coefficients(params, kappa, -np.asarray(omega, dtype=float))
    return 0.5 * np.angle(U * Vm)


def lens_coefficient(params: OpaParams, h: float = 1e-4) -> float:
    """Coefficient ``c`` of the lens phase ``c * kappa**2`` that flattens psi at the origin.

    psi is analytic in ``kappa**2``; the slope is taken by a second-order
    one-sided difference in ``u = kappa**2``.
    """
    u = np.array([0.0, h, 2 * h])
    psi = np.unwrap(2 * _raw_psi(params, np.sqrt(u), 0.0)) / 2
    slope = (-3 * psi[0] + 4 * psi[1] - psi[2]) / (2 * h)
    return float(-slope)


@dataclass(frozen=True, eq=False)
class SqueezingSpectrum:
    """Squeezing coefficients and ellipse geometry, tabulated on a (kappa, omega) grid.

    ``evaluate`` gives the same quantities at arbitrary points; the
    tabulated arrays have shape ``(len(kappa), len(omega))``.
    """

    params: OpaParams
    correction: Correction
    phase_offset: float
    lens_coefficient: float
    kappa: np.ndarray
    omega: np.ndarray
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    def evaluate(self, kappa, omega, rotation: float = 0.0) -> SpectrumPoint:
        """Corrected coefficients at ``(kappa, omega)`` and ``(kappa, -omega)``.

        ``rotation`` is an extra constant phase applied to the field (it
        shifts psi by the same amount); the second OPA of the entangled
        channel uses ``rotation = -pi/2``.
        """
        kappa, omega = np.broadcast_arrays(
            np.asarray(kappa, dtype=float), np.asarray(omega, dtype=float)
        )
        U, V = uv_coefficients(self.params, kappa, omega)
        Um, Vm = uv_coefficients(self.params, kappa, -omega)
        theta = self.phase_offset + rotation
        if self.correction is Correction.QUADRATIC_LENS:
            theta = theta + self.lens_coefficient * kappa**2
        turn = np.exp(1j * theta)
        U, V, Um, Vm = U * turn, V * turn, Um * turn, Vm * turn
        if self.correction is Correction.IDEAL:
            # U(q) V(-q) real negative: psi = pi/2 (+ rotation) at every point
            back = np.exp(2j * rotation)
            V = -np.abs(V) * np.exp(-1j * np.angle(Um)) * back
            Vm = -np.abs(Vm) * np.exp(-1j * np.angle(U)) * back
        r, psi, phi = ellipse_geometry(U, V, Um, Vm)
        if self.correction is Correction.IDEAL:
            psi = np.full_like(r, np.pi / 2 + rotation)
        psi = reduce_angle(psi, low=0.0 if rotation == 0.0 else -np.pi / 2)
        return SpectrumPoint(U, V, Um, Vm, r, psi, phi)

    def rows(self):
        """Yield ``(kappa, omega, U, V, r, psi, phi)`` for every grid point."""
        for i, k in enumerate(self.kappa):
            for j, w in enumerate(self.omega):
                yield (k, w, self.U[i, j], self.V[i, j], self.r[i, j], self.psi[i, j], self.phi[i, j])


def build_spectrum(
    params: OpaParams,
    correction: Correction | str = Correction.NONE,
    kappa_grid=(0.0,),
    omega_grid=(0.0,),
) -> SqueezingSpectrum:
    correction = Correction(correction)
    kappa_grid = np.atleast_1d(np.asarray(kappa_grid, dtype=float))
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if kappa_grid.size == 0 or omega_grid.size == 0:
        raise ValueError("kappa and omega grids must be non-empty")
    if np.any(kappa_grid < 0):
        raise ValueError("kappa grid must be non-negative")
    offset = float(np.pi / 2 - _raw_psi(params, 0.0, 0.0))
    lens = lens_coefficient(params) if correction is Correction.QUADRATIC_LENS else 0.0
    spectrum = SqueezingSpectrum(
        params, correction, offset, lens, kappa_grid, omega_grid,
        *([np.empty(0)] * 5),
    )
    K, W = np.meshgrid(kappa_grid, omega_grid, indexing="ij")
    point = spectrum.evaluate(K, W)
    for name in ("U", "V", "r", "psi", "phi"):
        value = getattr(point, name)
        value.setflags(write=False)
        object.__setattr__(spectrum, name, value)
    return spectrum
