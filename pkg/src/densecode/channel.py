"""Two-detector noise variances of the entangled channel and the Gaussian image ensemble."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .opa import Correction, OpaParams, SqueezingSpectrum, build_spectrum


@dataclass(frozen=True, eq=False)
class ChannelConfig:
    """Two OPAs with equal squeezing and orthogonal ellipses.

    Both OPAs share ``spectrum``; OPA 1 has orientation ``psi`` and OPA 2
    has ``psi - pi/2``, with ``psi(0, 0) = pi/2`` fixed by the spectrum's
    phase offset.
    """

    spectrum: SqueezingSpectrum

    # Field rotation that turns OPA 1's coefficients into OPA 2's.
    SECOND_ROTATION = -np.pi / 2

    @classmethod
    def from_params(cls, params: OpaParams, correction=Correction.NONE) -> "ChannelConfig":
        return cls(build_spectrum(params, correction))

    @classmethod
    def vacuum(cls) -> "ChannelConfig":
        return cls.from_params(OpaParams(g=0.0))

    @property
    def g(self) -> float:
        return self.spectrum.params.g

    @property
    def correction(self) -> Correction:
        return self.spectrum.correction

    def squeezing(self, kappa, omega):
        """``(r, psi1, psi2)`` at the given points."""
        point = self.spectrum.evaluate(kappa, omega)
        return point.r, point.psi, point.psi - np.pi / 2

    def coefficients(self, opa: int, kappa, omega):
        """Corrected ``(U, V)`` of OPA ``opa`` (1 or 2) at ``(kappa, omega)``."""
        if opa not in (1, 2):
            raise ValueError(f"opa must be 1 or 2, got {opa}")
        rotation = 0.0 if opa == 1 else self.SECOND_ROTATION
        point = self.spectrum.evaluate(kappa, omega, rotation=rotation)
        return point.U, point.V


def detector_noise(r, psi, detector: int):
    """Homodyne noise variance of one detector for squeezing ``r`` and orientation ``psi``.

    Detector 1 measures the in-phase quadrature, detector 2 the
    out-of-phase one, so the roles of ``cos`` and ``sin`` swap.
    """
    grow, shrink = np.exp(2 * r), np.exp(-2 * r)
    c2, s2 = np.cos(psi) ** 2, np.sin(psi) ** 2
    if detector == 1:
        return grow * c2 + shrink * s2
    if detector == 2:
        return shrink * c2 + grow * s2
    raise ValueError(f"detector must be 1 or 2, got {detector}")


def noise_variance(config: ChannelConfig, detector: int, kappa, omega):
    r, psi1, psi2 = config.squeezing(kappa, omega)
    return detector_noise(r, psi1 if detector == 1 else psi2, detector)


@dataclass(frozen=True)
class SignalEnsemble:
    """Gaussian ensemble of input images.

    ``photon_flux`` is the dimensionless flux per coherence area per frame
    time, ``d_A`` the signal spectral width in units of ``q_c`` and
    ``temporal_band`` the full width of the rectangular temporal spectrum.
    """

    photon_flux: float = 1.0
    d_A: float = 1.0
    temporal_band: float = 1.0

    def __post_init__(self):
        if not self.photon_flux >= 0:
            raise ValueError(f"photon_flux must be >= 0, got {self.photon_flux}")
        if not self.d_A > 0:
            raise ValueError(f"d_A must be > 0, got {self.d_A}")
        if not self.temporal_band > 0:
            raise ValueError(f"temporal_band must be > 0, got {self.temporal_band}")

    @property
    def width(self) -> float:
        """1/e half-width of the spatial Gaussian, ``d_A / 2``."""
        return self.d_A / 2

    @property
    def flux_density(self) -> float:
        """Photon flux density ``P`` in lattice units (``q_c = 1``)."""
        return self.photon_flux * self.temporal_band / (2 * np.pi) ** 3

    @property
    def peak_snr_scale(self) -> float:
        """``photon_flux / (pi (d_A/2)**2)``, the per-mode signal energy at kappa = 0."""
        return self.photon_flux / (math.pi * self.width**2)


def signal_variance(ensemble: SignalEnsemble, kappa, omega):
    kappa = np.asarray(kappa, dtype=float)
    omega = np.asarray(omega, dtype=float)
    w = ensemble.width
    band = np.where(np.abs(omega) <= ensemble.temporal_band / 2, 1 / ensemble.temporal_band, 0.0)
    return (2 * np.pi) ** 3 * ensemble.flux_density / (np.pi * w**2) * np.exp(-(kappa**2) / w**2) * band


def observable_variance(config: ChannelConfig, ensemble: SignalEnsemble, detector: int, kappa, omega):
    """Photocurrent variance with unit local-oscillator amplitude."""
    return noise_variance(config, detector, kappa, omega) + signal_variance(ensemble, kappa, omega)
