"""Quantum dense coding of optical images with multimode squeezed light."""

__version__ = "0.1.0"

from .capacity import CapacityResult, information_density, sweep, vacuum_information_density
from .channel import ChannelConfig, SignalEnsemble
from .opa import Correction, OpaParams, build_spectrum

__all__ = [
    "CapacityResult",
    "ChannelConfig",
    "Correction",
    "OpaParams",
    "SignalEnsemble",
    "build_spectrum",
    "information_density",
    "sweep",
    "vacuum_information_density",
]
