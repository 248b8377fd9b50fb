"""Pseudo-spectral simulator and verification harness for 2D Navier-Stokes
with horizontal viscosity only, on the channel T x [0, 1]."""

from importlib.metadata import PackageNotFoundError, version

from .flow import FlowState, ForcingSpec, VelocityPair, sobolev_norms, velocity
from .spectral import ScalarSpectrum, SpectralGrid, YBasis
from .timestepper import StepperConfig, integrate, rhs, step

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "FlowState",
    "ForcingSpec",
    "ScalarSpectrum",
    "SpectralGrid",
    "StepperConfig",
    "VelocityPair",
    "YBasis",
    "integrate",
    "rhs",
    "sobolev_norms",
    "step",
    "velocity",
]
