"""Initial states and forcing for the named scenarios."""

from __future__ import annotations

import math

import numpy as np

from .config import ForcingConfig, RunConfig
from .diagnostics import DEFAULT_MONITORS, MonitorSet
from .flow import FlowState, ForcingSpec, random_state
from .persist import read_snapshot
from .spectral import (
    PhysicalField,
    ScalarSpectrum,
    SpectralGrid,
    YBasis,
    l2_norm,
    to_spectral,
)

TAYLOR_GREEN_RATE = 4 * math.pi**2  # ||omega|| decay rate of the k1 = 1 mode

SCENARIO_MONITORS = {
    "taylor_green": DEFAULT_MONITORS + ("energy_monotone", "analytic_decay"),
    "pure_shear": DEFAULT_MONITORS + ("energy_monotone",),
    "free_decay": DEFAULT_MONITORS + ("energy_monotone", "asymptotics"),
    "shear_stability": DEFAULT_MONITORS + ("decay_fit",),
    "forced_h2": DEFAULT_MONITORS + ("h2_plateau",),
    "custom": DEFAULT_MONITORS,
}


def make_grid(cfg: RunConfig) -> SpectralGrid:
    return SpectralGrid(cfg.grid.nx, cfg.grid.ny, cfg.grid.fraction)


def taylor_green(grid: SpectralGrid, amplitude: float = 1.0) -> FlowState:
    """psi = A sin(2 pi x) sin(pi y)."""
    c = np.zeros(grid.shape, dtype=complex)
    c[1, 1] = -0.5j * amplitude
    c[-1, 1] = 0.5j * amplitude
    return FlowState(ScalarSpectrum(grid, YBasis.SINE, c), np.zeros(grid.ny + 1))


def shear_profile(grid: SpectralGrid, slope: float) -> np.ndarray:
    """CosineY coefficients interpolating ubar = slope * y at the collocation points."""
    values = np.broadcast_to(slope * grid.y[None, :], (grid.nx, grid.ny + 1)).copy()
    return to_spectral(PhysicalField(grid, values), YBasis.COSINE).coeffs[0].real.copy()


def pure_shear(grid: SpectralGrid, slope: float) -> FlowState:
    return FlowState(ScalarSpectrum(grid, YBasis.SINE, np.zeros(grid.shape)), shear_profile(grid, slope))


def shear_perturbation(grid: SpectralGrid, slope: float, epsilon: float, seed: int, kmax: int) -> FlowState:
    """Shear plus a seeded oscillation whose vorticity has L2 norm epsilon."""
    base = random_state(grid, seed, kmax, amplitude=1.0, mean_amplitude=0.0)
    omega = base.psi.coeffs * grid.laplacian_symbol
    norm = l2_norm(base.psi.with_coeffs(omega))
    psi = base.psi * (epsilon / norm) if norm > 0 else base.psi
    return FlowState(psi, shear_profile(grid, slope))


def build_forcing(grid: SpectralGrid, fc: ForcingConfig) -> ForcingSpec:
    """Seeded smooth force with ||f||_2 = amplitude and ||fbar1||_2 = mean_amplitude at unit envelope."""
    envelope = (fc.envelope,) if fc.envelope == "constant" else (fc.envelope, fc.envelope_param)
    shape = random_state(grid, fc.seed, fc.kmax, fc.amplitude, fc.mean_amplitude)
    return ForcingSpec(shape.psi, shape.ubar, envelope)


def build_scenario(cfg: RunConfig) -> tuple[FlowState, ForcingSpec]:
    """Deterministic initial state and forcing for a validated config."""
    grid = make_grid(cfg)
    ini = cfg.initial
    name = cfg.scenario
    if name == "taylor_green":
        s = taylor_green(grid, ini.amplitude)
    elif name == "pure_shear":
        s = pure_shear(grid, ini.shear_slope)
    elif name in ("free_decay", "forced_h2"):
        s = random_state(grid, ini.seed, ini.kmax, ini.amplitude, ini.mean_amplitude)
    elif name == "shear_stability":
        s = shear_perturbation(grid, ini.shear_slope, ini.epsilon, ini.seed, ini.kmax)
    elif name == "custom":
        s = read_snapshot(ini.snapshot)
        if s.grid.shape != grid.shape:
            raise ValueError(f"snapshot grid {s.grid.nx}x{s.grid.ny} differs from config grid")
        s = FlowState(ScalarSpectrum(grid, YBasis.SINE, s.psi.coeffs), s.ubar, s.time)
    else:
        raise ValueError(f"unknown scenario {name!r}")
    return s, build_forcing(grid, cfg.forcing)


def build_monitors(cfg: RunConfig) -> MonitorSet:
    m = cfg.monitors
    enabled = m.enabled if m.enabled is not None else SCENARIO_MONITORS[cfg.scenario]
    if m.twin_delta is not None and "twin" not in enabled:
        enabled = tuple(enabled) + ("twin",)
    return MonitorSet(
        enabled=tuple(enabled),
        bound_rtol=m.bound_rtol,
        identity_rtol=m.identity_rtol,
        cfl_limit=cfg.stepper.cfl,
        asymptotic_threshold=m.asymptotic_threshold,
        cauchy_constant=m.cauchy_constant,
        decay_r2_min=m.decay_r2_min,
        twin_delta=m.twin_delta,
        twin_factor=m.twin_factor,
        expected_vorticity_decay=TAYLOR_GREEN_RATE if cfg.scenario == "taylor_green" else None,
        analytic_rtol=m.analytic_rtol,
    )
