"""
Time integration of the oscillation-vorticity / mean-flow system.

The prognostic variables are the oscillation vorticity (SineY, k1 != 0) and
the mean profile ubar (CosineY, real). Horizontal diffusion acts on the
vorticity through exp(-(2 pi k1)^2 t) and is absorbed exactly by an
integrating factor; the remaining tendencies are advanced with Kutta's
three-stage third-order scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Protocol, Union

import numpy as np

from .flow import FlowState, ForcingSpec
from .spectral import ScalarSpectrum, SpectralGrid, YBasis, _y_analysis, _y_synthesis


class NonFinite(FloatingPointError):
    """A coefficient became NaN or infinite; carries the partial history."""

    def __init__(self, message: str, state: FlowState | None = None, records: list | None = None):
        super().__init__(message)
        self.state = state
        self.records = records if records is not None else []


class CflViolation(UserWarning):
    """Post-step Courant number exceeded twice the configured bound."""


@dataclass(frozen=True)
class StepperConfig:
    t_end: float
    dt: Union[float, Literal["auto"]] = "auto"
    cfl: float = 0.5
    dt_max: float = 1e-2
    scheme: Literal["rk3"] = "rk3"
    snapshot_every: int = 0
    diagnostics_every: int = 1

    def __post_init__(self):
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt must be positive or 'auto', got {self.dt!r}")
        if self.cfl <= 0 or self.dt_max <= 0:
            raise ValueError("cfl and dt_max must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme != "rk3":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.snapshot_every < 0 or self.diagnostics_every < 1:
            raise ValueError("snapshot_every >= 0 and diagnostics_every >= 1 required")


@dataclass(frozen=True, eq=False)
class Tendency:
    d_omega_osc: ScalarSpectrum
    d_ubar: np.ndarray


class _Kernel:
    """Array-level transforms and tendencies for one grid."""

    def __init__(self, grid: SpectralGrid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        self.half = nx // 2 + 1
        self.mask = grid.dealias_mask
        self.kx = grid.kx_phys[:, None]
        self.ky = grid.ky_phys[None, :]
        self.ky_row = grid.ky_phys
        self.lap = grid.laplacian_symbol
        self.inv_lap = np.zeros_like(self.lap)
        nz = self.lap > 0
        self.inv_lap[nz] = 1.0 / self.lap[nz]
        self.inv_lap[0, :] = 0.0
        self.k1sq = (2 * np.pi * grid.k1.astype(float))[:, None] ** 2
        self.dx_min = 1.0 / nx
        self.dy_min = 1.0 / ny

    def synth(self, c: np.ndarray, basis: YBasis) -> np.ndarray:
        nx, ny = self.grid.nx, self.grid.ny
        rows = np.fft.irfft(c[..., : self.half, :], n=nx, axis=-2) * nx
        return _y_synthesis(rows, basis, ny)

    def analyze(self, values: np.ndarray, basis: YBasis) -> np.ndarray:
        nx, ny = self.grid.nx, self.grid.ny
        a = _y_analysis(values, basis, ny).real
        h = np.fft.rfft(a, axis=-2) / nx
        c = np.empty(values.shape, dtype=complex)
        c[..., : self.half, :] = h
        c[..., self.half :, :] = np.conj(h[..., nx // 2 - 1 : 0 : -1, :])
        c[..., nx // 2, :] = 0.0
        return c

    def psi(self, w: np.ndarray) -> np.ndarray:
        return -w * self.inv_lap

    def velocity_values(self, w: np.ndarray, ubar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        psi = self.psi(w)
        uc = -self.ky * psi
        uc[0, :] += ubar
        return self.synth(uc, YBasis.COSINE), self.synth(1j * self.kx * psi, YBasis.SINE)

    def tendency(self, w: np.ndarray, ubar: np.ndarray, f: ForcingSpec, t: float):
        m = self.mask
        wm = np.where(m, w, 0.0)
        psi = self.psi(wm)
        ub = np.where(m[0], ubar, 0.0)

        cos_c = np.empty((2,) + w.shape, dtype=complex)
        cos_c[0] = -self.ky * psi
        cos_c[0, 0, :] += ub
        # total y derivative of vorticity: oscillation part plus -ubar_yy
        cos_c[1] = self.ky * wm
        cos_c[1, 0, :] += self.ky_row**2 * ub
        sin_c = np.empty_like(cos_c)
        sin_c[0] = 1j * self.kx * psi
        sin_c[1] = 1j * self.kx * wm

        u, wy = self.synth(cos_c, YBasis.COSINE)
        v, wx = self.synth(sin_c, YBasis.SINE)
        u_osc = u - self.synth(ub[None, :], YBasis.COSINE)

        prod = np.stack([u * wx + v * wy, v * u_osc])
        adv, flux = self.analyze(prod, YBasis.SINE)

        dw = np.where(m, -adv, 0.0)
        dw[0, :] = 0.0
        dub = np.where(m[0], -self.ky_row * flux[0].real, 0.0)

        amp = f.amplitude(t)
        if amp != 0.0:
            # forcing is projected onto the resolved band like everything else
            curl = np.where(m, -self.lap * np.asarray(f.psi_f.coeffs), 0.0)
            curl[0, :] = 0.0
            dw = dw + amp * curl
            dub = dub + amp * np.where(m[0], np.asarray(f.fbar1, dtype=float), 0.0)
        return dw, dub

    def decay(self, delta: float) -> np.ndarray:
        return np.exp(-self.k1sq * delta)


_KERNELS: dict[SpectralGrid, _Kernel] = {}


def _kernel(grid: SpectralGrid) -> _Kernel:
    k = _KERNELS.get(grid)
    if k is None:
        k = _KERNELS[grid] = _Kernel(grid)
    return k


def _omega_osc(s: FlowState) -> np.ndarray:
    w = -s.grid.laplacian_symbol * np.asarray(s.psi.coeffs)
    w[0, :] = 0.0
    return w


def _state(grid: SpectralGrid, w: np.ndarray, ubar: np.ndarray, t: float) -> FlowState:
    k = _kernel(grid)
    return FlowState(ScalarSpectrum(grid, YBasis.SINE, k.psi(w)), ubar, t)


def rhs(s: FlowState, f: ForcingSpec, t: float) -> Tendency:
    """Advective and forcing tendencies; horizontal diffusion excluded."""
    k = _kernel(s.grid)
    dw, dub = k.tendency(_omega_osc(s), np.asarray(s.ubar), f, t)
    return Tendency(ScalarSpectrum(s.grid, YBasis.SINE, dw), dub)


def _rk3(k: _Kernel, w0, u0, f, t0, dt):
    e_half = k.decay(0.5 * dt)
    e_full = e_half * e_half
    n1w, n1u = k.tendency(w0, u0, f, t0)
    w2 = e_half * (w0 + 0.5 * dt * n1w)
    u2 = u0 + 0.5 * dt * n1u
    n2w, n2u = k.tendency(w2, u2, f, t0 + 0.5 * dt)
    w3 = e_full * (w0 - dt * n1w) + 2 * dt * e_half * n2w
    u3 = u0 - dt * n1u + 2 * dt * n2u
    n3w, n3u = k.tendency(w3, u3, f, t0 + dt)
    w = e_full * (w0 + dt / 6 * n1w) + (2 * dt / 3) * e_half * n2w + (dt / 6) * n3w
    u = u0 + dt / 6 * (n1u + 4 * n2u + n3u)
    return w, u


def courant_number(s: FlowState, dt: float) -> float:
    k = _kernel(s.grid)
    u, v = k.velocity_values(_omega_osc(s), np.asarray(s.ubar))
    return dt * max(np.max(np.abs(u)) / k.dx_min, np.max(np.abs(v)) / k.dy_min)


def step(s: FlowState, f: ForcingSpec, dt: float, cfl: Optional[float] = None) -> FlowState:
    """Advance by dt. With cfl given, warn with CflViolation past twice the bound."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k = _kernel(s.grid)
    w, u = _rk3(k, _omega_osc(s), np.asarray(s.ubar, dtype=float), f, s.time, dt)
    out = _state(s.grid, w, u, s.time + dt)
    if cfl is not None:
        c = courant_number(out, dt)
        if c > 2 * cfl:
            warnings.warn(CflViolation(f"Courant number {c:.3g} exceeds 2 x {cfl}"), stacklevel=2)
    return out


def cfl_dt(s: FlowState, cfg: StepperConfig) -> float:
    k = _kernel(s.grid)
    u, v = k.velocity_values(_omega_osc(s), np.asarray(s.ubar))
    limits = []
    umax, vmax = float(np.max(np.abs(u))), float(np.max(np.abs(v)))
    if umax > 0:
        limits.append(k.dx_min / umax)
    if vmax > 0:
        limits.append(k.dy_min / vmax)
    if not limits:
        return cfg.dt_max
    return min(cfg.cfl * min(limits), cfg.dt_max)


class Monitor(Protocol):
    def start(self, s: FlowState, f: ForcingSpec) -> None: ...
    def advance(self, s: FlowState, f: ForcingSpec, dt: float, cfl_number: float) -> None: ...
    def record(self, s: FlowState, f: ForcingSpec, twin: FlowState | None): ...
    def make_twin(self, s: FlowState) -> FlowState | None: ...


def integrate(
    s0: FlowState,
    f: ForcingSpec,
    cfg: StepperConfig,
    monitors: Optional[Monitor] = None,
    on_record: Optional[Callable] = None,
    on_snapshot: Optional[Callable[[int, FlowState], None]] = None,
):
    """Step from s0.time to cfg.t_end.

    monitors.record is called on the initial state and every
    diagnostics_every steps (and at the end); on_record receives each record
    as it is produced, on_snapshot every snapshot_every steps.
    """
    records: list = []
    if cfg.t_end <= s0.time:
        return s0, records
    grid = s0.grid
    k = _kernel(grid)
    twin = monitors.make_twin(s0) if monitors is not None else None

    def emit(state, twin_state):
        if monitors is None:
            return
        rec = monitors.record(state, f, twin_state)
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    if monitors is not None:
        monitors.start(s0, f)
    emit(s0, twin)

    w, u = _omega_osc(s0), np.asarray(s0.ubar, dtype=float)
    tw = tu = None
    if twin is not None:
        tw, tu = _omega_osc(twin), np.asarray(twin.ubar, dtype=float)
    t0, t = s0.time, s0.time
    n = 0
    fixed = cfg.dt != "auto"
    n_fixed = max(1, math.ceil((cfg.t_end - t0) / cfg.dt - 1e-9)) if fixed else 0
    s = s0
    while True:
        if fixed:
            t_next = cfg.t_end if n + 1 >= n_fixed else t0 + (n + 1) * cfg.dt
        else:
            t_next = min(t + cfl_dt(s, cfg), cfg.t_end)
        dt = t_next - t
        w, u = _rk3(k, w, u, f, t, dt)
        if twin is not None:
            tw, tu = _rk3(k, tw, tu, f, t, dt)
            twin = _state(grid, tw, tu, t_next)
        n += 1
        t = t_next
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(u))):
            raise NonFinite(f"non-finite coefficients at step {n}, t={t:.6g}", s, records)
        s = _state(grid, w, u, t)
        done = t >= cfg.t_end or (fixed and n >= n_fixed)
        if monitors is not None:
            monitors.advance(s, f, dt, courant_number(s, dt))
        if on_snapshot is not None and cfg.snapshot_every and n % cfg.snapshot_every == 0:
            on_snapshot(n, s)
        if n % cfg.diagnostics_every == 0 or done:
            emit(s, twin)
        if done:
            return s, records
