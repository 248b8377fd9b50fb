"""
Divergence-free velocity fields on the channel.

The prognostic representation is (psi, ubar): an oscillation streamfunction
psi in SineY with no k1 = 0 content, and the horizontal-mean profile ubar(y)
given by its CosineY coefficients. Velocity follows as

    u = ubar - psi_y,   v = psi_x,

so u_x + v_y = 0 and v = 0 on the walls hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .spectral import (
    BasisMismatch,
    GridMismatch,
    ScalarSpectrum,
    SpectralGrid,
    YBasis,
    dealias,
    dx,
    dy,
    hermitian_part,
    l2_norm,
    laplacian,
    profile_l2,
)


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def profile_spectrum(grid: SpectralGrid, coeffs: np.ndarray, basis: YBasis) -> ScalarSpectrum:
    """Embed a y-profile (k1 = 0 column) as a ScalarSpectrum."""
    c = np.zeros(grid.shape, dtype=complex)
    c[0, :] = coeffs
    return ScalarSpectrum(grid, basis, c)


def _zero_mean_column(s: ScalarSpectrum) -> ScalarSpectrum:
    c = s.coeffs.copy()
    c[0, :] = 0.0
    return s.with_coeffs(c)


@dataclass(frozen=True, eq=False)
class FlowState:
    psi: ScalarSpectrum
    ubar: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        if self.psi.basis is not YBasis.SINE:
            raise BasisMismatch("psi must be expanded in SineY")
        ubar = np.real_if_close(np.asarray(self.ubar), tol=1e6)
        if np.iscomplexobj(ubar):
            raise ValueError("ubar coefficients must be real")
        if ubar.shape != (self.psi.grid.ny + 1,):
            raise ValueError(f"ubar has shape {ubar.shape}, expected ({self.psi.grid.ny + 1},)")
        if self.time < 0:
            raise ValueError(f"time must be nonnegative, got {self.time}")
        if np.any(self.psi.coeffs[0, :] != 0):
            object.__setattr__(self, "psi", _zero_mean_column(self.psi))
        object.__setattr__(self, "ubar", _readonly(ubar))
        object.__setattr__(self, "time", float(self.time))

    @property
    def grid(self) -> SpectralGrid:
        return self.psi.grid

    @classmethod
    def zero(cls, grid: SpectralGrid, time: float = 0.0) -> "FlowState":
        return cls(ScalarSpectrum(grid, YBasis.SINE, np.zeros(grid.shape)), np.zeros(grid.ny + 1), time)

    def replace(self, **changes) -> "FlowState":
        kw = dict(psi=self.psi, ubar=self.ubar, time=self.time)
        kw.update(changes)
        return FlowState(**kw)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.psi.coeffs)) and np.all(np.isfinite(self.ubar)))


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """Divergence-free force (f1, f2) = (fbar1(y) - d_y psi_f, d_x psi_f), scaled by an envelope.

    envelope is one of ("constant",), ("exponential-decay", rate) or
    ("ramp-off", t_off); ramp-off switches the force off linearly, reaching
    zero at t_off.
    """

    psi_f: ScalarSpectrum
    fbar1: np.ndarray = field(repr=False)
    envelope: tuple = ("constant",)

    def __post_init__(self):
        if self.psi_f.basis is not YBasis.SINE:
            raise BasisMismatch("psi_f must be expanded in SineY")
        fbar1 = np.asarray(self.fbar1, dtype=float)
        if fbar1.shape != (self.psi_f.grid.ny + 1,):
            raise ValueError(f"fbar1 has shape {fbar1.shape}, expected ({self.psi_f.grid.ny + 1},)")
        env = tuple(self.envelope)
        kind = env[0]
        if kind == "constant":
            env = ("constant",)
        elif kind in ("exponential-decay", "ramp-off"):
            if len(env) != 2 or not env[1] > 0:
                raise ValueError(f"envelope {kind} needs one positive parameter, got {env[1:]}")
            env = (kind, float(env[1]))
        else:
            raise ValueError(f"unknown envelope {kind!r}")
        if np.any(self.psi_f.coeffs[0, :] != 0):
            object.__setattr__(self, "psi_f", _zero_mean_column(self.psi_f))
        object.__setattr__(self, "fbar1", _readonly(fbar1))
        object.__setattr__(self, "envelope", env)

    @classmethod
    def none(cls, grid: SpectralGrid) -> "ForcingSpec":
        return cls(ScalarSpectrum(grid, YBasis.SINE, np.zeros(grid.shape)), np.zeros(grid.ny + 1))

    @property
    def grid(self) -> SpectralGrid:
        return self.psi_f.grid

    def is_zero(self) -> bool:
        return not (np.any(self.psi_f.coeffs) or np.any(self.fbar1))

    def amplitude(self, t: float) -> float:
        kind = self.envelope[0]
        if kind == "constant":
            return 1.0
        if kind == "exponential-decay":
            return float(np.exp(-self.envelope[1] * t))
        t_off = self.envelope[1]
        return max(0.0, 1.0 - t / t_off)

    def envelope_integral(self, a: float, b: float, power: int = 1) -> float:
        """Exact integral of amplitude(t)**power over [a, b]."""
        if b <= a:
            return 0.0
        kind = self.envelope[0]
        if kind == "constant":
            return b - a
        if kind == "exponential-decay":
            r = power * self.envelope[1]
            return float((np.exp(-r * a) - np.exp(-r * b)) / r)
        t_off = self.envelope[1]
        if a >= t_off:
            return 0.0
        b = min(b, t_off)
        q = power + 1
        return t_off / q * ((1 - a / t_off) ** q - (1 - b / t_off) ** q)

    def dealiased(self) -> "ForcingSpec":
        """The part of the force the solver actually applies (resolved band only)."""
        mask = self.grid.dealias_mask
        return ForcingSpec(
            dealias(self.psi_f), np.where(mask[0], self.fbar1, 0.0), self.envelope
        )

    def at(self, t: float) -> "VelocityPair":
        """Force field (f1, f2) at time t."""
        a = self.amplitude(t)
        f1 = profile_spectrum(self.grid, self.fbar1, YBasis.COSINE) - dy(self.psi_f)
        return VelocityPair(f1 * a, dx(self.psi_f) * a)

    def curl_osc(self, t: float) -> ScalarSpectrum:
        """Oscillation part of curl f, i.e. Laplacian(psi_f) times the envelope."""
        return laplacian(self.psi_f) * self.amplitude(t)

    def curl(self, t: float) -> ScalarSpectrum:
        """Full curl f = d_x f2 - d_y f1 (SineY)."""
        mean = profile_spectrum(self.grid, self.fbar1, YBasis.COSINE)
        return (laplacian(self.psi_f) - dy(mean)) * self.amplitude(t)


class VelocityPair(NamedTuple):
    u: ScalarSpectrum
    v: ScalarSpectrum


class Vorticity(NamedTuple):
    osc: ScalarSpectrum
    bar: np.ndarray


def velocity(s: FlowState) -> VelocityPair:
    u = profile_spectrum(s.grid, s.ubar, YBasis.COSINE) - dy(s.psi)
    return VelocityPair(u, dx(s.psi))


def vorticity(s: FlowState) -> Vorticity:
    """omega = v_x - u_y split into oscillation Laplacian(psi) and mean -ubar_y.

    Both parts are SineY; the mean part is returned as its k1 = 0 coefficients.
    """
    bar = s.grid.ky_phys * s.ubar
    return Vorticity(laplacian(s.psi), bar)


def total_vorticity(s: FlowState) -> ScalarSpectrum:
    w = vorticity(s)
    c = w.osc.coeffs.copy()
    c[0, :] = w.bar
    return w.osc.with_coeffs(c)


def decompose_mean_osc(s: ScalarSpectrum) -> tuple[np.ndarray, ScalarSpectrum]:
    """Split g into its x-mean profile (k1 = 0 coefficients) and the oscillation remainder."""
    bar = s.coeffs[0, :].real.copy()
    return bar, _zero_mean_column(s)


def divergence(vel: VelocityPair) -> ScalarSpectrum:
    return dx(vel.u) + dy(vel.v)


def from_velocity(u: ScalarSpectrum, v: ScalarSpectrum, time: float = 0.0) -> FlowState:
    """Reconstruct (psi, ubar) from primitive velocity.

    psi solves Laplacian(psi) = v_x - u_y (oscillation part) with psi = 0 on
    the walls, which is the least-squares fit of (-psi_y, psi_x) to the
    oscillating part of (u, v). Divergence-free input is reproduced exactly.
    """
    if u.grid != v.grid:
        raise GridMismatch(f"{u.grid} vs {v.grid}")
    if u.basis is not YBasis.COSINE or v.basis is not YBasis.SINE:
        raise BasisMismatch(f"expected (CosineY, SineY), got ({u.basis.value}, {v.basis.value})")
    grid = u.grid
    ubar, u_osc = decompose_mean_osc(u)
    _, v_osc = decompose_mean_osc(v)
    rhs = dx(v_osc) - dy(u_osc)
    lap = grid.laplacian_symbol
    c = np.zeros(grid.shape, dtype=complex)
    nz = lap > 0
    c[nz] = -rhs.coeffs[nz] / lap[nz]
    return FlowState(ScalarSpectrum(grid, YBasis.SINE, c), ubar, time)


def project(vel: VelocityPair) -> VelocityPair:
    """Closest divergence-free field with v = 0 on the walls."""
    return velocity(from_velocity(vel.u, vel.v))


@dataclass(frozen=True)
class SobolevNorms:
    u_l2: float
    ux_l2: float
    uy_l2: float
    v_l2: float
    vx_l2: float
    vy_l2: float
    uxy_l2: float
    velocity_l2: float
    velocity_x_l2: float
    grad_velocity_l2: float
    grad_velocity_x_l2: float
    omega_l2: float
    omega_x_l2: float
    grad_omega_l2: float
    h2: float


def sobolev_norms(s: FlowState) -> SobolevNorms:
    u, v = velocity(s)
    n = {}
    for name, c in (("u", u), ("v", v)):
        cx, cy = dx(c), dy(c)
        n[name] = l2_norm(c)
        n[name + "x"] = l2_norm(cx)
        n[name + "y"] = l2_norm(cy)
        n[name + "xx"] = l2_norm(dx(cx))
        n[name + "xy"] = l2_norm(dy(cx))
        n[name + "yy"] = l2_norm(dy(cy))
    omega = total_vorticity(s)
    wx, wy = dx(omega), dy(omega)
    h2_sq = sum(
        n[c + d] ** 2 for c in ("u", "v") for d in ("", "x", "y", "xx", "xy", "yy")
    )
    return SobolevNorms(
        u_l2=n["u"],
        ux_l2=n["ux"],
        uy_l2=n["uy"],
        v_l2=n["v"],
        vx_l2=n["vx"],
        vy_l2=n["vy"],
        uxy_l2=n["uxy"],
        velocity_l2=float(np.hypot(n["u"], n["v"])),
        velocity_x_l2=float(np.hypot(n["ux"], n["vx"])),
        grad_velocity_l2=float(np.sqrt(n["ux"] ** 2 + n["uy"] ** 2 + n["vx"] ** 2 + n["vy"] ** 2)),
        grad_velocity_x_l2=float(np.sqrt(n["uxx"] ** 2 + n["uxy"] ** 2 + n["vxx"] ** 2 + n["vxy"] ** 2)),
        omega_l2=l2_norm(omega),
        omega_x_l2=l2_norm(wx),
        grad_omega_l2=float(np.hypot(l2_norm(wx), l2_norm(wy))),
        h2=float(np.sqrt(h2_sq)),
    )


def energy(s: FlowState) -> float:
    """Kinetic energy 1/2 (||u||^2 + ||v||^2)."""
    u, v = velocity(s)
    return 0.5 * (l2_norm(u) ** 2 + l2_norm(v) ** 2)


def mean_momentum(s: FlowState) -> float:
    """Integral of u over the channel, i.e. the k2 = 0 coefficient of ubar."""
    return float(s.ubar[0])


def oscillation_norms(s: FlowState) -> tuple[float, float]:
    """(||u_tilde||_2, ||v||_2); v has no mean part."""
    u, v = velocity(s)
    return l2_norm(decompose_mean_osc(u)[1]), l2_norm(v)


def random_state(grid: SpectralGrid, seed: int, kmax: int, amplitude: float = 1.0,
                 mean_amplitude: float | None = None) -> FlowState:
    """Seeded smooth band-limited state.

    The oscillation part has |k1|, k2 <= kmax with spectrum ~ 1/(1 + |k|^2)
    and is scaled to ||(u_tilde, v)||_2 = amplitude. The mean profile has
    CosineY content up to kmax and L2 norm mean_amplitude (default amplitude).
    """
    rng = np.random.default_rng(seed)
    keep = (np.abs(grid.k1)[:, None] <= kmax) & (grid.k2[None, :] <= kmax) & grid.nyquist_mask
    keep[0, :] = False
    keep[:, 0] = False
    keep[:, grid.ny] = False
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c = hermitian_part(np.where(keep, c / (1.0 + grid.laplacian_symbol), 0.0))
    psi = ScalarSpectrum(grid, YBasis.SINE, c)
    ubar = np.zeros(grid.ny + 1)
    ubar[: kmax + 1] = rng.standard_normal(kmax + 1) / (1.0 + np.arange(kmax + 1)) ** 2

    u_osc, v = velocity(FlowState(psi, np.zeros(grid.ny + 1)))
    osc = np.hypot(l2_norm(u_osc), l2_norm(v))
    psi = psi * (amplitude / osc if osc > 0 else 0.0)
    target = amplitude if mean_amplitude is None else mean_amplitude
    pl = profile_l2(ubar)
    ubar = ubar * (target / pl if pl > 0 else 0.0)
    return FlowState(psi, ubar)
