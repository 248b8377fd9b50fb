"""
Run-time monitors: energy and enstrophy budgets, a priori bound margins,
decay fits, long-time behaviour and twin-run separation.

Every record carries the running time integrals it was checked against, so
the check_* functions are pure functions of a record list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .elliptic import solve_dirichlet
from .flow import (
    FlowState,
    ForcingSpec,
    SobolevNorms,
    VelocityPair,
    sobolev_norms,
    velocity,
)
from .spectral import GridMismatch, dx, dy, inner, l2_norm, multiply_dealiased, profile_l2
from .timestepper import rhs

CSV_COLUMNS = (
    "t",
    "energy",
    "enstrophy",
    "u_l2",
    "ux_l2",
    "uy_l2",
    "v_l2",
    "vx_l2",
    "omega_l2",
    "grad_omega_l2",
    "h2_norm",
    "osc_vorticity_l2",
    "mean_profile_l2",
    "energy_residual",
    "enstrophy_residual",
    "e1_margin",
    "e2_margin",
    "v2_margin",
    "v20_margin",
    "twin_distance",
)

MONITORS = (
    "velocity_bound",
    "dissipation_bound",
    "vorticity_bounds",
    "identities",
    "cfl",
    "energy_monotone",
    "decay_fit",
    "asymptotics",
    "h2_plateau",
    "twin",
    "analytic_decay",
)
DEFAULT_MONITORS = ("velocity_bound", "dissipation_bound", "vorticity_bounds", "identities", "cfl")


class DegenerateSeries(ValueError):
    """Too few usable samples for a decay fit."""


@dataclass(frozen=True)
class ForcingIntegrals:
    """Running integrals of forcing norms over [t0, t]."""

    f_l2: float = 0.0
    curl_l2: float = 0.0
    curl_l2_sq: float = 0.0
    fyy_l2_sq: float = 0.0
    fy_l2_sq: float = 0.0


@dataclass(frozen=True)
class StateIntegrals:
    """Running trapezoid integrals of state quantities over [t0, t]."""

    dissipation: float = 0.0  # ||u_x||^2 + ||v_x||^2
    enstrophy_dissipation: float = 0.0  # ||omega_x||^2
    cauchy: float = 0.0  # ||u_xy||^2 + ||u_x||^2
    work: float = 0.0  # (f, u)
    curl_work: float = 0.0  # (curl f, omega)


@dataclass(frozen=True, eq=False)
class DiagnosticsRecord:
    t: float
    energy: float
    enstrophy: float
    norms: SobolevNorms
    energy_budget_residual: float
    enstrophy_budget_residual: float
    bound_e1_margin: float
    bound_e2_margin: float
    bound_v2_margin: float
    bound_v20_margin: float
    h2_norm: float
    osc_vorticity_norm: float
    mean_profile_l2: float
    twin_distance: Optional[float] = None
    step: int = 0
    osc_velocity_l2: float = 0.0
    mean_momentum: float = 0.0
    identity_error: float = 0.0
    max_courant: float = 0.0
    ubar: np.ndarray = field(default=None, repr=False)
    forcing: ForcingIntegrals = ForcingIntegrals()
    integrals: StateIntegrals = StateIntegrals()

    def csv_values(self) -> tuple:
        n = self.norms
        return (
            self.t,
            self.energy,
            self.enstrophy,
            n.u_l2,
            n.ux_l2,
            n.uy_l2,
            n.v_l2,
            n.vx_l2,
            n.omega_l2,
            n.grad_omega_l2,
            self.h2_norm,
            self.osc_vorticity_norm,
            self.mean_profile_l2,
            self.energy_budget_residual,
            self.enstrophy_budget_residual,
            self.bound_e1_margin,
            self.bound_e2_margin,
            self.bound_v2_margin,
            self.bound_v20_margin,
            self.twin_distance,
        )


class _Rates(NamedTuple):
    # per-mode arrays for the positive integrands, scalars for the work terms
    dissipation: np.ndarray
    enstrophy_dissipation: np.ndarray
    cauchy: np.ndarray
    work: np.ndarray
    curl_work: np.ndarray


def _rates(s: FlowState, f: ForcingSpec, t: float) -> _Rates:
    """Instantaneous integrands of the running integrals, straight from coefficients."""
    g = s.grid
    w = g.weights[None, :]
    w_sin = np.broadcast_to(w, g.shape).copy()
    w_sin[:, 0] = w_sin[:, -1] = 0.0
    kx = g.kx_phys[:, None]
    ky = g.ky_phys[None, :]
    psi = np.asarray(s.psi.coeffs)
    u = -ky * psi
    u[0, :] += s.ubar
    v = 1j * kx * psi
    om = -g.laplacian_symbol * psi
    om[0, :] = g.ky_phys * s.ubar

    ux2 = w * np.abs(kx * u) ** 2
    diss = ux2 + w_sin * np.abs(kx * v) ** 2
    ens = w_sin * np.abs(kx * om) ** 2
    cauchy = w_sin * np.abs(kx * ky * u) ** 2 + ux2

    amp = f.amplitude(t)
    if amp == 0.0:
        zero = np.zeros(g.shape)
        return _Rates(diss, ens, cauchy, zero, zero)
    pf = np.asarray(f.psi_f.coeffs)
    f1 = -ky * pf
    f1[0, :] += f.fbar1
    f2 = 1j * kx * pf
    cf = -g.laplacian_symbol * pf
    cf[0, :] = g.ky_phys * f.fbar1
    work = amp * (w * (f1 * np.conj(u)).real + w_sin * (f2 * np.conj(v)).real)
    curl_work = amp * w_sin * (cf * np.conj(om)).real
    return _Rates(diss, ens, cauchy, work, curl_work)


def _log_mean_integral(a: np.ndarray, b: np.ndarray, h: float) -> float:
    """int over one step of a per-mode positive quantity going from a to b.

    Each mode is interpolated exponentially, which is exact for the pure
    horizontal decay the integrating factor imposes and for steady modes;
    modes that vanish at either end fall back to the trapezoid rule.
    """
    out = 0.5 * (a + b)
    pos = (a > 0) & (b > 0)
    lr = np.zeros_like(a)
    lr[pos] = np.log(b[pos] / a[pos])
    sel = pos & (np.abs(lr) > 1e-5)
    out[sel] = (b[sel] - a[sel]) / lr[sel]
    return float(h * np.sum(out))


def forcing_norms(f: ForcingSpec) -> tuple[float, float, float, float]:
    """Spatial (||f||, ||curl f||, ||d_yy f1||, ||d_y f1||) at unit envelope."""
    unit = ForcingSpec(f.psi_f, f.fbar1, ("constant",))
    f1, f2 = unit.at(0.0)
    return (
        float(math.hypot(l2_norm(f1), l2_norm(f2))),
        l2_norm(unit.curl(0.0)),
        l2_norm(dy(dy(f1))),
        l2_norm(dy(f1)),
    )


# pure checks on record lists ------------------------------------------------


class BoundCheck(NamedTuple):
    margins: np.ndarray
    rhs: np.ndarray
    worst_relative: float
    passed: bool


def _bound(lhs: np.ndarray, rhs: np.ndarray, rtol: float) -> BoundCheck:
    margins = rhs - lhs
    scale = np.where(rhs > 0, rhs, 1.0)
    rel = margins / scale
    worst = float(np.min(rel)) if len(rel) else 0.0
    return BoundCheck(margins, rhs, worst, bool(np.all(margins >= -rtol * np.abs(rhs))))


def e1_rhs(u0: float, forcing: ForcingIntegrals) -> float:
    return u0 + forcing.f_l2


def e2_rhs(u0: float, forcing: ForcingIntegrals) -> float:
    return u0**2 + 2 * forcing.f_l2**2


def v2_rhs(w0: float, forcing: ForcingIntegrals) -> float:
    return w0 + forcing.curl_l2


def v20_rhs(w0: float, forcing: ForcingIntegrals) -> float:
    return w0**2 + 2 * forcing.curl_l2**2


def check_velocity_bound(history: Sequence[DiagnosticsRecord], rtol: float = 1e-8) -> BoundCheck:
    """||u(t)|| <= ||u0|| + int ||f||."""
    if not history:
        return _bound(np.zeros(0), np.zeros(0), rtol)
    u0 = history[0].norms.velocity_l2
    lhs = np.array([r.norms.velocity_l2 for r in history])
    rhs_ = np.array([e1_rhs(u0, r.forcing) for r in history])
    return _bound(lhs, rhs_, rtol)


def check_dissipation_bound(history: Sequence[DiagnosticsRecord], rtol: float = 1e-8) -> BoundCheck:
    """int ||(u_x, v_x)||^2 <= ||u0||^2 + 2 (int ||f||)^2."""
    if not history:
        return _bound(np.zeros(0), np.zeros(0), rtol)
    u0 = history[0].norms.velocity_l2
    lhs = np.array([r.integrals.dissipation for r in history])
    rhs_ = np.array([e2_rhs(u0, r.forcing) for r in history])
    return _bound(lhs, rhs_, rtol)


def check_vorticity_bounds(
    history: Sequence[DiagnosticsRecord], rtol: float = 1e-8
) -> tuple[BoundCheck, BoundCheck]:
    """||omega(t)|| <= ||omega0|| + int ||curl f|| and the matching cumulative ||omega_x||^2 bound."""
    if not history:
        empty = _bound(np.zeros(0), np.zeros(0), rtol)
        return empty, empty
    w0 = history[0].norms.omega_l2
    lhs = np.array([r.norms.omega_l2 for r in history])
    rhs_ = np.array([v2_rhs(w0, r.forcing) for r in history])
    lhs0 = np.array([r.integrals.enstrophy_dissipation for r in history])
    rhs0 = np.array([v20_rhs(w0, r.forcing) for r in history])
    return _bound(lhs, rhs_, rtol), _bound(lhs0, rhs0, rtol)


def energy_budget(rec_prev: DiagnosticsRecord, rec_next: DiagnosticsRecord, work_by_force: float) -> float:
    """dE/dt + ||(u_x, v_x)||^2 - (f, u) averaged over the record interval.

    work_by_force is the time average of (f, u) over the interval; the
    dissipation average comes from the running integrals on the records.
    """
    dt = rec_next.t - rec_prev.t
    if dt <= 0:
        raise ValueError("records must be in increasing time order")
    d_diss = rec_next.integrals.dissipation - rec_prev.integrals.dissipation
    return (rec_next.energy - rec_prev.energy + d_diss) / dt - work_by_force


def enstrophy_budget(rec_prev: DiagnosticsRecord, rec_next: DiagnosticsRecord, curl_work: float) -> float:
    """d(||omega||^2 / 2)/dt + ||omega_x||^2 - (curl f, omega), interval-averaged."""
    dt = rec_next.t - rec_prev.t
    if dt <= 0:
        raise ValueError("records must be in increasing time order")
    d_diss = rec_next.integrals.enstrophy_dissipation - rec_prev.integrals.enstrophy_dissipation
    return (0.5 * (rec_next.enstrophy - rec_prev.enstrophy) + d_diss) / dt - curl_work


class DecayFit(NamedTuple):
    rate: float
    r_squared: float
    n_points: int


def fit_exponential_decay(
    times: Sequence[float], values: Sequence[float], floor: float = 1e-13, skip_fraction: float = 0.1
) -> DecayFit:
    """Least-squares line through (t, log values^2); rate is minus the slope.

    values are norms; the fit is of their squares, so values = exp(-r t / 2)
    gives rate r. Samples at or below floor are dropped, then the first
    skip_fraction of the rest (the transient).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and values differ in length")
    keep = y > floor
    t, y = t[keep], y[keep]
    start = int(len(t) * skip_fraction)
    t, y = t[start:], y[start:]
    if len(t) < 10:
        raise DegenerateSeries(f"only {len(t)} samples above {floor:g}")
    logy = np.log(y**2)
    slope, intercept = np.polyfit(t, logy, 1)
    resid = logy - (slope * t + intercept)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return DecayFit(float(-slope), r2, len(t))


@dataclass(frozen=True)
class AsymptoticsReport:
    final_oscillation: float
    threshold: float
    decayed: bool
    cauchy_constant: float
    worst_cauchy_ratio: float
    cauchy_ok: bool
    momentum_drift: float


def check_asymptotics(
    history: Sequence[DiagnosticsRecord],
    threshold: float = 1e-6,
    cauchy_constant: float = 10.0,
    roundoff: float = 1e-13,
) -> AsymptoticsReport:
    """Oscillation decay and the Cauchy property of the mean profile.

    Over record pairs s < t in the final third of the run,
    ||ubar(t) - ubar(s)|| <= C int_s^t (||u_xy||^2 + ||u_x||^2) must hold up
    to an absolute allowance of roundoff * max ||ubar||.
    """
    if not history:
        raise ValueError("empty history")
    last = history[-1]
    final = last.osc_velocity_l2
    t_end, t0 = last.t, history[0].t
    tail = [r for r in history if r.t >= t_end - (t_end - t0) / 3.0]
    profiles = np.array([r.ubar for r in tail])
    cum = np.array([r.integrals.cauchy for r in tail])
    weights = np.full(profiles.shape[1], 0.5)
    weights[0] = 1.0
    allowance = roundoff * max(r.mean_profile_l2 for r in tail) if tail else 0.0
    worst = 0.0
    ok = True
    for i in range(len(tail) - 1):
        diff = np.sqrt(np.sum(weights * (profiles[i + 1 :] - profiles[i]) ** 2, axis=1))
        bound = cauchy_constant * (cum[i + 1 :] - cum[i])
        ok &= bool(np.all(diff <= bound + allowance))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(bound > 0, diff / np.where(bound > 0, bound, 1.0), np.where(diff > allowance, np.inf, 0.0))
        worst = max(worst, float(np.max(ratio)))
    drift = abs(last.mean_momentum - history[0].mean_momentum)
    return AsymptoticsReport(final, threshold, final <= threshold, cauchy_constant, worst, ok, drift)


def twin_run_distance(a: FlowState, b: FlowState) -> float:
    """L2 distance between the two velocity fields."""
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")
    ua, va = velocity(a)
    ub, vb = velocity(b)
    return float(math.hypot(l2_norm(ua - ub), l2_norm(va - vb)))


def velocity_tendency(s: FlowState, f: ForcingSpec, t: float) -> VelocityPair:
    """Velocity time derivative implied by rhs (advection and forcing only)."""
    tend = rhs(s, f, t)
    dpsi = solve_dirichlet(-tend.d_omega_osc)
    return velocity(FlowState(dpsi, tend.d_ubar, s.time))


def weak_residual(s: FlowState, f: ForcingSpec, w: VelocityPair, t: Optional[float] = None) -> float:
    """|d/dt (u, w) + (u_x, w_x) + ((u . grad) u, w) - (f, w)| at time t.

    The time derivative includes horizontal diffusion, -(u_x, w_x); advection
    is evaluated from primitive dealiased products.
    """
    t = s.time if t is None else t
    u, v = velocity(s)
    du, dv = velocity_tendency(s, f, t)
    # diffusion enters d/dt (u, w) as -(u_x, w_x) and cancels the viscous term
    ddt_inviscid = inner(du, w.u) + inner(dv, w.v)
    adv_u = multiply_dealiased(u, dx(u)) + multiply_dealiased(v, dy(u))
    adv_v = multiply_dealiased(u, dx(v)) + multiply_dealiased(v, dy(v))
    adv = inner(adv_u, w.u) + inner(adv_v, w.v)
    f1, f2 = f.at(t)
    force = inner(f1, w.u) + inner(f2, w.v)
    return abs(ddt_inviscid + adv - force)


class MonitorResult(NamedTuple):
    name: str
    passed: bool
    value: float
    detail: str


@dataclass
class MonitorSet:
    """Monitor toggles, tolerances and the running integrals of one integration."""

    enabled: tuple[str, ...] = DEFAULT_MONITORS
    bound_rtol: float = 1e-8
    identity_rtol: float = 1e-12
    cfl_limit: Optional[float] = None
    asymptotic_threshold: float = 1e-6
    cauchy_constant: float = 10.0
    decay_r2_min: float = 0.999
    twin_delta: Optional[float] = None
    twin_factor: float = 100.0
    expected_vorticity_decay: Optional[float] = None
    analytic_rtol: float = 1e-5

    _f: Optional[ForcingSpec] = field(default=None, init=False, repr=False)
    _fnorms: tuple = field(default=(0.0, 0.0, 0.0, 0.0), init=False, repr=False)
    _forcing: ForcingIntegrals = field(default_factory=ForcingIntegrals, init=False, repr=False)
    _state: StateIntegrals = field(default_factory=StateIntegrals, init=False, repr=False)
    _rates: Optional[_Rates] = field(default=None, init=False, repr=False)
    _t: float = field(default=0.0, init=False, repr=False)
    _u0: float = field(default=0.0, init=False, repr=False)
    _w0: float = field(default=0.0, init=False, repr=False)
    _steps: int = field(default=0, init=False, repr=False)
    _max_courant: float = field(default=0.0, init=False, repr=False)
    _cfl_violations: int = field(default=0, init=False, repr=False)
    _prev: Optional[DiagnosticsRecord] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        unknown = set(self.enabled) - set(MONITORS)
        if unknown:
            raise ValueError(f"unknown monitors: {sorted(unknown)}")
        self.enabled = tuple(self.enabled)

    @property
    def forcing_integrals(self) -> ForcingIntegrals:
        return self._forcing

    @property
    def cfl_violations(self) -> int:
        return self._cfl_violations

    @property
    def forcing_is_zero(self) -> bool:
        return self._f is None or self._f.is_zero()

    def make_twin(self, s: FlowState) -> Optional[FlowState]:
        """Copy of s with delta * sqrt(2) cos(pi y) added to the mean profile."""
        if self.twin_delta is None:
            return None
        ubar = np.array(s.ubar, dtype=float)
        ubar[1] += self.twin_delta * math.sqrt(2.0)
        return s.replace(ubar=ubar)

    def start(self, s: FlowState, f: ForcingSpec) -> None:
        self._f = f.dealiased()
        self._fnorms = forcing_norms(self._f)
        self._forcing = ForcingIntegrals()
        self._state = StateIntegrals()
        self._rates = _rates(s, self._f, s.time)
        self._t = s.time
        self._steps = 0
        self._max_courant = 0.0
        self._cfl_violations = 0
        self._prev = None
        n = sobolev_norms(s)
        self._u0, self._w0 = n.velocity_l2, n.omega_l2

    def advance(self, s: FlowState, f: ForcingSpec, dt: float, courant: float) -> None:
        a, b = self._t, s.time
        env1 = self._f.envelope_integral(a, b, 1)
        env2 = self._f.envelope_integral(a, b, 2)
        fl2, curl, fyy, fy = self._fnorms
        fi = self._forcing
        self._forcing = ForcingIntegrals(
            fi.f_l2 + fl2 * env1,
            fi.curl_l2 + curl * env1,
            fi.curl_l2_sq + curl**2 * env2,
            fi.fyy_l2_sq + fyy**2 * env2,
            fi.fy_l2_sq + fy**2 * env2,
        )
        new = _rates(s, self._f, b)
        old = self._rates
        h = b - a
        si = self._state
        self._state = StateIntegrals(
            si.dissipation + _log_mean_integral(old.dissipation, new.dissipation, h),
            si.enstrophy_dissipation + _log_mean_integral(old.enstrophy_dissipation, new.enstrophy_dissipation, h),
            si.cauchy + _log_mean_integral(old.cauchy, new.cauchy, h),
            si.work + 0.5 * h * float(np.sum(old.work + new.work)),
            si.curl_work + 0.5 * h * float(np.sum(old.curl_work + new.curl_work)),
        )
        self._rates = new
        self._t = b
        self._steps += 1
        self._max_courant = max(self._max_courant, courant)
        if self.cfl_limit is not None and courant > 2 * self.cfl_limit:
            self._cfl_violations += 1

    def record(self, s: FlowState, f: ForcingSpec, twin: Optional[FlowState] = None) -> DiagnosticsRecord:
        n = sobolev_norms(s)
        energy = 0.5 * n.velocity_l2**2
        enstrophy = n.omega_l2**2
        psi = np.asarray(s.psi.coeffs)
        g = s.grid
        w = g.weights[None, :]
        u_osc = math.sqrt(float(np.sum(w * np.abs(g.ky_phys[None, :] * psi) ** 2)))
        osc_vort = math.sqrt(float(np.sum(w * np.abs(g.laplacian_symbol * psi) ** 2)))
        ident = max(
            abs(n.omega_l2**2 - n.grad_velocity_l2**2) / max(n.grad_velocity_l2**2, 1e-300),
            abs(n.u_l2**2 - profile_l2(s.ubar) ** 2 - u_osc**2) / max(n.u_l2**2, 1e-300),
        )
        rec = DiagnosticsRecord(
            t=s.time,
            energy=energy,
            enstrophy=enstrophy,
            norms=n,
            energy_budget_residual=0.0,
            enstrophy_budget_residual=0.0,
            bound_e1_margin=e1_rhs(self._u0, self._forcing) - n.velocity_l2,
            bound_e2_margin=e2_rhs(self._u0, self._forcing) - self._state.dissipation,
            bound_v2_margin=v2_rhs(self._w0, self._forcing) - n.omega_l2,
            bound_v20_margin=v20_rhs(self._w0, self._forcing) - self._state.enstrophy_dissipation,
            h2_norm=n.h2,
            osc_vorticity_norm=osc_vort,
            mean_profile_l2=profile_l2(s.ubar),
            twin_distance=None if twin is None else twin_run_distance(s, twin),
            step=self._steps,
            osc_velocity_l2=u_osc + n.v_l2,
            mean_momentum=float(s.ubar[0]),
            identity_error=ident,
            max_courant=self._max_courant,
            ubar=np.array(s.ubar),
            forcing=self._forcing,
            integrals=self._state,
        )
        prev = self._prev
        if prev is not None:
            dt = rec.t - prev.t
            work = (rec.integrals.work - prev.integrals.work) / dt
            curl_work = (rec.integrals.curl_work - prev.integrals.curl_work) / dt
            rec = replace(
                rec,
                energy_budget_residual=energy_budget(prev, rec, work),
                enstrophy_budget_residual=enstrophy_budget(prev, rec, curl_work),
            )
        self._prev = rec
        return rec

    def evaluate(self, history: Sequence[DiagnosticsRecord]) -> list[MonitorResult]:
        """Pass/fail for every enabled monitor over a finished history."""
        out = []
        on = set(self.enabled)
        if "velocity_bound" in on:
            c = check_velocity_bound(history, self.bound_rtol)
            out.append(MonitorResult("velocity_bound", c.passed, c.worst_relative, "min relative margin"))
        if "dissipation_bound" in on:
            c = check_dissipation_bound(history, self.bound_rtol)
            out.append(MonitorResult("dissipation_bound", c.passed, c.worst_relative, "min relative margin"))
        if "vorticity_bounds" in on:
            c2, c20 = check_vorticity_bounds(history, self.bound_rtol)
            out.append(
                MonitorResult(
                    "vorticity_bounds",
                    c2.passed and c20.passed,
                    min(c2.worst_relative, c20.worst_relative),
                    "min relative margin",
                )
            )
        if "identities" in on:
            worst = max((r.identity_error for r in history), default=0.0)
            out.append(MonitorResult("identities", worst <= self.identity_rtol, worst, "max relative error"))
        if "cfl" in on:
            out.append(
                MonitorResult("cfl", self._cfl_violations == 0, float(self._cfl_violations), "steps over 2x cfl")
            )
        if "energy_monotone" in on:
            e = np.array([r.energy for r in history])
            rises = np.diff(e) > 1e-14 * np.maximum(e[:-1], 1e-300) if len(e) > 1 else np.zeros(0, bool)
            out.append(MonitorResult("energy_monotone", not rises.any(), float(rises.sum()), "records with rising energy"))
        if "decay_fit" in on:
            try:
                fit = fit_exponential_decay([r.t for r in history], [r.osc_vorticity_norm for r in history])
                ok = fit.rate > 0 and fit.r_squared > self.decay_r2_min
                out.append(MonitorResult("decay_fit", ok, fit.rate, f"r2={fit.r_squared!r}"))
            except DegenerateSeries as exc:
                out.append(MonitorResult("decay_fit", False, float("nan"), str(exc)))
        if "asymptotics" in on:
            rep = check_asymptotics(history, self.asymptotic_threshold, self.cauchy_constant)
            ok = rep.decayed and rep.cauchy_ok
            out.append(
                MonitorResult(
                    "asymptotics",
                    ok,
                    rep.final_oscillation,
                    f"cauchy_ok={rep.cauchy_ok} worst_ratio={rep.worst_cauchy_ratio!r} drift={rep.momentum_drift!r}",
                )
            )
        if "h2_plateau" in on:
            rep = h2_plateau(history)
            out.append(MonitorResult("h2_plateau", rep.passed, rep.t_peak, f"peak {rep.peak!r}"))
        if "twin" in on and self.twin_delta is not None:
            d = max((r.twin_distance or 0.0 for r in history), default=0.0)
            bound = self.twin_factor * self.twin_delta
            out.append(MonitorResult("twin", d <= bound, d, f"bound {bound!r}"))
        if "analytic_decay" in on and self.expected_vorticity_decay is not None and history:
            first, last = history[0], history[-1]
            measured = last.norms.omega_l2 / first.norms.omega_l2
            expected = math.exp(-self.expected_vorticity_decay * (last.t - first.t))
            err = abs(measured / expected - 1.0)
            out.append(
                MonitorResult("analytic_decay", err <= self.analytic_rtol, err, f"ratio {measured!r} vs {expected!r}")
            )
        return out


class PlateauReport(NamedTuple):
    peak: float
    t_peak: float
    final_third_max: float
    passed: bool


def h2_plateau(history: Sequence[DiagnosticsRecord]) -> PlateauReport:
    """The H2 history peaks in the first half and does not exceed the peak later."""
    t = np.array([r.t for r in history])
    h = np.array([r.h2_norm for r in history])
    i = int(np.argmax(h))
    t0, t1 = t[0], t[-1]
    tail = h[t >= t1 - (t1 - t0) / 3.0]
    ok = t[i] < t0 + 0.5 * (t1 - t0) and float(tail.max()) <= float(h[i])
    return PlateauReport(float(h[i]), float(t[i]), float(tail.max()), bool(ok))
