import math
from types import SimpleNamespace

import numpy as np
import pytest

from anse.config import ForcingConfig
from anse.diagnostics import (
    CSV_COLUMNS,
    DegenerateSeries,
    ForcingIntegrals,
    MonitorSet,
    check_asymptotics,
    check_velocity_bound,
    fit_exponential_decay,
    h2_plateau,
    twin_run_distance,
    weak_residual,
)
from anse.flow import ForcingSpec, VelocityPair, random_state, velocity
from anse.scenarios import build_forcing, pure_shear, taylor_green
from anse.spectral import SpectralGrid
from anse.timestepper import StepperConfig, integrate

G16 = SpectralGrid(16, 16)


def run(s0, f, t_end, dt, every=1, **monitor_kw):
    m = MonitorSet(**monitor_kw)
    _, recs = integrate(s0, f, StepperConfig(t_end=t_end, dt=dt, diagnostics_every=every), m)
    return m, recs


class TestRecords:
    def test_csv_schema(self):
        assert CSV_COLUMNS == (
            "t", "energy", "enstrophy", "u_l2", "ux_l2", "uy_l2", "v_l2", "vx_l2", "omega_l2",
            "grad_omega_l2", "h2_norm", "osc_vorticity_l2", "mean_profile_l2", "energy_residual",
            "enstrophy_residual", "e1_margin", "e2_margin", "v2_margin", "v20_margin", "twin_distance",
        )

    def test_first_record_is_initial_state(self):
        s0 = taylor_green(G16)
        _, recs = run(s0, ForcingSpec.none(G16), 0.01, 1e-3, every=5)
        assert [r.step for r in recs] == [0, 5, 10]
        assert recs[0].t == 0.0
        assert len(recs[0].csv_values()) == len(CSV_COLUMNS)
        assert recs[0].twin_distance is None

    def test_energy_and_enstrophy(self):
        _, recs = run(random_state(G16, 1, 3), ForcingSpec.none(G16), 0.002, 1e-3)
        r = recs[-1]
        assert r.energy == pytest.approx(0.5 * r.norms.velocity_l2**2)
        assert r.enstrophy == pytest.approx(r.norms.omega_l2**2)


class TestBudgets:
    def test_pure_shear_residual_zero(self):
        _, recs = run(pure_shear(G16, 1.0), ForcingSpec.none(G16), 0.01, 1e-3)
        assert all(r.energy_budget_residual == 0 and r.enstrophy_budget_residual == 0 for r in recs)

    def test_taylor_green_residual_vanishes(self):
        _, recs = run(taylor_green(G16), ForcingSpec.none(G16), 0.05, 1e-3, every=10)
        assert max(abs(r.energy_budget_residual) for r in recs) <= 1e-10
        assert max(abs(r.enstrophy_budget_residual) for r in recs) <= 1e-8

    def test_second_order_residuals(self):
        s0 = random_state(G16, 3, 4)
        e, w = [], []
        for dt in (4e-4, 2e-4, 1e-4):
            _, recs = run(s0, ForcingSpec.none(G16), 0.02, dt, every=int(round(0.005 / dt)))
            e.append(max(abs(r.energy_budget_residual) for r in recs))
            w.append(max(abs(r.enstrophy_budget_residual) for r in recs))
        for series in (e, w):
            orders = np.log2(np.array(series[:-1]) / np.array(series[1:]))
            assert np.all(orders > 1.8)

    def test_forced_residual_at_64(self):
        g = SpectralGrid(64, 64)
        f = build_forcing(g, ForcingConfig(amplitude=1.0))
        m, recs = run(random_state(g, 0, 4), f, 0.05, 1e-4, every=50)
        assert max(abs(r.energy_budget_residual) for r in recs) <= 1e-4
        assert all(res.passed for res in m.evaluate(recs))


class TestBounds:
    @pytest.mark.parametrize("env", [("constant",), ("exponential-decay", 1.0), ("ramp-off", 0.05)])
    def test_margins_nonnegative(self, env):
        fc = ForcingConfig(amplitude=2.0, mean_amplitude=0.5, envelope=env[0],
                           envelope_param=env[1] if len(env) > 1 else None)
        f = build_forcing(G16, fc)
        m, recs = run(random_state(G16, 4, 3), f, 0.1, 1e-3, every=5)
        for res in m.evaluate(recs)[:3]:
            assert res.passed, res

    def test_bound_check_flags_violation(self):
        def rec(u, f_int):
            return SimpleNamespace(norms=SimpleNamespace(velocity_l2=u), forcing=ForcingIntegrals(f_l2=f_int))

        assert check_velocity_bound([rec(1.0, 0.0), rec(1.4, 0.5)]).passed
        bad = check_velocity_bound([rec(1.0, 0.0), rec(1.6, 0.5)])
        assert not bad.passed
        assert bad.worst_relative == pytest.approx(-0.1 / 1.5)

    def test_pure_shear_enstrophy_constant(self):
        _, recs = run(pure_shear(G16, 1.0), ForcingSpec.none(G16), 0.02, 1e-3)
        w = [r.norms.omega_l2 for r in recs]
        assert max(w) - min(w) == 0
        assert recs[-1].integrals.enstrophy_dissipation == 0


class TestDecayFit:
    def test_recovers_rate_of_squares(self):
        t = np.linspace(0, 5, 50)
        fit = fit_exponential_decay(t, np.exp(-1.5 * t))
        assert fit.rate == pytest.approx(3.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_floor_drops_tail(self):
        t = np.linspace(0, 10, 200)
        fit = fit_exponential_decay(t, np.maximum(np.exp(-5 * t), 1e-300))
        assert fit.rate == pytest.approx(10.0, rel=1e-10)
        assert fit.n_points < 200

    def test_degenerate(self):
        with pytest.raises(DegenerateSeries):
            fit_exponential_decay(np.arange(5.0), np.ones(5))


class TestAsymptotics:
    def test_pure_shear_trivially_converged(self):
        _, recs = run(pure_shear(G16, 1.0), ForcingSpec.none(G16), 0.05, 1e-3)
        rep = check_asymptotics(recs)
        assert rep.decayed and rep.cauchy_ok
        assert rep.final_oscillation == 0


class TestTwin:
    def test_distance_stays_order_delta(self):
        g = SpectralGrid(32, 32)
        m, recs = run(taylor_green(g), ForcingSpec.none(g), 0.5, 1e-2, every=10, twin_delta=1e-6,
                      enabled=("twin",))
        assert recs[0].twin_distance == pytest.approx(1e-6, rel=1e-9)
        assert max(r.twin_distance for r in recs) <= 100 * 1e-6
        assert m.evaluate(recs)[0].passed

    def test_distance_symmetric(self):
        a, b = random_state(G16, 1, 3), random_state(G16, 2, 3)
        assert twin_run_distance(a, b) == twin_run_distance(b, a) > 0


class TestWeakResidual:
    def test_small_for_random_test_field(self):
        s = random_state(G16, 3, 3)
        f = build_forcing(G16, ForcingConfig(amplitude=1.0, mean_amplitude=0.2))
        w = velocity(random_state(G16, 8, 3))
        assert weak_residual(s, f, VelocityPair(*w), 0.0) <= 1e-12


class TestPlateau:
    def test_peak_early(self):
        t = np.linspace(0, 10, 101)
        h = 1 + t * np.exp(-t)
        rep = h2_plateau([SimpleNamespace(t=a, h2_norm=b) for a, b in zip(t, h)])
        assert rep.passed and rep.t_peak == pytest.approx(1.0)

    def test_growth_fails(self):
        t = np.linspace(0, 10, 101)
        rep = h2_plateau([SimpleNamespace(t=a, h2_norm=1 + a) for a in t])
        assert not rep.passed


class TestMonitorSet:
    def test_unknown_monitor(self):
        with pytest.raises(ValueError):
            MonitorSet(enabled=("velocity_bound", "nope"))

    def test_analytic_decay(self):
        m, recs = run(taylor_green(SpectralGrid(32, 32)), ForcingSpec.none(SpectralGrid(32, 32)), 0.05, 1e-4,
                      every=100, enabled=("analytic_decay",), expected_vorticity_decay=4 * math.pi**2)
        (res,) = m.evaluate(recs)
        assert res.name == "analytic_decay" and res.passed and res.value < 1e-8

    def test_cfl_excursions_counted(self):
        g = SpectralGrid(64, 64)
        m, recs = run(pure_shear(g, 1.0), ForcingSpec.none(g), 0.2, 0.05, cfl_limit=0.5)
        assert m.cfl_violations == 4
        assert not [r for r in m.evaluate(recs) if r.name == "cfl"][0].passed
