"""End-to-end acceptance checks, one test per criterion.

Each test records a measured summary in its "detail" property; the conftest
hook prints a PASS/FAIL line per criterion and a summary at the end.
"""

import math

import numpy as np
import pytest

from anse import cli
from anse.audit import (
    audit_linfty_l1,
    audit_poincare_mean,
    audit_poincare_wall,
    audit_transport_orthogonality,
    audit_triple_product,
    linfty_l1_ratio,
)
from anse.config import config_from_dict
from anse.elliptic import solve_dirichlet, solve_phi_fd, verify_phi_estimates
from anse.flow import oscillation_norms, random_state, sobolev_norms, velocity
from anse.persist import read_diagnostics, read_manifest, read_snapshot
from anse.scenarios import build_scenario
from anse.spectral import (
    ScalarSpectrum,
    SpectralGrid,
    YBasis,
    dealias,
    hermitian_part,
    l2_norm,
    laplacian,
    multiply_dealiased,
)
from test_spectral import brute_force_product, random_in_band

G64 = SpectralGrid(64, 64)


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def run_scenario(tmp_path, name, data):
    data = dict(data)
    data.setdefault("output", {})["run_dir"] = str(tmp_path / name)
    cfg = config_from_dict(data)
    code = cli.run(cfg)
    run_dir = tmp_path / name
    return cfg, code, read_manifest(run_dir / "manifest.json"), read_diagnostics(run_dir / "diagnostics.csv"), run_dir


FREE_DECAY = {"scenario": "free_decay", "initial": {"seed": 11, "kmax": 6, "amplitude": 1.0, "mean_amplitude": 0.5}}
FORCED = {
    "scenario": "forced_h2",
    "initial": {"seed": 3, "amplitude": 0.01},
    "forcing": {"amplitude": 5.0, "envelope": "exponential-decay", "envelope_param": 1.0},
}
SHEAR = {"scenario": "shear_stability", "initial": {"shear_slope": 1.0, "epsilon": 1e-3, "seed": 2, "kmax": 4}}


@pytest.mark.criterion(1, "Taylor-Green vorticity decays at exp(-4 pi^2 t)")
def test_taylor_green_decay(tmp_path, request):
    _, code, _, d, _ = run_scenario(tmp_path, "tg", {
        "scenario": "taylor_green", "stepper": {"t_end": 0.1, "dt": 1e-4}, "output": {"diagnostics_every": 100}})
    ratio = d["omega_l2"][-1] / d["omega_l2"][0]
    err = abs(ratio / math.exp(-4 * math.pi**2 * 0.1) - 1)
    detail(request, f"t={d['t'][-1]:g}, relative error {err:.2e}, exit {code}")
    assert d["t"][-1] == pytest.approx(0.1, abs=1e-12)
    assert err <= 1e-5
    assert code == cli.EXIT_OK


@pytest.mark.criterion(2, "vorticity identities on 100 random states")
def test_identities(request):
    worst = 0.0
    for seed in range(100):
        n = sobolev_norms(random_state(G64, seed, 1 + seed % 21))
        worst = max(worst, abs(n.omega_l2 / n.grad_velocity_l2 - 1), abs(n.omega_x_l2 / n.grad_velocity_x_l2 - 1))
    detail(request, f"worst relative mismatch {worst:.2e}")
    assert worst <= 1e-12


@pytest.mark.slow
@pytest.mark.criterion(3, "energy and vorticity bound margins on free decay, forced and shear runs")
def test_bound_margins(tmp_path, request):
    worst = {}
    codes = {}
    for name, data in (("free_decay", FREE_DECAY), ("forced", FORCED), ("shear", SHEAR)):
        data = {**data, "stepper": {"t_end": 1.0, "dt": 1e-4}, "output": {"diagnostics_every": 10}}
        _, codes[name], m, _, _ = run_scenario(tmp_path, name, data)
        res = {x["name"]: x for x in m["monitors"]}
        worst[name] = min(res[k]["value"] for k in ("velocity_bound", "dissipation_bound", "vorticity_bounds"))
        assert all(res[k]["passed"] for k in ("velocity_bound", "dissipation_bound", "vorticity_bounds")), res
    detail(request, ", ".join(f"{k} min margin {v:.3g}" for k, v in worst.items()))
    assert all(v >= -1e-8 for v in worst.values())
    assert set(codes.values()) == {cli.EXIT_OK}, codes


@pytest.mark.criterion(4, "Poisson solve and phi estimates")
def test_poisson_and_phi(request):
    rng = np.random.default_rng(4)
    c = rng.standard_normal(G64.shape) + 1j * rng.standard_normal(G64.shape)
    c[:, 0] = c[:, -1] = 0
    c[G64.nx // 2] = 0
    rhs = ScalarSpectrum(G64, YBasis.SINE, hermitian_part(c))
    residual = l2_norm(-laplacian(solve_dirichlet(rhs)) - rhs) / l2_norm(rhs)

    vel = velocity(random_state(SpectralGrid(32, 32), 3, 4))
    sols = [solve_phi_fd(vel, n) for n in (64, 128, 256, 512)]
    diffs = [np.max(np.abs(a.hat - b.hat[:, ::2])) for a, b in zip(sols[:-1], sols[1:])]
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))

    g = SpectralGrid(32, 32)
    failures, h2_gap = 0, 0.0
    for seed in range(100):
        rep = verify_phi_estimates(velocity(random_state(g, seed, 1 + seed % 10)), 256)
        failures += not all(rep.satisfied)
        h2_gap = max(h2_gap, abs(rep.h2_sum / rep.rhs_H2 - 1))
    detail(request, f"residual {residual:.1e}, orders {np.round(orders, 3).tolist()}, "
                    f"{failures} failed states, H2 gap {h2_gap:.1e} (ny_fd^-2 = {256**-2:.1e})")
    assert residual <= 1e-12
    assert np.all(np.abs(orders - 2.0) <= 0.1)
    assert failures == 0
    assert h2_gap <= 10 / 256**2


@pytest.mark.slow
@pytest.mark.criterion(5, "functional inequality audits")
def test_inequality_audits(request):
    wall = audit_poincare_wall(1000, 8, 0)
    mean = audit_poincare_mean(1000, 8, 0)
    linf = audit_linfty_l1(10_000, 8, 0)
    const = ScalarSpectrum(G64, YBasis.COSINE, np.where(np.arange(G64.nx)[:, None] + np.arange(G64.ny + 1) == 0, 1.0, 0.0))
    triple = [audit_triple_product(500, k, 0).max_ratio for k in (8, 16, 32)]
    spread = (max(triple) - min(triple)) / max(triple)
    transport = audit_transport_orthogonality(1000, 8, 0)
    detail(request, f"wall {wall.max_ratio - 1 / math.pi:+.1e} off 1/pi, mean {mean.max_ratio - 1 / (2 * math.pi):+.1e} "
                    f"off 1/2pi, linfty {linf.violations} violations, triple spread {spread:.1%}, "
                    f"transport {transport.violations} violations")
    assert abs(wall.max_ratio - 1 / math.pi) <= 1e-12 and wall.violations == 0
    assert abs(mean.max_ratio - 1 / (2 * math.pi)) <= 1e-12 and mean.violations == 0
    assert linf.n_trials == 10_000 and linf.violations == 0
    assert linfty_l1_ratio(const) == pytest.approx(1.0, abs=1e-12)
    assert spread <= 0.10
    assert transport.n_trials == 1000 and transport.violations == 0


@pytest.mark.criterion(6, "perturbed shear decays exponentially")
def test_shear_stability(tmp_path, request):
    _, code, m, _, _ = run_scenario(tmp_path, "shear", {**SHEAR, "stepper": {"t_end": 5.0}})
    fit = {x["name"]: x for x in m["monitors"]}["decay_fit"]
    detail(request, f"{fit['detail']}, exit {code}")
    assert fit["passed"] and fit["value"] > 0
    assert code == cli.EXIT_OK


@pytest.mark.criterion(7, "unforced oscillation vanishes, mean profile settles, momentum conserved")
def test_free_decay_asymptotics(tmp_path, request):
    cfg, code, m, _, run_dir = run_scenario(tmp_path, "free", {**FREE_DECAY, "stepper": {"t_end": 20.0}})
    s0, _ = build_scenario(cfg)
    s1 = read_snapshot(run_dir / "final.bin")
    osc = sum(oscillation_norms(s1))
    drift = abs(s1.ubar[0] - s0.ubar[0])
    asym = {x["name"]: x for x in m["monitors"]}["asymptotics"]
    detail(request, f"t={s1.time:g}, oscillation {osc:.1e}, momentum drift {drift:.1e}, {asym['detail']}")
    assert s1.time == pytest.approx(20.0)
    assert osc <= 1e-6
    assert asym["passed"]
    assert drift <= 1e-9
    assert code == cli.EXIT_OK


@pytest.mark.criterion(8, "forced H2 norm peaks early and stays bounded")
def test_forced_h2_plateau(tmp_path, request):
    _, code, m, d, _ = run_scenario(tmp_path, "h2", {**FORCED, "stepper": {"t_end": 4.0}})
    t, h = d["t"], d["h2_norm"]
    i = int(np.argmax(h))
    tail = h[t >= t[-1] * 2 / 3].max()
    detail(request, f"peak {h[i]:.4g} at t={t[i]:.3g}, final-third max {tail:.4g}, exit {code}")
    assert t[i] < t[-1] / 2
    assert tail <= h[i]
    assert {x["name"]: x for x in m["monitors"]}["h2_plateau"]["passed"]
    assert code == cli.EXIT_OK


@pytest.mark.criterion(9, "dealiased products match truncated convolution on every grid up to 16")
def test_dealiasing_oracle(request):
    worst, count = 0.0, 0
    pairs = [(YBasis.COSINE, YBasis.COSINE), (YBasis.SINE, YBasis.SINE),
             (YBasis.SINE, YBasis.COSINE), (YBasis.COSINE, YBasis.SINE)]
    for nx in range(2, 17, 2):
        for ny in range(1, 17):
            try:
                g = SpectralGrid(nx, ny)
            except ValueError:
                continue
            for i, (ba, bb) in enumerate(pairs):
                a = random_in_band(g, ba, 31 * nx + ny + i)
                b = random_in_band(g, bb, 17 * nx + 5 * ny + i)
                want = brute_force_product(dealias(a), dealias(b))
                got = multiply_dealiased(a, b)
                scale = max(1.0, np.abs(want.coeffs).max())
                worst = max(worst, np.max(np.abs(got.coeffs - want.coeffs)) / scale)
                count += 1
    detail(request, f"{count} products, worst error {worst:.1e}")
    assert count >= 7 * 15 * 4
    assert worst <= 1e-12


@pytest.mark.criterion(10, "repeated runs write byte-identical diagnostics")
def test_determinism(tmp_path, request):
    blobs = []
    for name in ("a", "b"):
        run_scenario(tmp_path, name, {**FORCED, "grid": {"nx": 32, "ny": 32}, "stepper": {"t_end": 0.5},
                                      "monitors": {"twin_delta": 1e-6}})
        blobs.append((tmp_path / name / "diagnostics.csv").read_bytes())
    detail(request, f"{len(blobs[0])} bytes each")
    assert blobs[0] == blobs[1]
