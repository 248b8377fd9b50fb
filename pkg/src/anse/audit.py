"""
Monte-Carlo and hill-climbing audits of functional inequalities on the channel.

Each audit draws seeded band-limited trial fields, evaluates a scale-free
ratio (left side over right side) and reports the largest ratio seen. Trial
bandwidths are drawn independently per field and per direction: in half of
the trials uniformly on [lo, kmax], in the other half from a truncated
geometric law, so that low-mode fields (constants, single modes), which
typically realise the extremal ratios, keep the same frequency at every kmax
while the full band is still explored.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    ScalarSpectrum,
    SpectralGrid,
    YBasis,
    dx,
    dy,
    hermitian_part,
    inner,
    l2_norm,
    multiply_dealiased,
    refine,
    to_physical,
)

INEQUALITIES = (
    "triple_product",
    "linfty_l1",
    "poincare_wall",
    "poincare_mean",
    "transport_orthogonality",
)

AUDIT_CSV_COLUMNS = ("inequality_id", "n_trials", "kmax", "max_ratio", "violations", "fitted_constant", "argmax_seed")

REFINE = 4

# ratio above which a trial counts as a violation; None when no constant is asserted
ALLOWED = {
    "triple_product": None,
    "linfty_l1": 1.0 + 1e-3,
    "poincare_wall": 1.0 + 1e-12,
    "poincare_mean": 1.0 / (2 * math.pi) + 1e-12,
    "transport_orthogonality": 1e-10,
}


@dataclass(frozen=True)
class AuditReport:
    inequality_id: str
    n_trials: int
    kmax: int
    max_ratio: float
    argmax_seed: int
    violations: int
    fitted_constant: float

    def row(self) -> dict:
        return {k: getattr(self, k) for k in AUDIT_CSV_COLUMNS}


@lru_cache(maxsize=None)
def audit_grid(kmax: int) -> SpectralGrid:
    """Smallest grid whose 2/3-rule band holds |k1|, k2 <= kmax."""
    nx = max(4, 3 * kmax + 1)
    nx += nx % 2
    ny = max(2, (3 * kmax) // 2 + 1)
    return SpectralGrid(nx, ny)


def _quadrature_weights(grid: SpectralGrid) -> np.ndarray:
    wy = np.full(grid.ny + 1, 1.0 / grid.ny)
    wy[0] = wy[-1] = 0.5 / grid.ny
    return np.broadcast_to(wy[None, :] / grid.nx, (grid.nx, grid.ny + 1))


def _fine_values(s: ScalarSpectrum) -> np.ndarray:
    return to_physical(refine(s, REFINE)).values


def l1_norm(s: ScalarSpectrum) -> float:
    """L1 norm by trapezoid quadrature on the refined collocation grid."""
    v = _fine_values(s)
    return float(np.sum(_quadrature_weights(s.grid.refined(REFINE)) * np.abs(v)))


def linf_norm(s: ScalarSpectrum) -> float:
    return float(np.max(np.abs(_fine_values(s))))


def _embed(s: ScalarSpectrum, grid: SpectralGrid) -> ScalarSpectrum:
    """Copy a field onto a larger grid (zero padding)."""
    if s.grid == grid:
        return s
    c = np.zeros(grid.shape, dtype=complex)
    k1 = s.grid.k1
    keep = k1 != s.grid.nx // 2
    rows = np.where(k1 >= 0, k1, grid.nx + k1)
    c[rows[keep], : s.grid.ny + 1] = s.coeffs[keep]
    return ScalarSpectrum(grid, s.basis, c)


# ratios ---------------------------------------------------------------------


def triple_product_ratio(f: ScalarSpectrum, g: ScalarSpectrum, h: ScalarSpectrum) -> float:
    """int |f g h| / (||f|| ||g||^1/2 (||g||^1/2 + ||g_x||^1/2) ||h||^1/2 (||h||^1/2 + ||h_y||^1/2))."""
    gn, hn = l2_norm(g), l2_norm(h)
    den = l2_norm(f) * math.sqrt(gn) * (math.sqrt(gn) + math.sqrt(l2_norm(dx(g))))
    den *= math.sqrt(hn) * (math.sqrt(hn) + math.sqrt(l2_norm(dy(h))))
    if den == 0.0:
        return 0.0
    prod = np.abs(_fine_values(f) * _fine_values(g) * _fine_values(h))
    num = float(np.sum(_quadrature_weights(f.grid.refined(REFINE)) * prod))
    return num / den


def linfty_l1_ratio(f: ScalarSpectrum) -> float:
    """||f||_inf / (||f||_1 + ||f_x||_1 + ||f_y||_1 + ||f_xy||_1)."""
    fx = dx(f)
    den = l1_norm(f) + l1_norm(fx) + l1_norm(dy(f)) + l1_norm(dy(fx))
    return linf_norm(f) / den if den > 0 else 0.0


def poincare_wall_ratio(v: ScalarSpectrum) -> float:
    """||v|| / ||v_y|| for v vanishing on the walls."""
    d = l2_norm(dy(v))
    return l2_norm(v) / d if d > 0 else 0.0


def poincare_mean_ratio(g: ScalarSpectrum) -> float:
    """||g~|| / ||g~_x|| after removing the x-mean."""
    c = g.coeffs.copy()
    c[0, :] = 0.0
    gt = g.with_coeffs(c)
    d = l2_norm(dx(gt))
    return l2_norm(gt) / d if d > 0 else 0.0


def transport_integral(psi: ScalarSpectrum, ubar: np.ndarray, w1: ScalarSpectrum, w2: ScalarSpectrum) -> float:
    """int ((u . grad) w) . w for u = (ubar - psi_y, psi_x), by dealiased products."""
    grid = psi.grid
    ub = np.zeros(grid.shape, dtype=complex)
    ub[0, :] = ubar
    u = ScalarSpectrum(grid, YBasis.COSINE, ub) - dy(psi)
    v = dx(psi)
    total = 0.0
    for w in (w1, w2):
        adv = multiply_dealiased(u, dx(w)) + multiply_dealiased(v, dy(w))
        total += inner(adv, w)
    return total


def transport_ratio(psi: ScalarSpectrum, ubar: np.ndarray, w1: ScalarSpectrum, w2: ScalarSpectrum) -> float:
    """|int ((u . grad) w) . w| / (||u|| ||w||_H1^2)."""
    grid = psi.grid
    ub = np.zeros(grid.shape, dtype=complex)
    ub[0, :] = ubar
    u = ScalarSpectrum(grid, YBasis.COSINE, ub) - dy(psi)
    un = math.hypot(l2_norm(u), l2_norm(dx(psi)))
    wh1 = sum(l2_norm(w) ** 2 + l2_norm(dx(w)) ** 2 + l2_norm(dy(w)) ** 2 for w in (w1, w2))
    scale = un * wh1
    return abs(transport_integral(psi, ubar, w1, w2)) / scale if scale > 0 else 0.0


# trial fields -----------------------------------------------------------------


def _bandwidth(rng: np.random.Generator, kmax: int, lo: int, full_band: bool) -> int:
    if full_band:
        return int(rng.integers(lo, kmax + 1))
    return min(kmax, lo + int(rng.geometric(0.5)) - 1)


def _field(rng: np.random.Generator, grid: SpectralGrid, bx: int, by: int, basis: YBasis,
           zero_mean: bool = False) -> ScalarSpectrum:
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    keep = (np.abs(grid.k1)[:, None] <= bx) & (grid.k2[None, :] <= by) & grid.nyquist_mask
    if basis is YBasis.SINE:
        keep[:, 0] = False
        keep[:, grid.ny] = False
    if zero_mean:
        keep[0, :] = False
    return ScalarSpectrum(grid, basis, hermitian_part(np.where(keep, c, 0.0)))


def _shape(inequality_id: str) -> list[tuple[YBasis, int, int, bool]]:
    """Per trial field: basis, minimum x and y bandwidth, zero x-mean."""
    C, S = YBasis.COSINE, YBasis.SINE
    return {
        "triple_product": [(C, 0, 0, False)] * 3,
        "linfty_l1": [(C, 0, 0, False)],
        "poincare_wall": [(S, 0, 1, False)],
        "poincare_mean": [(C, 1, 0, True)],
        # psi (oscillation streamfunction), ubar profile, w1, w2
        "transport_orthogonality": [(S, 1, 1, True), (C, 0, 0, False), (C, 0, 0, False), (S, 0, 1, False)],
    }[inequality_id]


def trial_fields(inequality_id: str, kmax: int, trial_seed: int, grid: SpectralGrid | None = None):
    """Seeded trial fields for one audit trial, on the smallest grid that holds them."""
    rng = np.random.default_rng(trial_seed)
    shape = _shape(inequality_id)
    full = bool(rng.random() < 0.5)
    bands = [(_bandwidth(rng, kmax, lx, full), _bandwidth(rng, kmax, ly, full)) for _, lx, ly, _ in shape]
    if grid is None:
        grid = audit_grid(max(max(b) for b in bands))
    fields = [_field(rng, grid, bx, by, basis, zm) for (basis, _, _, zm), (bx, by) in zip(shape, bands)]
    return fields


def ratio(inequality_id: str, fields: Sequence[ScalarSpectrum]) -> float:
    if inequality_id == "triple_product":
        return triple_product_ratio(*fields)
    if inequality_id == "linfty_l1":
        return linfty_l1_ratio(fields[0])
    if inequality_id == "poincare_wall":
        return poincare_wall_ratio(fields[0])
    if inequality_id == "poincare_mean":
        return poincare_mean_ratio(fields[0])
    if inequality_id == "transport_orthogonality":
        psi, mean, w1, w2 = fields
        return transport_ratio(psi, mean.coeffs[0].real, w1, w2)
    raise ValueError(f"unknown inequality {inequality_id!r}")


def _monte_carlo(inequality_id: str, n: int, kmax: int, seed: int) -> AuditReport:
    if n < 1:
        raise ValueError("n must be at least 1")
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    allowed = ALLOWED[inequality_id]
    best, best_seed, bad = -1.0, seed, 0
    for i in range(n):
        r = ratio(inequality_id, trial_fields(inequality_id, kmax, seed + i))
        if not math.isfinite(r):
            bad += 1
            continue
        if allowed is not None and r > allowed:
            bad += 1
        if r > best:
            best, best_seed = r, seed + i
    best = max(best, 0.0)
    return AuditReport(inequality_id, n, kmax, best, best_seed, bad, best)


def audit_triple_product(n: int, kmax: int, seed: int) -> AuditReport:
    return _monte_carlo("triple_product", n, kmax, seed)


def audit_linfty_l1(n: int, kmax: int, seed: int) -> AuditReport:
    return _monte_carlo("linfty_l1", n, kmax, seed)


def audit_poincare_wall(n: int, kmax: int, seed: int) -> AuditReport:
    return _monte_carlo("poincare_wall", n, kmax, seed)


def audit_poincare_mean(n: int, kmax: int, seed: int) -> AuditReport:
    return _monte_carlo("poincare_mean", n, kmax, seed)


def audit_transport_orthogonality(n: int, kmax: int, seed: int) -> AuditReport:
    return _monte_carlo("transport_orthogonality", n, kmax, seed)


AUDITS: dict[str, Callable[[int, int, int], AuditReport]] = {
    "triple_product": audit_triple_product,
    "linfty_l1": audit_linfty_l1,
    "poincare_wall": audit_poincare_wall,
    "poincare_mean": audit_poincare_mean,
    "transport_orthogonality": audit_transport_orthogonality,
}


# adversarial search ---------------------------------------------------------


def _free_slots(fields: Sequence[ScalarSpectrum], kmax: int) -> list[tuple[int, int, int]]:
    """(field, k1, k2) coefficients the search may move: Hermitian half, inside the band."""
    out = []
    for j, f in enumerate(fields):
        g = f.grid
        for k1 in range(0, min(kmax, g.nx // 2 - 1) + 1):
            for k2 in range(0, min(kmax, g.ny) + 1):
                if f.basis is YBasis.SINE and (k2 == 0 or k2 == g.ny):
                    continue
                out.append((j, k1, k2))
    return out


def adversarial_ratio_search(
    inequality_id: str,
    kmax: int,
    iters: int,
    seed: int,
    n_start: int = 200,
    restarts: int = 5,
    patience: int = 20,
) -> AuditReport:
    """Hill-climb the audit ratio from the best of n_start Monte-Carlo trials.

    Each move perturbs the real or imaginary part of one coefficient (kept
    Hermitian) by the current step; the step halves after `patience`
    consecutive rejections. The iteration budget is split over `restarts`
    restarts, each resuming from the incumbent with the initial step. The
    returned ratio is never below the Monte-Carlo maximum for the same seed.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    mc = _monte_carlo(inequality_id, n_start, kmax, seed)
    grid = audit_grid(kmax)
    best_fields = [_embed(f, grid) for f in trial_fields(inequality_id, kmax, mc.argmax_seed)]
    best = ratio(inequality_id, best_fields)
    rng = np.random.default_rng([seed, 1])
    shape = _shape(inequality_id)
    slots = [
        s for s in _free_slots(best_fields, kmax)
        if not (shape[s[0]][3] and s[1] == 0)
    ]
    per_restart = max(1, iters // restarts)
    for _ in range(restarts):
        scale = max(float(np.max(np.abs(f.coeffs))) for f in best_fields) or 1.0
        step = 0.5 * scale
        stagnant = 0
        for _ in range(per_restart):
            j, k1, k2 = slots[int(rng.integers(len(slots)))]
            f = best_fields[j]
            c = f.coeffs.copy()
            delta = step * (1.0 if rng.random() < 0.5 else -1.0)
            if k1 == 0 or rng.random() < 0.5:
                c[k1, k2] += delta
            else:
                c[k1, k2] += 1j * delta
            if k1 == 0:
                c[0, k2] = c[0, k2].real
            else:
                c[-k1, k2] = np.conj(c[k1, k2])
            trial = list(best_fields)
            trial[j] = f.with_coeffs(c)
            r = ratio(inequality_id, trial)
            if math.isfinite(r) and r > best:
                best, best_fields, stagnant = r, trial, 0
            else:
                stagnant += 1
                if stagnant >= patience:
                    step *= 0.5
                    stagnant = 0
    # the embedded start is re-evaluated on the larger grid, whose quadrature can differ slightly
    best = max(best, mc.max_ratio)
    allowed = ALLOWED[inequality_id]
    violations = int(allowed is not None and best > allowed)
    return AuditReport(inequality_id, n_start + iters, kmax, best, mc.argmax_seed, violations, best)


# output ---------------------------------------------------------------------


def reports_to_csv(reports: Sequence[AuditReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=AUDIT_CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.row()
        row["max_ratio"] = repr(float(r.max_ratio))
        row["fitted_constant"] = repr(float(r.fitted_constant))
        w.writerow(row)
    return buf.getvalue()


def reports_to_table(reports: Sequence[AuditReport]) -> str:
    head = f"{'inequality':<26}{'trials':>8}{'kmax':>6}{'max ratio':>22}{'violations':>12}{'argmax seed':>13}"
    lines = [head, "-" * len(head)]
    for r in reports:
        lines.append(
            f"{r.inequality_id:<26}{r.n_trials:>8}{r.kmax:>6}{r.max_ratio:>22.15g}{r.violations:>12}{r.argmax_seed:>13}"
        )
    return "\n".join(lines)
