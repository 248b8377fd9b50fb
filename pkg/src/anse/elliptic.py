"""
Per-mode elliptic solvers.

Dirichlet Poisson inversion and pressure recovery are diagonal in the mixed
basis. The auxiliary problem -Laplacian(phi) = u_y, phi = 0 on the walls, is
solved per Fourier mode with second-order finite differences so that its
three a priori estimates can be checked on an independent discretization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_banded

from .flow import VelocityPair
from .spectral import (
    BasisMismatch,
    ScalarSpectrum,
    SpectralGrid,
    YBasis,
    dx,
    dy,
    evaluate_modes,
    l2_norm,
    multiply_dealiased,
)


class CompatibilityError(ValueError):
    """Neumann data violates the solvability condition."""


def solve_dirichlet(rhs: ScalarSpectrum) -> ScalarSpectrum:
    """phi with -Laplacian(phi) = rhs and phi = 0 on the walls."""
    if rhs.basis is not YBasis.SINE:
        raise BasisMismatch("Dirichlet inversion needs a SineY right-hand side")
    lap = rhs.grid.laplacian_symbol
    c = np.zeros(rhs.grid.shape, dtype=complex)
    nz = lap > 0
    c[nz] = rhs.coeffs[nz] / lap[nz]
    return rhs.with_coeffs(c)


class PressureSolution(NamedTuple):
    p: ScalarSpectrum
    rhs: ScalarSpectrum
    compatibility_residual: float


def pressure_rhs(vel: VelocityPair) -> ScalarSpectrum:
    """(u^2)_xx + (v^2)_yy + 2 (uv)_xy, all products dealiased (CosineY)."""
    u, v = vel
    uu = multiply_dealiased(u, u)
    vv = multiply_dealiased(v, v)
    uv = multiply_dealiased(u, v)
    return dx(dx(uu)) + dy(dy(vv)) + dy(dx(uv)) * 2.0


def solve_pressure(vel: VelocityPair) -> PressureSolution:
    """Pressure with p_y = 0 on the walls and zero channel mean."""
    rhs = pressure_rhs(vel)
    scale = l2_norm(rhs)
    compat = abs(rhs.coeffs[0, 0])
    if compat > 1e-10 * scale:
        raise CompatibilityError(f"rhs mean {compat:.3e} exceeds 1e-10 * {scale:.3e}")
    lap = rhs.grid.laplacian_symbol
    c = np.zeros(rhs.grid.shape, dtype=complex)
    nz = lap > 0
    c[nz] = rhs.coeffs[nz] / lap[nz]
    c[0, 0] = 0.0
    return PressureSolution(rhs.with_coeffs(c), rhs, compat / scale if scale > 0 else 0.0)


def solve_modal_fd(rhs_hat: np.ndarray, kx: np.ndarray) -> np.ndarray:
    """Solve (kx^2 - d_yy) phi = rhs on [0, 1], phi(0) = phi(1) = 0, for every row.

    rhs_hat has shape (n_modes, n + 1) on the uniform nodes y_j = j/n; kx holds
    the physical x wavenumber of each row. Second-order centered differences.
    """
    rhs_hat = np.asarray(rhs_hat, dtype=complex)
    n = rhs_hat.shape[1] - 1
    h = 1.0 / n
    out = np.zeros_like(rhs_hat)
    ab = np.empty((3, n - 1))
    ab[0, :] = -1.0 / h**2
    ab[2, :] = -1.0 / h**2
    for row, k in enumerate(kx):
        r = rhs_hat[row, 1:-1]
        if not np.any(r):
            continue
        ab[1, :] = k * k + 2.0 / h**2
        out[row, 1:-1] = solve_banded((1, 1), ab, r)
    return out


@dataclass(frozen=True, eq=False)
class PhiFD:
    """Per-mode finite-difference solution phi_hat(k1, y_j)."""

    grid: SpectralGrid
    y: np.ndarray
    hat: np.ndarray
    rhs_hat: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / (len(self.y) - 1)

    def to_physical(self) -> np.ndarray:
        """phi at (x_i, y_j), shape (nx, ny_fd + 1)."""
        return np.fft.ifft(self.hat, axis=0).real * self.grid.nx


def solve_phi_fd(vel: VelocityPair, ny_fd: int) -> PhiFD:
    if ny_fd < 16:
        raise ValueError(f"ny_fd must be at least 16, got {ny_fd}")
    grid = vel.u.grid
    y = np.linspace(0.0, 1.0, ny_fd + 1)
    rhs_hat = evaluate_modes(dy(vel.u), y)
    kx = 2 * np.pi * grid.k1.astype(float)
    return PhiFD(grid, y, solve_modal_fd(rhs_hat, kx), rhs_hat)


@dataclass(frozen=True)
class PhiReport:
    lhs_L2: tuple[float, float]
    rhs_L2: float
    lhs_H2: tuple[float, float, float]
    rhs_H2: float
    lhs_H3: tuple[float, float]
    rhs_H3: float
    tolerance: float
    satisfied: tuple[bool, bool, bool]

    @property
    def h2_sum(self) -> float:
        """||phi_xx||^2 + ||phi_yy||^2 + 2 ||phi_xy||^2, equal to ||u_y||^2."""
        xx, yy, xy = self.lhs_H2
        return xx + yy + 2.0 * xy


def _trapezoid(sq: np.ndarray, h: float) -> float:
    return float(h * (np.sum(sq[:, 1:-1]) + 0.5 * np.sum(sq[:, 0] + sq[:, -1])))


def _midpoint(sq: np.ndarray, h: float) -> float:
    return float(h * np.sum(sq))


def verify_phi_estimates(vel: VelocityPair, ny_fd: int) -> PhiReport:
    """Check the L2, H2 and H3 estimates for phi against norms of u.

    x derivatives of phi are exact per mode; y derivatives use one-sided
    differences at cell midpoints and the discrete equation for phi_yy
    (on the walls phi_yy = -u_y since phi vanishes there).
    """
    sol = solve_phi_fd(vel, ny_fd)
    h = sol.h
    k = 2 * np.pi * sol.grid.k1.astype(float)[:, None]
    phi = sol.hat
    phi_y = np.diff(phi, axis=1) / h
    phi_yy = k**2 * phi - sol.rhs_hat
    phi_yy[:, 1:-1] = (phi[:, 2:] - 2 * phi[:, 1:-1] + phi[:, :-2]) / h**2

    nodes = lambda a: _trapezoid(np.abs(a) ** 2, h)
    mids = lambda a: _midpoint(np.abs(a) ** 2, h)

    lhs_l2 = (nodes(k * phi), mids(phi_y))
    lhs_h2 = (nodes(k**2 * phi), nodes(phi_yy), mids(k * phi_y))
    lhs_h3 = (nodes(k**3 * phi), mids(k**2 * phi_y))

    u = vel.u
    uy = dy(u)
    rhs_l2 = l2_norm(u) ** 2
    rhs_h2 = l2_norm(uy) ** 2
    rhs_h3 = l2_norm(dx(uy)) ** 2

    tol = 1.0 + 10.0 / ny_fd**2
    sat = (
        sum(lhs_l2) <= rhs_l2 * tol,
        lhs_h2[0] + lhs_h2[1] + 2 * lhs_h2[2] <= rhs_h2 * tol,
        sum(lhs_h3) <= rhs_h3 * tol,
    )
    return PhiReport(lhs_l2, rhs_l2, lhs_h2, rhs_h2, lhs_h3, rhs_h3, tol, sat)
