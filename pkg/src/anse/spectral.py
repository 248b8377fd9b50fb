"""
Mixed Fourier x {cosine | sine} spectral representation on the channel
T x [0, 1].

A real scalar field is stored as

    g(x, y) = sum_{k1, k2} c[k1, k2] * exp(2 pi i k1 x) * B_{k2}(y)

with B_{k2}(y) = cos(pi k2 y) (CosineY, k2 = 0..ny) or sin(pi k2 y)
(SineY, k2 = 1..ny-1). Basis functions are unnormalized, so Parseval reads

    ||g||_2^2 = sum w(k2) |c[k1, k2]|^2,   w(0) = 1, w(k2 >= 1) = 1/2.

Coefficient arrays have shape (nx, ny + 1) for both bases. Axis 0 follows
the FFT ordering of k1 (index nx/2 is the Nyquist column, always kept at
zero); axis 1 is k2 directly. SineY rows k2 = 0 and k2 = ny are zero.

The y transforms use even/odd extension of the nodal values to a periodic
sequence of length 2*ny followed by an ordinary real FFT.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np


class SpectralError(ValueError):
    """Base class for errors raised by the spectral layer."""


class WallValueError(SpectralError):
    pass


class GridMismatch(SpectralError):
    pass


class BasisMismatch(SpectralError):
    pass


class BandTooWide(SpectralError):
    pass


class YBasis(str, enum.Enum):
    COSINE = "CosineY"
    SINE = "SineY"

    def flipped(self) -> "YBasis":
        return YBasis.SINE if self is YBasis.COSINE else YBasis.COSINE


# Product parity: Sin*Cos -> Sin, Cos*Cos -> Cos, Sin*Sin -> Cos.
def product_basis(a: YBasis, b: YBasis) -> YBasis:
    return YBasis.COSINE if a is b else YBasis.SINE


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value).limit_denominator(1000)


@dataclass(frozen=True)
class SpectralGrid:
    """Collocation grid x_i = i/nx (periodic), y_j = j/ny (walls included)."""

    nx: int
    ny: int
    dealias_fraction: Fraction = Fraction(2, 3)

    def __post_init__(self):
        object.__setattr__(self, "dealias_fraction", _as_fraction(self.dealias_fraction))
        problems = []
        if not isinstance(self.nx, (int, np.integer)) or self.nx < 4 or self.nx % 2:
            problems.append(f"nx must be an even integer >= 4, got {self.nx!r}")
        if not isinstance(self.ny, (int, np.integer)) or self.ny < 2:
            problems.append(f"ny must be an integer >= 2, got {self.ny!r}")
        if not 0 < self.dealias_fraction <= 1:
            problems.append(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if problems:
            raise SpectralError("; ".join(problems))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)

    @cached_property
    def k1(self) -> np.ndarray:
        """Integer x wavenumbers in FFT order; the Nyquist slot is labelled +nx/2."""
        k = np.fft.fftfreq(self.nx, d=1.0 / self.nx).round().astype(int)
        k[self.nx // 2] = self.nx // 2
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        return np.arange(self.ny + 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) / self.nx

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny + 1) / self.ny

    @cached_property
    def kx_cut(self) -> int:
        """Largest retained |k1| in dealiased products."""
        limit = self.dealias_fraction * Fraction(self.nx, 2)
        if self.dealias_fraction == 1:
            return self.nx // 2 - 1
        # strict inequality keeps k1 + l1 from aliasing onto a retained mode
        return int(np.ceil(limit)) - 1

    @cached_property
    def ky_cut(self) -> int:
        """Largest retained k2 in dealiased products."""
        if self.dealias_fraction == 1:
            return self.ny
        return int(np.ceil(self.dealias_fraction * self.ny)) - 1

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        m[self.nx // 2, :] = False
        return m

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep_x = np.abs(self.k1) <= self.kx_cut
        keep_x[self.nx // 2] = False
        keep_y = self.k2 <= self.ky_cut
        return keep_x[:, None] & keep_y[None, :]

    @cached_property
    def weights(self) -> np.ndarray:
        """Parseval weights w(k2)."""
        w = np.full(self.ny + 1, 0.5)
        w[0] = 1.0
        return w

    @cached_property
    def kx_phys(self) -> np.ndarray:
        """2 pi k1 with the Nyquist slot zeroed (odd derivatives drop it)."""
        k = 2 * np.pi * self.k1.astype(float)
        k[self.nx // 2] = 0.0
        return k

    @cached_property
    def ky_phys(self) -> np.ndarray:
        return np.pi * self.k2.astype(float)

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        """(2 pi k1)^2 + (pi k2)^2 on the coefficient array."""
        kx = 2 * np.pi * self.k1.astype(float)
        return kx[:, None] ** 2 + self.ky_phys[None, :] ** 2

    def refined(self, factor: int) -> "SpectralGrid":
        return SpectralGrid(self.nx * factor, self.ny * factor, self.dealias_fraction)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarSpectrum:
    grid: SpectralGrid
    basis: YBasis
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != self.grid.shape:
            raise SpectralError(f"coefficient array has shape {c.shape}, expected {self.grid.shape}")
        c = np.array(c, dtype=complex)
        if self.basis is YBasis.SINE:
            c[:, 0] = 0.0
            c[:, -1] = 0.0
        object.__setattr__(self, "basis", YBasis(self.basis))
        object.__setattr__(self, "coeffs", _frozen(c))

    def _check(self, other: "ScalarSpectrum"):
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")
        if other.basis is not self.basis:
            raise BasisMismatch(f"{self.basis.value} vs {other.basis.value}")

    def with_coeffs(self, coeffs: np.ndarray) -> "ScalarSpectrum":
        return ScalarSpectrum(self.grid, self.basis, coeffs)

    def __add__(self, other: "ScalarSpectrum") -> "ScalarSpectrum":
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "ScalarSpectrum") -> "ScalarSpectrum":
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> "ScalarSpectrum":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar) -> "ScalarSpectrum":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def allclose(self, other: "ScalarSpectrum", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        self._check(other)
        scale = max(l2_norm(self), l2_norm(other))
        return l2_norm(self - other) <= atol + rtol * scale


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: SpectralGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise SpectralError(f"value array has shape {v.shape}, expected {self.grid.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def zeros(grid: SpectralGrid, basis: YBasis) -> ScalarSpectrum:
    return ScalarSpectrum(grid, basis, np.zeros(grid.shape, dtype=complex))


def _y_synthesis(rows: np.ndarray, basis: YBasis, ny: int) -> np.ndarray:
    """Real y-mode amplitudes (..., ny+1) -> nodal values (..., ny+1)."""
    g = np.empty(rows.shape, dtype=complex)
    if basis is YBasis.COSINE:
        g[:] = ny * rows
        g[..., 0] *= 2
        g[..., ny] *= 2
    else:
        g[:] = -1j * ny * rows
        g[..., 0] = 0.0
        g[..., ny] = 0.0
    return np.fft.irfft(g, n=2 * ny, axis=-1)[..., : ny + 1]


def _y_analysis(values: np.ndarray, basis: YBasis, ny: int) -> np.ndarray:
    """Nodal values (..., ny+1) -> y-mode amplitudes via the 2*ny extension."""
    interior = values[..., ny - 1 : 0 : -1]
    if basis is YBasis.COSINE:
        ext = np.concatenate([values, interior], axis=-1)
        G = np.fft.rfft(ext, axis=-1)
        a = G / ny
        a[..., 0] *= 0.5
        a[..., ny] *= 0.5
    else:
        head = values.copy()
        head[..., 0] = 0.0
        head[..., ny] = 0.0
        ext = np.concatenate([head, -interior], axis=-1)
        G = np.fft.rfft(ext, axis=-1)
        a = 1j * G / ny
        a[..., 0] = 0.0
        a[..., ny] = 0.0
    return a


def to_physical(s: ScalarSpectrum) -> PhysicalField:
    """Evaluate the truncated series at the collocation points."""
    return PhysicalField(s.grid, _to_values(s.coeffs, s.basis, s.grid))


def _to_values(coeffs: np.ndarray, basis: YBasis, grid: SpectralGrid) -> np.ndarray:
    # Hermitian symmetry makes the x synthesis real
    rows = np.fft.ifft(coeffs, axis=0).real * grid.nx
    return _y_synthesis(rows, basis, grid.ny)


def _from_values(values: np.ndarray, basis: YBasis, grid: SpectralGrid) -> np.ndarray:
    a = _y_analysis(values, basis, grid.ny)
    c = np.fft.fft(a, axis=0) / grid.nx
    c[grid.nx // 2, :] = 0.0
    return c


def to_spectral(p: PhysicalField, basis: YBasis) -> ScalarSpectrum:
    """Inverse of :func:`to_physical` on band-limited data.

    The x Nyquist column is discarded. Raises WallValueError when a SineY
    expansion is requested for data that does not vanish on the walls.
    """
    basis = YBasis(basis)
    v = p.values
    if basis is YBasis.SINE:
        scale = np.max(np.abs(v)) if v.size else 0.0
        wall = max(np.max(np.abs(v[:, 0])), np.max(np.abs(v[:, -1])))
        if wall > 1e-10 * scale:
            raise WallValueError(f"wall rows reach {wall:.3e} (field max {scale:.3e})")
    return ScalarSpectrum(p.grid, basis, _from_values(v, basis, p.grid))


def dx(s: ScalarSpectrum) -> ScalarSpectrum:
    return s.with_coeffs(1j * s.grid.kx_phys[:, None] * s.coeffs)


def dy(s: ScalarSpectrum) -> ScalarSpectrum:
    """y derivative; flips the basis.

    SineY -> CosineY with factor +pi k2, CosineY -> SineY with factor -pi k2.
    The CosineY k2 = ny mode maps to sin(pi ny y), which is not representable
    on the grid and is dropped.
    """
    ky = s.grid.ky_phys[None, :]
    if s.basis is YBasis.SINE:
        return ScalarSpectrum(s.grid, YBasis.COSINE, ky * s.coeffs)
    return ScalarSpectrum(s.grid, YBasis.SINE, -ky * s.coeffs)


def laplacian(s: ScalarSpectrum) -> ScalarSpectrum:
    return s.with_coeffs(-s.grid.laplacian_symbol * s.coeffs)


def dealias(s: ScalarSpectrum) -> ScalarSpectrum:
    return s.with_coeffs(np.where(s.grid.dealias_mask, s.coeffs, 0.0))


def multiply_dealiased(a: ScalarSpectrum, b: ScalarSpectrum) -> ScalarSpectrum:
    """Pseudo-spectral product with the 2/3 rule applied before and after."""
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")
    grid = a.grid
    mask = grid.dealias_mask
    fa = _to_values(np.where(mask, a.coeffs, 0.0), a.basis, grid)
    fb = _to_values(np.where(mask, b.coeffs, 0.0), b.basis, grid)
    basis = product_basis(a.basis, b.basis)
    c = _from_values(fa * fb, basis, grid)
    return ScalarSpectrum(grid, basis, np.where(mask, c, 0.0))


def l2_norm(s: ScalarSpectrum) -> float:
    return float(np.sqrt(np.sum(s.grid.weights[None, :] * np.abs(s.coeffs) ** 2)))


def inner(a: ScalarSpectrum, b: ScalarSpectrum) -> float:
    """L2 inner product of two real fields in the same y basis."""
    a._check(b)
    return float(np.sum(a.grid.weights[None, :] * (a.coeffs * np.conj(b.coeffs)).real))


def profile_l2(coeffs: np.ndarray) -> float:
    """L2(0,1) norm of a real y-profile given by its k1 = 0 coefficients."""
    w = np.full(len(coeffs), 0.5)
    w[0] = 1.0
    return float(np.sqrt(np.sum(w * np.abs(coeffs) ** 2)))


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Symmetrize so that c(-k1, k2) = conj(c(k1, k2))."""
    nx = coeffs.shape[0]
    flipped = coeffs[(-np.arange(nx)) % nx, :]
    return 0.5 * (coeffs + np.conj(flipped))


def is_hermitian(s: ScalarSpectrum, tol: float = 1e-14) -> bool:
    c = s.coeffs
    scale = max(np.max(np.abs(c)), 1e-300)
    return bool(np.max(np.abs(c - hermitian_part(c))) <= tol * scale)


def truncate_modes(s: ScalarSpectrum, m: int) -> ScalarSpectrum:
    """Zero every coefficient with |k1| > m or k2 > m."""
    if m < 1:
        raise SpectralError(f"truncation index must be positive, got {m}")
    keep = (np.abs(s.grid.k1)[:, None] <= m) & (s.grid.k2[None, :] <= m)
    return s.with_coeffs(np.where(keep, s.coeffs, 0.0))


def refine(s: ScalarSpectrum, factor: int) -> ScalarSpectrum:
    """Same field on a grid refined by an integer factor (zero padding)."""
    fine = s.grid.refined(factor)
    c = np.zeros(fine.shape, dtype=complex)
    k1 = s.grid.k1
    rows = np.where(k1 >= 0, k1, fine.nx + k1)
    keep = k1 != s.grid.nx // 2
    c[rows[keep], : s.grid.ny + 1] = s.coeffs[keep]
    return ScalarSpectrum(fine, s.basis, c)


def evaluate_modes(s: ScalarSpectrum, y: np.ndarray) -> np.ndarray:
    """Per-k1 profiles g_hat(k1, y) at arbitrary y points, shape (nx, len(y))."""
    y = np.asarray(y, dtype=float)
    arg = np.pi * np.outer(s.grid.k2, y)
    B = np.cos(arg) if s.basis is YBasis.COSINE else np.sin(arg)
    return s.coeffs @ B


def random_band_limited(grid: SpectralGrid, seed: int, kmax: int, basis: YBasis) -> ScalarSpectrum:
    """Seeded trial field: flat complex Gaussian spectrum up to kmax, unit L2 norm."""
    basis = YBasis(basis)
    limit = min(grid.nx / 2, grid.ny) * grid.dealias_fraction
    if kmax < 1 or kmax > limit:
        raise BandTooWide(f"kmax={kmax} outside [1, {float(limit):g}] for {grid}")
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    keep = (np.abs(grid.k1)[:, None] <= kmax) & (grid.k2[None, :] <= kmax) & grid.nyquist_mask
    if basis is YBasis.SINE:
        keep[:, 0] = False
        keep[:, grid.ny] = False
    c = hermitian_part(np.where(keep, c, 0.0))
    s = ScalarSpectrum(grid, basis, c)
    return s * (1.0 / l2_norm(s))
