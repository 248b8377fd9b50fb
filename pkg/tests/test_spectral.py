import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anse.spectral import (
    BandTooWide,
    BasisMismatch,
    GridMismatch,
    PhysicalField,
    ScalarSpectrum,
    SpectralError,
    SpectralGrid,
    WallValueError,
    YBasis,
    dealias,
    dx,
    dy,
    evaluate_modes,
    hermitian_part,
    inner,
    is_hermitian,
    l2_norm,
    laplacian,
    multiply_dealiased,
    product_basis,
    random_band_limited,
    refine,
    to_physical,
    to_spectral,
    truncate_modes,
)

COS, SIN = YBasis.COSINE, YBasis.SINE


def single_mode(grid, basis, k1, k2, amp=1.0):
    """amp * 2 cos(2 pi k1 x) B_k2(y), or amp * B_k2(y) when k1 = 0."""
    c = np.zeros(grid.shape, dtype=complex)
    c[k1 % grid.nx, k2] += amp
    c[-k1 % grid.nx, k2] += amp if k1 else 0
    return ScalarSpectrum(grid, basis, c)


def random_in_band(grid, basis, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    mask = grid.dealias_mask.copy()
    if basis is SIN:
        mask[:, 0] = False
    return ScalarSpectrum(grid, basis, hermitian_part(np.where(mask, c, 0.0)))


def brute_force_product(a, b):
    """Exact truncated convolution of two mixed Fourier/trig series."""
    grid = a.grid
    nx, ny = grid.nx, grid.ny
    out_basis = product_basis(a.basis, b.basis)
    out = np.zeros(grid.shape, dtype=complex)
    k1 = grid.k1.copy()
    k1[nx // 2] = 0  # Nyquist slot is zero anyway
    nz_a = np.argwhere(a.coeffs != 0)
    nz_b = np.argwhere(b.coeffs != 0)
    for i, m in nz_a:
        for j, n in nz_b:
            k = k1[i] + k1[j]
            if abs(k) > grid.kx_cut:
                continue
            row = k % nx
            amp = a.coeffs[i, m] * b.coeffs[j, n] / 2
            # B_m B_n = 1/2 [s_minus B_|m-n| + s_plus B_(m+n)]
            if a.basis is COS and b.basis is COS:
                terms = [(abs(m - n), 1.0), (m + n, 1.0)]
            elif a.basis is SIN and b.basis is SIN:
                terms = [(abs(m - n), 1.0), (m + n, -1.0)]
            elif a.basis is SIN:  # sin(m) cos(n)
                terms = [(m + n, 1.0), (abs(m - n), np.sign(m - n))]
            else:  # cos(m) sin(n)
                terms = [(m + n, 1.0), (abs(m - n), np.sign(n - m))]
            for q, sgn in terms:
                if q <= grid.ky_cut and sgn != 0:
                    out[row, q] += sgn * amp
    if out_basis is SIN:
        out[:, 0] = 0.0
    return ScalarSpectrum(grid, out_basis, out)


class TestGrid:
    def test_cuts_at_64(self):
        g = SpectralGrid(64, 64)
        assert g.kx_cut == 21
        assert g.ky_cut == 42

    def test_nyquist_row_excluded(self):
        g = SpectralGrid(16, 8)
        assert not g.nyquist_mask[8].any()
        assert not g.dealias_mask[8].any()

    def test_shape_and_nodes(self):
        g = SpectralGrid(8, 6)
        assert g.shape == (8, 7)
        assert g.y[0] == 0.0 and g.y[-1] == 1.0
        assert np.allclose(np.diff(g.x), 1 / 8)

    @pytest.mark.parametrize("nx,ny", [(5, 8), (2, 8), (8, 1), (0, 4)])
    def test_invalid(self, nx, ny):
        with pytest.raises(SpectralError):
            SpectralGrid(nx, ny)

    def test_fraction_one_keeps_everything_but_nyquist(self):
        g = SpectralGrid(8, 8, 1)
        assert g.kx_cut == 3
        assert g.ky_cut == 8


class TestTransforms:
    @pytest.mark.parametrize("basis", [COS, SIN])
    def test_single_mode_values(self, basis):
        g = SpectralGrid(16, 12)
        s = single_mode(g, basis, 2, 3, 0.5)
        X, Y = np.meshgrid(g.x, g.y, indexing="ij")
        trig = np.cos if basis is COS else np.sin
        expect = np.cos(2 * np.pi * 2 * X) * trig(3 * np.pi * Y)
        assert np.allclose(to_physical(s).values, expect, atol=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(
        nx=st.sampled_from([4, 6, 8, 12, 16, 32]),
        ny=st.integers(2, 24),
        seed=st.integers(0, 2**31),
        basis=st.sampled_from([COS, SIN]),
    )
    def test_round_trip(self, nx, ny, seed, basis):
        g = SpectralGrid(nx, ny)
        s = random_in_band(g, basis, seed)
        back = to_spectral(to_physical(s), basis)
        assert np.allclose(back.coeffs, s.coeffs, atol=1e-12 * max(1, np.abs(s.coeffs).max()))

    def test_sine_needs_zero_walls(self):
        g = SpectralGrid(8, 8)
        with pytest.raises(WallValueError):
            to_spectral(PhysicalField(g, np.ones((8, 9))), SIN)

    def test_constant_is_cosine_zero_mode(self):
        g = SpectralGrid(8, 8)
        s = to_spectral(PhysicalField(g, np.full((8, 9), 2.5)), COS)
        expect = np.zeros(g.shape)
        expect[0, 0] = 2.5
        assert np.allclose(s.coeffs, expect, atol=1e-15)

    def test_evaluate_modes_matches_grid(self):
        g = SpectralGrid(8, 10)
        s = random_in_band(g, SIN, 3)
        prof = evaluate_modes(s, g.y)
        vals = np.fft.ifft(prof, axis=0).real * g.nx
        assert np.allclose(vals, to_physical(s).values, atol=1e-13)


class TestDerivatives:
    def test_dx_single_mode(self):
        g = SpectralGrid(16, 8)
        s = single_mode(g, COS, 3, 2, 0.5)
        X, Y = np.meshgrid(g.x, g.y, indexing="ij")
        expect = -6 * np.pi * np.sin(6 * np.pi * X) * np.cos(2 * np.pi * Y)
        assert np.allclose(to_physical(dx(s)).values, expect, atol=1e-12)

    @pytest.mark.parametrize("basis,target", [(COS, SIN), (SIN, COS)])
    def test_dy_flips_basis(self, basis, target):
        g = SpectralGrid(8, 8)
        s = single_mode(g, basis, 1, 3)
        d = dy(s)
        assert d.basis is target
        X, Y = np.meshgrid(g.x, g.y, indexing="ij")
        sign = -1 if basis is COS else 1
        trig = np.sin if basis is COS else np.cos
        expect = sign * 3 * np.pi * 2 * np.cos(2 * np.pi * X) * trig(3 * np.pi * Y)
        assert np.allclose(to_physical(d).values, expect, atol=1e-12)

    def test_laplacian_symbol(self):
        g = SpectralGrid(8, 8)
        s = single_mode(g, SIN, 2, 1)
        lap = laplacian(s)
        assert np.allclose(lap.coeffs, -((4 * np.pi) ** 2 + np.pi**2) * s.coeffs)

    def test_dx_finite_difference_oracle(self):
        g = SpectralGrid(8, 6)
        s = random_in_band(g, COS, 11)
        xs = np.linspace(0, 1, 7)
        y = np.array([0.3])
        h = 1e-5

        def f(x):
            prof = evaluate_modes(s, y)[:, 0]
            return float(np.sum(prof * np.exp(2j * np.pi * g.k1 * x)).real)

        d = dx(s)
        for x in xs:
            fd = (f(x + h) - f(x - h)) / (2 * h)
            exact = float(np.sum(evaluate_modes(d, y)[:, 0] * np.exp(2j * np.pi * g.k1 * x)).real)
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-6)


class TestNorms:
    @pytest.mark.parametrize("basis", [COS, SIN])
    def test_parseval_against_quadrature(self, basis):
        g = SpectralGrid(8, 8)
        s = random_in_band(g, basis, 5)
        fine = to_physical(refine(s, 4)).values
        wy = np.full(fine.shape[1], 1.0)
        wy[[0, -1]] = 0.5
        quad = np.sum(fine**2 * wy[None, :]) / (fine.shape[0] * (fine.shape[1] - 1))
        assert l2_norm(s) ** 2 == pytest.approx(quad, rel=1e-12)

    def test_inner_matches_norm(self):
        g = SpectralGrid(8, 8)
        s = random_in_band(g, SIN, 2)
        assert inner(s, s) == pytest.approx(l2_norm(s) ** 2, rel=1e-14)

    def test_inner_basis_mismatch(self):
        g = SpectralGrid(8, 8)
        with pytest.raises(BasisMismatch):
            inner(random_in_band(g, SIN, 1), random_in_band(g, COS, 1))

    def test_refine_preserves_norm(self):
        g = SpectralGrid(8, 8)
        s = random_in_band(g, COS, 9)
        assert l2_norm(refine(s, 3)) == pytest.approx(l2_norm(s), rel=1e-14)


class TestDealiasedProduct:
    GRIDS = [(nx, ny) for nx in range(4, 17, 2) for ny in range(2, 17)]

    @pytest.mark.parametrize("nx,ny", GRIDS)
    def test_matches_brute_force(self, nx, ny):
        g = SpectralGrid(nx, ny)
        for i, (ba, bb) in enumerate([(COS, COS), (SIN, SIN), (SIN, COS), (COS, SIN)]):
            a = random_in_band(g, ba, 100 * nx + ny + i)
            b = random_in_band(g, bb, 7 * nx + 13 * ny + i)
            got = multiply_dealiased(a, b)
            want = brute_force_product(dealias(a), dealias(b))
            assert got.basis is want.basis
            scale = max(1.0, np.abs(want.coeffs).max())
            assert np.max(np.abs(got.coeffs - want.coeffs)) <= 1e-12 * scale

    def test_commutes(self):
        g = SpectralGrid(16, 16)
        a, b = random_in_band(g, SIN, 1), random_in_band(g, COS, 2)
        assert multiply_dealiased(a, b).allclose(multiply_dealiased(b, a), atol=1e-14)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            multiply_dealiased(random_in_band(SpectralGrid(8, 8), COS, 1), random_in_band(SpectralGrid(8, 10), COS, 1))

    def test_parity_table(self):
        assert product_basis(SIN, COS) is SIN
        assert product_basis(COS, COS) is COS
        assert product_basis(SIN, SIN) is COS


class TestHelpers:
    def test_hermitian_part_gives_real_field(self):
        g = SpectralGrid(8, 8)
        rng = np.random.default_rng(0)
        c = hermitian_part(rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
        c[4] = 0
        s = ScalarSpectrum(g, COS, c)
        assert is_hermitian(s)
        assert np.allclose(np.fft.ifft(c, axis=0).imag, 0, atol=1e-15)

    def test_truncate(self):
        g = SpectralGrid(16, 16)
        s = truncate_modes(random_in_band(g, COS, 4), 2)
        big = (np.abs(g.k1)[:, None] > 2) | (g.k2[None, :] > 2)
        assert not np.any(s.coeffs[big])

    def test_random_band_limited(self):
        g = SpectralGrid(16, 16)
        s = random_band_limited(g, 3, 4, SIN)
        assert l2_norm(s) == pytest.approx(1.0)
        assert is_hermitian(s)
        assert random_band_limited(g, 3, 4, SIN).allclose(s, rtol=0)
        with pytest.raises(BandTooWide):
            random_band_limited(g, 3, 9, SIN)
