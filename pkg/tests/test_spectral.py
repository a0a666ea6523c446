import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_complex_field, random_real_field
from nlwsplit.spectral import (
    VOLUME,
    SobolevSpec,
    SpectralField,
    TorusGrid,
    apply_multiplier,
    field_from_bytes,
    field_from_record,
    field_to_bytes,
    field_to_record,
    lebesgue_norm,
    load_field_json,
    lowpass,
    padded_physical,
    save_field_json,
    sobolev_noise,
    sobolev_norm,
    to_physical,
    to_spectral,
    truncate_physical,
)

L2 = SobolevSpec(0.0, "inhomogeneous")


def l2_inner(f, g):
    return VOLUME * np.vdot(g.coeffs, f.coeffs)


class TestTorusGrid:
    @pytest.mark.parametrize("n", [2, 5, 7, 0, -4])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            TorusGrid(n)

    def test_lattice(self, grid8):
        assert grid8.size == 512
        assert sorted(grid8.wavenumbers) == list(range(-3, 5))
        assert grid8.kmag[1, 2, 2] == pytest.approx(3.0)
        assert grid8.nyquist_mask.sum() == 8**3 - 7**3


class TestTransforms:
    def test_constant(self, grid8):
        f = to_spectral(np.ones(grid8.shape), grid8)
        expected = np.zeros(grid8.shape)
        expected[0, 0, 0] = 1.0
        np.testing.assert_allclose(f.coeffs, expected, atol=1e-15)

    def test_cosine(self, grid8):
        x1, _, _ = grid8.physical_coordinates()
        f = to_spectral(np.broadcast_to(np.cos(x1), grid8.shape), grid8)
        assert f.coeffs[1, 0, 0] == pytest.approx(0.5, abs=1e-15)
        assert f.coeffs[-1, 0, 0] == pytest.approx(0.5, abs=1e-15)
        rest = f.coeffs.copy()
        rest[1, 0, 0] = rest[-1, 0, 0] = 0
        assert np.abs(rest).max() < 1e-15

    def test_direct_transform_pair(self, grid8):
        # oracle: explicit sum u(x_j) = sum_k c_k exp(i k x_j)
        f = random_real_field(grid8, 3)
        x = to_physical(f)
        k = grid8.wavenumbers
        xs = 2 * np.pi * np.arange(8) / 8
        E = np.exp(1j * np.outer(xs, np.fft.fftfreq(8, 1 / 8)))
        direct = np.einsum("ai,bj,ck,ijk->abc", E, E, E, f.coeffs)
        np.testing.assert_allclose(direct.real, x, atol=1e-12)
        assert np.abs(direct.imag).max() < 1e-12
        assert k.shape == (8,)

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        grid = TorusGrid(8)
        x = np.random.default_rng(seed).standard_normal(grid.shape)
        back = to_physical(to_spectral(x, grid))
        assert np.abs(back - x).max() <= 1e-12 * np.abs(x).max()

    def test_flat_input_and_size_mismatch(self, grid8):
        x = np.random.default_rng(0).standard_normal(grid8.size)
        assert to_spectral(x, grid8).coeffs.shape == grid8.shape
        with pytest.raises(ValueError):
            to_spectral(np.zeros(100), grid8)

    def test_complex_field_round_trip(self, grid8):
        f = random_complex_field(grid8, 1)
        assert not f.is_real()
        back = to_spectral(to_physical(f), grid8)
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-14)

    def test_parseval_100_fields(self, grid8):
        for seed in range(100):
            f = random_real_field(grid8, seed)
            x = to_physical(f)
            quad = grid8.cell_volume * np.sum(x**2)
            spec = VOLUME * np.sum(np.abs(f.coeffs) ** 2)
            assert abs(quad - spec) <= 1e-12 * spec

    def test_fields_are_immutable(self, grid8):
        f = random_real_field(grid8, 0)
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0] = 1.0

    def test_padded_evaluation_matches_direct(self, grid8):
        f = random_real_field(grid8, 5, zero_nyquist=True)
        x12 = padded_physical(f.coeffs, 12)
        grid12 = TorusGrid(12)
        c = np.zeros(grid12.shape, dtype=complex)
        idx = [i if i < 4 else i + 4 for i in range(8)]
        c[np.ix_(idx, idx, idx)] = f.coeffs
        np.testing.assert_allclose(x12, to_physical(SpectralField(grid12, c)), atol=1e-13)
        back = truncate_physical(x12, 8)
        np.testing.assert_allclose(back, f.coeffs, atol=1e-14)


class TestMultipliers:
    def test_identity(self, grid8):
        f = random_real_field(grid8, 1)
        np.testing.assert_array_equal(apply_multiplier(f, lambda k1, k2, k3: 1.0 + 0 * k1).coeffs, f.coeffs)

    def test_laplacian_on_single_mode(self, grid8):
        x1, _, _ = grid8.physical_coordinates()
        u = to_spectral(np.broadcast_to(np.exp(1j * x1), grid8.shape), grid8)
        lap = apply_multiplier(u, lambda k1, k2, k3: -(k1**2 + k2**2 + k3**2))
        np.testing.assert_allclose(lap.coeffs, -u.coeffs, atol=1e-15)

    def test_composition(self, grid8):
        f = random_real_field(grid8, 2)
        a = np.cos(grid8.kmag)
        b = 1.0 / (1.0 + grid8.kmag**2)
        two = apply_multiplier(apply_multiplier(f, a), b)
        once = apply_multiplier(f, a * b)
        assert np.abs(two.coeffs - once.coeffs).max() <= 1e-14 * np.abs(f.coeffs).max()

    def test_non_finite_symbol(self, grid8):
        f = random_real_field(grid8, 2)
        with np.errstate(divide="ignore"):
            bad = 1.0 / grid8.kmag
        with pytest.raises(ValueError):
            apply_multiplier(f, bad)
        # fine when the singular mode is empty
        c = f.coeffs.copy()
        c[0, 0, 0] = 0
        assert np.isfinite(apply_multiplier(SpectralField(grid8, c), bad).coeffs).all()

    @given(st.integers(0, 10_000))
    def test_bounded_symbol_contracts(self, seed):
        grid = TorusGrid(8)
        f = random_real_field(grid, seed)
        sym = np.exp(1j * np.random.default_rng(seed).uniform(0, 6, grid.shape)) * np.random.default_rng(
            seed + 1).uniform(0, 1, grid.shape)
        assert sobolev_norm(apply_multiplier(f, sym), L2) <= sobolev_norm(f, L2) * (1 + 1e-14)


class TestLowpass:
    @pytest.mark.parametrize("K,kept", [(2.0, False), (4.0, True), (3.0, False), (3.0000001, True)])
    def test_open_ball(self, grid8, K, kept):
        f = SpectralField.single_mode(grid8, (3, 0, 0))
        out = lowpass(f, K)
        if kept:
            np.testing.assert_array_equal(out.coeffs, f.coeffs)
        else:
            assert not out.coeffs.any()

    @pytest.mark.parametrize("K", [0.0, -1.0, math.inf, math.nan])
    def test_bad_cutoff(self, grid8, K):
        with pytest.raises(ValueError):
            lowpass(random_real_field(grid8, 0), K)

    @given(st.integers(0, 10_000), st.floats(0.5, 8.0))
    def test_idempotent_selfadjoint_contractive(self, seed, K):
        grid = TorusGrid(8)
        f, g = random_real_field(grid, seed), random_real_field(grid, seed + 1)
        pf = lowpass(f, K)
        np.testing.assert_array_equal(lowpass(pf, K).coeffs, pf.coeffs)
        lhs, rhs = l2_inner(pf, g), l2_inner(f, lowpass(g, K))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
        assert sobolev_norm(pf, L2) <= sobolev_norm(f, L2)

    def test_projection_bound(self, grid16):
        for seed in range(20):
            f = random_real_field(grid16, seed)
            for gamma in (0, 1, 2):
                for K in (1, 2, 4, 8, 16):
                    tail = sobolev_norm(f - lowpass(f, K), SobolevSpec(gamma - 1))
                    assert tail <= sobolev_norm(f, SobolevSpec(gamma)) / K * (1 + 1e-12)


class TestNorms:
    def test_single_mode_h1(self, grid8):
        f = SpectralField.single_mode(grid8, (2, 0, 0))
        assert sobolev_norm(f, SobolevSpec(1.0)) == pytest.approx(TWO_PI_32 * 2, rel=1e-14)

    def test_constant(self, grid8):
        c = 1.7
        f = to_spectral(np.full(grid8.shape, c), grid8)
        for s in (-1.0, 0.5, 2.0):
            assert sobolev_norm(f, SobolevSpec(s)) == 0.0
            assert sobolev_norm(f, SobolevSpec(s, "inhomogeneous")) == pytest.approx(TWO_PI_32 * c, rel=1e-14)
        for q in (1, 2, 3.5, 8):
            assert lebesgue_norm(f, q) == pytest.approx((2 * np.pi) ** (3 / q) * c, rel=1e-13)

    def test_cosine_lebesgue(self, grid8):
        x1, _, _ = grid8.physical_coordinates()
        f = to_spectral(np.broadcast_to(np.cos(x1), grid8.shape), grid8)
        assert lebesgue_norm(f, math.inf) == pytest.approx(1.0, abs=1e-14)
        # int_0^{2pi} cos^4 = 3 pi / 4, exact for the rectangle rule with 8 points
        assert lebesgue_norm(f, 4) == pytest.approx(((2 * np.pi) ** 3 * 3 / 8) ** 0.25, rel=1e-13)

    def test_l2_agrees_with_sobolev(self, grid8):
        for seed in range(10):
            f = random_real_field(grid8, seed)
            assert lebesgue_norm(f, 2) == pytest.approx(sobolev_norm(f, L2), rel=1e-10)

    def test_q_below_one(self, grid8):
        with pytest.raises(ValueError):
            lebesgue_norm(random_real_field(grid8, 0), 0.5)

    def test_bad_flavor(self):
        with pytest.raises(ValueError):
            SobolevSpec(1.0, "besov")


TWO_PI_32 = (2 * np.pi) ** 1.5


class TestSobolevNoise:
    def test_deterministic(self, grid16):
        a = sobolev_noise(grid16, 1.0, 7)
        b = sobolev_noise(grid16, 1.0, 7)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert np.abs(a.coeffs - sobolev_noise(grid16, 1.0, 8).coeffs).max() > 1e-3

    def test_structure(self, grid16):
        f = sobolev_noise(grid16, 1.0, 3, amplitude=2.0)
        assert f.is_real()
        assert f.coeffs[0, 0, 0] == 0
        assert not f.coeffs[grid16.nyquist_mask].any()
        live = (grid16.kmag > 0) & ~grid16.nyquist_mask
        np.testing.assert_allclose(np.abs(f.coeffs[live]), 2.0 * grid16.kmag[live] ** -2.51, rtol=1e-12)
        assert to_physical(f).dtype == np.float64

    def test_norm_growth_under_refinement(self):
        # oracle: |c_k| depends on |k| only, so norms are plain lattice sums
        def lattice_norm(n, power):
            k = np.arange(-n // 2 + 1, n // 2)
            kk = np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2)
            kk = kk[kk > 0]
            return math.sqrt(VOLUME * np.sum(kk**power))

        h1, h2 = [], []
        for n in (32, 64, 128):
            f = sobolev_noise(TorusGrid(n), 1.0, 11)
            h1.append(sobolev_norm(f, SobolevSpec(1.0)))
            h2.append(sobolev_norm(f, SobolevSpec(2.0)))
            assert h1[-1] == pytest.approx(lattice_norm(n, -3.02), rel=1e-12)
            assert h2[-1] == pytest.approx(lattice_norm(n, -1.02), rel=1e-12)
        ratios = [b / a for a, b in zip(h1, h2)]
        assert ratios[1] > 1.7 * ratios[0] and ratios[2] > 1.7 * ratios[1]
        growth = [h1[1] / h1[0] - 1, h1[2] / h1[1] - 1]
        assert growth[1] < growth[0] < 0.15


class TestSerialization:
    def test_json_round_trip(self, grid8, tmp_path):
        f = random_complex_field(grid8, 4)
        rec = field_to_record(f)
        assert rec["n_per_dim"] == 8 and len(rec["coeffs"]) == 2 * 512
        assert rec["coeffs"][0] == f.coeffs[0, 0, 0].real
        assert rec["coeffs"][3] == f.coeffs[0, 0, 1].imag
        np.testing.assert_array_equal(field_from_record(rec).coeffs, f.coeffs)
        save_field_json(f, tmp_path / "f.json")
        np.testing.assert_array_equal(load_field_json(tmp_path / "f.json").coeffs, f.coeffs)

    def test_binary_round_trip(self, grid8):
        f = random_real_field(grid8, 4)
        data = field_to_bytes(f)
        assert data[:4] == b"NLWF" and len(data) == 12 + 16 * 512
        np.testing.assert_array_equal(field_from_bytes(data).coeffs, f.coeffs)
        with pytest.raises(ValueError):
            field_from_bytes(b"XXXX" + data[4:])
        with pytest.raises(ValueError):
            field_from_bytes(data[:-16])
