import numpy as np
import pytest

from zonalwave import spectral
from zonalwave.spectral import MultiplierSpec

SQ = np.sqrt(2.0 / np.pi)


class TestEigenfunction:
    def test_first_mode_is_constant(self):
        R = np.linspace(0.1, np.pi - 0.1, 50)
        np.testing.assert_allclose(spectral.eval_eigenfunction(1, R), SQ, rtol=1e-14)

    def test_second_mode_vanishes_at_equator(self):
        assert abs(spectral.eval_eigenfunction(2, np.pi / 2)) < 1e-15

    def test_endpoint_limits(self):
        assert spectral.eval_eigenfunction(5, 0.0) == pytest.approx(5 * SQ)
        assert spectral.eval_eigenfunction(5, 5e-13) == pytest.approx(5 * SQ)
        assert spectral.eval_eigenfunction(4, np.pi) == pytest.approx(-4 * SQ)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            spectral.eval_eigenfunction(3, -0.5)
        with pytest.raises(ValueError):
            spectral.eval_eigenfunction(0, 1.0)

    def test_discrete_orthonormality(self):
        M, nmax = 512, 64
        R, w = spectral.grid(M), spectral.quadrature_weights(M)
        E = np.stack([spectral.eval_eigenfunction(n, R) for n in range(1, nmax + 1)])
        gram = (E * w) @ E.T
        assert np.abs(gram - np.eye(nmax)).max() < 1e-12


class TestTransforms:
    def test_basis_vector_roundtrip(self):
        c = np.zeros(16, dtype=complex)
        c[2] = 1.0
        np.testing.assert_allclose(spectral.analyze(spectral.synthesize(c, 128), 16), c, atol=1e-13)

    def test_zero_field(self):
        np.testing.assert_array_equal(spectral.analyze(np.zeros(63)), np.zeros(63))

    def test_random_roundtrip(self):
        rng = np.random.default_rng(0)
        c = rng.standard_normal((7, 32)) + 1j * rng.standard_normal((7, 32))
        back = spectral.analyze(spectral.synthesize(c, 256), 32)
        assert np.abs(back - c).max() < 1e-12

    def test_single_mode_field_is_constant(self):
        c = np.zeros(4, dtype=complex)
        c[0] = 1.0
        np.testing.assert_allclose(spectral.synthesize(c, 64), SQ, rtol=1e-13)

    def test_linearity_imaginary(self):
        c = np.zeros(4, dtype=complex)
        c[1] = 1j
        vals = spectral.synthesize(c, 64)
        assert np.abs(vals.real).max() < 1e-15

    def test_parseval(self):
        rng = np.random.default_rng(1)
        c = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        field = spectral.synthesize(c, 128)
        assert spectral.lp_norm(field, 2) == pytest.approx(np.sqrt((np.abs(c) ** 2).sum()), abs=1e-10)

    def test_size_errors(self):
        with pytest.raises(ValueError):
            spectral.synthesize(np.ones(16, dtype=complex), 16)
        with pytest.raises(ValueError):
            spectral.analyze(np.ones(15), N=63)


class TestMultipliers:
    def test_eigenrelation(self):
        c = np.zeros(8, dtype=complex)
        c[4] = 1.0
        out = spectral.h_power(c, 2.0)
        np.testing.assert_array_equal(out, 25.0 * c)

    def test_h_power_inverse_composition(self):
        rng = np.random.default_rng(2)
        c = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        # identity up to one rounding of the weight products
        np.testing.assert_allclose(spectral.h_power(spectral.h_power(c, 2.0), -2.0), c, rtol=1e-15)
        np.testing.assert_allclose(spectral.h_power(spectral.h_power(c, 0.7), -0.7), c, rtol=1e-15)

    def test_smooth_cutoff_plateau_and_support(self):
        N = 16
        w = spectral.smooth_cutoff_weights(N, 2 * N)
        n = np.arange(1, 2 * N + 1)
        assert np.all(w[n <= N / np.sqrt(2)] == 1.0)
        assert np.all(w[n > N] == 0.0)
        assert np.all((0.0 <= w) & (w <= 1.0))

    def test_smooth_cutoff_idempotent_on_plateau(self):
        c = np.ones(32, dtype=complex)
        once = spectral.smooth_cutoff(c, 16)
        twice = spectral.smooth_cutoff(once, 16)
        n = np.arange(1, 33)
        plateau = (n <= 16 / np.sqrt(2)) | (n > 16)
        np.testing.assert_array_equal(once[plateau], twice[plateau])

    def test_sharp_projector(self):
        c = np.ones(10, dtype=complex)
        out = spectral.sharp_projector(c, 4)
        np.testing.assert_array_equal(out, np.r_[np.ones(4), np.zeros(6)])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            spectral.apply_multiplier(MultiplierSpec("bogus"), np.ones(4, dtype=complex))


class TestNorms:
    def test_l2_of_first_eigenfunction(self):
        field = spectral.synthesize(np.array([1.0 + 0j]), 256)
        assert spectral.lp_norm(field, 2) == pytest.approx(1.0, abs=1e-12)

    def test_zero_norm(self):
        assert spectral.lp_norm(np.zeros(31), 3.0) == 0.0

    def test_inf_norm(self):
        field = np.array([0.5, -2.0, 1.0])
        assert spectral.lp_norm(field, np.inf) == 2.0

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            spectral.lp_norm(np.ones(7), 0.5)

    def test_sobolev_examples(self):
        c = np.zeros(10, dtype=complex)
        c[6] = 1.0
        assert spectral.sobolev_norm(c, 0.0) == pytest.approx(1.0)
        assert spectral.sobolev_norm(c, 1.0) == pytest.approx(7.0)

    def test_sobolev_log_divergence(self):
        # coefficients sqrt(2)/n: the squared norm at s = 1/2 grows by
        # 2 ln 2 per doubling of N, while at s = 0.4 the doubling
        # increments contract geometrically (ratio 2^-0.2) toward a limit
        def sq_norm(N, s):
            return spectral.sobolev_norm(np.sqrt(2.0) / np.arange(1, N + 1) + 0j, s) ** 2

        for N in (2048, 4096):
            growth = sq_norm(2 * N, 0.5) - sq_norm(N, 0.5)
            assert growth == pytest.approx(2 * np.log(2), abs=2e-3)
        inc1 = sq_norm(4096, 0.4) - sq_norm(2048, 0.4)
        inc2 = sq_norm(8192, 0.4) - sq_norm(4096, 0.4)
        assert inc2 / inc1 == pytest.approx(2.0**-0.2, abs=5e-3)

    def test_wsp_examples(self):
        c = np.zeros(8, dtype=complex)
        c[0] = 1.0
        assert spectral.wsp_norm(c, 2.0, 2.0, 64) == pytest.approx(1.0, abs=1e-12)
        c4 = np.zeros(8, dtype=complex)
        c4[3] = 1.0
        assert spectral.wsp_norm(c4, 1.0, 2.0, 64) == pytest.approx(4.0, abs=1e-12)
        rng = np.random.default_rng(3)
        c = rng.standard_normal(8) + 0j
        assert spectral.wsp_norm(c, 0.0, 3.0, 64) == pytest.approx(
            spectral.lp_norm(spectral.synthesize(c, 64), 3.0)
        )


def test_params_invariants():
    with pytest.raises(ValueError):
        spectral.SpectralParams(N=0, M=64)
    with pytest.raises(ValueError):
        spectral.SpectralParams(N=32, M=64)
    p = spectral.SpectralParams(N=16, M=64)
    assert p.sigma == 0.4
