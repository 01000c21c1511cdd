import numpy as np
import pytest
from scipy.special import gamma

from zonalwave import measures, spectral
from zonalwave.measures import RngStreamSpec


class TestSampler:
    def test_determinism(self):
        a = measures.sample_mu(RngStreamSpec(123, 7), 32)
        b = measures.sample_mu(RngStreamSpec(123, 7), 32)
        np.testing.assert_array_equal(a.g, b.g)
        np.testing.assert_array_equal(a.u, b.u)

    def test_streams_differ_across_indices(self):
        a = measures.sample_mu(RngStreamSpec(123, 0), 32)
        b = measures.sample_mu(RngStreamSpec(123, 1), 32)
        assert not np.allclose(a.g, b.g)

    def test_component_views(self):
        s = measures.sample_mu(RngStreamSpec(5, 0), 16)
        n = np.arange(1, 17)
        np.testing.assert_allclose(s.u, np.sqrt(2.0) * s.g / n)
        np.testing.assert_allclose(s.h, np.sqrt(2.0) * s.g.real)
        np.testing.assert_allclose(s.l, -np.sqrt(2.0) * s.g.imag)

    def test_covariance_small(self):
        K = 20000
        block = measures.sample_coeff_block(99, 0, K, 4)
        for n in (1, 4):
            for part in (block[:, n - 1].real, block[:, n - 1].imag):
                v = part.var(ddof=1)
                se = (1.0 / n**2) * np.sqrt(2.0 / (K - 1))
                assert abs(v - 1.0 / n**2) < 4 * se

    def test_cross_mode_independence(self):
        K = 20000
        block = measures.sample_coeff_block(7, 0, K, 3)
        cross = (block[:, 0] * np.conj(block[:, 2])).mean()
        # E c_1 cbar_3 = 0; se of the estimate ~ sqrt(Var1*Var3/K)
        assert abs(cross) < 4 * np.sqrt(2.0 * (2.0 / 9.0) / K)

    def test_mode_count_validated(self):
        with pytest.raises(ValueError):
            measures.sample_mu(RngStreamSpec(0, 0), 0)


class TestDensityWeight:
    def test_zero_data(self):
        assert measures.density_weight(np.zeros(8, dtype=complex), 2.0, 64) == 1.0

    def test_weight_in_unit_interval(self):
        for k in range(10):
            u = measures.sample_mu(RngStreamSpec(11, k), 16).u
            w = measures.density_weight(u, 2.5, 64, truncate_N=16)
            assert 0.0 < w <= 1.0

    def test_alpha_two_ignores_conformal_factor(self):
        u = measures.sample_mu(RngStreamSpec(3, 0), 16).u
        w = measures.density_weight(u, 2.0, 64)
        field = spectral.synthesize(np.real(u) + 0j, 64)
        expected = np.exp(-0.25 * spectral.lp_norm(field, 4.0) ** 4)
        assert w == pytest.approx(expected, rel=1e-12)

    def test_monotone_under_scaling(self):
        u = np.real(measures.sample_mu(RngStreamSpec(4, 0), 16).u) + 0j
        weights = [measures.density_weight(lam * u, 2.5, 64) for lam in (1.0, 1.5, 2.0, 4.0)]
        assert all(a >= b for a, b in zip(weights, weights[1:]))

    def test_alpha_validated(self):
        with pytest.raises(ValueError):
            measures.density_weight(np.zeros(4, dtype=complex), 3.5, 16)


class TestMassEstimate:
    def test_estimate_below_one(self):
        mean, se = measures.rho_mass_estimate(seed=1, N=16, alpha=2.0, samples=200)
        assert 0.0 < mean <= 1.0
        assert se > 0.0

    def test_zero_samples_rejected(self):
        with pytest.raises(ValueError):
            measures.rho_mass_estimate(seed=1, N=16, alpha=2.0, samples=0)

    def test_block_size_does_not_change_result(self):
        a = measures.rho_mass_estimate(seed=2, N=8, alpha=2.0, samples=300, block=64)
        b = measures.rho_mass_estimate(seed=2, N=8, alpha=2.0, samples=300, block=7)
        assert a[0] == pytest.approx(b[0], rel=1e-12)

    def test_potential_mean_stabilizes(self):
        # finiteness surrogate: means at successive N stay within a few
        # multiples of the larger standard error
        for alpha in (2.0, 2.5):
            means = {}
            for N in (32, 64):
                means[N], se = measures.potential_mean_estimate(seed=3, N=N, alpha=alpha, samples=2000)
            assert abs(means[64] - means[32]) < 0.15 * means[32]


class TestTails:
    def test_lambda_zero_gives_probability_one(self):
        est = measures.tail_probability(
            seed=5, N=32, N0=1, s=0.0, p=4.0, lambda_grid=[0.0, 1.0], samples=500
        )
        assert est.prob[0] == 1.0

    def test_equal_truncations_never_exceed(self):
        est = measures.tail_probability(
            seed=5, N=32, N0=32, s=0.0, p=4.0, lambda_grid=[1e-12, 0.5], samples=300
        )
        np.testing.assert_array_equal(est.prob, 0.0)

    def test_monotone_in_lambda(self):
        est = measures.tail_probability(
            seed=6, N=64, N0=1, s=0.0, p=4.0, lambda_grid=np.linspace(0.0, 3.0, 13), samples=4000
        )
        assert np.all(np.diff(est.prob) <= 0.0)

    def test_admissibility(self):
        assert measures.tail_admissible(0.4, 3.0)
        assert not measures.tail_admissible(0.6, 3.0)
        assert measures.tail_admissible(0.2, 4.0)
        assert not measures.tail_admissible(0.3, 6.0)
        with pytest.raises(ValueError):
            measures.tail_probability(
                seed=0, N=8, N0=1, s=0.3, p=6.0, lambda_grid=[1.0], samples=100
            )

    def test_tail_monotone_in_base_truncation(self):
        # beyond the head region, exceedance drops as N0 grows
        lam = np.array([1.5])
        est1 = measures.tail_probability(seed=7, N=128, N0=1, s=0.0, p=4.0, lambda_grid=lam, samples=20000)
        est2 = measures.tail_probability(seed=7, N=128, N0=32, s=0.0, p=4.0, lambda_grid=lam, samples=20000)
        band = 1.96 * np.sqrt(est1.prob[0] * (1 - est1.prob[0]) / 20000 + 1e-12)
        assert est2.prob[0] <= est1.prob[0] + 3 * band


class TestMoments:
    def test_zero_coefficients(self):
        ratios = measures.moment_growth(np.zeros(4), [2.0, 8.0], samples=10)
        np.testing.assert_array_equal(ratios, 0.0)

    def test_single_mode_matches_gaussian_moments(self):
        # E|Z|^q = Gamma(q/2 + 1) for a standard complex Gaussian
        q_grid = np.array([2.0, 4.0, 8.0])
        ratios = measures.moment_growth(np.array([1.0 + 0j]), q_grid, samples=60000, seed=8)
        exact = gamma(q_grid / 2.0 + 1.0) ** (1.0 / q_grid) / np.sqrt(q_grid)
        np.testing.assert_allclose(ratios, exact, rtol=0.05)
        assert measures.gaussian_abs_moment(4.0) == pytest.approx(2.0)

    def test_exponent_validated(self):
        with pytest.raises(ValueError):
            measures.moment_growth(np.ones(3), [1.0], samples=10)
