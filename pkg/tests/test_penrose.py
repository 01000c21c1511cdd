import numpy as np
import pytest

from zonalwave import dynamics, measures, penrose, spectral

SQ = np.sqrt(2.0 / np.pi)


class TestChart:
    def test_time_zero_unit_radius(self):
        pt = penrose.forward_map(0.0, 1.0)
        assert pt.T == pytest.approx(0.0, abs=1e-15)
        assert pt.R == pytest.approx(np.pi / 2, abs=1e-15)
        assert pt.omega == pytest.approx(1.0, abs=1e-15)

    def test_diagonal_point(self):
        pt = penrose.forward_map(1.0, 1.0)
        assert pt.T == pytest.approx(np.arctan(2.0))
        assert pt.R == pytest.approx(np.arctan(2.0))
        assert pt.omega == pytest.approx(2.0 / np.sqrt(5.0))

    def test_large_time_approaches_boundary(self):
        pt = penrose.forward_map(1e3, 1.0)
        assert abs(pt.T + pt.R - np.pi) < 3e-3

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            penrose.forward_map(0.0, -1.0)

    def test_inverse_examples(self):
        t, r = penrose.inverse_map(0.0, np.pi / 2)
        assert t == pytest.approx(0.0, abs=1e-15)
        assert r == pytest.approx(1.0, abs=1e-14)

    def test_inverse_outside_chart(self):
        with pytest.raises(ValueError):
            penrose.inverse_map(3 * np.pi / 4, 3 * np.pi / 4)

    def test_roundtrip_and_identity(self):
        t = np.concatenate([np.logspace(-3, 3, 40), [0.0], -np.logspace(-3, 3, 40)])
        r = np.logspace(-3, 3, 41)
        tt, rr = np.meshgrid(t, r, indexing="ij")
        pt = penrose.forward_map(tt, rr)
        t2, r2 = penrose.inverse_map(pt.T, pt.R)
        assert (np.abs(t2 - tt) / np.maximum(1, np.abs(tt))).max() < 1e-10
        assert (np.abs(r2 - rr) / np.maximum(1, np.abs(rr))).max() < 1e-10
        assert np.abs(pt.omega - (np.cos(pt.T) + np.cos(pt.R))).max() < 1e-12

    def test_conformal_factor_values(self):
        assert penrose.conformal_factor(0.0, 0.0) == pytest.approx(2.0)
        assert penrose.conformal_factor(0.0, 1.0) == pytest.approx(1.0)

    def test_omega_tilde_clips(self):
        assert penrose.omega_tilde(3.0, 3.0) == 0.0
        assert penrose.omega_tilde(0.0, 0.0) == pytest.approx(2.0)

    def test_angle_monotone_in_radius(self):
        r = np.linspace(1e-3, 50.0, 400)
        for t in (-3.0, 0.0, 0.7, 20.0):
            R = penrose.forward_map(np.full_like(r, t), r).R
            assert np.all(np.diff(R) > 0)


class TestInitialData:
    def test_real_single_mode(self):
        r = penrose.default_radial_grid(points=512)
        u0 = np.zeros(8, dtype=complex)
        u0[0] = 1.0
        f0, f1 = penrose.pt_initial_data(u0, r)
        np.testing.assert_allclose(f0, SQ * 2.0 / (1.0 + r**2), atol=1e-13)
        np.testing.assert_array_equal(f1, 0.0)

    def test_imaginary_single_mode(self):
        r = penrose.default_radial_grid(points=512)
        u0 = np.zeros(8, dtype=complex)
        u0[0] = 1j
        f0, f1 = penrose.pt_initial_data(u0, r)
        np.testing.assert_array_equal(f0, 0.0)
        np.testing.assert_allclose(f1, -((2.0 / (1.0 + r**2)) ** 2) * SQ, atol=1e-13)

    def test_zero_data(self):
        r = penrose.default_radial_grid(points=64)
        f0, f1 = penrose.pt_initial_data(np.zeros(4, dtype=complex), r)
        assert not f0.any() and not f1.any()

    def test_positive_radii_required(self):
        with pytest.raises(ValueError):
            penrose.pt_initial_data(np.ones(4, dtype=complex), np.array([0.0, 1.0]))

    def test_isometry(self):
        r = penrose.default_radial_grid(1e-4, 1e4, 4096)
        smp = measures.sample_mu(measures.RngStreamSpec(42, 0), 64)
        f0, _ = penrose.pt_initial_data(smp.u, r)
        lhs = penrose.weighted_l2_norm(f0, r, -1.0)
        assert lhs == pytest.approx(np.sqrt((smp.u.real**2).sum()), abs=1e-8)


class TestPhysicalField:
    def test_zero_accessor(self):
        r = penrose.default_radial_grid(points=128)
        vals = penrose.physical_field(dynamics.LinearFlow(np.zeros(4, dtype=complex)), 0.3, r)
        np.testing.assert_array_equal(vals, 0.0)

    def test_free_single_mode_at_time_zero(self):
        r = penrose.default_radial_grid(points=512)
        u0 = np.zeros(4, dtype=complex)
        u0[0] = 1.0
        vals = penrose.physical_field(dynamics.LinearFlow(u0), 0.0, r)
        np.testing.assert_allclose(vals, SQ * 2.0 / (1.0 + r**2), atol=1e-13)

    def test_free_wave_residual(self):
        # central-difference d'Alembertian of the assembled free field; for
        # radial waves (profiles of t+r and t-r over r) the equal-step
        # stencil telescopes exactly, so the residual sits at roundoff
        u0 = np.zeros(4, dtype=complex)
        u0[1] = 1.0
        flow = dynamics.LinearFlow(u0)

        def field(t, r):
            return penrose.physical_field(flow, t, r)

        for h in (0.02, 0.01):
            r = np.arange(0.2, 1.2, h)
            t0 = 0.35
            f0, fp, fm = field(t0, r), field(t0 + h, r), field(t0 - h, r)
            ftt = (fp - 2 * f0 + fm) / h**2
            frr = (f0[2:] - 2 * f0[1:-1] + f0[:-2]) / h**2
            fr = (f0[2:] - f0[:-2]) / (2 * h)
            resid = ftt[1:-1] - frr - (2.0 / r[1:-1]) * fr
            assert np.abs(resid).max() < 1e-10


class TestRadialNorms:
    def test_zero(self):
        r = penrose.default_radial_grid(points=64)
        assert penrose.weighted_l2_norm(np.zeros_like(r), r, -1.0) == 0.0

    def test_plain_l2_of_bump(self):
        # indicator-like bump: exact integral of r^2 over [1, 2] is 7/3
        r = np.linspace(0.5, 3.0, 20001)
        bump = ((r >= 1.0) & (r <= 2.0)).astype(float)
        got = penrose.weighted_l2_norm(bump, r, 0.0)
        assert got == pytest.approx(np.sqrt(7.0 / 3.0), rel=1e-3)

    def test_lq_norm_matches_closed_form(self):
        # f = exp(-r): int_0^inf e^(-3r) r^2 dr = 2/27
        r = penrose.default_radial_grid(1e-6, 60.0, 4096)
        got = penrose.radial_lq_norm(np.exp(-r), r, 3.0)
        assert got == pytest.approx((2.0 / 27.0) ** (1.0 / 3.0), rel=1e-10)

    def test_norm_transport_identity(self):
        # ||psi||_{L^p_{t,r}} = ||Omega^{1-4/p} phi||_{L^p_{T,R}} for a trig
        # polynomial phi(T, R) = cos(2T) e_2(R), p = 6
        p = 6.0
        u0 = np.zeros(2, dtype=complex)
        u0[1] = 1.0
        flow = dynamics.LinearFlow(u0)

        x = np.linspace(-np.arcsinh(200.0), np.arcsinh(200.0), 1500)
        t = np.sinh(x)
        y = np.linspace(np.arcsinh(1e-4), np.arcsinh(200.0), 1500)
        r = np.sinh(y)
        lhs_sq = 0.0
        rows = []
        for tv in t:
            f = penrose.physical_field(flow, tv, r)
            rows.append(np.trapezoid(np.abs(f) ** p * r**2 * np.cosh(y), x=y))
        lhs = np.trapezoid(np.array(rows) * np.cosh(x), x=x) ** (1.0 / p)

        T = np.linspace(-np.pi, np.pi, 2001)
        R = spectral.grid(1024)
        e2 = spectral.eval_eigenfunction(2, R)
        om = penrose.omega_tilde(T[:, None], R[None, :])
        phi = np.cos(2 * T)[:, None] * e2[None, :]
        integrand = np.where(om > 0, om ** (p - 4.0) * np.abs(phi) ** p, 0.0) * np.sin(R) ** 2
        rhs = (np.trapezoid(np.trapezoid(integrand, x=R, axis=1), x=T)) ** (1.0 / p)
        assert lhs == pytest.approx(rhs, rel=2e-2)


def test_log_uniform_detection():
    log_grid = np.logspace(-2, 2, 1000)
    lin_grid = np.linspace(1.0, 2.0, 100)
    vals_lin = np.ones(100)
    # both rules integrate a constant correctly
    assert penrose.radial_quadrature(vals_lin, lin_grid) == pytest.approx(1.0)
    assert penrose.radial_quadrature(np.ones(1000), log_grid) == pytest.approx(
        log_grid[-1] - log_grid[0], rel=1e-4
    )
