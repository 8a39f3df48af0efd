"""Constitutive laws, parameter algebra, and the hypothesis verifiers."""

import math

import numpy as np
import pytest

from oldroyd2d.constitutive import (
    ConstitutiveModel,
    PhysicalParams,
    admissibility_case,
    coercivity_fit,
    f_of_D,
    g_of_D,
    gamma_weighted_form,
    growth_fit,
    monotonicity_fit,
    mu,
    mu_tilde,
    potential,
    sample_symmetric_matrices,
    sup_mu_tilde,
    verify_coercivity,
    verify_growth,
    verify_monotonicity,
    verify_potential,
)

from support import rng_for


IDENT = np.eye(2)[:, :, None]  # single identity sample, shape (2, 2, 1)


def model(kind="power_quadratic", p=3.0, lam=0.0, r=2.0, variant="S1", nu0=1.0):
    return ConstitutiveModel(kind, p, lam, r, variant, nu0)


class TestPhysicalParams:
    def test_derived_constants_exact(self):
        params = PhysicalParams(weissenberg=2.0, theta=0.5, lam=0.0, nu_mono=1.0)
        assert params.a == 1.0 / 2.0
        assert params.b == 2.0 * 0.5 / 2.0
        assert params.gamma == 0.0

    def test_gamma_forms_agree(self):
        rng = rng_for(100)
        checked = 0
        while checked < 500:
            we = float(rng.uniform(0.05, 20.0))
            theta = float(rng.uniform(0.01, 0.99))
            lam = float(rng.uniform(0.0, 1.0))
            nu = float(rng.uniform(0.05, 5.0))
            try:
                params = PhysicalParams(we, theta, lam, nu)
            except ValueError:
                continue
            assert gamma_weighted_form(params) == pytest.approx(params.gamma, rel=1e-14)
            assert params.gamma < 1.0
            checked += 1

    def test_case_analysis(self):
        # 2*nu*(1-theta) = 0.4 <= 1 and lambda = 1 >= sqrt(0.4): rejected
        with pytest.raises(ValueError, match="sqrt"):
            PhysicalParams(weissenberg=2.0, theta=0.5, lam=1.0, nu_mono=0.4)
        # case i: 2*nu*(1-theta) = 4 > 1, lambda = 1 fine
        assert PhysicalParams(2.0, 0.5, 1.0, 4.0).case == "i"
        # case ii accepted branch
        assert PhysicalParams(2.0, 0.5, 0.5, 1.0).case == "ii"
        assert admissibility_case(1.0, 0.5, 0.5) == "ii"

    def test_infinite_weissenberg_gives_zero_rates(self):
        params = PhysicalParams(math.inf, 0.5, 0.0, 1.0)
        assert params.a == 0.0
        assert params.b == 0.0
        assert params.gamma == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(weissenberg=0.0, theta=0.5, lam=0.0, nu_mono=1.0),
            dict(weissenberg=2.0, theta=0.0, lam=0.0, nu_mono=1.0),
            dict(weissenberg=2.0, theta=1.0, lam=0.0, nu_mono=1.0),
            dict(weissenberg=2.0, theta=0.5, lam=1.5, nu_mono=1.0),
            dict(weissenberg=2.0, theta=0.5, lam=0.0, nu_mono=0.0),
        ],
    )
    def test_rejects_bad_ranges(self, kwargs):
        with pytest.raises(ValueError):
            PhysicalParams(**kwargs)


class TestConstitutiveModel:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            model(kind="cubic")
        with pytest.raises(ValueError):
            model(p=1.5)
        with pytest.raises(ValueError):
            model(r=2.5)
        with pytest.raises(ValueError):
            model(lam=-0.1)
        with pytest.raises(ValueError):
            model(variant="S3")

    def test_3d_exponent_flag(self):
        assert model(p=2.5).meets_3d_exponent
        assert not model(p=2.2).meets_3d_exponent


class TestMu:
    def test_r_equals_two_is_one(self):
        assert mu(7.3, 0.8, 2.0) == 1.0

    def test_lambda_zero_is_one(self):
        assert mu(123.0, 0.0, 1.3) == 1.0

    def test_hand_value(self):
        assert mu(3.0, 1.0, 1.0) == pytest.approx(0.5, rel=1e-15)

    def test_monotone_nonincreasing_and_range(self):
        d2 = np.linspace(0.0, 50.0, 400)
        lam, r = 0.7, 1.4
        vals = mu(d2, lam, r)
        assert np.all(np.diff(vals) <= 0.0)
        assert np.all(vals <= 1.0) and np.all(vals > 1.0 - lam)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            mu(-1e-9, 0.5, 1.5)


class TestFAndG:
    def test_f_zero_is_zero(self):
        z = np.zeros((2, 2, 4))
        for kind in ("power_additive", "power_quadratic", "linear"):
            assert np.all(f_of_D(z, model(kind=kind)) == 0.0)

    def test_f_additive_identity_hand_value(self):
        out = f_of_D(IDENT, model(kind="power_additive", p=3.0))
        assert np.allclose(out, (1.0 + math.sqrt(2.0)) * IDENT, rtol=1e-15)

    def test_f_quadratic_p2_is_identity_map(self):
        a = sample_symmetric_matrices(rng_for(0), 32, 5.0)
        out = f_of_D(a, model(kind="power_quadratic", p=2.0))
        assert np.array_equal(out, a)

    def test_f_odd_symmetry_exact(self):
        a = sample_symmetric_matrices(rng_for(1), 64, 8.0)
        for kind in ("power_additive", "power_quadratic"):
            m = model(kind=kind, p=3.3)
            assert np.array_equal(f_of_D(-a, m), -f_of_D(a, m))

    def test_g_zero(self):
        params = PhysicalParams(2.0, 0.5, 0.5, 1.0)
        z = np.zeros((2, 2, 3))
        assert np.all(g_of_D(z, model(lam=0.5, r=1.5), params) == 0.0)

    def test_g_reduces_to_bD_for_r2(self):
        params = PhysicalParams(3.0, 0.25, 0.8, 2.0)
        m = model(lam=0.8, r=2.0)
        d = sample_symmetric_matrices(rng_for(2), 16, 3.0)
        out = g_of_D(d, m, params)
        assert np.allclose(out, params.b * d, rtol=1e-15)

    def test_g_vanishes_when_mu_hits_theta(self):
        # lambda=1, r=1, theta=0.5, We=2, |D|^2 = 3: mu = 0.5 = theta
        params = PhysicalParams(2.0, 0.5, 1.0, 2.0)
        m = model(lam=1.0, r=1.0)
        d = math.sqrt(3.0 / 2.0) * IDENT  # |D|^2 = 3/2 * |I|^2 = 3
        out = g_of_D(d, m, params)
        assert np.max(np.abs(out)) < 1e-15

    def test_g_rejects_variant_s2(self):
        params = PhysicalParams(2.0, 0.5, 0.0, 1.0)
        with pytest.raises(ValueError):
            g_of_D(IDENT, model(variant="S2"), params)

    def test_sup_mu_tilde(self):
        params = PhysicalParams(2.0, 0.5, 0.5, 1.0)
        assert sup_mu_tilde(model(variant="S2"), params) == params.b
        # mu in [0.5, 1]: |mu - theta| <= 0.5, so b/(1-theta)*0.5 = b
        assert sup_mu_tilde(model(lam=0.5, r=1.5, variant="S1"), params) == pytest.approx(
            params.b
        )


class TestGrowth:
    def test_quadratic_p3_finite_constants(self):
        rep = verify_growth(model(), 10000, 10.0, seed=0)
        assert rep.violations == 0
        assert rep.c_fit == pytest.approx(math.sqrt(2.0), rel=1e-3)
        assert 0.0 < rep.c_tilde_fit < 1.0

    def test_linear_equality_case(self):
        rep = verify_growth(model(kind="linear", p=2.0, nu0=0.7), 1000, 10.0, seed=0)
        assert rep.violations == 0
        assert rep.c_fit == pytest.approx(1.4, rel=1e-12)
        assert rep.c_tilde_fit < 1e-12

    def test_zero_sample_only(self):
        rep = growth_fit(lambda a: f_of_D(a, model()), 3.0, np.zeros((2, 2, 1)))
        assert rep.violations == 0
        assert rep.c_fit == 0.0
        assert rep.c_tilde_fit == 0.0

    def test_f0_nonzero_is_flagged(self):
        shift = lambda a: a + 0.5  # f(0) != 0
        rep = verify_growth((shift, 3.0), 100, 10.0, seed=0)
        assert rep.violations >= 1


class TestMonotonicity:
    def test_equal_pair_skipped(self):
        a = sample_symmetric_matrices(rng_for(3), 8, 5.0)
        rep = monotonicity_fit(lambda x: f_of_D(x, model()), 3.0, a, a.copy())
        assert rep.pairs == 0

    def test_linear_ratio_exact(self):
        rep = verify_monotonicity(model(kind="linear", p=2.0, nu0=0.7), 1000, 10.0, seed=0)
        assert rep.violations == 0
        assert rep.nu_fit == pytest.approx(0.7, rel=1e-12)

    def test_quadratic_p3_regression(self):
        rep = verify_monotonicity(model(), 10000, 10.0, seed=0)
        assert rep.violations == 0
        assert rep.nu_fit > 0.0
        # frozen value of the seeded sampling run
        assert rep.nu_fit == pytest.approx(0.4477277041267027, rel=1e-12)

    def test_rejects_p_below_two(self):
        with pytest.raises(ValueError):
            verify_monotonicity((lambda a: a, 1.5), 10, 5.0)

    def test_non_monotone_tabulated_fixture_is_caught(self):
        # radial law m(|A|)*A tabulated with a non-monotone m(t)*t
        knots = np.array([0.0, 1.0, 2.0, 3.0, 50.0])
        radial = np.array([0.0, 1.0, 0.3, 2.0, 80.0])  # dips between t=1 and t=2

        def tabulated(a):
            mag = np.sqrt(np.sum(a * a, axis=(0, 1)))
            scale = np.interp(mag, knots, radial) / np.maximum(mag, 1e-300)
            return scale[None, None, ...] * a

        rep = verify_monotonicity((tabulated, 2.0), 4000, 5.0, seed=7)
        assert rep.violations > 0
        assert rep.nu_fit <= 0.0


class TestCoercivity:
    def test_quadratic_lower_bound_one(self):
        rep = verify_coercivity(model(), 10000, 10.0, seed=0)
        assert rep.violations == 0
        assert rep.nu_fit >= 1.0

    def test_linear_exact(self):
        rep = verify_coercivity(model(kind="linear", p=2.0, nu0=0.7), 1000, 10.0, seed=0)
        assert rep.nu_fit == pytest.approx(1.4, rel=1e-12)

    def test_zero_skipped(self):
        rep = coercivity_fit(lambda a: f_of_D(a, model()), 3.0, np.zeros((2, 2, 4)))
        assert rep.samples == 0


class TestPotential:
    def test_zero_values(self):
        for kind in ("power_additive", "power_quadratic", "linear"):
            m = model(kind=kind, p=3.0 if kind != "linear" else 2.0)
            z = np.zeros((2, 2, 1))
            assert potential(z, m) == pytest.approx(0.0, abs=1e-15)
            assert np.all(f_of_D(z, m) == 0.0)

    def test_quadratic_p2_hessian_is_identity(self):
        rep = verify_potential(model(kind="power_quadratic", p=2.0), 500, seed=3)
        assert rep.violations == 0
        assert rep.c1_fit == pytest.approx(1.0, abs=1e-4)
        assert rep.c2_fit == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("kind", ["power_additive", "power_quadratic"])
    def test_gradient_matches_f(self, kind):
        rep = verify_potential(model(kind=kind, p=3.0), 2000, seed=1)
        assert rep.violations == 0
        assert rep.max_gradient_rel_err < 1e-6
        assert rep.c1_fit > 0.0
        assert rep.c2_fit >= rep.c1_fit


class TestSampling:
    def test_magnitude_range_and_symmetry(self):
        samples = sample_symmetric_matrices(rng_for(4), 512, 10.0)
        assert np.array_equal(samples[0, 1], samples[1, 0])
        mags = np.sqrt(np.sum(samples * samples, axis=(0, 1)))
        assert np.all(mags >= 1e-3 * (1 - 1e-12)) and np.all(mags <= 10.0 * (1 + 1e-12))

    def test_deterministic(self):
        a = sample_symmetric_matrices(rng_for(5), 64, 10.0)
        b = sample_symmetric_matrices(rng_for(5), 64, 10.0)
        assert np.array_equal(a, b)

    def test_mu_tilde_matches_definition(self):
        params = PhysicalParams(2.0, 0.5, 0.7, 1.0)
        m = model(lam=0.7, r=1.5)
        d2 = np.array([0.0, 1.0, 9.0])
        expected = params.b / 0.5 * (mu(d2, 0.7, 1.5) - 0.5)
        assert np.allclose(mu_tilde(d2, m, params), expected, rtol=1e-15)
