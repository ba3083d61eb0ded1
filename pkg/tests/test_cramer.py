import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from cramer_tentropy import conjugate as cj
from cramer_tentropy import cramer as cr
from cramer_tentropy import tilting as tl


def poisson_moment_bruteforce(mu, n, kmax=60):
    k = np.arange(kmax + 1)
    logp = -mu + k * math.log(mu) - np.array([math.lgamma(v + 1) for v in k])
    return math.fsum(np.exp(logp) * k.astype(float) ** n)


def finite_rate_oracle(p, a):
    """sup_t {a t - ln sum p_k e^{k t}} by bounded scalar maximisation."""
    k = np.arange(len(p))

    def neg(t):
        return -(a * t - math.log(np.dot(p, np.exp(k * t))))

    res = minimize_scalar(neg, bounds=(-40, 40), method="bounded", options={"xatol": 1e-12})
    return -res.fun


class TestConstruction:
    def test_parameters_validated(self):
        with pytest.raises(ValueError):
            cr.Exponential(0.0)
        with pytest.raises(ValueError):
            cr.Poisson(-1.0)
        with pytest.raises(ValueError):
            cr.FiniteDiscrete((0.5, 0.6))
        with pytest.raises(ValueError):
            cr.FiniteDiscrete((-0.1, 1.1))

    def test_radius(self):
        assert cr.Exponential(3.0).convergence_radius == 3.0
        assert math.isinf(cr.Poisson(1.0).convergence_radius)
        assert math.isinf(cr.FiniteDiscrete((0.5, 0.5)).convergence_radius)

    @pytest.mark.parametrize("text,expect", [
        ("exponential:1", cr.Exponential(1.0)),
        ("poisson:2", cr.Poisson(2.0)),
        ("finite:0.25,0.5,0.25", cr.FiniteDiscrete((0.25, 0.5, 0.25))),
        ('{"kind": "poisson", "mu": 3}', cr.Poisson(3.0)),
    ])
    def test_parse(self, text, expect):
        assert cr.parse_distribution(text) == expect

    def test_json_roundtrip(self):
        for d in (cr.Exponential(2.0), cr.Poisson(0.5), cr.FiniteDiscrete((0.2, 0.8))):
            assert cr.parse_distribution(json.dumps(d.to_json())) == d

    def test_parse_unknown(self):
        with pytest.raises(ValueError):
            cr.parse_distribution("gamma:1")


class TestGeneratingFunctions:
    def test_mgf_examples(self):
        assert cr.mgf(cr.Exponential(2.0), 1.0) == pytest.approx(2.0)
        assert cr.mgf(cr.Poisson(1.0), math.log(2)) == pytest.approx(math.e)
        for d in (cr.Exponential(2.0), cr.Poisson(1.0), cr.FiniteDiscrete((0.3, 0.7))):
            assert cr.mgf(d, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_cgf_examples(self):
        assert cr.cgf(cr.Exponential(1.0), 0.0) == 0.0
        assert cr.cgf(cr.Poisson(3.0), 1.0) == pytest.approx(3 * math.e - 3)
        assert math.isinf(cr.cgf(cr.Exponential(1.0), 1.0))
        assert math.isinf(cr.mgf(cr.Exponential(1.0), 1.5))

    def test_pgf_examples(self):
        assert cr.pgf(cr.Poisson(2.0), 1.0) == pytest.approx(1.0)
        assert cr.pgf(cr.FiniteDiscrete((0.1, 0.2, 0.7)), 1.0) == pytest.approx(1.0)
        assert cr.pgf(cr.Poisson(2.0), 0.0) == pytest.approx(math.exp(-2))
        assert cr.pgf(cr.FiniteDiscrete((0.5, 0.5)), 3.0) == pytest.approx(2.0)

    def test_pgf_needs_integer_law(self):
        with pytest.raises(ValueError):
            cr.pgf(cr.Exponential(1.0), 0.5)

    @pytest.mark.parametrize("d", [cr.Poisson(1.7), cr.FiniteDiscrete((0.1, 0.0, 0.6, 0.3))])
    def test_cgf_is_log_pgf_of_exp(self, d):
        t = np.linspace(-3, 1, 101)
        np.testing.assert_allclose(cr.cgf(d, t), np.log(cr.pgf(d, np.exp(t))), atol=1e-12)


class TestCramerTransform:
    def test_examples(self):
        assert cr.cramer_transform(cr.Exponential(1.0), 1.0) == pytest.approx(0.0, abs=1e-15)
        assert cr.cramer_transform(cr.Poisson(2.0), 0.0) == pytest.approx(2.0)
        assert cr.cramer_transform(cr.Poisson(2.0), 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_outside_domain(self):
        assert math.isinf(cr.cramer_transform(cr.Exponential(1.0), 0.0))
        assert math.isinf(cr.cramer_transform(cr.Poisson(1.0), -0.1))
        assert math.isinf(cr.cramer_transform(cr.FiniteDiscrete((0.5, 0.5)), 1.5))

    def test_vectorised(self):
        a = np.array([0.5, 1.0, 2.0])
        v = cr.cramer_transform(cr.Exponential(1.0), a)
        np.testing.assert_allclose(v, a - np.log(a) - 1)

    @pytest.mark.parametrize("d", [cr.Exponential(1.0), cr.Exponential(3.0), cr.Poisson(2.0), cr.Poisson(0.4)],
                             ids=str)
    def test_numeric_conjugate_matches(self, d):
        a = np.linspace(0.05, 10, 200)
        num = cj.lf_transform(cr.cgf_grid(d), a).values
        np.testing.assert_allclose(num, cr.cramer_transform(d, a), atol=1e-3)

    @pytest.mark.parametrize("a", [0.3, 0.9, 1.5, 2.2])
    def test_finite_against_scalar_oracle(self, a):
        p = (0.1, 0.4, 0.2, 0.3)
        assert cr.cramer_transform(cr.FiniteDiscrete(p), a) == pytest.approx(finite_rate_oracle(np.array(p), a), abs=1e-6)

    def test_finite_endpoints(self):
        d = cr.FiniteDiscrete((0.2, 0.5, 0.3))
        assert cr.cramer_transform(d, 0.0) == pytest.approx(-math.log(0.2), abs=1e-12)
        assert cr.cramer_transform(d, 2.0) == pytest.approx(-math.log(0.3), abs=1e-12)

    @pytest.mark.parametrize("a", [0.4, 1.0, 1.6])
    def test_finite_matches_contraction(self, a):
        d = cr.FiniteDiscrete((0.25, 0.5, 0.25))
        assert cr.cramer_transform(d, a) == pytest.approx(tl.contraction_discrete(d, a).value, abs=1e-5)

    def test_zero_at_mean(self):
        for d in (cr.Exponential(2.5), cr.Poisson(1.3), cr.FiniteDiscrete((0.3, 0.3, 0.4))):
            assert cr.cramer_transform(d, d.mean) == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.2, 5.0), st.floats(0.01, 8.0), st.floats(0.01, 8.0))
    def test_midpoint_convex(self, mu, x, y):
        for d in (cr.Exponential(mu), cr.Poisson(mu)):
            fx, fy = cr.cramer_transform(d, x), cr.cramer_transform(d, y)
            assert cr.cramer_transform(d, 0.5 * (x + y)) <= 0.5 * (fx + fy) + 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.2, 5.0), st.floats(0.01, 8.0))
    def test_nonnegative(self, mu, a):
        assert cr.cramer_transform(cr.Exponential(mu), a) >= -1e-15
        assert cr.cramer_transform(cr.Poisson(mu), a) >= -1e-15


class TestCompositions:
    def test_cgf_exp_conjugate_examples(self):
        d = cr.Exponential(1.0)
        assert cr.cgf_exp_conjugate(d, 1.0) == pytest.approx(-2 * math.log(2), abs=1e-12)
        assert cr.cgf_exp_conjugate(d, 0.0) == 0.0
        assert math.isinf(cr.cgf_exp_conjugate(d, -1.0))

    def test_poisson_one_at_one(self):
        # golden-section oracle: min_{alpha>0} {1 - alpha + alpha ln alpha - ln alpha} + exp*(1)
        res = minimize_scalar(lambda u: 1 - math.exp(u) + math.exp(u) * u - u,
                              bounds=(-10, 10), method="bounded", options={"xatol": 1e-12})
        oracle = res.fun - 1.0
        d = cr.Poisson(1.0)
        assert cr.cgf_exp_conjugate(d, 1.0) == pytest.approx(oracle, abs=1e-8)
        assert cr.cgf_exp_conjugate(d, 1.0, method="grid") == pytest.approx(oracle, abs=1e-4)

    @pytest.mark.parametrize("a", [0.25, 1.0, 2.0, 4.0])
    def test_closed_form_vs_grid(self, a):
        d = cr.Exponential(1.0)
        assert cr.cgf_exp_conjugate(d, a) == pytest.approx(cr.cgf_exp_conjugate(d, a, method="grid"), abs=1e-4)

    def test_closed_form_vs_compose(self):
        for mu in (0.5, 2.0):
            d = cr.Exponential(mu)
            for a in (0.3, 1.0, 3.0):
                assert cr.cgf_exp_conjugate(d, a) == pytest.approx(
                    cr.cgf_exp_conjugate(d, a, method="compose"), abs=1e-6)

    def test_rate_exp_conjugate_examples(self):
        assert cr.cramer_star_exp_conjugate(cr.Exponential(1.0), 0.0) == 0.0
        assert cr.cramer_star_exp_conjugate(cr.Exponential(1.0), 1.0) == pytest.approx(2 * math.log(2) - 1)
        assert cr.cramer_star_exp_conjugate(cr.Exponential(2.0), 1.0) == pytest.approx(math.log(2) - 1)

    @pytest.mark.parametrize("mu", [1.0, 2.0])
    def test_rate_exp_conjugate_numeric(self, mu):
        d = cr.Exponential(mu)
        a = np.linspace(0, 10, 41)
        np.testing.assert_allclose(cr.cramer_star_exp_conjugate(d, a, method="grid"),
                                   cr.cramer_star_exp_conjugate(d, a), atol=1e-4)


class TestMoments:
    def test_exponential(self):
        m = cr.moments(cr.Exponential(2.0), 3)
        assert m[3] == pytest.approx(0.75)
        assert m[0] == 1.0

    def test_poisson_bell_numbers(self):
        m = cr.moments(cr.Poisson(1.0), 8)
        np.testing.assert_allclose(m.values, [1, 1, 2, 5, 15, 52, 203, 877, 4140], rtol=1e-12)

    @pytest.mark.parametrize("mu", [0.3, 2.0, 7.5])
    def test_poisson_against_truncated_sum(self, mu):
        m = cr.moments(cr.Poisson(mu), 10)
        brute = [poisson_moment_bruteforce(mu, n, kmax=120) for n in range(11)]
        np.testing.assert_allclose(m.values, brute, rtol=1e-10)

    def test_finite(self):
        p = np.array([0.2, 0.3, 0.5])
        m = cr.moments(cr.FiniteDiscrete(tuple(p)), 5)
        np.testing.assert_allclose(m.values, [np.dot(p, np.arange(3.0) ** n) for n in range(6)])

    def test_large_orders_stay_finite_in_log(self):
        m = cr.moments(cr.Exponential(0.5), 400)
        assert np.all(np.isfinite(m.log_moments))

    @pytest.mark.parametrize("d", [cr.Exponential(1.3), cr.Poisson(0.7), cr.FiniteDiscrete((0.6, 0.1, 0.3))],
                             ids=str)
    def test_log_convex(self, d):
        assert cr.moments(d, 60).is_log_convex()

    def test_negative_order(self):
        with pytest.raises(ValueError):
            cr.moments(cr.Poisson(1.0), -1)
