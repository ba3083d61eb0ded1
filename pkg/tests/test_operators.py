import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from cramer_tentropy import cramer as cr
from cramer_tentropy import operators as op


def eig_radius(A):
    return float(np.max(np.abs(np.linalg.eigvals(A))))


ANTI = np.array([[0.0, 2.0], [8.0, 0.0]])


class TestSystem:
    def test_validation(self):
        with pytest.raises(ValueError):
            op.FiniteDynamicalSystem((0, 2), [0.0, 0.0])
        with pytest.raises(ValueError):
            op.FiniteDynamicalSystem((0, 1), [0.0])
        with pytest.raises(ValueError):
            op.FiniteDynamicalSystem((0,), [0.0], p_exponent=0.5)

    def test_cycles(self):
        s = op.FiniteDynamicalSystem((2, 0, 1, 4, 3, 5), np.zeros(6))
        assert s.cycles == ((0, 2, 1), (3, 4), (5,))
        assert s.is_bijective

    def test_cycles_of_non_bijective_map(self):
        s = op.FiniteDynamicalSystem((1, 2, 1, 0), np.zeros(4))
        assert s.cycles == ((1, 2),)
        assert not s.is_bijective

    def test_json_roundtrip(self):
        s = op.FiniteDynamicalSystem((1, 0, 2), [0.1, -0.2, 0.3], 2.0)
        t = op.FiniteDynamicalSystem.from_json(json.dumps(s.to_json()))
        assert t.alpha == s.alpha and t.p_exponent == 2.0
        np.testing.assert_array_equal(t.phi, s.phi)

    def test_json_size_mismatch(self):
        with pytest.raises(ValueError):
            op.FiniteDynamicalSystem.from_json({"n": 3, "alpha": [0, 1], "phi": [0, 0]})


class TestWcoMatrix:
    def test_swap(self):
        s = op.FiniteDynamicalSystem.swap((math.log(2), math.log(8)))
        np.testing.assert_allclose(op.wco_matrix(s), ANTI)

    def test_single_point(self):
        np.testing.assert_array_equal(op.wco_matrix(op.FiniteDynamicalSystem((0,), [0.0])), [[1.0]])

    def test_identity(self):
        s = op.FiniteDynamicalSystem.identity([0.1, 0.2, 0.3])
        np.testing.assert_allclose(op.wco_matrix(s), np.diag(np.exp([0.1, 0.2, 0.3])))

    def test_action(self):
        rng = np.random.default_rng(5)
        s = op.FiniteDynamicalSystem((3, 3, 0, 1), rng.normal(size=4))
        u = rng.normal(size=4)
        np.testing.assert_allclose(op.wco_matrix(s) @ u, np.exp(s.phi) * u[list(s.alpha)])


class TestSpectralRadius:
    def test_antidiagonal(self):
        assert op.spectral_radius(ANTI) == pytest.approx(4.0, rel=1e-13)

    def test_identity(self):
        assert op.spectral_radius(np.eye(4)) == pytest.approx(1.0, rel=1e-15)

    def test_nilpotent(self):
        assert op.spectral_radius(np.triu(np.ones((4, 4)), 1)) == 0.0

    def test_negative_entries(self):
        with pytest.raises(ValueError):
            op.spectral_radius(np.array([[1.0, -1.0], [0.0, 1.0]]))

    def test_reducible_blocks(self):
        # subdominant block starts with the larger entries
        A = np.zeros((3, 3))
        A[0, 0] = 1.0
        A[1, 2], A[2, 1] = 0.1, 100.0
        assert op.spectral_radius(A) == pytest.approx(math.sqrt(10.0), rel=1e-12)

    def test_zero_row(self):
        A = np.array([[2.0, 1.0], [0.0, 0.0]])
        assert op.spectral_radius(A) == pytest.approx(2.0, rel=1e-12)

    def test_jordan_block(self):
        A = np.array([[1.5, 1.0], [0.0, 1.5]])
        assert op.spectral_radius(A) == pytest.approx(1.5, rel=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(arrays(float, (5, 5), elements=st.floats(0, 3)))
    def test_against_eigenvalues(self, A):
        assert op.spectral_radius(A) == pytest.approx(eig_radius(A), rel=1e-8, abs=1e-12)

    def test_permutation_systems(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            s = op.random_permutation_system(rng, int(rng.integers(1, 13)), (-2.0, 2.0))
            lam = op.lambda_functional(s)
            assert math.log(op.spectral_radius(op.wco_matrix(s))) == pytest.approx(lam, abs=1e-10)


class TestLambda:
    def test_swap(self):
        s = op.FiniteDynamicalSystem.swap((math.log(2), math.log(8)))
        assert op.lambda_functional(s) == pytest.approx(math.log(4), abs=1e-15)

    def test_identity(self):
        assert op.lambda_functional(op.FiniteDynamicalSystem.identity([0.3, 0.7])) == 0.7

    def test_zero_weights(self):
        rng = np.random.default_rng(2)
        s = op.random_permutation_system(rng, 9)
        assert op.lambda_functional(s.with_phi(np.zeros(9))) == 0.0
        assert op.lambda_functional(s.with_phi(np.zeros(9)), "numeric") == pytest.approx(0.0, abs=1e-12)

    def test_non_bijective(self):
        s = op.FiniteDynamicalSystem((1, 2, 1, 0), [5.0, 0.2, 0.4, -1.0])
        assert op.lambda_functional(s) == pytest.approx(0.3, abs=1e-15)
        assert op.lambda_functional(s, "numeric") == pytest.approx(0.3, abs=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 10_000))
    def test_midpoint_convex(self, n, seed):
        rng = np.random.default_rng(seed)
        s = op.random_permutation_system(rng, n)
        p1, p2 = rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
        mid = op.lambda_functional(s.with_phi(0.5 * (p1 + p2)))
        assert mid <= 0.5 * (op.lambda_functional(s.with_phi(p1)) + op.lambda_functional(s.with_phi(p2))) + 1e-10

    def test_batch(self):
        rng = np.random.default_rng(4)
        s = op.random_permutation_system(rng, 6)
        phis = rng.normal(size=(10, 6))
        expect = [op.lambda_functional(s.with_phi(p)) for p in phis]
        np.testing.assert_allclose(op.lambda_batch(s, phis), expect, atol=1e-15)


class TestSeries:
    def test_exp_antidiagonal(self):
        # A^2 = 16 I, so exp(A) = cosh(4) I + sinh(4)/4 A
        expect = math.cosh(4) * np.eye(2) + math.sinh(4) / 4 * ANTI
        E = op.operator_series(op.exp_series(), ANTI)
        np.testing.assert_allclose(E, expect, rtol=1e-12)
        assert op.spectral_radius(E) == pytest.approx(math.exp(4), rel=1e-8)

    def test_constant_series(self):
        f = op.OperatorSeriesSpec(lambda n: 0.0 if n == 0 else -math.inf, math.inf, lambda t: 1.0, "one")
        np.testing.assert_array_equal(op.operator_series(f, ANTI), np.eye(2))

    def test_geometric(self):
        rng = np.random.default_rng(8)
        M = rng.uniform(0, 1, (4, 4))
        A = M * 4.0 / eig_radius(M)
        expect = 5.0 * np.linalg.inv(5.0 * np.eye(4) - A)
        np.testing.assert_allclose(op.operator_series(op.geometric_series(5.0), A), expect, rtol=1e-8)

    def test_mgf_of_exponential_is_geometric(self):
        A = np.array([[0.5, 1.0], [0.2, 0.3]])
        np.testing.assert_allclose(op.operator_series(op.mgf_series(cr.Exponential(3.0)), A),
                                   op.operator_series(op.geometric_series(3.0), A), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(arrays(float, (4, 4), elements=st.floats(0, 1.5)))
    def test_exp_against_scipy(self, A):
        np.testing.assert_allclose(op.operator_series(op.exp_series(), A), expm(A), rtol=1e-10, atol=1e-12)

    def test_cosh_against_scipy(self):
        rng = np.random.default_rng(1)
        A = rng.uniform(0, 1, (5, 5))
        np.testing.assert_allclose(op.operator_series(op.cosh_series(), A), 0.5 * (expm(A) + expm(-A)),
                                   rtol=1e-10)

    def test_divergence(self):
        A = np.array([[0.0, 2.0], [8.0, 0.0]])
        with pytest.raises(op.SeriesDivergenceError, match="spectral radius exceeds"):
            op.operator_series(op.geometric_series(4.0), A)
        with pytest.raises(op.SeriesDivergenceError):
            op.operator_series(op.mgf_series(cr.Exponential(3.5)), A)

    def test_non_normal_matrix_close_to_radius(self):
        # large ||A|| but r(A) = 0.9 inside the disc of radius 1
        A = np.array([[0.9, 50.0], [0.0, 0.9]])
        S = op.operator_series(op.geometric_series(1.0), A)
        np.testing.assert_allclose(S, np.linalg.inv(np.eye(2) - A), rtol=1e-9)

    @pytest.mark.parametrize("f", [op.exp_series(), op.cosh_series(), op.geometric_series(2.0),
                                   op.mgf_series(cr.Exponential(2.0)), op.pgf_series(cr.Poisson(1.0))],
                             ids=lambda f: f.name)
    def test_scalar_eval_is_series(self, f):
        for t in (0.0, 0.3, 1.1, 1.9):
            assert f.partial_sum(t, 1500) == pytest.approx(f.scalar_eval(t), rel=1e-12)
            assert all(f.coefficient(n) >= 0 for n in range(30))


class TestSpectralMapping:
    def test_exp_antidiagonal(self):
        rep = op.check_rfA(op.exp_series(), ANTI)
        assert rep["lhs"] == pytest.approx(math.exp(4), rel=1e-8)
        assert rep["residual"] < 1e-8

    def test_geometric_rhs(self):
        rng = np.random.default_rng(9)
        M = rng.uniform(0, 1, (3, 3))
        A = M * 4.0 / eig_radius(M)
        rep = op.check_rfA(op.mgf_series(cr.Exponential(5.0)), A)
        assert rep["rhs"] == pytest.approx(5.0, rel=1e-10)
        assert rep["residual"] < 1e-8

    def test_zero_matrix(self):
        for f in (op.exp_series(), op.cosh_series(), op.geometric_series(2.0)):
            rep = op.check_rfA(f, np.zeros((3, 3)))
            assert rep["lhs"] == rep["rhs"] == pytest.approx(f.coefficient(0))

    def test_precondition(self):
        with pytest.raises(op.SeriesDivergenceError):
            op.check_rfA(op.geometric_series(3.0), ANTI)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 10_000), st.floats(0.05, 4.5))
    def test_random_positive(self, n, seed, r):
        rng = np.random.default_rng(seed)
        M = rng.uniform(0.05, 1, (n, n))
        A = M * r / eig_radius(M)
        for f in (op.exp_series(), op.geometric_series(5.0), op.cosh_series()):
            assert op.check_rfA(f, A)["residual"] < 1e-8


class TestPgfOfOperator:
    def test_poisson_one(self):
        rng = np.random.default_rng(6)
        M = rng.uniform(0, 1, (3, 3))
        A = M * 4.0 / eig_radius(M)
        rep = op.pgf_of_operator(cr.Poisson(1.0), A)
        assert math.log(rep["r_gx"]) == pytest.approx(3.0, abs=1e-8)

    def test_poisson_two_antidiagonal(self):
        rep = op.pgf_of_operator(cr.Poisson(2.0), ANTI)
        assert math.log(rep["r_gx"]) == pytest.approx(6.0, abs=1e-8)
        assert rep["identity_check"] < 1e-8

    def test_point_mass(self):
        rep = op.pgf_of_operator(cr.FiniteDiscrete((1.0,)), ANTI)
        assert rep["r_gx"] == pytest.approx(1.0)
        np.testing.assert_allclose(op.operator_series(op.pgf_series(cr.FiniteDiscrete((1.0,))), ANTI), np.eye(2))

    def test_finite_law(self):
        d = cr.FiniteDiscrete((0.2, 0.5, 0.3))
        np.testing.assert_allclose(op.operator_series(op.pgf_series(d), ANTI),
                                   0.2 * np.eye(2) + 0.5 * ANTI + 0.3 * ANTI @ ANTI, rtol=1e-13)

    def test_zero_radius(self):
        with pytest.raises(ValueError, match="ln r undefined"):
            op.pgf_of_operator(cr.Poisson(1.0), np.triu(np.ones((3, 3)), 1))

    def test_wco_systems(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            s = op.random_permutation_system(rng, int(rng.integers(1, 9)))
            rep = op.pgf_of_operator(cr.Poisson(float(rng.uniform(0.5, 3))), op.wco_matrix(s))
            assert rep["identity_check"] < 1e-8
