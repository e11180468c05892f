import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from wegnerlab.averaging import (
    birman_solomyak_check,
    dissipative_log,
    multiparameter_average_check,
    sandwich_norm_check,
    spectral_average_check,
    stieltjes_bound_check,
)
from wegnerlab.density import DensitySpec, PiecewisePolynomial
from wegnerlab.errors import (
    HypothesisViolatedError,
    InvalidInputError,
    NotDissipativeError,
    NotInvertibleError,
    PreconditionViolatedError,
)
from wegnerlab.suite import averaging_suite

ONE = PiecewisePolynomial([(0.0, 1.0, [1.0])])
seeds = st.integers(0, 2 ** 32 - 1)


def overlap(a, b, c, d):
    return max(0.0, min(b, d) - max(a, c))


def triangle_prob(lo, hi):
    """P(lo <= s1 + s2 <= hi) for independent uniforms on [0, 1]."""
    def cdf(x):
        if x <= 0:
            return 0.0
        if x <= 1:
            return x * x / 2
        if x <= 2:
            return 1 - (2 - x) ** 2 / 2
        return 1.0
    return cdf(hi) - cdf(lo)


class TestSpectralAverage:
    def test_equality_case(self):
        r = spectral_average_check([[0.0]], [[1.0]], [[1.0]], 1.0, ONE, (0.2, 0.5))
        assert r.lhs_norm == pytest.approx(0.3, abs=1e-12)
        assert r.rhs_bound == pytest.approx(0.3, abs=1e-15) and r.passed

    def test_zero_b(self):
        r = spectral_average_check(np.eye(2), np.eye(2), np.zeros((2, 2)), 1.0, ONE, (0, 1))
        assert r.lhs_norm == 0.0 and r.passed

    def test_empty_window(self):
        r = spectral_average_check([[0.0]], [[1.0]], [[1.0]], 1.0, ONE, (0.4, 0.4))
        assert (r.lhs_norm, r.rhs_bound) == (0.0, 0.0) and r.passed

    @given(seeds)
    def test_diagonal_oracle(self, seed):
        # H(s) = diag(h) + s I: the projection onto level i is on for s in J - h_i
        rng = np.random.default_rng(seed)
        h = rng.uniform(-2, 2, 3)
        J = tuple(np.sort(rng.uniform(-3, 4, 2)))
        g = PiecewisePolynomial([(0.0, 2.0, [0.5])])
        r = spectral_average_check(np.diag(h), np.eye(3), np.eye(3), 1.0, g, J)
        oracle = max(0.5 * overlap(0, 2, J[0] - hi, J[1] - hi) for hi in h)
        assert r.lhs_norm == pytest.approx(oracle, abs=1e-10)
        assert r.passed

    def test_midpoint_oracle_nondiagonal(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(3, 3))
        H0, V = (x + x.T) / 2, np.eye(3) + 0.5 * np.diag([1.0, 0.0, 2.0])
        g = PiecewisePolynomial([(0.0, 1.0, [0.0, 2.0])])
        J = (-0.4, 0.9)
        r = spectral_average_check(H0, V, np.eye(3), 1.0, g, J)
        s = (np.arange(200000) + 0.5) / 200000
        acc = np.zeros((3, 3))
        for chunk in np.array_split(s, 20):
            w, u = np.linalg.eigh(H0[None] + chunk[:, None, None] * V[None])
            mask = ((w >= J[0]) & (w <= J[1])) * (2 * chunk)[:, None]
            acc += np.einsum("kij,kj,klj->il", u, mask, u)
        oracle = np.linalg.norm(acc / s.size, 2)
        assert r.lhs_norm == pytest.approx(oracle, abs=1e-4)
        assert r.quadrature_error_estimate < 1e-6

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolatedError):
            spectral_average_check([[0.0]], [[1.0]], [[2.0]], 1.0, ONE, (0, 1))
        with pytest.raises(HypothesisViolatedError):
            spectral_average_check([[0.0]], [[-1.0]], [[0.0]], 1.0, ONE, (0, 1))

    def test_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            spectral_average_check([[0.0]], [[1.0]], [[1.0]], 0.0, ONE, (0, 1))
        with pytest.raises(InvalidInputError):
            spectral_average_check([[0.0]], [[1.0]], [[1.0]], 1.0, ONE, (1, 0))

    def test_report_dict(self):
        d = spectral_average_check([[0.0]], [[1.0]], [[1.0]], 1.0, ONE, (0.2, 0.5)).to_dict()
        assert set(d) == {"lhs_norm", "rhs_bound", "quadrature_error_estimate", "pass"}


class TestMultiparameter:
    @given(seeds)
    @settings(max_examples=10)
    def test_triangle_oracle(self, seed):
        rng = np.random.default_rng(seed)
        h = rng.uniform(-1, 1, 2)
        J = tuple(np.sort(rng.uniform(-1.5, 3.5, 2)))
        r = multiparameter_average_check(np.diag(h), [np.eye(2), np.eye(2)], [1.0, 1.0],
                                         DensitySpec.uniform(), 2.0, np.eye(2), J)
        oracle = max(triangle_prob(J[0] - hi, J[1] - hi) for hi in h)
        assert r.lhs_norm == pytest.approx(oracle, abs=1e-8)
        assert r.rhs_bound == pytest.approx(2 * (J[1] - J[0]))
        assert r.passed

    def test_single_operator_matches_spectral(self):
        f = DensitySpec.uniform()
        a = multiparameter_average_check(np.diag([0.1, 0.6]), [np.eye(2)], [1.0], f, 1.0,
                                         np.eye(2), (0.2, 0.9))
        b = spectral_average_check(np.diag([0.1, 0.6]), np.eye(2), np.eye(2), 1.0, f, (0.2, 0.9))
        assert a.lhs_norm == pytest.approx(b.lhs_norm, abs=1e-12)

    def test_empty_window(self):
        r = multiparameter_average_check(np.zeros((2, 2)), [np.eye(2)] * 2, [1, 1],
                                         DensitySpec.uniform(), 1.0, np.eye(2), (0.3, 0.3))
        assert (r.lhs_norm, r.rhs_bound) == (0.0, 0.0) and r.passed

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolatedError):
            multiparameter_average_check(np.zeros((2, 2)), [np.eye(2)] * 2, [1, 1],
                                         DensitySpec.uniform(), 3.0, np.eye(2), (0, 1))

    def test_weights_shape(self):
        with pytest.raises(InvalidInputError):
            multiparameter_average_check(np.zeros((2, 2)), [np.eye(2)] * 2, [1],
                                         DensitySpec.uniform(), 1.0, np.eye(2), (0, 1))


class TestDissipativeLog:
    def test_identity(self):
        assert np.abs(dissipative_log(np.eye(3))).max() < 1e-14

    def test_scalar(self):
        val = dissipative_log([[1 + 1j]])[0, 0]
        assert val == pytest.approx(math.log(math.sqrt(2)) + 1j * math.pi / 4, abs=1e-8)

    def test_diagonal(self):
        val = dissipative_log(np.diag([2.0, 1 + 1j]))
        expected = np.diag([math.log(2), cmath.log(1 + 1j)])
        assert np.abs(val - expected).max() < 1e-8

    @given(seeds)
    @settings(max_examples=15)
    def test_inverts_exponential(self, seed):
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        spec = rng.uniform(-0.3, 0.3, 3) + 1j * rng.uniform(0.1, 3.0, 3)
        X = (q * spec) @ q.conj().T
        assert np.abs(dissipative_log(expm(X)) - X).max() < 1e-7

    def test_error_estimate_returned(self):
        _, err = dissipative_log(np.diag([2.0, 1 + 1j]), return_error=True)
        assert 0 <= err < 1e-8

    def test_not_invertible(self):
        with pytest.raises(NotInvertibleError):
            dissipative_log(np.diag([1.0, 0.0]))

    def test_not_dissipative(self):
        with pytest.raises(NotDissipativeError):
            dissipative_log([[1 - 1j]])


class TestBirmanSolomyak:
    def test_scalar(self):
        r = birman_solomyak_check([[0.0]], [[1.0]], 0.0, 1.0, 1j)
        expected = cmath.log(1 + 1j)
        assert r.lhs[0, 0] == pytest.approx(expected, abs=1e-8)
        assert r.rhs[0, 0] == pytest.approx(expected, abs=1e-8)
        assert r.im_bound_ok

    def test_zero_v(self):
        r = birman_solomyak_check(np.eye(2), np.zeros((2, 2)), 0.0, 1.0, 0.5j)
        assert np.abs(r.lhs).max() == 0 and np.abs(r.rhs).max() < 1e-14

    @given(seeds)
    @settings(max_examples=10)
    def test_random_identity(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        r = birman_solomyak_check((x + x.T) / 2, y @ y.T, 0.0, 1.0, 0.3 + 1j, n_phi=50, seed=seed)
        assert r.deviation <= 1e-6 and r.im_bound_ok
        assert r.im_min >= -1e-10 and r.im_max_ratio <= math.pi

    def test_bad_z(self):
        with pytest.raises(InvalidInputError):
            birman_solomyak_check([[0.0]], [[1.0]], 0.0, 1.0, 1.0)


class TestSandwich:
    def test_half(self):
        C = np.array([[1.0, 2.0], [0.0, -1.0]])
        r = sandwich_norm_check(0.5 * np.eye(2), np.eye(2), C)
        assert r.lhs == pytest.approx(np.linalg.norm(C, 2) / 4) and r.passed

    def test_equal(self):
        A = np.diag([1.0, 2.0])
        r = sandwich_norm_check(A, A, np.ones((2, 2)))
        assert r.lhs == r.rhs and r.passed

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolatedError):
            sandwich_norm_check(np.eye(2), 0.5 * np.eye(2), np.eye(2))


class TestStieltjes:
    def test_identity_pair(self):
        r = stieltjes_bound_check([0.0, 1.0], [0.0, 1.0], 0.0, 1.0)
        assert (r.lhs, r.rhs) == (pytest.approx(0.5), pytest.approx(2.0)) and r.passed

    def test_zero_phi(self):
        assert stieltjes_bound_check([0.0], [1.0, 3.0, -2.0], 0.0, 1.0).lhs == 0.0

    def test_phi_must_vanish(self):
        with pytest.raises(PreconditionViolatedError):
            stieltjes_bound_check([1.0, 1.0], [0.0, 1.0], 0.0, 1.0)

    def test_g_must_be_continuous(self):
        g = PiecewisePolynomial([(0.0, 0.5, [0.0]), (0.5, 1.0, [1.0])])
        with pytest.raises(PreconditionViolatedError):
            stieltjes_bound_check([0.0, 1.0], g, 0.0, 1.0)

    @given(seeds)
    def test_quadrature_oracle(self, seed):
        rng = np.random.default_rng(seed)
        phi, g = [0.0, *rng.normal(size=3)], rng.normal(size=3)
        r = stieltjes_bound_check(phi, g, 0.0, 1.0)
        x, w = np.polynomial.legendre.leggauss(20)
        x, w = 0.5 * (x + 1), 0.5 * w
        P = np.polynomial.Polynomial
        oracle = abs(float((w * P(phi)(x) * P(g).deriv()(x)).sum()))
        assert r.lhs == pytest.approx(oracle, rel=1e-10, abs=1e-14) and r.passed


def test_suite_all_pass():
    rows = averaging_suite(seed=11, trials=10, bs_trials=3, phi_trials=20, property_trials=30)
    checks = {r[0] for r in rows}
    assert checks == {"spectral-equality", "spectral-single", "spectral-two-parameter",
                      "birman-solomyak", "sandwich", "stieltjes"}
    assert all(r[5] for r in rows)
