"""Randomized sweeps of the averaging checks, shared by the CLI and the tests."""
from __future__ import annotations

import numpy as np

from .averaging import (
    birman_solomyak_check,
    multiparameter_average_check,
    sandwich_norm_check,
    spectral_average_check,
    stieltjes_bound_check,
)
from .density import DensitySpec, PiecewisePolynomial

BS_DEVIATION_TOL = 1e-6


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


def _sym(rng, n=3):
    x = rng.normal(size=(n, n))
    return 0.5 * (x + x.T)


def _psd(rng, n=3):
    x = rng.normal(size=(n, n))
    return x @ x.T


def _window(rng):
    lo, hi = np.sort(rng.uniform(-3.0, 4.0, 2))
    return float(lo), float(hi)


def equality_case():
    return spectral_average_check([[0.0]], [[1.0]], [[1.0]], 1.0,
                                  PiecewisePolynomial([(0.0, 1.0, [1.0])]), (0.2, 0.5))


def single_parameter_trial(rng):
    g = PiecewisePolynomial([(0.0, 2.0, [0.5])])
    return spectral_average_check(_sym(rng), np.eye(3), np.eye(3), 1.0, g, _window(rng))


def two_parameter_trial(rng):
    H0 = _sym(rng)
    Vs = [np.eye(3) + 0.3 * _psd(rng), np.eye(3) + 0.3 * _psd(rng)]
    t = np.array([1.0, 1.0])
    kappa = float(np.linalg.eigvalsh(Vs[0] + Vs[1])[0])
    return multiparameter_average_check(H0, Vs, t, DensitySpec.uniform(), kappa, np.eye(3),
                                        _window(rng))


def birman_solomyak_trial(rng, n_phi, seed):
    return birman_solomyak_check(_sym(rng), _psd(rng), 0.0, 1.0, 0.3 + 1.0j,
                                 n_phi=n_phi, seed=seed)


def sandwich_trial(rng):
    A1 = _psd(rng)
    A2_sq = A1 @ A1 + _psd(rng)
    w, u = np.linalg.eigh(A2_sq)
    A2 = (u * np.sqrt(np.clip(w, 0, None))) @ u.T
    return sandwich_norm_check(A1, A2, rng.normal(size=(3, 3)))


def stieltjes_trial(rng):
    c = rng.normal(size=3)
    phi = [0.0, *c]  # cubic with phi(0) = 0
    g = rng.normal(size=3)
    return stieltjes_bound_check(phi, g, 0.0, 1.0)


def averaging_suite(seed: int, trials: int = 50, bs_trials: int = 20, phi_trials: int = 100,
                    property_trials: int = 200) -> list:
    """Rows ``(check, trial, lhs, rhs, error_estimate, pass)``."""
    rows = []
    r = equality_case()
    rows.append(("spectral-equality", 0, r.lhs_norm, r.rhs_bound,
                 r.quadrature_error_estimate, abs(r.lhs_norm - r.rhs_bound) <= 1e-8))
    rng = _rng(seed, 1)
    for i in range(trials):
        r = single_parameter_trial(rng)
        rows.append(("spectral-single", i, r.lhs_norm, r.rhs_bound,
                     r.quadrature_error_estimate, r.passed))
    rng = _rng(seed, 2)
    for i in range(trials):
        r = two_parameter_trial(rng)
        rows.append(("spectral-two-parameter", i, r.lhs_norm, r.rhs_bound,
                     r.quadrature_error_estimate, r.passed))
    rng = _rng(seed, 3)
    for i in range(bs_trials):
        r = birman_solomyak_trial(rng, phi_trials, seed + i)
        rows.append(("birman-solomyak", i, r.deviation, BS_DEVIATION_TOL,
                     r.quadrature_error_estimate,
                     r.deviation <= BS_DEVIATION_TOL and r.im_bound_ok))
    rng = _rng(seed, 4)
    for i in range(property_trials):
        r = sandwich_trial(rng)
        rows.append(("sandwich", i, r.lhs, r.rhs, 0.0, r.passed))
    rng = _rng(seed, 5)
    for i in range(property_trials):
        r = stieltjes_trial(rng)
        rows.append(("stieltjes", i, r.lhs, r.rhs, 0.0, r.passed))
    return rows
