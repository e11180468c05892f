"""Numerical checks of spectral averaging bounds and related operator identities.

All integrals are Gauss-Legendre quadratures; each report carries its own
error estimate so that the pass/fail decision can be audited.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from numpy.polynomial import Polynomial

from . import quadrature
from .density import DensitySpec, PiecewisePolynomial
from .errors import (
    HypothesisViolatedError,
    InvalidInputError,
    NotDissipativeError,
    NotInvertibleError,
    PreconditionViolatedError,
)

PSD_TOL = 1e-10
CROSSING_GRID = 64
BISECTION_STEPS = 60
LOG_TOL = 1e-8
SANDWICH_TOL = 1e-9
ROUNDOFF = 64 * float(np.finfo(float).eps)


@dataclass
class AveragingCheckReport:
    lhs_norm: float
    rhs_bound: float
    quadrature_error_estimate: float

    @property
    def passed(self) -> bool:
        return self.lhs_norm <= self.rhs_bound + self.quadrature_error_estimate

    def to_dict(self):
        return {"lhs_norm": self.lhs_norm, "rhs_bound": self.rhs_bound,
                "quadrature_error_estimate": self.quadrature_error_estimate,
                "pass": self.passed}


def _sym(m):
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh(_sym(m))[0])


def psd_sqrt(m) -> np.ndarray:
    w, u = np.linalg.eigh(_sym(m))
    return (u * np.sqrt(np.clip(w, 0.0, None))) @ u.T


def _projected_weighted(H_batch, weights, J, B):
    """``B (sum_i weights_i E_{H_i}(J)) B`` for a stack of symmetric matrices."""
    w, u = np.linalg.eigh(H_batch)
    mask = ((w >= J[0]) & (w <= J[1])).astype(float) * weights[:, None]
    acc = np.einsum("kij,kj,klj->il", u, mask, u)
    return B @ acc @ B


def _crossings(H_of, lo, hi, J):
    """Parameters in ``(lo, hi)`` where an eigenvalue crosses an endpoint of ``J``."""
    s = np.linspace(lo, hi, CROSSING_GRID + 1)
    ev = np.linalg.eigvalsh(H_of(s))
    a_list, b_list, idx_list, e_list = [], [], [], []
    for e in J:
        below = ev < e
        change = np.argwhere(below[:-1] != below[1:])
        for t, k in change:
            a_list.append(s[t])
            b_list.append(s[t + 1])
            idx_list.append(k)
            e_list.append(e)
    if not a_list:
        return []
    a, b = np.array(a_list), np.array(b_list)
    idx, e = np.array(idx_list), np.array(e_list)
    fa = np.linalg.eigvalsh(H_of(a))[np.arange(a.size), idx] - e
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (a + b)
        fm = np.linalg.eigvalsh(H_of(mid))[np.arange(a.size), idx] - e
        left = (fm < 0) == (fa < 0)
        a = np.where(left, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, mid)
    return sorted(set((0.5 * (a + b)).tolist()))


def _averaged_projection_1d(H_of, weight, cuts, J, B, panels=1, order=quadrature.DEFAULT_ORDER):
    """``int weight(s) B E_{H(s)}(J) B ds`` over ``[cuts[0], cuts[-1]]``.

    The range is split at ``cuts`` and at every eigenvalue crossing of an
    endpoint of ``J``; on each resulting segment the integrand is smooth and
    a composite rule is compared with its doubled version.
    """
    pts = set(cuts)
    for lo, hi in zip(cuts, cuts[1:]):
        pts.update(_crossings(H_of, lo, hi, J))
    pts = sorted(pts)
    total = np.zeros_like(B, dtype=float)
    err = 0.0
    for lo, hi in zip(pts, pts[1:]):
        if hi - lo <= 0:
            continue
        res = []
        for p in (panels, 2 * panels):
            nodes, w = quadrature.panel_nodes(lo, hi, p, order)
            res.append(_projected_weighted(H_of(nodes), w * weight(nodes), J, B))
        total += res[1]
        # doubling difference plus summation roundoff
        err += float(np.linalg.norm(res[1] - res[0], 2)) + ROUNDOFF * float(np.abs(res[1]).sum())
    return total, err


def _interval(J):
    j0, j1 = float(J[0]), float(J[1])
    if j1 < j0:
        raise InvalidInputError("interval J must satisfy J[0] <= J[1]")
    return j0, j1


def spectral_average_check(H0, V, B, kappa: float, g: PiecewisePolynomial, J,
                           s_range=None, panels: int = 1) -> AveragingCheckReport:
    """Compare ``|| int g(s) B E_{H0 + sV}(J) B ds ||`` with ``||g||_inf |J| / kappa``."""
    H0, V, B = _sym(H0), _sym(V), _sym(B)
    if kappa <= 0:
        raise InvalidInputError("kappa must be positive")
    if _min_eig(V) < -PSD_TOL or _min_eig(B) < -PSD_TOL:
        raise HypothesisViolatedError("V and B must be nonnegative")
    if _min_eig(V - kappa * B @ B) < -PSD_TOL:
        raise HypothesisViolatedError("kappa B^2 <= V fails")
    J = _interval(J)
    lo, hi = g.support if s_range is None else (float(s_range[0]), float(s_range[1]))
    rhs = g.sup_abs() * (J[1] - J[0]) / kappa
    if J[1] == J[0]:
        return AveragingCheckReport(0.0, rhs, 0.0)
    cuts = sorted({lo, hi} | {x for x in g.breakpoints() if lo < x < hi})

    def H_of(s):
        return H0[None] + np.asarray(s)[:, None, None] * V[None]

    total, err = _averaged_projection_1d(H_of, g, cuts, J, B, panels)
    return AveragingCheckReport(float(np.linalg.norm(total, 2)), rhs, err)


def multiparameter_average_check(H0, Vs, t, f: DensitySpec, kappa: float, B, J,
                                 outer_panels: int = 1) -> AveragingCheckReport:
    """Compare ``|| int F(s) B E_{H(s)}(J) B ds ||`` with
    ``||t||_1 Var(f) |J| / kappa`` where ``H(s) = H0 + sum s_i V_i``.

    The last coordinate is integrated with crossing detection; the others use
    a tensor composite rule over the pieces of ``f``, whose doubling
    difference enters the error estimate.  With two parameters the outer
    panels are also split where the inner integrand changes form.
    """
    H0, B = _sym(H0), _sym(B)
    Vs = [_sym(v) for v in Vs]
    t = np.asarray(t, dtype=float)
    if len(Vs) == 0 or t.shape != (len(Vs),):
        raise InvalidInputError("need one weight t_i per operator V_i")
    if not np.any(t != 0):
        raise InvalidInputError("t must be nontrivial")
    if kappa <= 0:
        raise InvalidInputError("kappa must be positive")
    W = sum(ti * v for ti, v in zip(t, Vs))
    if _min_eig(B) < -PSD_TOL or _min_eig(W - kappa * B @ B) < -PSD_TOL:
        raise HypothesisViolatedError("sum t_i V_i >= kappa B^2 >= 0 fails")
    J = _interval(J)
    rhs = float(np.abs(t).sum()) * f.variation() * (J[1] - J[0]) / kappa
    if J[1] == J[0]:
        return AveragingCheckReport(0.0, rhs, 0.0)
    cuts = [float(x) for x in f.breakpoints()]
    n = len(Vs)

    def inner(prefix):
        base = H0 + sum(si * v for si, v in zip(prefix, Vs[:-1]))

        def H_of(s):
            return base[None] + np.asarray(s)[:, None, None] * Vs[-1][None]

        return _averaged_projection_1d(H_of, f, cuts, J, B)

    outer_cuts = cuts
    if n == 2:
        # the inner integral has kinks where a crossing reaches the end of its range
        extra = set(cuts)
        for c in cuts:
            def H_edge(s, c=c):
                return (H0 + c * Vs[1])[None] + np.asarray(s)[:, None, None] * Vs[0][None]
            for lo, hi in zip(cuts, cuts[1:]):
                extra.update(_crossings(H_edge, lo, hi, J))
        outer_cuts = sorted(extra)

    def outer(panels):
        nodes, weights = [], []
        for lo, hi in zip(outer_cuts, outer_cuts[1:]):
            x, w = quadrature.panel_nodes(lo, hi, panels)
            nodes.append(x)
            weights.append(w * f(x))
        nodes, weights = np.concatenate(nodes), np.concatenate(weights)
        total, err = np.zeros_like(B), 0.0
        for combo in product(range(nodes.size), repeat=n - 1):
            wt = float(np.prod(weights[list(combo)]))
            if wt == 0.0:
                continue
            val, e = inner(nodes[list(combo)])
            total += wt * val
            err += abs(wt) * e
        return total, err

    if n == 1:
        total, err = inner(np.empty(0))
    else:
        coarse, _ = outer(outer_panels)
        total, err = outer(2 * outer_panels)
        err += float(np.linalg.norm(total - coarse, 2))
    return AveragingCheckReport(float(np.linalg.norm(total, 2)), rhs, err)


# --- dissipative logarithm ---------------------------------------------------

def _is_dissipative(T, tol=PSD_TOL):
    im = (T - T.conj().T) / 2j
    return float(np.linalg.eigvalsh(im)[0]) >= -tol


def dissipative_log(T, tol: float = LOG_TOL, return_error: bool = False):
    """``log T = -i int_0^inf ((T + i lam)^{-1} - (1 + i lam)^{-1}) dlam``.

    Computed after the substitution ``lam = tan(pi u / 2)`` with the integrand
    written as ``(T + i lam)^{-1} (I - T) (1 + i lam)^{-1}``, which stays
    bounded at both ends of ``u in (0, 1)``.
    """
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    n = T.shape[0]
    if T.shape != (n, n):
        raise InvalidInputError("T must be square")
    svals = np.linalg.svd(T, compute_uv=False)
    if svals[-1] <= 1e-12 * max(1.0, svals[0]):
        raise NotInvertibleError("T is not invertible")
    if not _is_dissipative(T):
        raise NotDissipativeError("T has an imaginary part that is not nonnegative")
    eye = np.eye(n)
    diff = eye - T

    def integrand(u):
        lam = math.tan(0.5 * math.pi * u)
        jac = 0.5 * math.pi * (1.0 + lam * lam)
        res = np.linalg.solve(T + 1j * lam * eye, diff) / (1.0 + 1j * lam)
        return -1j * jac * res

    val, err = quadrature.adaptive(integrand, 0.0, 1.0, tol=tol)
    return (val, err) if return_error else val


@dataclass
class BirmanSolomyakReport:
    lhs: np.ndarray
    rhs: np.ndarray
    deviation: float
    quadrature_error_estimate: float
    im_min: float
    im_max_ratio: float
    im_bound_ok: bool
    n_phi: int

    def to_dict(self):
        return {"deviation": self.deviation,
                "quadrature_error_estimate": self.quadrature_error_estimate,
                "im_min": self.im_min, "im_max_ratio": self.im_max_ratio,
                "im_bound_ok": self.im_bound_ok, "n_phi": self.n_phi}


def birman_solomyak_check(H0, V, t1: float, t2: float, z: complex, tol: float = LOG_TOL,
                          n_phi: int = 100, seed: int = 0) -> BirmanSolomyakReport:
    """Both sides of the resolvent integral / logarithm identity and the bound
    ``0 <= Im <phi, lhs phi> <= pi ||phi||^2`` on ``n_phi`` random vectors."""
    if not np.imag(z) > 0:
        raise InvalidInputError("Im z must be positive")
    H0, V = _sym(H0), _sym(V)
    if _min_eig(V) < -PSD_TOL:
        raise HypothesisViolatedError("V must be nonnegative")
    R = psd_sqrt(V)
    n = H0.shape[0]
    eye = np.eye(n)

    def integrand(s):
        return R @ np.linalg.solve(H0 + s * V - z * eye, R.astype(complex))

    lhs, err = quadrature.adaptive(integrand, float(t1), float(t2), tol=tol)
    arg = eye + (t2 - t1) * (R @ np.linalg.solve(H0 + t1 * V - z * eye, R.astype(complex)))
    rhs, err_log = dissipative_log(arg, tol, return_error=True)
    deviation = float(np.linalg.norm(lhs - rhs, 2))
    rng = np.random.default_rng(seed)
    phis = rng.normal(size=(n_phi, n)) + 1j * rng.normal(size=(n_phi, n))
    im = np.imag(np.einsum("ki,ij,kj->k", phis.conj(), lhs, phis))
    norms = np.einsum("ki,ki->k", phis.conj(), phis).real
    slack = err + 1e-12
    ok = bool(np.all(im >= -slack * norms) and np.all(im <= (math.pi + slack) * norms))
    return BirmanSolomyakReport(lhs, rhs, deviation, err + err_log, float(im.min()),
                                float((im / norms).max()), ok, n_phi)


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def sandwich_norm_check(A1, A2, C) -> BoundCheck:
    """``||A1 C A1|| <= ||A2 C A2||`` for nonnegative ``A1, A2`` with ``A1^2 <= A2^2``."""
    A1, A2 = _sym(A1), _sym(A2)
    if _min_eig(A1) < -PSD_TOL or _min_eig(A2) < -PSD_TOL:
        raise HypothesisViolatedError("A1 and A2 must be nonnegative")
    if _min_eig(A2 @ A2 - A1 @ A1) < -PSD_TOL:
        raise HypothesisViolatedError("A1^2 <= A2^2 fails")
    C = np.asarray(C)
    lhs = float(np.linalg.norm(A1 @ C @ A1, 2))
    rhs = float(np.linalg.norm(A2 @ C @ A2, 2))
    return BoundCheck(lhs, rhs, lhs <= rhs + SANDWICH_TOL)


# --- Stieltjes integral bound ------------------------------------------------

def _as_piecewise(obj, m, M) -> PiecewisePolynomial:
    if isinstance(obj, PiecewisePolynomial):
        return obj
    if isinstance(obj, Polynomial):
        return PiecewisePolynomial([(m, M, obj.coef)])
    return PiecewisePolynomial([(m, M, obj)])


def restrict(p: PiecewisePolynomial, m: float, M: float) -> PiecewisePolynomial:
    """Pieces covering exactly ``[m, M]`` (zero polynomial where ``p`` vanishes)."""
    cuts = sorted({m, M} | {x for x in p.breakpoints() if m < x < M})
    return PiecewisePolynomial([(lo, hi, p.piece_at(lo).coef) for lo, hi in zip(cuts, cuts[1:])])


def stieltjes_bound_check(phi, g, m: float, M: float) -> BoundCheck:
    """``|int_m^M phi dg| <= 2 Var(phi) ||g||_inf`` with exact polynomial integrals."""
    if not M > m:
        raise InvalidInputError("need m < M")
    phi_r = restrict(_as_piecewise(phi, m, M), m, M)
    g_r = restrict(_as_piecewise(g, m, M), m, M)
    if abs(float(phi_r.pieces[0].poly(m))) > 1e-12:
        raise PreconditionViolatedError("phi(m) must vanish")
    scale = 1.0 + g_r.sup_abs()
    for left, right in zip(g_r.pieces, g_r.pieces[1:]):
        if abs(float(left.poly(left.hi) - right.poly(right.lo))) > 1e-12 * scale:
            raise PreconditionViolatedError(f"g is discontinuous at {right.lo}")
    cuts = sorted(set(phi_r.breakpoints()) | set(g_r.breakpoints()))
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        prod_poly = (phi_r.piece_at(lo) * g_r.piece_at(lo).deriv()).integ()
        total += float(prod_poly(hi) - prod_poly(lo))
    lhs = abs(total)
    rhs = 2.0 * phi_r.variation(include_edges=False) * g_r.sup_abs()
    return BoundCheck(lhs, rhs, lhs <= rhs * (1 + 1e-12) + 1e-15)
