"""Hot numerical kernels.

Each kernel has a numba-compiled loop implementation (``*_nb``) and a numpy
implementation (``*_np``).  The public names bind to one of the two according
to :data:`wegnerlab._accel.NUMBA_ENABLED`.  Where the algorithm is inherently
scalar (implicit QL), both names share the same source and the fallback simply
runs it in the interpreter.
"""
import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit, select

QL_MAX_SWEEPS = 60


# --- Householder tridiagonalization ---------------------------------------

def _tridiagonalize_np(a):
    a = a.copy()
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        alpha = math.sqrt(np.dot(x, x))
        if alpha == 0.0:
            continue
        if x[0] < 0.0:
            alpha = -alpha
        u = x.copy()
        u[0] += alpha
        h = 0.5 * np.dot(u, u)
        sub = np.ascontiguousarray(a[k + 1:, k + 1:])
        p = np.dot(sub, u) / h
        q = p - (np.dot(u, p) / (2.0 * h)) * u
        a[k + 1:, k + 1:] = sub - np.outer(q, u) - np.outer(u, q)
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = -alpha
        a[k, k + 1] = -alpha
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    for i in range(n):
        d[i] = a[i, i]
    for i in range(n - 1):
        e[i] = a[i + 1, i]
    return d, e


_tridiagonalize_nb = njit(_tridiagonalize_np)


# --- implicit-shift QL on a symmetric tridiagonal matrix -------------------

def _tql_eigenvalues_src(d, e_sub):
    n = d.shape[0]
    d = d.copy()
    e = np.zeros(n)
    for i in range(n - 1):
        e[i] = e_sub[i]
    eps = 2.220446049250313e-16
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > QL_MAX_SWEEPS:
                return np.sort(d), False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            deflated = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d), True


_tql_eigenvalues_nb = njit(_tql_eigenvalues_src)
_tql_eigenvalues_np = _tql_eigenvalues_src


# --- circular convolution of couplings with a convolution vector -----------

def _periodic_potential_nb_src(omega_flat, l, dim, offsets, coeffs):
    size = omega_flat.shape[0]
    out = np.zeros(size)
    coords = np.empty(dim, dtype=np.int64)
    for n in range(size):
        rem = n
        for ax in range(dim - 1, -1, -1):
            coords[ax] = rem % l
            rem //= l
        acc = 0.0
        for t in range(coeffs.shape[0]):
            src = 0
            for ax in range(dim):
                src = src * l + (coords[ax] - offsets[t, ax]) % l
            acc += coeffs[t] * omega_flat[src]
        out[n] = acc
    return out


_periodic_potential_nb = njit(_periodic_potential_nb_src)


def _periodic_potential_np(omega_flat, l, dim, offsets, coeffs):
    omega = omega_flat.reshape((l,) * dim)
    out = np.zeros_like(omega)
    for k, c in zip(offsets, coeffs):
        out += c * np.roll(omega, shift=tuple(int(x) for x in k), axis=tuple(range(dim)))
    return out.ravel()


# --- piecewise-polynomial CDF inversion by bisection -----------------------

def _horner(c, x):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


_horner_nb = njit(_horner)


def _bisect_quantiles_nb_src(u, lo, hi, cdf_lo, antideriv, iters):
    out = np.empty(u.shape[0])
    npieces = lo.shape[0]
    for t in range(u.shape[0]):
        target = u[t]
        piece = npieces - 1
        for i in range(npieces):
            if target < cdf_lo[i + 1]:
                piece = i
                break
        a = lo[piece]
        b = hi[piece]
        base = _horner_nb(antideriv[piece], a)
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if cdf_lo[piece] + _horner_nb(antideriv[piece], mid) - base < target:
                a = mid
            else:
                b = mid
        out[t] = 0.5 * (a + b)
    return out


_bisect_quantiles_nb = njit(_bisect_quantiles_nb_src)


def _bisect_quantiles_np(u, lo, hi, cdf_lo, antideriv, iters):
    piece = np.searchsorted(cdf_lo[1:], u, side="right")
    piece = np.minimum(piece, lo.shape[0] - 1)
    a = lo[piece].copy()
    b = hi[piece].copy()
    coeffs = antideriv[piece]
    powers = np.arange(antideriv.shape[1])

    def F(x):
        return (coeffs * x[:, None] ** powers).sum(axis=1)

    base = F(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        below = cdf_lo[piece] + F(mid) - base < u
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


tridiagonalize = select(_tridiagonalize_nb, _tridiagonalize_np)
tql_eigenvalues = select(_tql_eigenvalues_nb, _tql_eigenvalues_np)
periodic_potential = select(_periodic_potential_nb, _periodic_potential_np)
bisect_quantiles = select(_bisect_quantiles_nb, _bisect_quantiles_np)

KERNELS = {
    "tridiagonalize": (_tridiagonalize_nb, _tridiagonalize_np),
    "tql_eigenvalues": (_tql_eigenvalues_nb, _tql_eigenvalues_np),
    "periodic_potential": (_periodic_potential_nb, _periodic_potential_np),
    "bisect_quantiles": (_bisect_quantiles_nb, _bisect_quantiles_np),
}

__all__ = [
    "NUMBA_ENABLED",
    "KERNELS",
    "tridiagonalize",
    "tql_eigenvalues",
    "periodic_potential",
    "bisect_quantiles",
]
