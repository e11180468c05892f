"""Independent reference implementations used only by the tests."""
import math
from fractions import Fraction

import numpy as np


def jacobi_eigenvalues(a, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(float((np.tril(a, -1) ** 2).sum()))
        if off < tol * max(1.0, float(np.abs(a).max())):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def roots_inside_unit_circle(coeffs_high_first):
    r = np.roots(coeffs_high_first)
    return int(np.sum(np.abs(r) < 1))


def brute_force_farey(q):
    out = []
    for n in range(1, q + 1):
        for m in range(0, n + 1):
            f = Fraction(m, n)
            if f not in out:
                out.append(f)
    return sorted(out)


def phase_winding(values):
    """Winding of a closed sampled curve by summing principal phase increments."""
    v = np.asarray(values)
    return int(round(np.angle(np.roll(v, -1) / v).sum() / (2 * math.pi)))


def dense_variation(f, lo, hi, n=200001):
    x = np.linspace(lo, hi, n)
    return float(np.abs(np.diff(f(x))).sum())


def gaussian_inverse(m):
    """Inverse by Gauss-Jordan elimination with partial pivoting."""
    m = np.array(m, dtype=float)
    n = m.shape[0]
    aug = np.hstack([m, np.eye(n)])
    for c in range(n):
        p = c + int(np.argmax(np.abs(aug[c:, c])))
        aug[[c, p]] = aug[[p, c]]
        aug[c] /= aug[c, c]
        for r in range(n):
            if r != c:
                aug[r] -= aug[r, c] * aug[c]
    return aug[:, n:]
