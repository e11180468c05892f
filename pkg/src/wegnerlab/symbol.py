"""Convolution vectors and their trigonometric-polynomial symbols.

A convolution vector ``a`` is a finitely supported real map on Z^d.  Its symbol
is ``s_a(theta) = sum_k a_k exp(i <k, theta>)`` on the torus (-pi, pi]^d.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
from scipy import optimize

from .errors import (
    DimensionMismatchError,
    InconsistentWindingError,
    InvalidInputError,
    NonIsolatedZerosError,
    SymbolVanishesError,
)

VANISH_RTOL = 1e-9
WINDING_MAX_SAMPLES = 2**14
ORDER_STEPS = tuple(2.0 ** -k for k in range(3, 9))
# second fixed point used to confirm that a winding number does not depend
# on the frozen coordinates; an irrational multiple of 2*pi
SECOND_FIXED_SHIFT = 2 * math.pi * 0.3819660112501051


def default_grid(dim: int) -> int:
    return {1: 256, 2: 128}.get(dim, 32)


def wrap_angle(theta):
    """Map angles into (-pi, pi]."""
    t = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(t == -np.pi, np.pi, t)


def torus_grid_1d(n: int) -> np.ndarray:
    return wrap_angle(2 * np.pi * np.arange(n) / n)


def torus_distance(x, y):
    return float(np.linalg.norm(wrap_angle(np.asarray(x) - np.asarray(y))))


@dataclass(frozen=True, eq=False)
class ConvolutionVector:
    """Finite real coefficients ``a_k`` indexed by lattice points ``k`` of Z^d."""

    dim: int
    entries: Mapping = field(repr=True)

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InvalidInputError("dim must be a positive integer")
        clean = {}
        for k, v in dict(self.entries).items():
            key = (int(k),) if np.isscalar(k) else tuple(int(x) for x in k)
            if len(key) != self.dim:
                raise DimensionMismatchError(f"lattice point {k!r} is not {self.dim}-dimensional")
            v = float(v)
            if not math.isfinite(v):
                raise InvalidInputError(f"coefficient at {key} is not finite")
            if v != 0.0:
                clean[key] = clean.get(key, 0.0) + v
        clean = {k: v for k, v in sorted(clean.items()) if v != 0.0}
        if not clean:
            raise InvalidInputError("convolution vector needs a nonzero coefficient")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @classmethod
    def from_dict(cls, entries, dim=None):
        if dim is None:
            k = next(iter(entries))
            dim = 1 if np.isscalar(k) else len(k)
        return cls(dim, entries)

    @property
    def support(self):
        return tuple(self.entries)

    @property
    def offsets(self) -> np.ndarray:
        return np.array(self.support, dtype=np.int64).reshape(-1, self.dim)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array(list(self.entries.values()), dtype=float)

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.coefficients).sum())

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.coefficients).max())

    @property
    def vanish_tol(self) -> float:
        return VANISH_RTOL * self.l1_norm

    def diameter(self) -> int:
        off = self.offsets
        return int((off.max(axis=0) - off.min(axis=0)).max())

    def __eq__(self, other):
        return (isinstance(other, ConvolutionVector) and self.dim == other.dim
                and dict(self.entries) == dict(other.entries))

    __hash__ = None

    def to_dict(self):
        return {"dim": self.dim, "entries": [[*k, v] for k, v in self.entries.items()]}

    @classmethod
    def from_json_dict(cls, doc):
        dim = int(doc["dim"])
        entries = {}
        for row in doc["entries"]:
            if len(row) != dim + 1:
                raise DimensionMismatchError(f"entry {row!r} does not have {dim} indices")
            key = tuple(int(x) for x in row[:dim])
            entries[key] = entries.get(key, 0.0) + float(row[dim])
        return cls(dim, entries)

    @classmethod
    def from_file(cls, path):
        return cls.from_json_dict(json.loads(Path(path).read_text()))

    def to_file(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def douglas_howe() -> ConvolutionVector:
    """Index-zero symbol whose quarter-plane Toeplitz operator is not invertible."""
    return ConvolutionVector(2, {(2, -2): 16.0, (1, -1): -36.0, (-1, 1): 27.0})


def convolve(a: ConvolutionVector, b: ConvolutionVector) -> ConvolutionVector:
    """Coefficient convolution; the symbol of the result is ``s_a * s_b``."""
    if a.dim != b.dim:
        raise DimensionMismatchError("dimensions differ")
    out = {}
    for k, x in a.entries.items():
        for m, y in b.entries.items():
            key = tuple(i + j for i, j in zip(k, m))
            out[key] = out.get(key, 0.0) + x * y
    return ConvolutionVector(a.dim, out)


def _as_points(a: ConvolutionVector, theta):
    theta = np.asarray(theta, dtype=float)
    if a.dim == 1 and (theta.ndim == 0 or theta.shape[-1] != 1):
        theta = theta[..., None]
    if theta.shape[-1] != a.dim:
        raise DimensionMismatchError(f"torus points must have {a.dim} coordinates")
    return theta


def evaluate_symbol(a: ConvolutionVector, theta):
    """``s_a(theta)``; ``theta`` is a point or an array of points (last axis = d).

    For ``d == 1`` a plain scalar or 1-D array of angles is accepted.
    """
    pts = _as_points(a, theta)
    phase = pts @ a.offsets.T.astype(float)
    val = np.exp(1j * phase) @ a.coefficients
    return val[()] if val.ndim == 0 else val


def real_part(a: ConvolutionVector, theta, phase: float = 0.0):
    return np.real(np.exp(1j * phase) * evaluate_symbol(a, theta))


def torus_grid(dim: int, n: int) -> np.ndarray:
    """All ``n**dim`` grid points, shape ``(n,)*dim + (dim,)``."""
    axes = np.meshgrid(*([torus_grid_1d(n)] * dim), indexing="ij")
    return np.stack(axes, axis=-1)


def translate_vector(a: ConvolutionVector, j0) -> ConvolutionVector:
    """``a'_k = a_{k - j0}``.  Its symbol is ``exp(+i<j0, theta>) s_a(theta)``."""
    j0 = (int(j0),) if np.isscalar(j0) else tuple(int(x) for x in j0)
    if len(j0) != a.dim:
        raise DimensionMismatchError("shift has wrong dimension")
    return ConvolutionVector(a.dim, {tuple(k + s for k, s in zip(key, j0)): v
                                     for key, v in a.entries.items()})


# --- winding numbers ---------------------------------------------------------

def _circle_values(a, axis, fixed, n):
    t = torus_grid_1d(n)
    pts = np.empty((n, a.dim))
    pts[:] = np.insert(np.asarray(fixed, dtype=float), axis, 0.0)
    pts[:, axis] = np.sort(t)
    return evaluate_symbol(a, pts)


def _circle_winding(a, axis, fixed, grid):
    tol = a.vanish_tol
    n = grid
    while True:
        s = _circle_values(a, axis, fixed, n)
        small = np.abs(s).min()
        if small >= tol:
            jumps = np.angle(np.roll(s, -1) / s)
            if np.abs(jumps).max() < np.pi / 2:
                return int(round(jumps.sum() / (2 * np.pi)))
        if n >= WINDING_MAX_SAMPLES:
            raise SymbolVanishesError(
                f"symbol (nearly) vanishes on the circle along axis {axis + 1}: "
                f"min |s| = {small:.3e} with {n} samples"
            )
        n *= 2


def winding_number(a: ConvolutionVector, axis: int, grid: Optional[int] = None,
                   fixed_coords=None) -> int:
    """Winding number of ``s_a`` along ``theta_axis`` (axis counted from 1).

    The remaining coordinates are frozen at ``fixed_coords`` (default: 0).  For
    ``d > 1`` the result is recomputed at a second frozen point and the two
    must agree.
    """
    if not 1 <= axis <= a.dim:
        raise InvalidInputError(f"axis must be in 1..{a.dim}")
    grid = grid or default_grid(1)
    ax = axis - 1
    fixed = np.zeros(a.dim - 1) if fixed_coords is None else np.atleast_1d(
        np.asarray(fixed_coords, dtype=float))
    if fixed.shape != (a.dim - 1,):
        raise DimensionMismatchError(f"fixed_coords must have {a.dim - 1} entries")
    w = _circle_winding(a, ax, fixed, grid)
    if a.dim > 1:
        other = wrap_angle(fixed + SECOND_FIXED_SHIFT)
        w2 = _circle_winding(a, ax, other, grid)
        if w2 != w:
            raise InconsistentWindingError(
                f"winding along axis {axis} is {w} at {fixed.tolist()} but {w2} at "
                f"{other.tolist()}: the symbol vanishes in between"
            )
    return w


def winding_vector(a: ConvolutionVector, grid=None):
    return tuple(winding_number(a, i, grid) for i in range(1, a.dim + 1))


# --- minimum modulus ---------------------------------------------------------

def _golden_refine(fun, x0, h):
    fa, f0, fb = fun(x0 - h), fun(x0), fun(x0 + h)
    if not (f0 < fa and f0 < fb):
        return x0, f0
    res = optimize.minimize_scalar(fun, bracket=(x0 - h, x0, x0 + h), method="golden",
                                   options={"xtol": 1e-10})
    if res.fun < f0:
        return float(res.x), float(res.fun)
    return x0, f0


def min_abs_on_torus(a: ConvolutionVector, grid: Optional[int] = None):
    """Minimum of ``|s_a|`` on the uniform grid, refined by golden-section
    search along each axis around the grid minimizer.

    Returns ``(value, argmin)`` with ``argmin`` an array of ``d`` angles.
    """
    grid = grid or default_grid(a.dim)
    if grid < 8:
        raise InvalidInputError("grid must be >= 8")
    pts = torus_grid(a.dim, grid)
    vals = np.abs(evaluate_symbol(a, pts))
    idx = np.unravel_index(np.argmin(vals), vals.shape)
    best = pts[idx].copy()
    best_val = float(vals[idx])
    h = 2 * np.pi / grid
    for ax in range(a.dim):
        def along(t, ax=ax):
            p = best.copy()
            p[ax] = t
            return float(abs(evaluate_symbol(a, p)))
        t, v = _golden_refine(along, best[ax], h)
        if v < best_val:
            best[ax] = t
            best_val = v
    return best_val, wrap_angle(best)


# --- sectoriality ------------------------------------------------------------

def sectorial_phase(a: ConvolutionVector, grid: Optional[int] = None,
                    tol: Optional[float] = None) -> Optional[float]:
    """A rotation ``phi`` in (-pi, pi] with ``Re(exp(i phi) s_a) >= -tol`` on the
    grid, or ``None`` when the sampled values fit in no closed half-plane.

    Among admissible rotations the one closest to 0 is returned; ties go to the
    positive angle.
    """
    grid = grid or default_grid(a.dim)
    if grid < 8:
        raise InvalidInputError("grid must be >= 8")
    tol = a.vanish_tol if tol is None else tol
    s = evaluate_symbol(a, torus_grid(a.dim, grid)).ravel()
    s = s[np.abs(s) > tol]
    ang = np.sort(np.mod(np.angle(s), 2 * np.pi))
    gaps = np.diff(np.concatenate((ang, [ang[0] + 2 * np.pi])))
    candidates = []
    for i in np.flatnonzero(gaps >= np.pi - 1e-12):
        start = ang[(i + 1) % ang.size]
        end = ang[i] + (0.0 if i + 1 >= ang.size else 2 * np.pi)
        end = end if end >= start else end + 2 * np.pi
        lo, hi = -np.pi / 2 - start, np.pi / 2 - end
        if hi < lo:
            lo = hi = 0.5 * (lo + hi)
        # shift the admissible interval so that it is as close to 0 as possible
        shift = 2 * np.pi * np.round(-(lo + hi) / (4 * np.pi))
        lo, hi = lo + shift, hi + shift
        candidates.append(float(np.clip(0.0, lo, hi)))
    if not candidates:
        return None
    candidates = [float(wrap_angle(c)) for c in candidates]
    phi = min(candidates, key=lambda c: (round(abs(c), 12), -c))
    if np.real(np.exp(1j * phi) * s).min() < -max(tol, 1e-12):
        return None
    return phi


# --- zeros of the real part --------------------------------------------------

def _components(marked_idx, shape):
    """Connected components (periodic, full-neighbourhood) of marked grid cells."""
    marked = {tuple(int(x) for x in m) for m in marked_idx}
    dim = len(shape)
    steps = [s for s in np.ndindex(*(3,) * dim)]
    steps = [tuple(x - 1 for x in s) for s in steps if any(x != 1 for x in s)]
    comps = []
    while marked:
        seed = marked.pop()
        comp, stack = [seed], [seed]
        while stack:
            cur = stack.pop()
            for st in steps:
                nb = tuple((c + d) % n for c, d, n in zip(cur, st, shape))
                if nb in marked:
                    marked.remove(nb)
                    comp.append(nb)
                    stack.append(nb)
        comps.append(np.array(sorted(comp)))
    comps.sort(key=lambda c: tuple(c[0]))
    return comps


def _cyclic_extent(values, n):
    v = np.unique(values)
    if v.size == 1:
        return 1
    gaps = np.diff(np.concatenate((v, [v[0] + n])))
    return n - int(gaps.max()) + 1


def _default_zero_tol(a, grid):
    h = 2 * np.pi / grid
    second_moment = float(np.sum(np.abs(a.coefficients) * (a.offsets ** 2).sum(axis=1)))
    return max(a.vanish_tol, second_moment * a.dim * h * h / 8)


def estimate_zero_order(a, z, phase=0.0):
    slopes = []
    logt = np.log(np.array(ORDER_STEPS))
    for ax in range(a.dim):
        pts = np.tile(np.asarray(z, dtype=float), (len(ORDER_STEPS), 1))
        pts[:, ax] += np.array(ORDER_STEPS)
        re = real_part(a, pts, phase)
        if np.all(re > 0):
            slopes.append(np.polyfit(logt, np.log(re), 1)[0])
    if not slopes:
        return 2
    rho = 2 * int(round(max(slopes) / 2))
    return max(rho, 2)


def real_part_zeros(a: ConvolutionVector, grid: Optional[int] = None,
                    tol: Optional[float] = None, phase: float = 0.0):
    """Isolated zeros of ``Re(exp(i phase) s_a)`` with estimated orders.

    Grid cells below ``tol`` are grouped into periodic connected components;
    each component's minimizer is polished with Nelder-Mead and kept if the
    polished value is below the vanishing threshold.  ``tol`` defaults to a
    bound on the real part at the grid point nearest to a second-order zero.

    Returns a list of ``(z, order)``.
    """
    grid = grid or default_grid(a.dim)
    tol = _default_zero_tol(a, grid) if tol is None else tol
    pts = torus_grid(a.dim, grid)
    re = real_part(a, pts, phase)
    if re.min() < -a.vanish_tol:
        raise InvalidInputError(
            f"Re(exp(i*{phase}) s_a) takes the negative value {re.min():.3e}; "
            "rotate by sectorial_phase first"
        )
    h = 2 * np.pi / grid
    zeros = []
    for comp in _components(np.argwhere(re < tol), re.shape):
        for ax in range(a.dim):
            if _cyclic_extent(comp[:, ax], grid) > grid / 4:
                raise NonIsolatedZerosError(
                    f"zero set of the real part spans more than a quarter of axis {ax + 1}"
                )
        vals = re[tuple(comp.T)]
        start = pts[tuple(comp[np.argmin(vals)])]
        if a.dim == 1:
            res = optimize.minimize_scalar(lambda t: float(real_part(a, t, phase)),
                                           bounds=(start[0] - h, start[0] + h),
                                           method="bounded", options={"xatol": 1e-12})
            z, val = np.array([res.x]), float(res.fun)
            if float(real_part(a, start, phase)) <= val:
                z, val = start, float(real_part(a, start, phase))
        else:
            simplex = np.vstack([start] + [start + h * e for e in np.eye(a.dim)])
            res = optimize.minimize(lambda t: float(real_part(a, t, phase)), start,
                                    method="Nelder-Mead",
                                    options={"initial_simplex": simplex, "xatol": 1e-12,
                                             "fatol": 1e-18, "maxiter": 4000})
            z, val = res.x, float(res.fun)
        if val <= a.vanish_tol:
            z = wrap_angle(z)
            zeros.append((z, estimate_zero_order(a, z, phase)))
    return zeros


def separation_radius(zeros) -> float:
    """Half the smallest pairwise torus distance between zeros (1 for M <= 1)."""
    if len(zeros) <= 1:
        return 1.0
    pts = [z for z, _ in zeros]
    return 0.5 * min(torus_distance(p, q) for i, p in enumerate(pts) for q in pts[i + 1:])


def _annulus_offsets(dim, r_in, r_out):
    k_max = int(np.ceil(16 * np.log2(r_out / r_in))) if r_out > r_in else 0
    radii = np.unique(np.concatenate(([r_in], r_out * 2.0 ** (-np.arange(k_max + 1) / 16))))
    radii = radii[(radii >= r_in) & (radii <= r_out)]
    if dim == 1:
        return np.concatenate((radii, -radii))[:, None]
    if dim == 2:
        phi = 2 * np.pi * np.arange(512) / 512
        dirs = np.stack((np.cos(phi), np.sin(phi)), axis=1)
    else:
        dirs = np.random.default_rng(0).normal(size=(4096, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def d_tilde_bound(a: ConvolutionVector, n: int, zeros, phase: float = 0.0) -> float:
    """``max_m D_m(n)`` where ``D_m(n)^{-1}`` is the infimum of the real part
    on the annulus ``1/n <= |theta - z_m| <= delta`` (dense sampling).

    Without zeros the bound is identically 1.
    """
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    grid = default_grid(a.dim)
    re_grid = real_part(a, torus_grid(a.dim, grid), phase)
    if re_grid.min() < -a.vanish_tol:
        raise InvalidInputError("real part of the symbol is not nonnegative")
    if not zeros:
        return 1.0
    delta = separation_radius(zeros)
    if 1.0 / n > delta:
        raise InvalidInputError(f"annulus is empty: 1/n = {1 / n} exceeds delta = {delta}")
    offsets = _annulus_offsets(a.dim, 1.0 / n, delta)
    worst = 0.0
    for z, _ in zeros:
        inf_re = float(real_part(a, np.asarray(z) + offsets, phase).min())
        worst = max(worst, math.inf if inf_re <= 0 else 1.0 / inf_re)
    return worst


def d_a_bound(a: ConvolutionVector, l: int, zeros, phase: float = 0.0) -> float:
    """``l^{d/2} * D_tilde(2 * 13^{d M} * l)``, the l1 -> l1 growth factor."""
    m = len(zeros)
    return l ** (a.dim / 2) * d_tilde_bound(a, 2 * 13 ** (a.dim * m) * l, zeros, phase)


def invertibility_criterion_1d(a: ConvolutionVector) -> bool:
    """Nonvanishing symbol with winding number zero (the d = 1 half-line test)."""
    if a.dim != 1:
        raise DimensionMismatchError("criterion is only available for d = 1")
    if min_abs_on_torus(a)[0] <= a.vanish_tol:
        return False
    try:
        return winding_number(a, 1) == 0
    except SymbolVanishesError:
        return False


# --- report ------------------------------------------------------------------

@dataclass
class SymbolReport:
    min_abs: float
    argmin: tuple
    winding: tuple  # integer per axis, or None where undefined
    sectorial_phase: Optional[float]
    real_zeros: list  # [(point tuple, order)]
    separation_radius: Optional[float]
    notes: list = field(default_factory=list)

    def to_flat_dict(self):
        doc = {
            "min_abs": self.min_abs,
            "argmin": list(self.argmin),
            "winding": list(self.winding),
            "sectorial_phase": self.sectorial_phase,
            "zero_count": len(self.real_zeros),
            "separation_radius": self.separation_radius,
        }
        for i, (z, order) in enumerate(self.real_zeros):
            doc[f"zero.{i}.point"] = list(z)
            doc[f"zero.{i}.order"] = order
        doc["notes"] = list(self.notes)
        return doc


def analyze_symbol(a: ConvolutionVector, grid: Optional[int] = None) -> SymbolReport:
    grid = grid or default_grid(a.dim)
    notes = []
    min_abs, argmin = min_abs_on_torus(a, grid)
    if min_abs > a.vanish_tol:
        winding = winding_vector(a)
    else:
        winding = (None,) * a.dim
        notes.append("symbol vanishes: winding numbers undefined")
    phi = sectorial_phase(a, grid)
    zeros, delta = [], None
    if phi is None:
        notes.append("symbol is not sectorial: real-part zeros not computed")
    else:
        try:
            zeros = real_part_zeros(a, grid, phase=phi)
            delta = separation_radius(zeros)
        except NonIsolatedZerosError as exc:
            notes.append(f"non-isolated zeros: {exc}")
    return SymbolReport(
        min_abs=float(min_abs),
        argmin=tuple(float(x) for x in argmin),
        winding=tuple(winding),
        sectorial_phase=phi,
        real_zeros=[(tuple(float(x) for x in z), int(o)) for z, o in zeros],
        separation_radius=delta,
        notes=notes,
    )
