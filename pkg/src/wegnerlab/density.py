"""Piecewise-polynomial functions and single-site densities."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from . import kernels
from .errors import DegreeTooHighError, InvalidDensityError, InvalidInputError

EXACT_VARIATION_MAX_DEGREE = 3
SCAN_POINTS = 10_000
QUANTILE_BISECTION_STEPS = 64


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    coeffs: tuple  # ascending powers of x (absolute, not shifted)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(self.coeffs)

    @property
    def degree(self) -> int:
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        return max(len(c) - 1, 0)


class PiecewisePolynomial:
    """Real function given by polynomials on disjoint closed-open intervals.

    The function vanishes outside the union of its pieces.  Pieces must be
    sorted and non-overlapping; adjacent pieces may share an endpoint.
    """

    def __init__(self, pieces: Sequence):
        parsed = []
        for p in pieces:
            if isinstance(p, Piece):
                parsed.append(p)
                continue
            if isinstance(p, dict):
                (lo, hi), coeffs = p["interval"], p["coeffs"]
            else:
                lo, hi, coeffs = p
            coeffs = tuple(float(c) for c in np.atleast_1d(coeffs))
            if not coeffs:
                coeffs = (0.0,)
            parsed.append(Piece(float(lo), float(hi), coeffs))
        if not parsed:
            raise InvalidInputError("piecewise polynomial needs at least one piece")
        parsed.sort(key=lambda p: p.lo)
        for p in parsed:
            if not (np.isfinite(p.lo) and np.isfinite(p.hi)) or not p.hi > p.lo:
                raise InvalidInputError(f"bad interval [{p.lo}, {p.hi}]")
        for left, right in zip(parsed, parsed[1:]):
            if right.lo < left.hi:
                raise InvalidInputError(f"pieces overlap at {right.lo}")
        self.pieces = tuple(parsed)

    # -- basic evaluation ---------------------------------------------------
    @property
    def support(self):
        return self.pieces[0].lo, self.pieces[-1].hi

    @property
    def max_degree(self):
        return max(p.degree for p in self.pieces)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        last = len(self.pieces) - 1
        for i, p in enumerate(self.pieces):
            mask = (x >= p.lo) & ((x < p.hi) | ((x == p.hi) & (i == last)))
            if mask.any():
                out[mask] = p.poly(x[mask])
        return out

    def breakpoints(self):
        pts = sorted({p.lo for p in self.pieces} | {p.hi for p in self.pieces})
        return np.array(pts)

    def piece_at(self, x):
        """Polynomial active on a neighbourhood right of ``x`` (zero if none)."""
        for p in self.pieces:
            if p.lo <= x < p.hi:
                return p.poly
        return Polynomial([0.0])

    def integral(self):
        total = 0.0
        for p in self.pieces:
            anti = p.poly.integ()
            total += anti(p.hi) - anti(p.lo)
        return float(total)

    def to_list(self):
        return [{"interval": [p.lo, p.hi], "coeffs": list(p.coeffs)} for p in self.pieces]

    # -- extrema and variation ----------------------------------------------
    @staticmethod
    def _critical_points(p: Piece):
        deriv = p.poly.deriv()
        if p.degree <= 1:
            return np.array([])
        roots = deriv.roots()
        roots = roots[np.abs(roots.imag) < 1e-12].real
        return np.sort(roots[(roots > p.lo) & (roots < p.hi)])

    def _piece_nodes(self, p: Piece, exact: bool):
        if exact:
            return np.concatenate(([p.lo], self._critical_points(p), [p.hi]))
        return np.linspace(p.lo, p.hi, SCAN_POINTS)

    def sup_abs(self):
        best = 0.0
        for p in self.pieces:
            nodes = self._piece_nodes(p, p.degree <= EXACT_VARIATION_MAX_DEGREE + 1)
            best = max(best, float(np.max(np.abs(p.poly(nodes)))))
        return best

    def min_value(self):
        return min(float(np.min(p.poly(self._piece_nodes(p, p.degree <= EXACT_VARIATION_MAX_DEGREE + 1))))
                   for p in self.pieces)

    def variation(self, include_edges=True, scan=False):
        """Essential total variation.

        Interior variation of every piece, plus the jumps between adjacent
        pieces (a gap counts as the zero function).  With ``include_edges`` the
        jumps to zero at the two ends of the support are added, i.e. the
        variation of the function on the whole real line.

        Exact for pieces of degree <= 3; higher degrees raise
        :class:`DegreeTooHighError` unless ``scan`` is set, in which case each
        piece is sampled on ``SCAN_POINTS`` points.
        """
        if not scan and self.max_degree > EXACT_VARIATION_MAX_DEGREE:
            raise DegreeTooHighError(
                f"degree {self.max_degree} > {EXACT_VARIATION_MAX_DEGREE}; "
                f"use the {SCAN_POINTS}-point scan fallback"
            )
        total = 0.0
        for p in self.pieces:
            vals = p.poly(self._piece_nodes(p, not scan))
            total += float(np.abs(np.diff(vals)).sum())
        for left, right in zip(self.pieces, self.pieces[1:]):
            if right.lo == left.hi:
                total += abs(float(right.poly(right.lo) - left.poly(left.hi)))
            else:
                total += abs(float(left.poly(left.hi))) + abs(float(right.poly(right.lo)))
        if include_edges:
            first, last = self.pieces[0], self.pieces[-1]
            total += abs(float(first.poly(first.lo))) + abs(float(last.poly(last.hi)))
        return total

    def scan_resolution(self):
        return max((p.hi - p.lo) / (SCAN_POINTS - 1) for p in self.pieces)


class DensitySpec(PiecewisePolynomial):
    """Probability density of the single-site couplings.

    Nonnegative, integrates to one, support bounded with minimum 0.
    """

    def __init__(self, pieces):
        try:
            super().__init__(pieces)
        except InvalidInputError as exc:
            raise InvalidDensityError(str(exc)) from exc
        if self.min_value() < -1e-12:
            raise InvalidDensityError("density takes negative values")
        mass = self.integral()
        if abs(mass - 1.0) > 1e-9:
            raise InvalidDensityError(f"density integrates to {mass!r}, not 1")
        if self.support[0] != 0.0:
            raise InvalidDensityError(
                f"support must start at 0 (got {self.support[0]}); shift the density"
            )
        self._tables()

    @property
    def m_supp(self):
        return self.support[0]

    @property
    def M_supp(self):
        return self.support[1]

    @classmethod
    def uniform(cls, width=1.0):
        return cls([(0.0, width, [1.0 / width])])

    def _tables(self):
        deg = max(len(p.coeffs) for p in self.pieces)
        self._lo = np.array([p.lo for p in self.pieces])
        self._hi = np.array([p.hi for p in self.pieces])
        anti = np.zeros((len(self.pieces), deg + 1))
        cdf = [0.0]
        for i, p in enumerate(self.pieces):
            a = p.poly.integ().coef
            anti[i, : len(a)] = a
            cdf.append(cdf[-1] + float(p.poly.integ()(p.hi) - p.poly.integ()(p.lo)))
        cdf = np.array(cdf)
        cdf[-1] = np.inf  # every u < 1 lands in some piece
        self._anti = anti
        self._cdf_lo = cdf

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for i, p in enumerate(self.pieces):
            anti = p.poly.integ()
            inside = np.clip(x, p.lo, p.hi)
            out += anti(inside) - anti(p.lo)
        return out

    def quantile(self, u):
        """Inverse CDF by bisection inside the owning piece (error < 1e-12)."""
        u = np.ascontiguousarray(np.atleast_1d(u), dtype=np.float64)
        if np.any((u < 0) | (u > 1)):
            raise InvalidInputError("quantile arguments must lie in [0, 1]")
        return kernels.bisect_quantiles(
            u, self._lo, self._hi, self._cdf_lo, self._anti, QUANTILE_BISECTION_STEPS
        )

    def digest(self):
        text = json.dumps(self.to_list(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_file(cls, path):
        return cls(json.loads(Path(path).read_text()))

    def to_file(self, path):
        Path(path).write_text(json.dumps(self.to_list(), indent=2) + "\n")
