"""Finite sections of multilevel Laurent matrices and their inverse norms.

A section over an index set ``S = (j_1, ..., j_N)`` has entries
``T[p, q] = a_{j_p - j_q}``.  Entries are kept in coordinate form and the
matrix is split into the connected components of its sparsity graph, so each
block is factored once and the inverse norms are maxima over blocks.  The full
dense matrix is still available as :attr:`FiniteSection.matrix`.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import (
    DimensionMismatchError,
    InvalidInputError,
    NoConvergenceError,
    SingularSectionError,
)
from .symbol import ConvolutionVector

PIVOT_RTOL = 1e-12
RESIDUAL_RTOL = 1e-9
POWER_TOL = 1e-8
POWER_MAX_ITER = 500
HYPOTHESIS4_RESIDUAL = 1e-8
CSV_HEADER = ("N", "n_label", "inv_norm_l1", "inv_norm_l2", "status")


class IndexSet:
    """Ordered, duplicate-free finite set of lattice points."""

    def __init__(self, points, dim: Optional[int] = None, provenance: str = "custom",
                 label=None):
        pts = np.asarray(points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if dim in (None, 1) else pts.reshape(-1, dim)
        if pts.size == 0 or pts.shape[0] == 0:
            raise InvalidInputError("index set must be nonempty")
        if dim is not None and pts.shape[1] != dim:
            raise DimensionMismatchError(f"points are {pts.shape[1]}-dimensional, expected {dim}")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise InvalidInputError("index set contains duplicate points")
        self.points = pts
        self.points.setflags(write=False)
        self.dim = pts.shape[1]
        self.provenance = provenance
        self.label = label

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return (tuple(int(x) for x in p) for p in self.points)

    def __contains__(self, j):
        return self.position(j) is not None

    def position(self, j) -> Optional[int]:
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        if j.shape != (self.dim,):
            return None
        hit = np.flatnonzero((self.points == j).all(axis=1))
        return int(hit[0]) if hit.size else None

    def translate(self, j0) -> "IndexSet":
        j0 = np.atleast_1d(np.asarray(j0, dtype=np.int64))
        return IndexSet(self.points + j0, self.dim, self.provenance, self.label)

    def lex_sorted(self) -> "IndexSet":
        order = np.lexsort(self.points.T[::-1])
        return IndexSet(self.points[order], self.dim, self.provenance, self.label)

    @classmethod
    def cube(cls, n: int, dim: int = 1, start: int = 0) -> "IndexSet":
        """``{start, ..., start + n - 1}^dim`` in lexicographic order."""
        if n < 1:
            raise InvalidInputError("cube side must be >= 1")
        pts = list(product(range(start, start + n), repeat=dim))
        return cls(pts, dim, "cube", label=n)

    @classmethod
    def quarter_plane_square(cls, n: int) -> "IndexSet":
        """``{0, ..., n}^2``: the quarter-plane cone truncated at level ``n``."""
        if n < 0:
            raise InvalidInputError("n must be >= 0")
        pts = list(product(range(n + 1), repeat=2))
        return cls(pts, 2, "quarter-cone", label=n)


class FiniteSection:
    """Compression of the Laurent matrix ``{a_{j-k}}`` to an index set."""

    def __init__(self, a: ConvolutionVector, index_set: IndexSet):
        if a.dim != index_set.dim:
            raise DimensionMismatchError(
                f"vector is {a.dim}-dimensional but index set is {index_set.dim}-dimensional"
            )
        self.a = a
        self.index_set = index_set
        self.N = len(index_set)
        self.pivot_tol = PIVOT_RTOL * a.max_abs
        self._rows, self._cols, self._vals = self._entries()
        self._lu = {}

    def _entries(self):
        pts = self.index_set.points
        lookup = {tuple(p): i for i, p in enumerate(pts.tolist())}
        rows, cols, vals = [], [], []
        for k, v in self.a.entries.items():
            # T[p, q] = a_k whenever j_p = j_q + k
            shifted = pts + np.asarray(k, dtype=np.int64)
            for q, jp in enumerate(shifted.tolist()):
                p = lookup.get(tuple(jp))
                if p is not None:
                    rows.append(p)
                    cols.append(q)
                    vals.append(v)
        return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                np.array(vals, dtype=float))

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.N, self.N))
        m[self._rows, self._cols] = self._vals
        return m

    def matvec(self, x) -> np.ndarray:
        y = np.zeros(self.N)
        np.add.at(y, self._rows, self._vals * np.asarray(x)[self._cols])
        return y

    def entry(self, p: int, q: int) -> float:
        diff = tuple(int(x) for x in self.index_set.points[p] - self.index_set.points[q])
        return float(self.a.entries.get(diff, 0.0))

    @cached_property
    def blocks(self) -> list:
        """Index arrays of the independent diagonal blocks, in order of first index."""
        graph = coo_matrix((np.ones(self._rows.size), (self._rows, self._cols)),
                           shape=(self.N, self.N))
        _, labels = connected_components(graph, directed=True, connection="weak")
        groups = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return sorted((np.array(g) for g in groups.values()), key=lambda g: g[0])

    @cached_property
    def _block_of(self):
        owner = np.empty(self.N, dtype=np.int64)
        for b, idx in enumerate(self.blocks):
            owner[idx] = b
        return owner

    def block_matrix(self, b: int) -> np.ndarray:
        idx = self.blocks[b]
        pos = np.full(self.N, -1, dtype=np.int64)
        pos[idx] = np.arange(idx.size)
        sel = pos[self._rows] >= 0
        m = np.zeros((idx.size, idx.size))
        m[pos[self._rows[sel]], pos[self._cols[sel]]] = self._vals[sel]
        return m

    def factor(self, b: int):
        """LU factors of block ``b``; raises when a pivot falls below threshold."""
        if b not in self._lu:
            with warnings.catch_warnings():
                # exact zero pivots are reported below with context
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                lu, piv = linalg.lu_factor(self.block_matrix(b), check_finite=False)
            small = np.abs(np.diag(lu)).min()
            if small < self.pivot_tol:
                self._lu[b] = SingularSectionError(
                    f"section of order {self.N} is singular: pivot {small:.3e} in a block "
                    f"of order {lu.shape[0]}"
                )
            else:
                self._lu[b] = (lu, piv)
        res = self._lu[b]
        if isinstance(res, Exception):
            raise res
        return res

    def factor_all(self):
        for b in range(len(self.blocks)):
            self.factor(b)

    def _solve_block(self, b, rhs, trans=0):
        return linalg.lu_solve(self.factor(b), rhs, trans=trans, check_finite=False)

    def column(self, pos: int) -> np.ndarray:
        """Solution of ``T t = delta`` at position ``pos``, as a full-length vector."""
        b = int(self._block_of[pos])
        idx = self.blocks[b]
        rhs = (idx == pos).astype(float)
        t = np.zeros(self.N)
        t[idx] = self._solve_block(b, rhs)
        return t


def build_section(a: ConvolutionVector, S: IndexSet) -> FiniteSection:
    return FiniteSection(a, S)


def solve_delta_system(T: FiniteSection, j) -> np.ndarray:
    """Solve ``T t = delta_j`` and check the residual."""
    pos = T.index_set.position(j)
    if pos is None:
        raise InvalidInputError(f"{j!r} is not in the index set")
    T.factor_all()
    t = T.column(pos)
    b = int(T._block_of[pos])
    idx = T.blocks[b]
    resid = T.block_matrix(b) @ t[idx] - (idx == pos)
    bound = RESIDUAL_RTOL * np.abs(t).sum() * T.a.l1_norm
    if np.abs(resid).max() > bound:
        raise SingularSectionError(
            f"residual {np.abs(resid).max():.3e} exceeds {bound:.3e}: section is numerically singular"
        )
    return t


def _block_inverse_l1(T: FiniteSection, b: int) -> float:
    lu = T.factor(b)
    inv = linalg.lu_solve(lu, np.eye(lu[0].shape[0]), check_finite=False)
    return float(np.abs(inv).sum(axis=0).max())


def inverse_norm_l1(T: FiniteSection) -> float:
    """Maximum column sum of ``T^{-1}`` (its l1 -> l1 operator norm)."""
    T.factor_all()
    return max(_block_inverse_l1(T, b) for b in range(len(T.blocks)))


def _start_vector(n):
    # a fixed non-symmetric profile so the start is not orthogonal to
    # reflection-odd singular vectors
    k = np.arange(n)
    v = 1.0 + 0.5 * np.sin(1.0 + 0.7 * k)
    return v / np.linalg.norm(v)


def _block_sigma_min(T: FiniteSection, b: int) -> float:
    lu = T.factor(b)
    n = lu[0].shape[0]
    if n == 1:
        return abs(float(lu[0][0, 0]))
    x = _start_vector(n)
    mu_old = 0.0
    for _ in range(POWER_MAX_ITER):
        y = linalg.lu_solve(lu, x, trans=1, check_finite=False)  # T^T y = x
        y = linalg.lu_solve(lu, y, check_finite=False)  # T z = y
        mu = float(np.linalg.norm(y))
        if not math.isfinite(mu) or mu == 0.0:
            raise NoConvergenceError("inverse power iteration broke down")
        x = y / mu
        if abs(mu - mu_old) <= POWER_TOL * mu:
            return 1.0 / math.sqrt(mu)
        mu_old = mu
    # clustered smallest singular values: Lanczos on the same inverted operator
    return _block_sigma_min_lanczos(lu, n)


def _block_sigma_min_lanczos(lu, n: int) -> float:
    if n <= 8:
        inv = linalg.lu_solve(lu, np.eye(n), check_finite=False)
        return 1.0 / float(np.linalg.norm(inv, 2))

    def apply(x):
        y = linalg.lu_solve(lu, np.ravel(x), trans=1, check_finite=False)
        return linalg.lu_solve(lu, y, check_finite=False)

    op = LinearOperator((n, n), matvec=apply, dtype=float)
    try:
        mu = eigsh(op, k=1, which="LA", v0=_start_vector(n), tol=POWER_TOL,
                   return_eigenvectors=False)[0]
    except ArpackNoConvergence as exc:
        raise NoConvergenceError(f"smallest singular value did not converge: {exc}") from exc
    return 1.0 / math.sqrt(float(mu))


def inverse_norm_l2(T: FiniteSection) -> float:
    """``1 / sigma_min(T)`` by inverse power iteration on ``T^T T``.

    Blocks whose smallest singular values are too tightly clustered for the
    plain iteration to settle fall back to Lanczos on the same operator.
    """
    T.factor_all()
    return max(1.0 / _block_sigma_min(T, b) for b in range(len(T.blocks)))


@dataclass
class ScanRow:
    N: int
    n_label: object
    inv_norm_l1: float
    inv_norm_l2: float
    status: str

    @property
    def max_column_l1(self):
        return self.inv_norm_l1


@dataclass
class ScanTable:
    rows: list = field(default_factory=list)

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.N, "" if r.n_label is None else r.n_label,
                        format_float(r.inv_norm_l1), format_float(r.inv_norm_l2), r.status])
        return buf.getvalue()

    def to_records(self):
        return [{"N": r.N, "n_label": r.n_label, "inv_norm_l1": format_float(r.inv_norm_l1),
                 "inv_norm_l2": format_float(r.inv_norm_l2), "status": r.status}
                for r in self.rows]


def format_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def stability_scan(a: ConvolutionVector, family: Iterable[IndexSet], record=None) -> ScanTable:
    """Inverse norms over a family of index sets.

    Singular sections or failed iterations become ``inf`` rows.  ``record``,
    if given, is called with each row as soon as it is computed.
    """
    family = list(family)
    if not family:
        raise InvalidInputError("family must be nonempty")
    table = ScanTable()
    for S in family:
        T = build_section(a, S)
        try:
            l1 = inverse_norm_l1(T)
            l2 = inverse_norm_l2(T)
            status = "ok"
        except SingularSectionError:
            l1 = l2 = math.inf
            status = "singular"
        except NoConvergenceError:
            l1 = inverse_norm_l1(T)
            l2 = math.inf
            status = "no-convergence"
        row = ScanRow(len(S), S.label, l1, l2, status)
        table.rows.append(row)
        if record is not None:
            record(row)
    return table


@dataclass
class Hypothesis4Report:
    max_l1: float
    residual: float
    passed: bool
    n_columns: int

    def to_dict(self):
        return {"max_l1": self.max_l1, "residual": self.residual, "pass": self.passed,
                "n_columns": self.n_columns}


def verify_hypothesis4(a: ConvolutionVector, lam: IndexSet, sigma: IndexSet) -> Hypothesis4Report:
    """Solve ``T_sigma t(j) = delta_j`` for every ``j`` in ``lam``.

    For step-function single-site potentials the covering inequality reduces to
    exactly these systems, so the report is the largest l1 norm of a solution
    and the largest residual.
    """
    positions = [sigma.position(j) for j in lam]
    if any(p is None for p in positions):
        raise InvalidInputError("the inner index set must be contained in the outer one")
    T = build_section(a, sigma)
    max_l1, max_res = 0.0, 0.0
    for pos in positions:
        t = T.column(pos)
        r = T.matvec(t)
        r[pos] -= 1.0
        res = float(np.abs(r).max())
        max_l1 = max(max_l1, float(np.abs(t).sum()))
        max_res = max(max_res, res)
    return Hypothesis4Report(max_l1, max_res, max_res <= HYPOTHESIS4_RESIDUAL, len(positions))


def growth_exponent(sizes: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log value`` against ``log size``."""
    x, y = np.log(np.asarray(sizes, float)), np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


UNBOUNDED_TREND_EXPONENT = 0.25


def hypothesis4_trend(a: ConvolutionVector, pairs: Sequence[tuple]):
    """Reports for a growing family of ``(lam, sigma)`` pairs and a flag that is
    set when ``max_l1`` grows like a positive power of ``|sigma|``."""
    reports = [verify_hypothesis4(a, lam, sig) for lam, sig in pairs]
    sizes = [len(sig) for _, sig in pairs]
    values = [r.max_l1 for r in reports]
    unbounded = len(reports) >= 3 and growth_exponent(sizes, values) > UNBOUNDED_TREND_EXPONENT
    return reports, unbounded
