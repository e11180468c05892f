"""Finite-volume discrete Anderson model on the periodic torus ``(Z_l)^d``.

``h_omega = h_0 + V_omega`` where ``h_0`` is the nearest-neighbour adjacency
operator and ``V_omega(n) = sum_k a_k omega_{n-k}`` is the circular
convolution of i.i.d. couplings with a convolution vector.
"""
from __future__ import annotations

import csv
import io
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from . import kernels
from .density import DensitySpec
from .errors import DimensionMismatchError, InvalidInputError, NoConvergenceError
from .rng import site_uniforms
from .symbol import ConvolutionVector

BOUNDARY_CONDITION = "periodic"
SYMMETRY_TOL = 1e-12


class SupportWrapWarning(UserWarning):
    """The convolution support does not fit into one period of the torus."""


def site_index(coords, l: int) -> int:
    """Row-major flat index of a torus site."""
    idx = 0
    for c in coords:
        idx = idx * l + (int(c) % l)
    return idx


@dataclass(frozen=True)
class PeriodicHamiltonian:
    l: int
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.l ** self.dim,) * 2:
            raise DimensionMismatchError(f"matrix must have order l^d = {self.l ** self.dim}")
        if np.abs(m - m.T).max() > SYMMETRY_TOL * max(1.0, np.abs(m).max()):
            raise InvalidInputError("Hamiltonian matrix is not symmetric")

    @property
    def size(self):
        return self.l ** self.dim


def build_free_hamiltonian(l: int, dim: int = 1) -> PeriodicHamiltonian:
    """Adjacency matrix of the periodic lattice; for ``l = 2`` the two wrap
    directions land on the same neighbour and the edge weight is 2."""
    if l < 2:
        raise InvalidInputError("l must be >= 2")
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    n = l ** dim
    h = np.zeros((n, n))
    for flat in range(n):
        coords = np.unravel_index(flat, (l,) * dim)
        for ax in range(dim):
            for step in (1, -1):
                nb = list(coords)
                nb[ax] = (nb[ax] + step) % l
                h[flat, site_index(nb, l)] += 1.0
    return PeriodicHamiltonian(l, dim, h)


@dataclass(frozen=True)
class CouplingField:
    l: int
    dim: int
    values: np.ndarray  # shape (l,)*dim
    seed: int
    sample_index: int


def sample_couplings(f: DensitySpec, l: int, dim: int, seed: int,
                     sample_index: int) -> CouplingField:
    """i.i.d. draws from ``f`` by inverse CDF of a counter-based uniform stream.

    The stream is keyed by ``(seed, sample_index)`` and indexed by site, so a
    sample depends on nothing else.
    """
    if not isinstance(f, DensitySpec):
        raise InvalidInputError("f must be a DensitySpec")
    u = site_uniforms(seed, sample_index, l ** dim)
    vals = f.quantile(u).reshape((l,) * dim)
    return CouplingField(l, dim, vals, int(seed), int(sample_index))


def build_potential(a: ConvolutionVector, omega: CouplingField) -> np.ndarray:
    """``V(n) = sum_k a_k omega_{(n - k) mod l}``, flattened row-major."""
    if a.dim != omega.dim:
        raise DimensionMismatchError("convolution vector and couplings differ in dimension")
    if a.diameter() >= omega.l:
        warnings.warn(
            f"support diameter {a.diameter()} >= l = {omega.l}: the convolution wraps onto itself",
            SupportWrapWarning, stacklevel=2,
        )
    flat = np.ascontiguousarray(np.asarray(omega.values, dtype=np.float64).ravel())
    return kernels.periodic_potential(flat, omega.l, omega.dim,
                                      np.ascontiguousarray(a.offsets), a.coefficients)


def assemble_hamiltonian(h0: PeriodicHamiltonian, V) -> PeriodicHamiltonian:
    V = np.asarray(V, dtype=float).ravel()
    if V.shape[0] != h0.size:
        raise DimensionMismatchError(f"potential has {V.shape[0]} sites, expected {h0.size}")
    m = h0.matrix.copy()
    m[np.diag_indices_from(m)] += V
    return PeriodicHamiltonian(h0.l, h0.dim, m)


def symmetric_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric matrix (Householder + implicit QL)."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.shape[0] == 0:
        return np.empty(0)
    d, e = kernels.tridiagonalize(m)
    vals, ok = kernels.tql_eigenvalues(d, e)
    if not ok:
        raise NoConvergenceError(
            f"QL iteration exceeded {kernels.QL_MAX_SWEEPS} sweeps for one eigenvalue"
        )
    return vals


def eigenvalues(H: PeriodicHamiltonian) -> np.ndarray:
    return symmetric_eigenvalues(H.matrix)


def count_in_interval(eigs, E: float, eps: float) -> int:
    """Number of eigenvalues in the closed window ``[E - eps, E]``."""
    if eps < 0:
        raise InvalidInputError("eps must be nonnegative")
    eigs = list(eigs) if not isinstance(eigs, np.ndarray) else eigs
    return int(bisect_right(eigs, E) - bisect_left(eigs, E - eps))


def count_below(eigs, E: float) -> int:
    return int(bisect_left(eigs, E))


def sample_eigenvalues(a, f, l, dim, seed, sample_index, h0=None) -> np.ndarray:
    h0 = h0 or build_free_hamiltonian(l, dim)
    omega = sample_couplings(f, l, dim, seed, sample_index)
    return eigenvalues(assemble_hamiltonian(h0, build_potential(a, omega)))


@dataclass
class IDSTable:
    E: np.ndarray
    N: np.ndarray
    stderr: np.ndarray
    samples: int
    l: int
    dim: int
    seed: int
    boundary: str = BOUNDARY_CONDITION

    def rows(self):
        return list(zip(self.E.tolist(), self.N.tolist(), self.stderr.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("E", "N", "stderr", "samples", "l", "seed"))
        for E, N, s in self.rows():
            w.writerow((repr(E), repr(N), repr(s), self.samples, self.l, self.seed))
        return buf.getvalue()


def mean_and_stderr(per_sample: np.ndarray):
    """Column means and standard errors of a ``(samples, k)`` array."""
    per_sample = np.asarray(per_sample, dtype=float)
    n = per_sample.shape[0]
    mean = per_sample.sum(axis=0) / n  # numpy sums pairwise
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, per_sample.std(axis=0, ddof=1) / np.sqrt(n)


def empirical_ids(a: ConvolutionVector, f: DensitySpec, l: int, dim: int, E_grid,
                  samples: int, seed: int) -> IDSTable:
    """Monte Carlo average of ``l^{-d} #{eigenvalues < E}`` on a grid of energies."""
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    E_grid = np.asarray(E_grid, dtype=float)
    if np.any(np.diff(E_grid) < 0):
        raise InvalidInputError("E_grid must be sorted")
    h0 = build_free_hamiltonian(l, dim)
    counts = np.empty((samples, E_grid.size))
    for s in range(samples):
        eigs = sample_eigenvalues(a, f, l, dim, seed, s, h0)
        counts[s] = np.searchsorted(eigs, E_grid, side="left") / l ** dim
    N, err = mean_and_stderr(counts)
    return IDSTable(E_grid, N, err, samples, l, dim, int(seed))
