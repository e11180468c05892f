"""Monte Carlo eigenvalue-count experiments and their scaling fits.

The expected number of eigenvalues of the periodic finite-volume operator in
``[E - eps, E]`` should grow linearly in ``eps`` and in the volume ``l^d``.
These routines estimate that count, the normalized constant
``mean / (Var(f) eps l^d)`` and fit the two scalings.

The averaging checks live in :mod:`wegnerlab.averaging` and are re-exported
here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .anderson import (
    BOUNDARY_CONDITION,
    IDSTable,
    build_free_hamiltonian,
    count_in_interval,
    sample_eigenvalues,
)
from .averaging import (
    AveragingCheckReport,
    birman_solomyak_check,
    dissipative_log,
    multiparameter_average_check,
    sandwich_norm_check,
    spectral_average_check,
    stieltjes_bound_check,
)
from .density import DensitySpec
from .errors import InsufficientPointsError, InvalidInputError, NoConvergenceError, OutOfGridError
from .symbol import ConvolutionVector

__all__ = [
    "AveragingCheckReport", "EpsFit", "LinearityFit", "VolumeFit", "WegnerReport",
    "birman_solomyak_check", "dissipative_log", "dos_estimate", "fit_eps", "fit_volume",
    "linearity_fit", "multiparameter_average_check", "sandwich_norm_check",
    "spectral_average_check", "stieltjes_bound_check", "total_variation",
    "volume_sweep", "wegner_experiment", "wegner_sweep",
]


def total_variation(f: DensitySpec, scan: bool = False) -> float:
    """Variation of ``f`` on the real line, jumps at the support edges included.

    Exact for pieces of degree <= 3; otherwise pass ``scan=True`` for the dense
    sampling fallback (resolution: ``f.scan_resolution()``).
    """
    return f.variation(include_edges=True, scan=scan)


@dataclass
class WegnerReport:
    params: dict
    counts: np.ndarray  # per successful sample
    failed_samples: int
    variation: float

    @property
    def mean_count(self) -> float:
        return float(self.counts.mean()) if self.counts.size else math.nan

    @property
    def stderr(self) -> float:
        n = self.counts.size
        return float(self.counts.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    @property
    def normalized_constant(self) -> float:
        eps, l, d = self.params["eps"], self.params["l"], self.params["dim"]
        if eps <= 0:
            return math.nan
        return self.mean_count / (self.variation * eps * l ** d)

    def to_dict(self):
        return {**self.params, "mean_count": self.mean_count, "stderr": self.stderr,
                "normalized_constant": self.normalized_constant,
                "variation": self.variation, "failed_samples": self.failed_samples,
                "successful_samples": int(self.counts.size)}


def _params(a, f, l, dim, E, eps, samples, seed):
    return {"a": a.to_dict(), "f_digest": f.digest(), "l": int(l), "dim": int(dim),
            "E": float(E), "eps": float(eps), "samples": int(samples), "seed": int(seed),
            "boundary": BOUNDARY_CONDITION, "version": __version__}


def wegner_sweep(a: ConvolutionVector, f: DensitySpec, l: int, dim: int, E: float,
                 eps_list: Sequence[float], samples: int, seed: int) -> list:
    """One report per window width, all built from the same eigenvalue samples."""
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    if any(e < 0 for e in eps_list):
        raise InvalidInputError("eps must be nonnegative")
    var = total_variation(f)
    h0 = build_free_hamiltonian(l, dim)
    counts = [[] for _ in eps_list]
    failed = 0
    for s in range(samples):
        try:
            eigs = sample_eigenvalues(a, f, l, dim, seed, s, h0)
        except NoConvergenceError:
            failed += 1
            continue
        for i, eps in enumerate(eps_list):
            counts[i].append(count_in_interval(eigs, E, eps))
    return [WegnerReport(_params(a, f, l, dim, E, eps, samples, seed),
                         np.array(c, dtype=float), failed, var)
            for eps, c in zip(eps_list, counts)]


def wegner_experiment(a, f, l, dim, E, eps, samples, seed) -> WegnerReport:
    return wegner_sweep(a, f, l, dim, E, [eps], samples, seed)[0]


def volume_sweep(a, f, l_list, dim, E, eps, samples, seed) -> list:
    return [wegner_experiment(a, f, l, dim, E, eps, samples, seed) for l in l_list]


# --- fits --------------------------------------------------------------------

def _r2(x, y, slope, intercept):
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 if ss_tot == 0 else 1.0 - float((resid ** 2).sum()) / ss_tot


@dataclass
class EpsFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r2: float


@dataclass
class VolumeFit:
    exponent: float
    prefactor: float
    r2: float


def fit_eps(reports: Sequence[WegnerReport]) -> EpsFit:
    """Least squares of mean count against ``eps`` at fixed volume.

    When the reports share their samples (as from :func:`wegner_sweep`) the
    standard errors come from the per-sample fits, which accounts for the
    correlation between the windows.
    """
    if len(reports) < 3:
        raise InsufficientPointsError("need at least 3 eps values")
    x = np.array([r.params["eps"] for r in reports])
    y = np.array([r.mean_count for r in reports])
    slope, intercept = np.polyfit(x, y, 1)
    sizes = {r.counts.size for r in reports}
    if len(sizes) == 1 and sizes.pop() > 1:
        per_sample = np.stack([r.counts for r in reports], axis=1)  # (samples, k)
        coef = np.polyfit(x, per_sample.T, 1)  # (2, samples)
        n = per_sample.shape[0]
        slope_se, icpt_se = (coef.std(axis=1, ddof=1) / math.sqrt(n)).tolist()
    else:
        slope_se = icpt_se = math.nan
    return EpsFit(float(slope), float(intercept), slope_se, icpt_se,
                  _r2(x, y, slope, intercept))


def fit_volume(reports: Sequence[WegnerReport]) -> VolumeFit:
    """Least squares of ``log mean`` against ``log l`` at fixed ``eps``."""
    if len(reports) < 3:
        raise InsufficientPointsError("need at least 3 volumes")
    x = np.log([r.params["l"] for r in reports])
    y_raw = np.array([r.mean_count for r in reports])
    if np.any(y_raw <= 0):
        raise InsufficientPointsError("mean counts must be positive for a log-log fit")
    y = np.log(y_raw)
    slope, intercept = np.polyfit(x, y, 1)
    return VolumeFit(float(slope), float(math.exp(intercept)), _r2(x, y, slope, intercept))


@dataclass
class LinearityFit:
    slope_vs_eps: float
    r2_eps: float
    exponent_vs_l: float
    r2_l: float
    eps_fit: Optional[EpsFit] = field(default=None, repr=False)
    volume_fit: Optional[VolumeFit] = field(default=None, repr=False)


def linearity_fit(eps_reports, l_reports) -> LinearityFit:
    ef, vf = fit_eps(eps_reports), fit_volume(l_reports)
    return LinearityFit(ef.slope, ef.r2, vf.exponent, vf.r2, ef, vf)


# --- density of states -------------------------------------------------------

def dos_estimate(ids_table, E: float, h: float) -> float:
    """Central difference ``(N(E + h) - N(E - h)) / 2h`` of a tabulated IDS.

    ``ids_table`` is an :class:`IDSTable` or a sequence of ``(E, N, ...)``
    rows; values between grid points are interpolated linearly.
    """
    if h <= 0:
        raise InvalidInputError("bandwidth must be positive")
    if isinstance(ids_table, IDSTable):
        grid, N = ids_table.E, ids_table.N
    else:
        rows = np.asarray([r[:2] for r in ids_table], dtype=float)
        grid, N = rows[:, 0], rows[:, 1]
    if E - h < grid[0] or E + h > grid[-1]:
        raise OutOfGridError(f"[{E - h}, {E + h}] is not inside the grid [{grid[0]}, {grid[-1]}]")
    lo, hi = np.interp([E - h, E + h], grid, N)
    return float((hi - lo) / (2 * h))
