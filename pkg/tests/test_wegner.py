import math

import numpy as np
import pytest

from wegnerlab import wegner
from wegnerlab.anderson import IDSTable, empirical_ids
from wegnerlab.density import DensitySpec
from wegnerlab.errors import InsufficientPointsError, InvalidInputError, NoConvergenceError, OutOfGridError
from wegnerlab.symbol import ConvolutionVector
from wegnerlab.wegner import (
    WegnerReport,
    dos_estimate,
    fit_eps,
    fit_volume,
    linearity_fit,
    volume_sweep,
    wegner_experiment,
    wegner_sweep,
)

UNIFORM = DensitySpec.uniform(1.0)
DIFF = ConvolutionVector(1, {0: 1, 1: -1})
SINGLE = ConvolutionVector(1, {0: 1})


def synthetic(eps, l, counts, dim=1):
    params = {"eps": eps, "l": l, "dim": dim}
    return WegnerReport(params, np.asarray(counts, dtype=float), 0, 2.0)


class TestExperiment:
    def test_zero_width(self):
        rep = wegner_experiment(DIFF, UNIFORM, 8, 1, 0.1, 0.0, samples=20, seed=1)
        assert rep.mean_count == 0.0
        assert math.isnan(rep.normalized_constant)

    def test_below_spectrum(self):
        rep = wegner_experiment(SINGLE, UNIFORM, 8, 1, -10.0, 1.0, samples=10, seed=1)
        assert rep.mean_count == 0.0 and rep.stderr == 0.0

    def test_monotone_in_eps_per_sample(self):
        reps = wegner_sweep(DIFF, UNIFORM, 12, 1, 0.0, [0.0, 0.05, 0.1, 0.3, 1.0], 40, seed=5)
        counts = np.stack([r.counts for r in reps])
        assert np.all(np.diff(counts, axis=0) >= 0)

    def test_sweep_matches_single_runs(self):
        reps = wegner_sweep(DIFF, UNIFORM, 10, 1, 0.2, [0.1, 0.4], 15, seed=3)
        for r in reps:
            single = wegner_experiment(DIFF, UNIFORM, 10, 1, 0.2, r.params["eps"], 15, 3)
            assert np.array_equal(single.counts, r.counts)

    def test_report_fields(self):
        rep = wegner_experiment(DIFF, UNIFORM, 8, 1, 0.0, 0.2, 10, seed=2)
        d = rep.to_dict()
        assert d["boundary"] == "periodic" and d["f_digest"] == UNIFORM.digest()
        assert d["successful_samples"] == 10 and d["failed_samples"] == 0
        assert rep.normalized_constant == pytest.approx(rep.mean_count / (2.0 * 0.2 * 8))

    def test_failed_samples_tallied(self, monkeypatch):
        real = wegner.sample_eigenvalues

        def flaky(a, f, l, dim, seed, s, h0):
            if s % 3 == 0:
                raise NoConvergenceError("forced")
            return real(a, f, l, dim, seed, s, h0)

        monkeypatch.setattr(wegner, "sample_eigenvalues", flaky)
        rep = wegner_experiment(DIFF, UNIFORM, 8, 1, 0.0, 0.2, 9, seed=2)
        assert rep.failed_samples == 3 and rep.counts.size == 6

    def test_bad_arguments(self):
        with pytest.raises(InvalidInputError):
            wegner_experiment(DIFF, UNIFORM, 8, 1, 0.0, -0.1, 5, 1)
        with pytest.raises(InvalidInputError):
            wegner_experiment(DIFF, UNIFORM, 8, 1, 0.0, 0.1, 0, 1)

    def test_normalized_constant_seed_stability(self):
        reps = [wegner_experiment(DIFF, UNIFORM, 16, 1, 0.0, 0.1, 2000, seed) for seed in (1, 2, 3)]
        consts = [r.normalized_constant for r in reps]
        errs = [r.stderr / (r.variation * 0.1 * 16) for r in reps]
        assert all(math.isfinite(c) and c > 0 for c in consts)
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(consts[i] - consts[j]) <= 3 * math.hypot(errs[i], errs[j])

    def test_volume_sweep(self):
        reps = volume_sweep(SINGLE, UNIFORM, [6, 8], 1, 1.0, 0.5, 5, seed=0)
        assert [r.params["l"] for r in reps] == [6, 8]


class TestFits:
    def test_exact_linear(self):
        reps = [synthetic(e, 10, [3 * e] * 4) for e in (0.1, 0.2, 0.4)]
        fit = fit_eps(reps)
        assert fit.slope == pytest.approx(3.0) and fit.intercept == pytest.approx(0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.slope_stderr == pytest.approx(0, abs=1e-12)

    def test_exact_power(self):
        reps = [synthetic(0.1, l, [0.5 * l ** 2] * 3, dim=2) for l in (4, 8, 16)]
        fit = fit_volume(reps)
        assert fit.exponent == pytest.approx(2.0) and fit.r2 == pytest.approx(1.0)
        assert fit.prefactor == pytest.approx(0.5)

    def test_paired_stderr(self):
        # per-sample counts exactly linear with random slopes
        rng = np.random.default_rng(0)
        slopes = rng.random(50) * 4
        eps = [0.1, 0.2, 0.3]
        reps = [synthetic(e, 10, slopes * e) for e in eps]
        fit = fit_eps(reps)
        assert fit.slope == pytest.approx(slopes.mean())
        assert fit.slope_stderr == pytest.approx(slopes.std(ddof=1) / math.sqrt(50))

    def test_linearity_fit(self):
        eps_reps = [synthetic(e, 10, [2 * e] * 2) for e in (0.1, 0.2, 0.3)]
        l_reps = [synthetic(0.1, l, [0.3 * l] * 2) for l in (8, 16, 32)]
        fit = linearity_fit(eps_reps, l_reps)
        assert fit.slope_vs_eps == pytest.approx(2.0) and fit.exponent_vs_l == pytest.approx(1.0)
        assert fit.r2_eps == pytest.approx(1.0) and fit.r2_l == pytest.approx(1.0)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPointsError):
            fit_eps([synthetic(0.1, 8, [1]), synthetic(0.2, 8, [2])])
        with pytest.raises(InsufficientPointsError):
            fit_volume([synthetic(0.1, 8, [1]), synthetic(0.1, 16, [2])])

    def test_log_fit_needs_positive_means(self):
        with pytest.raises(InsufficientPointsError):
            fit_volume([synthetic(0.1, l, [0.0]) for l in (4, 8, 16)])


class TestDOS:
    GRID = np.linspace(-1, 1, 21)

    def table(self, N):
        return [(E, n) for E, n in zip(self.GRID, N)]

    def test_identity(self):
        assert dos_estimate(self.table(self.GRID), 0.3, 0.2) == pytest.approx(1.0)

    def test_constant(self):
        assert dos_estimate(self.table(np.full(21, 0.4)), 0.0, 0.5) == 0.0

    def test_out_of_grid(self):
        with pytest.raises(OutOfGridError):
            dos_estimate(self.table(self.GRID), 0.9, 0.2)

    def test_bad_bandwidth(self):
        with pytest.raises(InvalidInputError):
            dos_estimate(self.table(self.GRID), 0.0, 0.0)

    def test_free_chain_window_hits_levels(self):
        # 2cos(2 pi k/64) = +-0.196 for k = 15, 17, 47, 49 fall inside [-0.2, 0.2]:
        # six levels in the window, so the estimate is 6 / (64 * 0.4)
        grid = np.round(np.arange(-1.0, 1.0001, 0.1), 10)
        ids = empirical_ids(SINGLE, DensitySpec.uniform(1e-12), 64, 1, grid, 1, 0)
        assert isinstance(ids, IDSTable)
        assert dos_estimate(ids, 0.0, 0.2) == pytest.approx(0.234375, abs=1e-12)
        assert dos_estimate(ids, 0.0, 0.3) == pytest.approx(0.15625, abs=1e-12)
