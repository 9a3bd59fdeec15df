"""
Monte Carlo Tests
Seeded sampling, coupled trials, estimators and report models.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from bootlab.core.errors import BoundsError, DomainError
from bootlab.services.blockers import lgap_probability_exact
from bootlab.services.lattice import CellSet, LatticeSpec, Rect
from bootlab.services.metrics import trials_total
from bootlab.services.montecarlo import (
    MeanReport,
    PcEstimate,
    TrialReport,
    coupled_indicators,
    crossing_prob,
    diam_event_prob,
    gamma_expectation,
    pc_estimate,
    percolation_prob,
    sample_set,
    trial_stream,
)
from bootlab.services.special import beta, u_scaled


class TestSampling:
    """Per-trial streams and Bernoulli sets."""

    def test_same_stream_same_set(self, square8):
        one = sample_set(square8, 0.3, trial_stream(42, 7))
        two = sample_set(square8, 0.3, trial_stream(42, 7))
        assert one == two

    def test_trials_differ(self, square8):
        one = sample_set(square8, 0.5, trial_stream(42, 0))
        two = sample_set(square8, 0.5, trial_stream(42, 1))
        assert one != two

    def test_extremes(self, square8):
        stream = trial_stream(1, 0)
        assert len(sample_set(square8, 0.0, stream)) == 0
        assert len(sample_set(square8, 1.0, stream)) == square8.cell_count

    def test_bad_p(self, square8):
        with pytest.raises(DomainError):
            sample_set(square8, 1.2, trial_stream(1, 0))


class TestReports:
    """Pydantic report models."""

    def test_from_counts(self):
        report = TrialReport.from_counts(25, 100, 9, 0.1)
        assert report.estimate == 0.25
        assert report.half_width == pytest.approx(1.96 * math.sqrt(0.25 * 0.75 / 100))
        assert report.csv_row() == [0.1, 0.25, report.half_width, 100, 9]

    def test_successes_bounded(self):
        with pytest.raises(ValidationError):
            TrialReport(estimate=1.0, half_width=0.0, successes=5, trials=4, master_seed=1, p=0.5)

    def test_mean_report(self):
        report = MeanReport.from_samples([1.0, 3.0], 5, 0.2)
        assert report.mean == 2.0
        assert report.std_error == pytest.approx(1.0)

    def test_bracket_checked(self):
        with pytest.raises(ValidationError):
            PcEstimate(p_lo=0.5, p_hi=0.4, p_mid=0.45, trials_per_probe=10, target=0.5, master_seed=1, probes=3)


class TestPercolationProbability:
    """Estimates of P_p(percolation)."""

    def test_extremes(self, square4):
        assert percolation_prob(square4, 0.0, 10, 3, workers=1).estimate == 0.0
        assert percolation_prob(square4, 1.0, 10, 3, workers=1).estimate == 1.0

    def test_reproducible(self, square8):
        one = percolation_prob(square8, 0.15, 12, 77, workers=1)
        two = percolation_prob(square8, 0.15, 12, 77, workers=1)
        assert one == two
        assert one.master_seed == 77

    @pytest.mark.parametrize("workers", [2, 4, None])
    def test_independent_of_workers(self, square8, workers):
        serial = percolation_prob(square8, 0.15, 40, 77, workers=1)
        assert percolation_prob(square8, 0.15, 40, 77, workers=workers) == serial

    def test_counts_trials(self, square4):
        percolation_prob(square4, 0.5, 10, 3, workers=1)
        assert trials_total.value(operation="percolation") == 10

    def test_bad_trials(self, square4):
        with pytest.raises(DomainError):
            percolation_prob(square4, 0.5, 0, 3)


class TestCoupling:
    """Common random numbers across densities."""

    def test_monotone_per_trial(self):
        spec = LatticeSpec.uniform(d=2, n=16, r=2)
        ps = [0.02, 0.05, 0.1, 0.2]
        rows = coupled_indicators(spec, ps, 40, 5, workers=1)
        assert rows.shape == (4, 40)
        assert np.all(rows[:-1] <= rows[1:])

    def test_monotone_estimates(self):
        spec = LatticeSpec.uniform(d=2, n=32, r=2)
        low = percolation_prob(spec, 0.02, 10, 11, workers=1)
        high = percolation_prob(spec, 0.2, 10, 11, workers=1)
        assert high.estimate >= low.estimate

    def test_workers_agree(self, square8):
        ps = [0.1, 0.3]
        assert np.array_equal(
            coupled_indicators(square8, ps, 40, 2, workers=1),
            coupled_indicators(square8, ps, 40, 2, workers=2),
        )


class TestCriticalProbability:
    """Bisection for p_c."""

    def test_single_cell_median(self):
        spec = LatticeSpec.uniform(d=1, n=1, r=1)
        estimate = pc_estimate(spec, 2000, 0.005, master_seed=3, workers=1)
        assert estimate.p_lo < estimate.p_mid < estimate.p_hi
        assert estimate.p_hi - estimate.p_lo <= 0.005
        assert estimate.p_mid == pytest.approx(0.5, abs=0.05)

    def test_reproducible(self, square8):
        one = pc_estimate(square8, 10, 0.02, master_seed=8, workers=1)
        two = pc_estimate(square8, 10, 0.02, master_seed=8, workers=1)
        assert one == two

    def test_bad_target(self, square8):
        with pytest.raises(DomainError):
            pc_estimate(square8, 10, 0.01, target=0.0)

    @pytest.mark.slow
    def test_decreasing_in_n(self):
        values = [
            pc_estimate(LatticeSpec.uniform(d=2, n=n, r=2), 400, 2e-3, master_seed=2024).p_mid
            for n in (16, 32, 64, 128)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestCrossingProbability:
    """Crossing estimates against exact values and lower bounds."""

    def test_extremes(self, square4):
        rect = Rect((1, 1), (4, 2))
        assert crossing_prob(square4, rect, 1.0, 1, 10, 1, workers=1).estimate == 1.0
        assert crossing_prob(square4, rect, 0.0, 1, 10, 1, workers=1).estimate == 0.0

    def test_lower_bound(self, square4):
        p = 0.05
        rect = Rect((1, 1), (4, 4))
        report = crossing_prob(square4, rect, p, 1, 2000, 21, workers=1)
        bound = beta(1, u_scaled(rect.dim, p, 1)) ** (rect.dim[0] + 1)
        sigma = report.half_width / 1.96
        assert report.estimate + 3 * sigma >= bound

    def test_matches_exact_law(self, square4):
        """P(cross) = u L(a_1 - 2, u) with u the face-emptiness parameter."""
        p = 0.2
        rect = Rect((1, 1), (4, 3))
        u1 = u_scaled(rect.dim, p, 1)
        exact = u1 * lgap_probability_exact(rect.dim[0] - 2, 0, u1)
        report = crossing_prob(square4, rect, p, 1, 4000, 5, workers=1)
        sigma = math.sqrt(exact * (1 - exact) / report.trials)
        assert abs(report.estimate - exact) <= 4 * sigma

    def test_forced_cells_raise_probability(self, square4):
        rect = Rect((1, 1), (2, 2))
        forced = CellSet.from_cells(square4, [(2, 1)])
        assert crossing_prob(square4, rect, 0.0, 1, 5, 1, forced=forced, workers=1).estimate == 1.0

    def test_axis_checked(self, square4):
        with pytest.raises(DomainError):
            crossing_prob(square4, Rect((1, 1), (2, 2)), 0.1, 3, 5)


class TestOtherEvents:
    """Diameter events and Gamma-set sizes."""

    def test_diam_threshold_one(self, square4):
        p = 0.05
        report = diam_event_prob(square4, p, 1, 2000, 13, workers=1)
        exact = 1 - (1 - p) ** square4.cell_count
        sigma = math.sqrt(exact * (1 - exact) / 2000)
        assert abs(report.estimate - exact) <= 4 * sigma

    def test_diam_p_zero(self, square4):
        assert diam_event_prob(square4, 0.0, 1, 10, 1, workers=1).estimate == 0.0

    def test_diam_bad_length(self, square4):
        with pytest.raises(DomainError):
            diam_event_prob(square4, 0.1, 0, 10)

    def test_gamma_extremes(self, square4):
        assert gamma_expectation(square4, 0.0, 2, (2, 2), 5, 1, workers=1).mean == 0.0
        full = gamma_expectation(square4, 1.0, 4, (2, 2), 5, 1, workers=1)
        assert full.mean == 16.0
        assert full.std_error == 0.0

    def test_gamma_bad_cell(self, square4):
        with pytest.raises(BoundsError):
            gamma_expectation(square4, 0.1, 2, (9, 9), 5, 1)
