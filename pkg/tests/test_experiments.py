"""Estimator plumbing tests at small sample sizes.

Statistical quality at production scale is exercised by the acceptance
tests; here every estimator is checked for determinism, thread-count
invariance, honest counters, and agreement with direct recomputation on
the same draws.
"""

import io
import math

import numpy as np
import pytest

from retrotube import experiments as ex
from retrotube.errors import ArityError, EmptySample, InsufficientData
from retrotube.sampling import block_sizes, block_streams, exit_sweep


class TestMeasureSpec:
    def test_uniform_box_draw_stays_inside(self):
        rng = np.random.default_rng(0)
        y, phi, resampled = ex.UNIFORM_BOX.draw(rng, 5000)
        assert y.shape == phi.shape == (5000,)
        assert np.all((y > 0) & (y < 1))
        assert np.all((phi > -0.5) & (phi < 0.5))
        assert np.all(phi != 0.0)
        assert resampled >= 0

    def test_custom_density_normalization_enforced(self):
        bad = ex.MeasureSpec(kind="custom-density",
                             density=lambda y, p: 2.0, bound=3.0)
        with pytest.raises(ValueError, match="integrates"):
            ex.estimate_reversal(0.1, 0.1, 100, measure=bad, rng=0)

    def test_custom_density_bound_enforced(self):
        lying = ex.MeasureSpec(kind="custom-density",
                               density=lambda y, p: 4.0 * y, bound=2.0)
        with pytest.raises(ValueError, match="bound"):
            lying.normalization()

    def test_custom_density_shifts_the_mean(self):
        tilted = ex.MeasureSpec(
            kind="custom-density",
            density=lambda y, p: 2.0 * y, bound=2.0, name="tilted")
        rng = np.random.default_rng(3)
        y, _, resampled = tilted.draw(rng, 20000)
        # linear density on (0,1) has mean 2/3
        assert abs(y.mean() - 2.0 / 3.0) < 0.01
        assert resampled > 5000

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ex.MeasureSpec(kind="point-mass")

    def test_rejects_missing_density(self):
        with pytest.raises(ValueError):
            ex.MeasureSpec(kind="custom-density", bound=1.0)


class TestGuards:
    def test_atom_detection_fires_on_repeats(self):
        flat = np.full(50, 0.327)
        with pytest.raises(ValueError, match="atom"):
            ex._check_atoms(flat)

    def test_atom_detection_passes_continuous_samples(self):
        rng = np.random.default_rng(1)
        assert ex._check_atoms(rng.random(10 ** 5)) <= 2

    def test_seed_resolution(self):
        assert ex._resolve_seed(17) == 17
        g = np.random.default_rng(5)
        s = ex._resolve_seed(g)
        assert 0 <= s < 2 ** 63
        assert ex._resolve_seed(None) != ex._resolve_seed(None)
        with pytest.raises(ValueError):
            ex._resolve_seed(-3)
        with pytest.raises(TypeError):
            ex._resolve_seed("abc")

    def test_empty_sample_rejected(self):
        with pytest.raises(EmptySample):
            ex.estimate_reversal(0.1, 0.1, 0, rng=0)
        with pytest.raises(EmptySample):
            ex.estimate_Q_pmf(0.1, 0, rng=0)


class TestEstimateReversal:
    def test_deterministic_and_thread_invariant(self):
        a = ex.estimate_reversal(0.1, 0.1, 3000, rng=7)
        b = ex.estimate_reversal(0.1, 0.1, 3000, rng=7)
        c = ex.estimate_reversal(0.1, 0.1, 3000, rng=7, threads=3)
        assert a.successes == b.successes == c.successes
        assert a.censored == b.censored == c.censored
        assert a.estimate == b.estimate == c.estimate

    def test_wide_tolerance_reduces_to_exact_reversal(self):
        # with tolerance above 1 the ordinate condition is vacuous, so the
        # estimate must not depend on it
        a = ex.estimate_reversal(0.1, 1.5, 2000, rng=11)
        b = ex.estimate_reversal(0.1, 2.5, 2000, rng=11)
        assert a.successes == b.successes

    def test_monotone_in_tolerance(self):
        tight = ex.estimate_reversal(0.1, 0.02, 2000, rng=13)
        loose = ex.estimate_reversal(0.1, 0.3, 2000, rng=13)
        assert tight.successes <= loose.successes

    def test_audit_clean_on_shared_draws(self):
        r = ex.estimate_reversal(0.1, 0.1, 4000, rng=19,
                                 audit_fraction=0.05)
        assert r.audit["checked"] >= 50
        assert r.audit["mismatches"] == 0

    def test_ci_brackets_estimate(self):
        r = ex.estimate_reversal(0.3, 0.1, 1000, rng=23)
        lo, hi = r.ci
        assert lo <= r.estimate <= hi
        assert r.trials == 1000
        assert 0 < r.estimate < 1

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            ex.estimate_reversal(0.1, 0.0, 100, rng=0)


class TestEstimateQPmf:
    def test_counts_add_to_one_exactly(self):
        p = ex.estimate_Q_pmf(0.1, 4000, rng=29)
        assert p.total() == 1.0
        assert sum(p.counts()) + p.tail_count() == p.trials

    def test_support_is_odd_integers(self):
        p = ex.estimate_Q_pmf(0.1, 500, k_max=13, rng=31)
        assert p.support == (1, 3, 5, 7, 9, 11, 13)

    def test_matches_direct_sweep_on_same_stream(self):
        # one block: replay the exact draw stream and rebuild the histogram
        samples, k_max, seed, eps = 2500, 9, 37, 0.1
        p = ex.estimate_Q_pmf(eps, samples, k_max=k_max, rng=seed)
        sizes = block_sizes(samples)
        assert len(sizes) == 1
        rng = block_streams(seed, 1)[0]
        y, slope, _ = ex._draw_block(ex.UNIFORM_BOX, rng, samples)
        batch = exit_sweep(eps, y, slope, max_returns=k_max + 2)
        got = batch.q[~batch.censored]
        for k, prob in zip(p.support, p.probs):
            assert prob == (got == k).sum() / samples
        beyond = int((got > k_max).sum())
        assert p.meta["beyond_support"] == beyond
        assert p.tail_count() == beyond + int(batch.censored.sum())

    def test_deterministic_and_thread_invariant(self):
        a = ex.estimate_Q_pmf(0.03, 3000, rng=41)
        b = ex.estimate_Q_pmf(0.03, 3000, rng=41, threads=2)
        assert a.probs == b.probs
        assert a.tail == b.tail

    def test_index_one_dominates(self):
        p = ex.estimate_Q_pmf(0.03, 3000, rng=43)
        assert p.probs[0] > 0.4


class TestEstimateTCdf:
    def test_monotone_and_bounded(self):
        c = ex.estimate_T_cdf(0.1, 2000, grid=np.geomspace(0.05, 200, 25),
                              rng=47)
        vals = np.asarray(c.values)
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0) & (vals <= 1))

    def test_values_unaffected_by_grid_truncation(self):
        # the step budget follows the grid end; censoring beyond the grid
        # must leave the values inside a shared prefix unchanged
        short = tuple(np.geomspace(0.05, 20.0, 15))
        long = short + tuple(np.geomspace(40.0, 2000.0, 10))
        a = ex.estimate_T_cdf(0.1, 2000, grid=short, rng=53)
        b = ex.estimate_T_cdf(0.1, 2000, grid=long, rng=53)
        assert a.values == b.values[:len(short)]
        assert a.meta["censored"] >= b.meta["censored"]

    def test_matches_direct_flight_times(self):
        samples, seed, eps = 1500, 59, 0.1
        grid = tuple(np.geomspace(0.1, 50.0, 12))
        c = ex.estimate_T_cdf(eps, samples, grid=grid, rng=seed)
        rng = block_streams(seed, 1)[0]
        y, slope, _ = ex._draw_block(ex.UNIFORM_BOX, rng, samples)
        # generous budget: every flight that finishes inside the grid ends
        # well before it, or is settled by its pending return
        batch = exit_sweep(eps, y, slope, m_budget=10 ** 6)
        settled = ~batch.censored | batch.crossing_pending()
        times = 2.0 * np.sqrt(1.0 + batch.slope * batch.slope) \
            * batch.s_odd
        st = eps * times[settled]
        for t, v in zip(grid, c.values):
            assert v == (st <= t).sum() / samples

    def test_deterministic(self):
        g = tuple(np.geomspace(0.05, 100, 10))
        a = ex.estimate_T_cdf(0.03, 1500, grid=g, rng=61)
        b = ex.estimate_T_cdf(0.03, 1500, grid=g, rng=61, threads=2)
        assert a.values == b.values

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            ex.estimate_T_cdf(0.1, 100, grid=(1.0, 0.5), rng=0)
        with pytest.raises(ValueError):
            ex.estimate_T_cdf(0.1, 100, grid=(-1.0, 2.0), rng=0)
        with pytest.raises(ValueError):
            ex.estimate_T_cdf(0.1, 100, grid=(), rng=0)


class TestTailDiagnostic:
    def test_finite_slope_at_moderate_scale(self):
        t = ex.tail_diagnostic(1.0, 0.01, 150000, rng=67, min_count=30)
        assert math.isfinite(t.slope)
        assert t.slope < 0
        assert len(t.fit_ks) >= 2
        assert all(a >= b for a, b in zip(t.survival, t.survival[1:]))

    def test_insufficient_data_raised_honestly(self):
        with pytest.raises(InsufficientData):
            ex.tail_diagnostic(1.0, 0.01, 500, rng=71)

    def test_deterministic_and_thread_invariant(self):
        a = ex.tail_diagnostic(1.0, 0.01, 60000, rng=73, min_count=20)
        b = ex.tail_diagnostic(1.0, 0.01, 60000, rng=73, min_count=20,
                               threads=2)
        assert a.counts == b.counts
        assert a.slope == b.slope

    def test_validation(self):
        with pytest.raises(ValueError):
            ex.tail_diagnostic(0.0, 0.01, 100, rng=0)
        with pytest.raises(ValueError):
            ex.tail_diagnostic(1.0, 0.01, 100, k_range=(10, 10), rng=0)


class TestJointHitCdf:
    def test_zero_time_is_certain(self):
        j = ex.joint_hit_cdf(0.1, 400, (0.0,), rng=79)
        assert j.dynamic == 1.0
        assert j.lattice == 1.0

    def test_arity_capped_at_three(self):
        with pytest.raises(ArityError):
            ex.joint_hit_cdf(0.1, 100, (1.0, 2.0, 3.0, 4.0), rng=0)
        with pytest.raises(ArityError):
            ex.joint_hit_cdf(0.1, 100, (), rng=0)

    def test_both_estimates_close_at_small_epsilon(self):
        j = ex.joint_hit_cdf(0.01, 3000, (0.7,), rng=83)
        # both laws estimate the same limit; allow joint 3-sigma slack
        sd = 2 * math.sqrt(0.25 / 3000)
        assert abs(j.dynamic - j.lattice) < 3 * sd + 0.02

    def test_monotone_in_time(self):
        a = ex.joint_hit_cdf(0.05, 1500, (0.3,), rng=89)
        b = ex.joint_hit_cdf(0.05, 1500, (1.0,), rng=89)
        assert a.dynamic >= b.dynamic
        assert a.lattice >= b.lattice

    def test_deterministic(self):
        a = ex.joint_hit_cdf(0.05, 500, (0.5, 1.0), rng=97)
        b = ex.joint_hit_cdf(0.05, 500, (0.5, 1.0), rng=97)
        assert a.dynamic == b.dynamic and a.lattice == b.lattice


class TestReversalSweep:
    def test_rows_cover_grid_and_counters_add_up(self):
        sw = ex.reversal_sweep(0.1, 800, epsilons=(0.3, 0.1), rng=101)
        assert tuple(r.epsilon for r in sw.rows) == (0.3, 0.1)
        cnt = sw.counters()
        assert cnt["censored"] == sum(r.censored for r in sw.rows)
        assert cnt["audit_mismatches"] == 0

    def test_trend_toward_certainty(self):
        sw = ex.reversal_sweep(0.2, 1200, epsilons=(0.3, 0.03), rng=103)
        assert sw.rows[0].estimate < sw.rows[1].estimate

    def test_csv_round_trip(self):
        sw = ex.reversal_sweep(0.1, 300, epsilons=(0.3, 0.1), rng=107)
        buf = io.StringIO()
        sw.to_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0].startswith("epsilon,estimate,ci_low")
        assert len(lines) == 3
        first = lines[1].split(",")
        assert float(first[0]) == 0.3
        assert int(first[4]) == 300

    def test_deterministic(self):
        a = ex.reversal_sweep(0.1, 400, epsilons=(0.1,), rng=109)
        b = ex.reversal_sweep(0.1, 400, epsilons=(0.1,), rng=109)
        assert a.rows[0].successes == b.rows[0].successes

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            ex.reversal_sweep(0.1, 100, epsilons=(), rng=0)
