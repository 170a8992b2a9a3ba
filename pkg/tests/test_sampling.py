"""Batched exit solver against the scalar reference, plus block plans."""

import math
from fractions import Fraction

import numpy as np
import pytest

from retrotube.billiard import InitialCondition, exit_record_from_returns
from retrotube.rotation import (RotationParams, _Stepper,
                                exit_returns as rotation_exit_returns,
                                visit_count)
from retrotube.sampling import (DEFAULT_BLOCK, ExitBatch, block_sizes,
                                block_streams, exit_sweep, run_blocks,
                                visit_counts)


def draw_inputs(rng, n):
    y = rng.random(n)
    y = np.where((y <= 0.0) | (y >= 1.0), 0.5, y)
    phi = rng.uniform(-0.5, 0.5, n)
    slope = np.tan(np.pi * phi)
    return y, slope


def scalar_reference(epsilon, y, slope, max_returns, m_budget):
    ic = InitialCondition(y_in=float(y), slope=float(slope), epsilon=epsilon)
    return exit_record_from_returns(ic, max_returns=max_returns,
                                    step_budget=m_budget)


class TestBlockPlans:
    def test_sizes_cover_total(self):
        assert block_sizes(0) == ()
        assert block_sizes(10, 4) == (4, 4, 2)
        assert block_sizes(8, 4) == (4, 4)
        assert sum(block_sizes(100000)) == 100000
        assert block_sizes(100000) == (DEFAULT_BLOCK, 100000 - DEFAULT_BLOCK)

    def test_sizes_validation(self):
        with pytest.raises(ValueError):
            block_sizes(-1)
        with pytest.raises(ValueError):
            block_sizes(10, 0)

    def test_streams_are_reproducible(self):
        a = [g.random(3).tolist() for g in block_streams(7, 4)]
        b = [g.random(3).tolist() for g in block_streams(7, 4)]
        assert a == b
        c = [g.random(3).tolist() for g in block_streams(8, 4)]
        assert a != c

    def test_run_blocks_thread_count_invariant(self):
        def worker(rng, size):
            return rng.random(size).sum()

        single = run_blocks(3, 50000, worker, block=4096, threads=1)
        multi = run_blocks(3, 50000, worker, block=4096, threads=3)
        assert single == multi
        again = run_blocks(3, 50000, worker, block=4096, threads=2)
        assert single == again


class TestExitSweepAgainstScalar:
    @pytest.mark.parametrize("epsilon", [0.3, 0.1, 0.01, 1e-3])
    def test_bit_identical_outputs(self, epsilon):
        rng = np.random.default_rng(1234)
        y, slope = draw_inputs(rng, 300)
        max_returns, m_budget = 300, 10 ** 6
        batch = exit_sweep(epsilon, y, slope, max_returns=max_returns,
                           m_budget=m_budget)
        n_censored = 0
        for i in range(y.size):
            rec = scalar_reference(epsilon, y[i], slope[i], max_returns,
                                   m_budget)
            params = RotationParams.from_slope(float(y[i]), float(slope[i]),
                                               epsilon)
            gaps, _ = rotation_exit_returns(params, max_returns=max_returns,
                                            step_budget=m_budget)
            assert batch.m_final[i] == sum(gaps)
            assert batch.k_final[i] == len(gaps)
            assert batch.s_odd[i] == sum(gaps[0::2])
            assert batch.acc_final[i] == 2 * sum(gaps[0::2]) - sum(gaps)
            if rec is None:
                assert batch.q[i] == -1
                assert batch.censored[i]
                assert math.isnan(batch.y_out[i])
                if gaps:
                    # the uncommitted return surfaces as the next gap once
                    # the budget stops binding
                    probe, _ = rotation_exit_returns(
                        params, max_returns=len(gaps) + 1,
                        step_budget=10 ** 18)
                    assert batch.pending_step[i] == probe[len(gaps)]
                else:
                    assert batch.pending_step[i] == -1
                n_censored += 1
                continue
            assert batch.pending_step[i] == -1
            assert batch.q[i] == rec.q
            assert batch.y_out[i] == rec.y_out
            assert batch.zbar[i] == rec.zbar
            assert bool(batch.reversed_flag[i]) == rec.reversed_exactly
        # the comparison must exercise both outcomes
        assert 0 < n_censored < y.size

    def test_small_return_cap(self):
        rng = np.random.default_rng(5)
        y, slope = draw_inputs(rng, 200)
        batch = exit_sweep(0.1, y, slope, max_returns=2, m_budget=10 ** 9)
        for i in range(y.size):
            rec = scalar_reference(0.1, y[i], slope[i], 2, 10 ** 9)
            assert (rec is None) == bool(batch.censored[i])
            if rec is not None:
                assert batch.q[i] == rec.q == 1

    def test_tight_step_budget(self):
        rng = np.random.default_rng(6)
        y, slope = draw_inputs(rng, 200)
        batch = exit_sweep(0.01, y, slope, max_returns=10 ** 4, m_budget=500)
        for i in range(y.size):
            rec = scalar_reference(0.01, y[i], slope[i], 10 ** 4, 500)
            assert (rec is None) == bool(batch.censored[i])
            if rec is not None:
                assert batch.q[i] == rec.q
                assert batch.y_out[i] == rec.y_out

    def test_exact_state_matches_window_coordinates(self):
        rng = np.random.default_rng(7)
        y, slope = draw_inputs(rng, 50)
        batch = exit_sweep(1e-3, y, slope, max_returns=100, m_budget=10 ** 7)
        checked = 0
        for i in range(y.size):
            if batch.state_s[i] < 0:
                continue
            d = 1 << int(batch.state_s[i])
            assert Fraction(int(batch.state_x[i]), d) == Fraction(float(y[i]))
            params = RotationParams.from_slope(float(y[i]), float(slope[i]),
                                               1e-3)
            stp = _Stepper(params)
            assert stp.D == d
            assert stp.A == int(batch.state_a[i])
            checked += 1
        assert checked > 40

    def test_scalar_fallback_for_deep_denominators(self):
        y = np.array([1e-12, 0.25, 0.75])
        slope = np.array([0.37, 0.37, 0.41])
        batch = exit_sweep(0.25, y, slope, max_returns=100, m_budget=10 ** 7)
        assert batch.meta["scalar_fallbacks"] == 1
        assert batch.state_s[0] == -1
        rec = scalar_reference(0.25, y[0], slope[0], 100, 10 ** 7)
        assert rec is not None
        assert batch.q[0] == rec.q
        assert batch.y_out[0] == rec.y_out

    def test_pending_crossing_settles_the_exit(self):
        # a short budget censors lanes whose detection move does not fit;
        # the flagged ones must exit at exactly the recorded state once the
        # budget stops binding
        rng = np.random.default_rng(99)
        y, slope = draw_inputs(rng, 800)
        short = exit_sweep(0.05, y, slope, max_returns=10 ** 5, m_budget=300)
        long = exit_sweep(0.05, y, slope, max_returns=10 ** 5,
                          m_budget=10 ** 12)
        pend = short.crossing_pending()
        assert pend.sum() >= 1
        for i in np.nonzero(pend)[0]:
            if long.censored[i]:
                assert long.crossing_pending()[i]
                assert long.k_final[i] == short.k_final[i]
            else:
                assert long.q[i] == short.k_final[i]
            assert long.s_odd[i] == short.s_odd[i]
        still_open = short.censored & ~pend
        assert still_open.sum() >= 1
        for i in np.nonzero(still_open)[0]:
            if not long.censored[i]:
                # with the exit open at the censor, the flight had to run
                # past the short budget
                assert 2 * long.s_odd[i] > 300

    def test_flight_times_match_reference(self):
        rng = np.random.default_rng(8)
        y, slope = draw_inputs(rng, 100)
        batch = exit_sweep(0.1, y, slope, max_returns=200, m_budget=10 ** 7)
        times = batch.flight_times()
        for i in range(y.size):
            rec = scalar_reference(0.1, y[i], slope[i], 200, 10 ** 7)
            if rec is None:
                assert math.isnan(times[i])
            else:
                assert times[i] == rec.flight

    def test_exit_indices_always_odd(self):
        rng = np.random.default_rng(9)
        y, slope = draw_inputs(rng, 2000)
        batch = exit_sweep(0.03, y, slope, max_returns=500, m_budget=10 ** 7)
        ex = batch.exited()
        assert np.all(batch.q[ex] % 2 == 1)
        assert np.all(batch.s_odd[ex] >= 1)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            exit_sweep(0.0, np.array([0.5]), np.array([0.2]))
        with pytest.raises(ValueError):
            exit_sweep(0.1, np.array([0.5, 0.6]), np.array([0.2]))
        with pytest.raises(ValueError):
            exit_sweep(0.1, np.array([0.5]), np.array([0.2]),
                       m_budget=10 ** 16)

    def test_empty_batch(self):
        batch = exit_sweep(0.1, np.array([]), np.array([]))
        assert isinstance(batch, ExitBatch)
        assert batch.q.size == 0


class TestVisitCounts:
    def test_against_exact_counter(self):
        rng = np.random.default_rng(11)
        x0 = rng.random(150)
        alpha = rng.random(150)
        counts = visit_counts(0.05, x0, alpha, 400, chunk=64)
        for i in range(x0.size):
            params = RotationParams(x0=float(x0[i]), alpha=float(alpha[i]),
                                    epsilon=0.05)
            stp = _Stepper(params)
            exact = sum(stp.is_hit(l) for l in range(1, 401))
            assert counts[i] == exact

    def test_horizon_wrapper_consistency(self):
        rng = np.random.default_rng(12)
        x0 = rng.random(50)
        alpha = rng.random(50)
        eps = 0.01
        counts = visit_counts(eps, x0, alpha, 100)
        for i in range(x0.size):
            params = RotationParams(x0=float(x0[i]), alpha=float(alpha[i]),
                                    epsilon=eps)
            assert counts[i] == visit_count(params, 100 * eps)

    def test_zero_limit(self):
        out = visit_counts(0.1, np.array([0.3]), np.array([0.7]), 0)
        assert out.tolist() == [0]

    def test_validation(self):
        with pytest.raises(ValueError):
            visit_counts(1.5, np.array([0.3]), np.array([0.7]), 10)
        with pytest.raises(ValueError):
            visit_counts(0.1, np.array([0.3]), np.array([0.7]), -1)
