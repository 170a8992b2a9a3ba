"""Hitting-time sequences, derived quantities, and their containers."""

import io
import math

import numpy as np
import pytest

from retrotube.errors import BudgetExhausted, HorizonExceeded, ParityError
from retrotube.rotation import (
    HitSequence,
    RotationParams,
    TransferMatrices,
    continuous_position,
    exit_index,
    exit_returns,
    flight_time,
    hitting_times_fast,
    hitting_times_naive,
    visit_count,
)

SILVER = math.sqrt(2) - 1


@pytest.mark.parametrize("fn", [hitting_times_naive, hitting_times_fast])
def test_silver_ratio_orbit_first_five_hits(fn):
    p = RotationParams(x0=0.0, alpha=SILVER, epsilon=0.5)
    h = fn(p, 5)
    assert h.m == (2, 3, 5, 7, 10)
    assert h.n == (2, 1, 2, 2, 3)
    assert h.xi == (2, 1, 3, 1, 4)


@pytest.mark.parametrize("fn", [hitting_times_naive, hitting_times_fast])
def test_half_step_periodic_orbit(fn):
    # rational step: the orbit alternates {0.5, 0.0}, window has zero shift
    p = RotationParams(x0=0.0, alpha=0.5, epsilon=0.2)
    assert fn(p, 3).m == (2, 4, 6)


@pytest.mark.parametrize("fn", [hitting_times_naive, hitting_times_fast])
def test_shallow_launch_exits_after_one_reflection(fn):
    p = RotationParams.from_slope(x0=0.9, slope=0.2, epsilon=0.3)
    h = fn(p, 2)
    assert h.m == (1, 5)
    assert h.n == (1, 4)
    assert h.xi == (1, -3)


def test_params_validation():
    with pytest.raises(ValueError):
        RotationParams(x0=0.0, alpha=0.1, epsilon=0.0)
    with pytest.raises(ValueError):
        RotationParams(x0=0.0, alpha=0.1, epsilon=1.0)
    with pytest.raises(ValueError):
        RotationParams(x0=-0.1, alpha=0.1, epsilon=0.5)
    with pytest.raises(ValueError):
        RotationParams(x0=1.0, alpha=0.1, epsilon=0.5)
    with pytest.raises(ValueError):
        RotationParams(x0=0.0, alpha=0.3, epsilon=0.5, slope=1.2)


def test_from_slope_reduces_modulo_one():
    p = RotationParams.from_slope(x0=0.2, slope=2.3, epsilon=0.1)
    assert p.alpha == 2.3 % 1.0
    assert p.slope == 2.3
    q = RotationParams.from_slope(x0=0.2, slope=-0.3, epsilon=0.1)
    assert q.alpha == (-0.3) % 1.0


def test_hit_sequence_construction_and_len():
    h = HitSequence.from_times((2, 3, 5, 7, 10))
    assert len(h) == 5
    assert h.n == (2, 1, 2, 2, 3)
    assert h.xi == (2, 1, 3, 1, 4)


def test_hit_sequence_csv_round_trip():
    h = HitSequence.from_times((1, 5, 9, 12))
    buf = io.StringIO()
    h.to_csv(buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "k,m,n,xi"
    back = HitSequence.from_csv(io.StringIO(text))
    assert back == h


def test_hit_sequence_csv_rejects_corrupt_columns():
    bad = "k,m,n,xi\n1,2,2,2\n2,3,7,1\n"
    with pytest.raises(ValueError):
        HitSequence.from_csv(io.StringIO(bad))


def test_transfer_matrices_match_iterative_sums():
    rng = np.random.default_rng(11)
    tm = TransferMatrices(order=8)
    for _ in range(50):
        n = rng.integers(1, 50, size=8)
        xi = tm.xi_from_returns(n)
        m = tm.times_from_returns(n)
        acc, tot = 0, 0
        for j, nj in enumerate(n):
            acc += nj if j % 2 == 0 else -nj
            tot += nj
            assert xi[j] == acc
            assert m[j] == tot


def test_transfer_matrices_shape_and_signs():
    tm = TransferMatrices(order=4)
    assert tm.A.tolist() == [
        [1, 0, 0, 0],
        [1, -1, 0, 0],
        [1, -1, 1, 0],
        [1, -1, 1, -1],
    ]
    assert tm.B.tolist() == [
        [1, 0, 0, 0],
        [1, 1, 0, 0],
        [1, 1, 1, 0],
        [1, 1, 1, 1],
    ]
    with pytest.raises(ValueError):
        TransferMatrices(order=0)


def test_exit_index_examples():
    assert exit_index((3, 1, 2, 4)) == 3
    assert exit_index((1, 4)) == 1
    assert exit_index((2, 1, 2)) is None


def test_exit_index_is_odd_when_defined():
    rng = np.random.default_rng(5)
    seen = 0
    for _ in range(300):
        x0 = rng.uniform(0.01, 0.99)
        alpha = rng.uniform(0.0, 1.0)
        p = RotationParams(x0=x0, alpha=alpha, epsilon=0.05)
        n, q = exit_returns(p, max_returns=2000, step_budget=10 ** 7)
        if q is not None:
            seen += 1
            assert q % 2 == 1
            assert exit_index(n) == q
            # partial sums before the crossing stay positive
            assert exit_index(n[:-1]) is None
    assert seen > 200


def test_flight_time_examples():
    assert flight_time((3, 1, 2, 4), 3, 0.0) == pytest.approx(10.0)
    assert flight_time((1, 4), 1, 0.2) == pytest.approx(2.0 * math.sqrt(1.04))


def test_flight_time_rejects_even_exit_index():
    with pytest.raises(ParityError):
        flight_time((3, 1, 2, 4), 2, 0.0)
    with pytest.raises(ParityError):
        flight_time((3, 1), 0, 0.0)
    with pytest.raises(ValueError):
        flight_time((3,), 3, 0.0)


def test_visit_count_example():
    p = RotationParams(x0=0.0, alpha=0.5, epsilon=0.2)
    assert visit_count(p, 2.0) == 5


def test_visit_count_agrees_with_hit_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(40):
        p = RotationParams(x0=rng.uniform(0, 1), alpha=rng.uniform(0, 1),
                           epsilon=rng.uniform(0.05, 0.5))
        horizon = rng.uniform(0.0, 4.0)
        limit = math.floor(horizon / p.epsilon)
        got = visit_count(p, horizon)
        try:
            h = hitting_times_naive(p, got + 1, step_budget=10 ** 6)
            assert h.m[got] > limit
            expect = sum(1 for mk in h.m if mk <= limit)
        except BudgetExhausted as e:
            expect = sum(1 for mk in e.partial.m if mk <= limit)
        assert got == expect
    assert visit_count(p, 0.0) == 0


def test_continuous_position_branches():
    hits = HitSequence.from_times((2, 3))
    eps = 0.1
    # outbound leg before the first reflection
    assert continuous_position(hits, eps, 0.15) == pytest.approx(0.15)
    # inbound leg after the first reflection
    assert continuous_position(hits, eps, 0.25) == pytest.approx(0.15)
    with pytest.raises(HorizonExceeded):
        continuous_position(hits, eps, 0.5)
    with pytest.raises(HorizonExceeded):
        continuous_position(HitSequence(m=(), n=(), xi=()), eps, 0.0)
    with pytest.raises(ValueError):
        continuous_position(hits, eps, -0.1)


def test_continuous_position_is_continuous_across_hits():
    p = RotationParams(x0=0.3, alpha=SILVER, epsilon=0.2)
    hits = hitting_times_fast(p, 8)
    for mk in hits.m[:-1]:
        t = 0.2 * mk
        lo = continuous_position(hits, 0.2, t - 1e-9)
        hi = continuous_position(hits, 0.2, t + 1e-9)
        assert hi == pytest.approx(lo, abs=1e-6)


def test_exit_returns_shallow_launch():
    p = RotationParams.from_slope(x0=0.9, slope=0.2, epsilon=0.3)
    assert exit_returns(p) == ((1, 4), 1)


def test_exit_returns_censors_on_return_cap():
    p = RotationParams(x0=0.0, alpha=SILVER, epsilon=0.5)
    n, q = exit_returns(p, max_returns=3)
    assert q is None
    assert len(n) == 3
