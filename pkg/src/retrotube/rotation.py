"""Circle-rotation reduction of the corrugated-tube billiard.

A trajectory entering the tube at ordinate ``x0`` with slope ``slope`` meets
the barrier planes exactly at the steps ``l`` where the rotation orbit
``x0 + l * alpha  (mod 1)`` lands within ``epsilon/2`` of an integer, with
``alpha = slope mod 1``.  Everything downstream (signed reflection
coordinates, exit index, flight time) is integer arithmetic on those hitting
times.

Hit detection is exact: an IEEE double is a dyadic rational, so membership of
``x0 + l*alpha`` in the closed window is decided with integer arithmetic at a
common power-of-two denominator.  The naive path scans steps (vectorised with
a float prefilter, every candidate confirmed exactly); the fast path jumps
from hit to hit using the three-gap structure of rotation orbits and is
bit-identical to the naive path by construction.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExhausted, HorizonExceeded, ParityError

DEFAULT_STEP_BUDGET = 10 ** 9


# ---------------------------------------------------------------------------
# parameter and result containers


@dataclass(frozen=True)
class RotationParams:
    """Launch data for the rotation picture.

    ``alpha`` is the rotation step reduced to [0, 1); ``slope`` keeps the
    unreduced slope because the flight time needs sqrt(1 + slope^2).
    """

    x0: float
    alpha: float
    epsilon: float
    slope: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.slope is None:
            object.__setattr__(self, "slope", self.alpha)
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 <= self.x0 < 1.0:
            raise ValueError(f"x0 must lie in [0, 1), got {self.x0}")
        if self.alpha != self.slope % 1.0:
            raise ValueError("alpha must equal slope mod 1")

    @classmethod
    def from_slope(cls, x0: float, slope: float, epsilon: float) -> "RotationParams":
        return cls(x0=x0, alpha=slope % 1.0, epsilon=epsilon, slope=slope)


@dataclass(frozen=True)
class HitSequence:
    """Hitting times ``m``, return times ``n`` and signed reflection
    coordinates ``xi`` of one orbit, all exact integers.

    ``m`` is strictly increasing, ``n`` are the gaps (``n[0] = m[0]``), and
    ``xi[k] = n[0] - n[1] + ... +- n[k]`` alternates signs starting positive.
    """

    m: tuple
    n: tuple
    xi: tuple

    def __len__(self) -> int:
        return len(self.m)

    @classmethod
    def from_times(cls, m) -> "HitSequence":
        m = tuple(int(v) for v in m)
        n = []
        xi = []
        prev = 0
        acc = 0
        for k, mk in enumerate(m):
            gap = mk - prev
            n.append(gap)
            acc += gap if k % 2 == 0 else -gap
            xi.append(acc)
            prev = mk
        return cls(m=m, n=tuple(n), xi=tuple(xi))

    def to_csv(self, path_or_buf) -> None:
        """Write columns k,m,n,xi with a header row (k is 1-based)."""
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            buf = open(path_or_buf, "w", newline="")
            close = True
        else:
            buf = path_or_buf
        try:
            w = csv.writer(buf)
            w.writerow(["k", "m", "n", "xi"])
            for k, (mk, nk, xk) in enumerate(zip(self.m, self.n, self.xi), start=1):
                w.writerow([k, mk, nk, xk])
        finally:
            if close:
                buf.close()

    @classmethod
    def from_csv(cls, path_or_buf) -> "HitSequence":
        if isinstance(path_or_buf, (str, bytes)):
            with open(path_or_buf, newline="") as fh:
                text = fh.read()
        else:
            text = path_or_buf.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["k", "m", "n", "xi"]:
            raise ValueError("expected header row k,m,n,xi")
        m = [int(r[1]) for r in rows[1:] if r]
        seq = cls.from_times(m)
        # sanity: stored n and xi columns must agree with the recomputation
        for r, nk, xk in zip(rows[1:], seq.n, seq.xi):
            if int(r[2]) != nk or int(r[3]) != xk:
                raise ValueError("inconsistent n/xi columns")
        return seq


@dataclass(frozen=True)
class TransferMatrices:
    """Lower-triangular maps between return times and derived sequences.

    ``xi = A @ n`` with ``A[i, j] = (-1)^j`` for ``i >= j`` (0-based), and
    ``m = B @ n`` with ``B`` the all-ones lower triangle.
    """

    order: int
    A: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    B: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be positive")
        if self.A is None:
            k = self.order
            signs = np.array([(-1) ** j for j in range(k)], dtype=np.int64)
            tri = np.tril(np.ones((k, k), dtype=np.int64))
            object.__setattr__(self, "A", tri * signs[np.newaxis, :])
            object.__setattr__(self, "B", tri)

    def xi_from_returns(self, n) -> np.ndarray:
        return self.A @ np.asarray(n, dtype=np.int64)

    def times_from_returns(self, n) -> np.ndarray:
        return self.B @ np.asarray(n, dtype=np.int64)


# ---------------------------------------------------------------------------
# exact dyadic backend


def _dyadic(value: float):
    """Exact (numerator, log2 denominator) of a finite float."""
    num, den = float(value).as_integer_ratio()
    return num, den.bit_length() - 1


def _first_multiplier(a: int, n: int, c: int, w: int):
    """Smallest m >= 1 with (m*a - c) mod n <= w, or None if no m works.

    Euclid-style descent on (n mod a, a), so the cost is O(log n) even for
    denominators near 2^60.  Bands of multiples of a are scanned in order of
    the quotient, which visits candidate m in increasing order.
    """
    if w >= n - 1:
        return 1
    a %= n
    c %= n
    if (a - c) % n <= w:
        return 1
    if a == 0:
        return None
    if c:
        m0 = -(-c // a)  # ceil(c / a)
        if m0 * a - c <= w:
            return m0
    elif a <= w:
        return 1
    k = _first_multiplier(n % a, a, (-c - w) % a, w)
    if k is None:
        return None
    return (k * n + c + a - 1) // a


class _Stepper:
    """Exact hit enumerator for one parameter triple.

    Positions are integers over a common denominator ``D``; the hit window in
    shifted coordinates is ``[0, E]`` (closed, matching the closed distance
    test dist <= epsilon/2).  After the first entry, consecutive hits are
    reached with at most three return moves whose lengths and shifts come
    from the minimal one-sided approximation times q_r and q_l:

        y <= E - a      -> advance q_r steps, shift +a
        y >= b          -> advance q_l steps, shift -b
        otherwise       -> advance q_r + q_l steps, shift a - b

    a + b > E always holds, so the three ranges are disjoint and exhaustive;
    a == 0 forces q_l to not exist and the first rule then always applies.
    """

    __slots__ = ("A", "D", "E", "HH", "Y0", "q_r", "a", "q_l", "b", "y", "l")

    def __init__(self, params: RotationParams):
        xn, xs = _dyadic(params.x0)
        an, as_ = _dyadic(params.alpha)
        en, es = _dyadic(params.epsilon)
        s = max(xs, as_, es + 1)
        self.D = 1 << s
        self.A = an << (s - as_)
        X = xn << (s - xs)
        self.E = en << (s - es)
        self.HH = self.E >> 1
        self.Y0 = (X + self.HH) % self.D
        self.q_r = _first_multiplier(self.A, self.D, 0, self.E)
        self.a = (self.q_r * self.A) % self.D
        if self.a:
            self.q_l = _first_multiplier(self.A, self.D, self.D - self.E, self.E - 1)
            self.b = self.D - (self.q_l * self.A) % self.D
        else:
            self.q_l = None  # the orbit only ever re-enters with zero shift
            self.b = None
        self.y = None
        self.l = 0

    def is_hit(self, l: int) -> bool:
        """Exact membership test for step l (independent of the jump logic)."""
        y = (self.Y0 + l * self.A) % self.D
        return y <= self.E

    def first_hit(self):
        """Smallest l >= 1 in the window, or None if the orbit never enters."""
        c = (self.D - self.Y0) % self.D
        l1 = _first_multiplier(self.A, self.D, c, self.E)
        if l1 is None:
            return None
        self.l = l1
        self.y = (self.Y0 + l1 * self.A) % self.D
        return l1

    def next_hit(self) -> int:
        """Advance from the current hit to the next one, returning its step."""
        y = self.y
        if y + self.a <= self.E:
            self.l += self.q_r
            self.y = y + self.a
        elif y >= self.b:
            self.l += self.q_l
            self.y = y - self.b
        else:
            self.l += self.q_r + self.q_l
            self.y = y + self.a - self.b
        return self.l


# ---------------------------------------------------------------------------
# hitting-time operations


def hitting_times_naive(params: RotationParams, count: int,
                        step_budget: int = DEFAULT_STEP_BUDGET) -> HitSequence:
    """First ``count`` hitting times by scanning every rotation step.

    Vectorised float scan with a safety margin; every candidate step is
    confirmed with the exact integer test, so boundary grazes cannot be
    missed or double-counted.  Raises BudgetExhausted if fewer than ``count``
    hits occur within ``step_budget`` steps.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if step_budget < 1:
        raise ValueError("step_budget must be positive")
    if count == 0:
        return HitSequence(m=(), n=(), xi=())

    stepper = _Stepper(params)
    x0, alpha, half = params.x0, params.alpha, params.epsilon / 2.0
    hits = []
    l = 0
    block = int(min(max(1 << 16, 8.0 / params.epsilon), 1 << 22))
    while l < step_budget and len(hits) < count:
        hi = min(l + block, step_budget)
        steps = np.arange(l + 1, hi + 1, dtype=np.int64)
        pos = (x0 + steps.astype(np.float64) * alpha) % 1.0
        dist = np.minimum(pos, 1.0 - pos)
        # float error of pos grows like l*alpha*2^-53; margin stays generous
        slack = (abs(x0) + float(hi) * alpha + 2.0) * 2.0 ** -50
        for i in np.nonzero(dist <= half + slack)[0]:
            li = int(steps[i])
            if stepper.is_hit(li):
                hits.append(li)
                if len(hits) == count:
                    break
        l = hi
    if len(hits) < count:
        raise BudgetExhausted(
            f"found {len(hits)} of {count} hits within {step_budget} steps",
            found=len(hits), partial=HitSequence.from_times(hits))
    return HitSequence.from_times(hits)


def hitting_times_fast(params: RotationParams, count: int,
                       step_budget: int = DEFAULT_STEP_BUDGET) -> HitSequence:
    """Same contract and output as :func:`hitting_times_naive`, but each hit
    after an O(log 1/epsilon) setup costs O(1): consecutive hits differ by
    one of at most three return moves (three-gap structure).
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if step_budget < 1:
        raise ValueError("step_budget must be positive")
    if count == 0:
        return HitSequence(m=(), n=(), xi=())

    stepper = _Stepper(params)
    first = stepper.first_hit()
    if first is None or first > step_budget:
        raise BudgetExhausted(
            f"found 0 of {count} hits within {step_budget} steps",
            found=0, partial=HitSequence(m=(), n=(), xi=()))
    hits = [first]
    while len(hits) < count:
        nxt = stepper.next_hit()
        if nxt > step_budget:
            raise BudgetExhausted(
                f"found {len(hits)} of {count} hits within {step_budget} steps",
                found=len(hits), partial=HitSequence.from_times(hits))
        hits.append(nxt)
    return HitSequence.from_times(hits)


def exit_index(n) -> "int | None":
    """Exit index from a return-time sequence.

    The signed reflection coordinate after j returns is the alternating sum
    n[0] - n[1] + ... ; the exit index is (first j with sum <= 0) - 1, i.e.
    the number of reflections strictly before the trajectory leaves.  Returns
    None while every partial sum is still positive (not yet exited).
    """
    acc = 0
    for j, nj in enumerate(n):
        acc += nj if j % 2 == 0 else -nj
        if acc <= 0:
            return j  # 1-based first crossing minus one
    return None


def flight_time(n, Q: int, slope: float) -> float:
    """Total path length 2*sqrt(1+slope^2) * (n^1 + n^3 + ... + n^Q).

    Q must be odd (a retroreflected trajectory reflects an odd number of
    times); raises ParityError otherwise.
    """
    if Q < 1 or Q % 2 == 0:
        raise ParityError(f"exit index must be odd and positive, got {Q}")
    if len(n) < Q:
        raise ValueError("need at least Q return times")
    outbound = sum(n[j] for j in range(0, Q, 2))
    return 2.0 * math.sqrt(1.0 + slope * slope) * outbound


def visit_count(params: RotationParams, horizon: float) -> int:
    """Number of hits with step l in (0, floor(horizon/epsilon)]."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    limit = math.floor(horizon / params.epsilon)
    if limit < 1:
        return 0
    stepper = _Stepper(params)
    l = stepper.first_hit()
    if l is None or l > limit:
        return 0
    count = 1
    while True:
        l = stepper.next_hit()
        if l > limit:
            return count
        count += 1


def continuous_position(hits: HitSequence, epsilon: float, s: float) -> float:
    """Piecewise-linear tube position at rescaled time ``s``.

    Before the first hit the particle moves out at unit rescaled speed; after
    the k-th hit it moves from epsilon*xi[k] with direction (-1)^k.  Queries
    at or beyond epsilon*m[-1] raise HorizonExceeded (the next hit is not in
    the sequence).
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if len(hits) == 0 or s >= epsilon * hits.m[-1]:
        raise HorizonExceeded(
            f"s={s} is not covered by {len(hits)} computed hits")
    scaled = [epsilon * mk for mk in hits.m]
    k = bisect_right(scaled, s)  # number of hits with epsilon*m <= s
    if k == 0:
        return s
    sign = -1.0 if k % 2 else 1.0
    return epsilon * hits.xi[k - 1] + sign * (s - scaled[k - 1])


def exit_returns(params: RotationParams, max_returns: int = 10 ** 6,
                 step_budget: int = DEFAULT_STEP_BUDGET):
    """Return times up to the first nonpositive alternating sum.

    Returns ``(n, Q)`` where ``n`` is the tuple of return times up to and
    including the crossing and ``Q`` the exit index.  If the crossing does
    not show up within ``max_returns`` returns or ``step_budget`` steps the
    result is ``(n_so_far, None)`` (censored sample; callers count these).
    """
    stepper = _Stepper(params)
    first = stepper.first_hit()
    if first is None or first > step_budget:
        return (), None
    n = [first]
    xi = first
    prev = first
    for j in range(2, max_returns + 1):
        cur = stepper.next_hit()
        if cur > step_budget:
            return tuple(n), None
        gap = cur - prev
        n.append(gap)
        xi += -gap if j % 2 == 0 else gap
        prev = cur
        if xi <= 0:
            return tuple(n), j - 1
    return tuple(n), None
