"""Deterministic sample streams and the batched exit solver.

The Monte Carlo estimators draw from fixed block plans: a run is split into
blocks of a fixed size, each block gets its own child stream spawned from
the root seed, and per-block results are merged in plan order.  The result
is bit-reproducible for any worker count, including a single thread.

The batched exit solver advances many rotation orbits through the
three-move jump machine at once.  Orbit state lives in unsigned 64-bit
window coordinates (exact: every quantity is an integer below 2^63), while
the counted quantities use clamped signed arithmetic; a clamp can only fire
on a sample that the step budget censors at that same step, so exit indices
and gap sums are never distorted.  Samples whose window denominator would
not fit the vector representation fall back to the scalar solver.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .billiard import InitialCondition, _exit_record
from .rotation import RotationParams, _Stepper, exit_returns

DEFAULT_BLOCK = 1 << 16
_VEC_EXP_LIMIT = 63        # window denominator 2^63 still fits uint64 sums
_COUNT_CLAMP = 1 << 60     # any clamped gap exceeds every step budget


# ---------------------------------------------------------------------------
# block plans


def block_sizes(total: int, block: int = DEFAULT_BLOCK) -> tuple:
    """Split a sample count into fixed-size blocks (last one ragged)."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    if block <= 0:
        raise ValueError("block must be positive")
    full, rest = divmod(total, block)
    return (block,) * full + ((rest,) if rest else ())


def block_streams(seed: int, nblocks: int) -> tuple:
    """Independent child generators for each block of a run."""
    seqs = np.random.SeedSequence(seed).spawn(nblocks)
    return tuple(np.random.default_rng(s) for s in seqs)


def run_blocks(seed: int, total: int, worker, block: int = DEFAULT_BLOCK,
               threads: int = 1) -> list:
    """Apply ``worker(rng, size)`` to every block, in plan order.

    The block plan and stream assignment depend only on (seed, total,
    block), and results are collected by block index, so the output is
    identical for any thread count.
    """
    sizes = block_sizes(total, block)
    streams = block_streams(seed, len(sizes))
    if threads <= 1:
        return [worker(rng, size) for rng, size in zip(streams, sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, rng, size)
                   for rng, size in zip(streams, sizes)]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# batched exits


@dataclass
class ExitBatch:
    """Vectorized exit summaries for a batch of launches.

    ``q`` is the exit index (-1 when censored), ``s_odd`` the sum of
    odd-indexed return gaps (the unfolded turning abscissa; partial for
    censored samples), ``y_out`` the exit ordinate (nan when censored).
    ``m_final`` and ``k_final`` are the
    step position and count of the last committed return, which tell a
    step-budget censor (``k_final`` below the return cap) from a return-cap
    censor.  For censored samples with at least one committed return,
    ``pending_step`` is the length of the next (uncommitted) return and
    ``acc_final`` the alternating gap sum at ``k_final``; together they
    decide whether the exit already happened (see
    :meth:`crossing_pending`).  ``state_x``/``state_a``/``state_s`` hold
    the exact window coordinates (scaled launch ordinate, scaled rotation
    step, denominator exponent) for samples solved in the vector path;
    scalar-path samples have ``state_s`` = -1 and can be re-derived from
    the inputs when exact auditing is needed.
    """

    epsilon: float
    y_in: np.ndarray
    slope: np.ndarray
    q: np.ndarray
    s_odd: np.ndarray
    y_out: np.ndarray
    zbar: np.ndarray
    reversed_flag: np.ndarray
    censored: np.ndarray
    m_final: np.ndarray
    k_final: np.ndarray
    pending_step: np.ndarray
    acc_final: np.ndarray
    state_x: np.ndarray
    state_a: np.ndarray
    state_s: np.ndarray
    meta: dict = field(default_factory=dict)

    def exited(self) -> np.ndarray:
        return ~self.censored

    def flight_times(self) -> np.ndarray:
        """Exit flight times; nan for censored samples."""
        t = 2.0 * np.sqrt(1.0 + self.slope * self.slope) * self.s_odd
        return np.where(self.censored, np.nan, t)

    def crossing_pending(self) -> np.ndarray:
        """Censored samples whose exit is nonetheless already decided.

        Censoring stops before committing a return that would overrun the
        budget, but the length of that return is known, and when it meets
        the crossing condition at the next even index the flight ended at
        ``k_final``: the exit index and the outbound sum are exactly the
        recorded partial values.  Counts clamp far above any admissible
        budget, so clamping cannot flip the comparison.
        """
        return (self.censored & (self.k_final % 2 == 1)
                & (self.pending_step > 0)
                & (self.acc_final <= self.pending_step))


def _branch_step(y, a, b, e, q_r, q_l):
    # a == 0 keeps y + a <= e forever, so the None q_l is never reached
    if y + a <= e:
        return q_r
    if y >= b:
        return q_l
    return q_r + q_l


def _finish_lane(y, a, b, e, q_r, q_l, m, acc, so, k, max_returns, m_budget):
    """Run one lane to retirement with the same streak arithmetic as the
    vector loop, in plain integers.  Returns (exit index or -1, odd gap
    sum, last step position, last return count, pending next-return length
    or -1, final alternating sum)."""
    while True:
        s1 = y + a
        if s1 <= e:
            step = q_r
            rmax = (e - y) // a if a else 1 << 62
        elif y >= b:
            step = q_l
            rmax = min((s1 - e - 1) // b + 1, y // b)
        else:
            step = q_r + q_l
            rmax = 1
        j_bud = (m_budget - m) // step
        if k % 2 == 1 and acc <= step and j_bud >= 1:
            # the crossing move commits, so the alternating sum drops by it
            return k, so, m + step, k + 1, -1, acc - step
        r = min(rmax, j_bud, max_returns - k)
        if r == 0:
            return -1, so, m, k, step, acc
        if s1 <= e:
            y += r * a
        elif y >= b:
            y -= r * b
        else:
            y = s1 - b
        n_odd = (r + ((k + 1) & 1)) >> 1
        m += r * step
        so += step * n_odd
        acc += step * (2 * n_odd - r)
        k += r
        if (r == j_bud and r < rmax) or k >= max_returns:
            return -1, so, m, k, _branch_step(y, a, b, e, q_r, q_l), acc


def _scalar_exit(epsilon, y, slope, max_returns, m_budget):
    ic = InitialCondition(y_in=float(y), slope=float(slope), epsilon=epsilon)
    params = ic.rotation_params()
    n, qv = exit_returns(params, max_returns=max_returns,
                         step_budget=m_budget)
    if qv is None:
        pend = -1
        if n:
            # replay the committed returns to read off the next length
            stp = _Stepper(params)
            stp.first_hit()
            for _ in range(len(n) - 1):
                stp.next_hit()
            pend = min(_branch_step(stp.y, stp.a, stp.b, stp.E,
                                    stp.q_r, stp.q_l), _COUNT_CLAMP)
        return (-1, sum(n[0::2]), math.nan, math.nan, False, sum(n), len(n),
                pend, 2 * sum(n[0::2]) - sum(n))
    rec = _exit_record(ic, n, qv)
    s_odd = sum(rec.n[0::2])
    return (rec.q, s_odd, rec.y_out, rec.zbar, rec.reversed_exactly,
            sum(n), len(n), -1, 2 * s_odd - sum(n))


def exit_sweep(epsilon: float, y_in, slope, max_returns: int = 10 ** 6,
               m_budget: int = 10 ** 15) -> ExitBatch:
    """Solve every launch to its exit (or censoring) in one batch.

    Mirrors the scalar path exactly: the step budget is checked before a
    return is committed, so a sample whose next hit lies beyond the budget
    is censored with the state it had before that hit.  The length of the
    uncommitted return is still reported (``pending_step``), because the
    flight may already have ended even though the detection move did not
    fit the budget; :meth:`ExitBatch.crossing_pending` makes that call.
    Censored samples without a pending crossing provably have flight
    length beyond the budget (the alternating sum stays positive until the
    exit, so the outbound sum exceeds half the step count).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if m_budget > 10 ** 15:
        raise ValueError("step budget beyond the exact vector range")
    y_in = np.ascontiguousarray(y_in, dtype=np.float64)
    slope = np.ascontiguousarray(slope, dtype=np.float64)
    if y_in.shape != slope.shape or y_in.ndim != 1:
        raise ValueError("y_in and slope must be equal-length 1d arrays")
    n = y_in.size

    q = np.full(n, -1, dtype=np.int64)
    s_odd = np.zeros(n, dtype=np.int64)
    y_out = np.full(n, np.nan)
    zbar_arr = np.full(n, np.nan)
    rev = np.zeros(n, dtype=bool)
    censored = np.zeros(n, dtype=bool)
    m_final = np.zeros(n, dtype=np.int64)
    k_final = np.zeros(n, dtype=np.int64)
    pending_step = np.full(n, -1, dtype=np.int64)
    acc_final = np.zeros(n, dtype=np.int64)
    state_x = np.zeros(n, dtype=np.uint64)
    state_a = np.zeros(n, dtype=np.uint64)
    state_s = np.full(n, -1, dtype=np.int16)

    ya = np.zeros(n, dtype=np.uint64)
    aa = np.zeros(n, dtype=np.uint64)
    ba = np.zeros(n, dtype=np.uint64)
    ea = np.zeros(n, dtype=np.uint64)
    qr = np.zeros(n, dtype=np.int64)
    ql = np.zeros(n, dtype=np.int64)
    m = np.zeros(n, dtype=np.int64)
    acc = np.zeros(n, dtype=np.int64)

    active = np.zeros(n, dtype=bool)
    scalar_idx = []
    clamp = _COUNT_CLAMP
    for i in range(n):
        params = RotationParams.from_slope(float(y_in[i]), float(slope[i]),
                                           epsilon)
        stp = _Stepper(params)
        if stp.D > (1 << _VEC_EXP_LIMIT):
            scalar_idx.append(i)
            continue
        first = stp.first_hit()
        if first is None or first > m_budget:
            censored[i] = True
            continue
        state_x[i] = (stp.Y0 - stp.HH) % stp.D
        state_a[i] = stp.A
        state_s[i] = stp.D.bit_length() - 1
        ya[i] = stp.y
        aa[i] = stp.a
        ba[i] = stp.b if stp.b is not None else 1 << 62
        ea[i] = stp.E
        qr[i] = min(stp.q_r, clamp)
        ql[i] = min(stp.q_l, clamp) if stp.q_l is not None else 0
        m[i] = min(first, clamp)
        acc[i] = m[i]
        s_odd[i] = m[i]
        active[i] = True

    orig = np.nonzero(active)[0]
    yc = ya[orig]
    ac = aa[orig]
    bc = ba[orig]
    ec = ea[orig]
    qrc = qr[orig]
    qlc = ql[orig]
    mc = m[orig]
    accc = acc[orig]
    soc = s_odd[orig]
    kc = np.ones(orig.size, dtype=np.int64)
    big = np.uint64(1 << 62)
    one_u = np.uint64(1)
    finish_below = 128
    while orig.size:
        if orig.size <= finish_below:
            # few stragglers left: per-iteration array overhead now beats
            # the work, so run each lane out in plain integers
            for t in range(orig.size):
                qi, si, mi, ki, pi, acci = _finish_lane(
                    int(yc[t]), int(ac[t]), int(bc[t]), int(ec[t]),
                    int(qrc[t]), int(qlc[t]), int(mc[t]), int(accc[t]),
                    int(soc[t]), int(kc[t]), max_returns, m_budget)
                i = orig[t]
                q[i] = qi
                s_odd[i] = si
                m_final[i] = mi
                k_final[i] = ki
                pending_step[i] = pi
                acc_final[i] = acci
                censored[i] = qi < 0
            break
        s1 = yc + ac
        c1 = s1 <= ec
        c2 = (~c1) & (yc >= bc)
        step = np.where(c1, qrc, np.where(c2, qlc, qrc + qlc))
        # same-branch streak lengths: the right move repeats while the
        # shifted position keeps landing left of the window edge, the left
        # move while it stays at or above its shift
        r1 = np.where(ac == np.uint64(0), big,
                      (ec - yc) // np.maximum(ac, one_u))
        r2 = np.minimum((s1 - ec - one_u) // bc + one_u, yc // bc)
        rmax = np.minimum(np.where(c1, r1, np.where(c2, r2, one_u)),
                          big).astype(np.int64)
        j_bud = (m_budget - mc) // step
        r = np.minimum(np.minimum(rmax, j_bud), max_returns - kc)
        # inside a streak the even-move alternating sum is constant, so a
        # crossing is only possible at the entry move and entry parity
        cross = (kc % 2 == 1) & (accc <= step) & (j_bud >= 1)
        r = np.where(cross, 1, r)
        r_u = r.astype(np.uint64)
        yc = np.where(c1, yc + r_u * ac,
                      np.where(c2, yc - r_u * bc, yc + r_u * ac - r_u * bc))
        n_odd = (r + ((kc + 1) & 1)) >> 1
        mc += r * step
        soc += step * n_odd
        accc += step * (2 * n_odd - r)
        kc += r
        exit_now = cross
        censor_now = (j_bud == 0) | (~cross & (
            ((r == j_bud) & (r < rmax)) | (kc >= max_returns)))
        done = exit_now | censor_now
        if np.any(done):
            q[orig[cross]] = kc[cross] - 1
            censored[orig[censor_now]] = True
            # zero-move censors left the state alone and partial streaks
            # stay in their branch, so re-reading the branch at the final
            # position always yields the uncommitted return length
            s1p = yc + ac
            c1p = s1p <= ec
            c2p = (~c1p) & (yc >= bc)
            pend = np.where(c1p, qrc, np.where(c2p, qlc, qrc + qlc))
            pending_step[orig[censor_now]] = pend[censor_now]
            ret = orig[done]
            acc_final[ret] = accc[done]
            s_odd[ret] = soc[done]
            m_final[ret] = mc[done]
            k_final[ret] = kc[done]
            keep = ~done
            orig = orig[keep]
            yc = yc[keep]
            ac = ac[keep]
            bc = bc[keep]
            ec = ec[keep]
            qrc = qrc[keep]
            qlc = qlc[keep]
            mc = mc[keep]
            accc = accc[keep]
            soc = soc[keep]
            kc = kc[keep]

    for i in scalar_idx:
        qi, si, yi, zi, ri, mi, ki, pi, acci = _scalar_exit(
            epsilon, y_in[i], slope[i], max_returns, m_budget)
        q[i] = qi
        s_odd[i] = si
        y_out[i] = yi
        zbar_arr[i] = zi
        rev[i] = ri
        m_final[i] = mi
        k_final[i] = ki
        pending_step[i] = pi
        acc_final[i] = acci
        censored[i] = qi < 0

    ex = q >= 0
    vec_ex = ex.copy()
    vec_ex[scalar_idx] = False
    if np.any(vec_ex):
        # same expression order as the scalar exit record, so both paths
        # produce bit-identical floats
        so = s_odd[vec_ex].astype(np.float64)
        z = y_in[vec_ex] + slope[vec_ex] * so
        zb = 2.0 * z - y_in[vec_ex]
        v = zb % 2.0
        yo = np.where(v <= 1.0, v, 2.0 - v)
        zbar_arr[vec_ex] = zb
        y_out[vec_ex] = yo
        flo = np.floor(zb)
        rev[vec_ex] = (q[vec_ex] % 2 == 1) & (flo.astype(np.int64) % 2 != 0)
    return ExitBatch(
        epsilon=epsilon, y_in=y_in, slope=slope, q=q, s_odd=s_odd,
        y_out=y_out, zbar=zbar_arr, reversed_flag=rev, censored=censored,
        m_final=m_final, k_final=k_final,
        pending_step=pending_step, acc_final=acc_final,
        state_x=state_x, state_a=state_a, state_s=state_s,
        meta={"scalar_fallbacks": len(scalar_idx),
              "max_returns": max_returns, "m_budget": m_budget})


# ---------------------------------------------------------------------------
# batched visit counts


def visit_counts(epsilon: float, x0, alpha, step_limit: int,
                 chunk: int = 1 << 14) -> np.ndarray:
    """Number of window visits within ``step_limit`` rotation steps.

    Counts l in 1..step_limit with dist(x0 + l*alpha, Z) <= epsilon/2 for
    every sample, by scanning float positions in chunks.  The membership
    test is float (positions near the window edge can land on either side
    of it), which callers accept for distributional statistics; the exact
    scalar counter serves as the audit reference.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if step_limit < 0:
        raise ValueError("step_limit must be nonnegative")
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    if x0.shape != alpha.shape or x0.ndim != 1:
        raise ValueError("x0 and alpha must be equal-length 1d arrays")
    half = epsilon / 2.0
    out = np.zeros(x0.size, dtype=np.int64)
    if step_limit == 0:
        return out
    steps = np.arange(1, step_limit + 1, dtype=np.float64)
    for lo in range(0, x0.size, chunk):
        hi = min(lo + chunk, x0.size)
        pos = alpha[lo:hi, None] * steps
        pos += x0[lo:hi, None]
        pos %= 1.0
        near = (pos <= half).sum(axis=1)
        near += (pos >= 1.0 - half).sum(axis=1)
        out[lo:hi] = near
    return out
