"""Monte Carlo estimators over random launches.

Launches are drawn from a measure on the entry space (ordinate in (0, 1),
direction angle as a fraction of pi in (-1/2, 1/2)).  Horizontal and
vertical launches and boundary ordinates are resampled and counted, never
silently kept.  Every estimator takes either an integer seed or a
generator, splits the run into fixed blocks, and merges block results in
plan order, so results are reproducible for any worker count.

Censored samples (budget ran out before the exit) are always counted
separately and reported; they are folded into an estimate only where that
is conservative and stated (the reversal estimator counts them as
failures).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .billiard import InitialCondition, trace
from .errors import (ArityError, BudgetExhausted, CornerHit, EmptySample,
                     InsufficientData)
from .lattice import count_in_rect, haar_sample
from .mcstats import CdfEstimate, PmfEstimate, clopper_pearson, _fmt, \
    _open_maybe
from .rotation import RotationParams, hitting_times_fast
from .sampling import exit_sweep, run_blocks, visit_counts

DEFAULT_EPSILON_GRID = (0.3, 0.1, 0.03, 0.01, 0.003, 0.001)
DEFAULT_T_GRID = tuple(np.geomspace(0.05, 5.0e5, 60))
DEFAULT_RETURN_BUDGET = 10 ** 6
DEFAULT_STEP_BUDGET = 10 ** 15
ATOM_MULTIPLICITY_LIMIT = 8
AUDIT_EVENT_CAP = 30000


# ---------------------------------------------------------------------------
# entry measures


@dataclass(frozen=True)
class MeasureSpec:
    """A probability measure on the entry space.

    ``uniform-box`` is the product of uniform ordinate and uniform angle
    fraction.  ``custom-density`` carries a density against that uniform
    box together with an upper bound used for rejection sampling; the
    density must integrate to one over the box.
    """

    kind: str = "uniform-box"
    density: object = None
    bound: float = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("uniform-box", "custom-density"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "custom-density":
            if self.density is None or not callable(self.density):
                raise ValueError("custom-density needs a callable density")
            if self.bound is None or not self.bound > 0:
                raise ValueError("custom-density needs a positive bound")

    def normalization(self, cells: int = 256) -> float:
        """Midpoint-rule integral of the density over the entry box."""
        if self.kind == "uniform-box":
            return 1.0
        ys = (np.arange(cells) + 0.5) / cells
        ps = (np.arange(cells) + 0.5) / cells - 0.5
        dens = np.array([[float(self.density(y, p)) for p in ps]
                         for y in ys])
        if np.any(dens < 0):
            raise ValueError("density takes negative values")
        if np.any(dens > self.bound * (1 + 1e-12)):
            raise ValueError("density exceeds its stated bound")
        return float(dens.mean())

    def check_normalization(self, tol: float = 1e-6) -> None:
        total = self.normalization()
        if abs(total - 1.0) > tol:
            raise ValueError(
                f"density integrates to {total}, not 1 within {tol}")

    def draw(self, rng, size: int):
        """Draw ``size`` launches; returns (ordinates, angle fractions,
        number of rejected-and-resampled proposals)."""
        y = np.empty(size)
        phi = np.empty(size)
        have = 0
        resampled = 0
        while have < size:
            need = size - have
            cy = rng.random(need)
            cp = rng.random(need) - 0.5
            if self.kind == "custom-density":
                u = rng.random(need)
                dens = np.array([float(self.density(a, b))
                                 for a, b in zip(cy, cp)])
                keep = u * self.bound < dens
                resampled += int(need - keep.sum())
                cy, cp = cy[keep], cp[keep]
            # degenerate directions and wall ordinates break the launch
            # geometry; they carry no measure and are drawn again
            ok = (cy > 0.0) & (cy < 1.0) & (cp != 0.0) & (np.abs(cp) < 0.5)
            resampled += int(ok.size - ok.sum())
            cy, cp = cy[ok], cp[ok]
            got = cy.size
            y[have:have + got] = cy
            phi[have:have + got] = cp
            have += got
        return y, phi, resampled


UNIFORM_BOX = MeasureSpec()


def _resolve_measure(measure) -> MeasureSpec:
    if measure is None:
        return UNIFORM_BOX
    if not isinstance(measure, MeasureSpec):
        raise TypeError("measure must be a MeasureSpec")
    if measure.kind == "custom-density":
        measure.check_normalization()
    return measure


def _resolve_seed(rng) -> int:
    if rng is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    if isinstance(rng, (int, np.integer)):
        if rng < 0:
            raise ValueError("seed must be nonnegative")
        return int(rng)
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2 ** 63))
    raise TypeError("rng must be None, an int seed, or a Generator")


def _check_atoms(alphas: np.ndarray) -> int:
    """Reject sample sets whose rotation numbers pile onto one float.

    An atom in the sampled rotation number would make every estimate
    hostage to a single orbit; absolutely continuous measures produce at
    most a handful of float collisions even at millions of samples.
    Returns the largest observed multiplicity.
    """
    if alphas.size == 0:
        return 0
    _, counts = np.unique(alphas, return_counts=True)
    worst = int(counts.max())
    if worst > ATOM_MULTIPLICITY_LIMIT:
        raise ValueError(
            f"sampled direction repeats {worst} times; the entry measure "
            "appears to put an atom on a single rotation number")
    return worst


def _draw_block(measure: MeasureSpec, rng, size: int):
    y, phi, resampled = measure.draw(rng, size)
    slope = np.tan(np.pi * phi)
    return y, slope, resampled


# ---------------------------------------------------------------------------
# reversal probability


@dataclass(frozen=True)
class ReversalEstimate:
    """Estimated probability of the reversal event.

    The event requires an exact direction reversal and an exit ordinate
    within ``delta`` of the entry ordinate.  Censored launches count as
    failures, which can only understate the probability.
    """

    epsilon: float
    delta: float
    estimate: float
    ci: tuple
    trials: int
    successes: int
    censored: int
    resampled: int
    audit: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def _audit_lane(epsilon, y, slope, q, y_out, rev):
    """Re-run one launch through the event-by-event float simulation.

    Returns "ok", "mismatch", or "skipped" (corner grazes and flights too
    long to re-trace are skipped, not judged).
    """
    ic = InitialCondition(y_in=float(y), slope=float(slope), epsilon=epsilon)
    try:
        out = trace(ic, max_events=AUDIT_EVENT_CAP)
    except CornerHit:
        return "skipped"
    rec = out.record
    if rec is None:
        return "mismatch"
    same = (rec.q == q and abs(rec.y_out - y_out) <= 1e-9
            and rec.reversed_exactly == bool(rev))
    return "ok" if same else "mismatch"


def estimate_reversal(epsilon: float, delta: float, samples: int,
                      measure: MeasureSpec = None, rng=None, *,
                      max_returns: int = DEFAULT_RETURN_BUDGET,
                      step_budget: int = DEFAULT_STEP_BUDGET,
                      audit_fraction: float = 0.01,
                      threads: int = 1) -> ReversalEstimate:
    """Probability that a launch comes back reversed and near its entry.

    Runs the exact integer exit solver on every launch and spot-checks a
    fraction of the exits against the direct float simulation; audit
    mismatches are reported, never repaired.
    """
    if samples <= 0:
        raise EmptySample("samples must be positive")
    if not delta > 0:
        raise ValueError("delta must be positive")
    measure = _resolve_measure(measure)
    seed = _resolve_seed(rng)

    def worker(block_rng, size):
        y, slope, resampled = _draw_block(measure, block_rng, size)
        batch = exit_sweep(epsilon, y, slope, max_returns=max_returns,
                           m_budget=step_budget)
        ok = ~batch.censored
        succ = batch.reversed_flag & ok & (np.abs(batch.y_out - y) < delta)
        audit = {"checked": 0, "mismatches": 0, "skipped": 0}
        if audit_fraction > 0:
            picks = np.nonzero((block_rng.random(size) < audit_fraction)
                               & ok)[0]
            for i in picks:
                if 2 * batch.s_odd[i] + 4 > AUDIT_EVENT_CAP:
                    audit["skipped"] += 1
                    continue
                verdict = _audit_lane(epsilon, y[i], slope[i],
                                      int(batch.q[i]), float(batch.y_out[i]),
                                      batch.reversed_flag[i])
                if verdict == "ok":
                    audit["checked"] += 1
                elif verdict == "mismatch":
                    audit["checked"] += 1
                    audit["mismatches"] += 1
                else:
                    audit["skipped"] += 1
        return {"successes": int(succ.sum()),
                "censored": int(batch.censored.sum()),
                "resampled": resampled,
                "alpha": slope % 1.0,
                "audit": audit}

    blocks = run_blocks(seed, samples, worker, threads=threads)
    successes = sum(b["successes"] for b in blocks)
    censored = sum(b["censored"] for b in blocks)
    resampled = sum(b["resampled"] for b in blocks)
    audit = {"checked": sum(b["audit"]["checked"] for b in blocks),
             "mismatches": sum(b["audit"]["mismatches"] for b in blocks),
             "skipped": sum(b["audit"]["skipped"] for b in blocks)}
    worst = _check_atoms(np.concatenate([b["alpha"] for b in blocks]))
    return ReversalEstimate(
        epsilon=epsilon, delta=delta, estimate=successes / samples,
        ci=clopper_pearson(successes, samples), trials=samples,
        successes=successes, censored=censored, resampled=resampled,
        audit=audit,
        meta={"seed": seed, "max_returns": max_returns,
              "step_budget": step_budget, "measure": measure.kind,
              "max_alpha_multiplicity": worst})


# ---------------------------------------------------------------------------
# exit index distribution


def estimate_Q_pmf(epsilon: float, samples: int,
                   measure: MeasureSpec = None, k_max: int = 20, rng=None, *,
                   step_budget: int = DEFAULT_STEP_BUDGET,
                   threads: int = 1) -> PmfEstimate:
    """Distribution of the exit index over random launches.

    The support is the odd integers up to ``k_max``; larger and censored
    exit indices go into the tail mass, so probabilities and tail add to
    one.  Each launch only needs ``k_max + 2`` returns: past that the index
    is known to lie in the tail.
    """
    if samples <= 0:
        raise EmptySample("samples must be positive")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    measure = _resolve_measure(measure)
    seed = _resolve_seed(rng)
    support = tuple(range(1, k_max + 1, 2))

    def worker(block_rng, size):
        y, slope, resampled = _draw_block(measure, block_rng, size)
        batch = exit_sweep(epsilon, y, slope, max_returns=k_max + 2,
                           m_budget=step_budget)
        ex = ~batch.censored
        hist = np.bincount(batch.q[ex], minlength=k_max + 2)
        return {"hist": hist[:k_max + 1],
                "beyond": int((batch.q[ex] > k_max).sum()),
                "censored": int(batch.censored.sum()),
                "resampled": resampled,
                "alpha": slope % 1.0}

    blocks = run_blocks(seed, samples, worker, threads=threads)
    hist = np.sum([b["hist"] for b in blocks], axis=0)
    beyond = sum(b["beyond"] for b in blocks)
    censored = sum(b["censored"] for b in blocks)
    resampled = sum(b["resampled"] for b in blocks)
    worst = _check_atoms(np.concatenate([b["alpha"] for b in blocks]))
    tail = (censored + beyond) / samples
    return PmfEstimate(
        support=support,
        probs=tuple(int(hist[k]) / samples for k in support),
        tail=tail,
        trials=samples,
        meta={"epsilon": epsilon, "seed": seed, "censored": censored,
              "beyond_support": beyond, "resampled": resampled,
              "measure": measure.kind, "max_alpha_multiplicity": worst})


# ---------------------------------------------------------------------------
# flight time distribution


def estimate_T_cdf(epsilon: float, samples: int,
                   measure: MeasureSpec = None, grid=None, rng=None, *,
                   max_returns: int = DEFAULT_RETURN_BUDGET,
                   threads: int = 1) -> CdfEstimate:
    """Distribution of the rescaled flight time over random launches.

    Evaluates the empirical CDF of epsilon times the flight time on the
    grid.  The step budget is tied to the grid end, and censored launches
    are classified exactly: one whose pending return already settles the
    exit has a known flight time and enters the histogram; one censored by
    the step budget with the exit still open provably has rescaled flight
    time beyond the grid; only return-cap censors whose partial flight
    cannot certify that are counted as indeterminate in the metadata (and
    left out of the CDF, which can only understate it).
    """
    if samples <= 0:
        raise EmptySample("samples must be positive")
    if grid is None:
        grid = DEFAULT_T_GRID
    grid = tuple(float(t) for t in grid)
    if len(grid) == 0 or any(t <= 0 for t in grid):
        raise ValueError("grid must hold positive times")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    measure = _resolve_measure(measure)
    seed = _resolve_seed(rng)
    t_end = grid[-1]
    step_budget = min(int(math.floor(t_end / epsilon)) + 1,
                      DEFAULT_STEP_BUDGET)
    garr = np.asarray(grid)

    def worker(block_rng, size):
        y, slope, resampled = _draw_block(measure, block_rng, size)
        batch = exit_sweep(epsilon, y, slope, max_returns=max_returns,
                           m_budget=step_budget)
        settled = ~batch.censored | batch.crossing_pending()
        times = 2.0 * np.sqrt(1.0 + batch.slope * batch.slope) \
            * batch.s_odd
        st = epsilon * times[settled]
        hist = np.bincount(np.searchsorted(garr, st, side="left"),
                           minlength=garr.size + 1)[:garr.size]
        capped = ~settled & (batch.k_final >= max_returns)
        lb = epsilon * times[capped]
        return {"hist": hist,
                "censored": int(batch.censored.sum()),
                "settled_pending": int((batch.censored & settled).sum()),
                "indeterminate": int((lb <= t_end).sum()),
                "resampled": resampled,
                "alpha": slope % 1.0}

    blocks = run_blocks(seed, samples, worker, threads=threads)
    hist = np.sum([b["hist"] for b in blocks], axis=0)
    censored = sum(b["censored"] for b in blocks)
    settled_pending = sum(b["settled_pending"] for b in blocks)
    indeterminate = sum(b["indeterminate"] for b in blocks)
    resampled = sum(b["resampled"] for b in blocks)
    worst = _check_atoms(np.concatenate([b["alpha"] for b in blocks]))
    cum = np.cumsum(hist)
    values = tuple(float(c) / samples for c in cum)
    return CdfEstimate(
        grid=grid, values=values, trials=samples,
        meta={"epsilon": epsilon, "seed": seed, "censored": censored,
              "settled_pending": settled_pending,
              "indeterminate": indeterminate, "resampled": resampled,
              "mass_beyond_grid": 1.0 - values[-1],
              "step_budget": step_budget, "max_returns": max_returns,
              "measure": measure.kind, "max_alpha_multiplicity": worst})


# ---------------------------------------------------------------------------
# visit count tail


@dataclass(frozen=True)
class TailDiagnostic:
    """Log-log tail profile of the visit count at a rescaled horizon.

    ``survival[i]`` estimates the probability of at least ``ks[i]`` window
    visits within the horizon; ``slope`` is the least-squares slope of
    log survival against log k over the fitted points.
    """

    s: float
    epsilon: float
    ks: tuple
    survival: tuple
    counts: tuple
    slope: float
    intercept: float
    fit_ks: tuple
    trials: int
    meta: dict = field(default_factory=dict)


def tail_diagnostic(s: float, epsilon: float, samples: int,
                    k_range=(8, 64), rng=None, *, min_count: int = 100,
                    threads: int = 1) -> TailDiagnostic:
    """Tail exponent of the visit count over uniform phase-space points.

    Draws position and rotation number uniformly, counts window visits up
    to the rescaled horizon ``s``, and fits a line on log-log axes through
    the survival probabilities whose event counts reach ``min_count``.
    Raises InsufficientData when fewer than two points qualify.
    """
    if samples <= 0:
        raise EmptySample("samples must be positive")
    if not s > 0:
        raise ValueError("s must be positive")
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if not 1 <= k_lo < k_hi:
        raise ValueError("k_range must satisfy 1 <= low < high")
    seed = _resolve_seed(rng)
    step_limit = int(math.floor(s / epsilon))

    def worker(block_rng, size):
        x0 = block_rng.random(size)
        alpha = block_rng.random(size)
        counts = visit_counts(epsilon, x0, alpha, step_limit)
        return np.bincount(np.minimum(counts, k_hi + 1),
                           minlength=k_hi + 2)

    blocks = run_blocks(seed, samples, worker, threads=threads)
    hist = np.sum(blocks, axis=0)
    above = samples - np.cumsum(hist)  # above[k] = #{count > k}
    ks = tuple(range(k_lo, k_hi + 1))
    exceed = tuple(int(above[k - 1]) for k in ks)
    survival = tuple(c / samples for c in exceed)
    fit_ks = tuple(k for k, c in zip(ks, exceed) if c >= min_count)
    if len(fit_ks) < 2:
        raise InsufficientData(
            f"only {len(fit_ks)} tail points reach {min_count} events")
    lx = np.log([k for k in fit_ks])
    ly = np.log([c / samples for k, c in zip(ks, exceed) if c >= min_count])
    slope, intercept = np.polyfit(lx, ly, 1)
    return TailDiagnostic(
        s=s, epsilon=epsilon, ks=ks, survival=survival, counts=exceed,
        slope=float(slope), intercept=float(intercept), fit_ks=fit_ks,
        trials=samples,
        meta={"seed": seed, "step_limit": step_limit,
              "min_count": min_count})


# ---------------------------------------------------------------------------
# joint hitting-time law against the lattice picture


@dataclass(frozen=True)
class JointHitCdf:
    """Joint survival of the first rescaled hitting times, both ways.

    ``dynamic`` estimates P{eps*m^1 > t_1, ..., eps*m^n > t_n} by running
    orbits; ``lattice`` estimates the same event on random unimodular
    lattices, where fewer than k points in the rectangle up to t_k means
    the k-th hit comes later than t_k.
    """

    t: tuple
    dynamic: float
    dynamic_ci: tuple
    lattice: float
    lattice_ci: tuple
    trials: int
    meta: dict = field(default_factory=dict)


def joint_hit_cdf(epsilon: float, samples: int, t_tuple, rng=None) \
        -> JointHitCdf:
    if samples <= 0:
        raise EmptySample("samples must be positive")
    t = tuple(float(v) for v in t_tuple)
    if not 1 <= len(t) <= 3:
        raise ArityError(f"joint law supports 1 to 3 times, got {len(t)}")
    if any(v < 0 for v in t):
        raise ValueError("times must be nonnegative")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    n = len(t)
    seed = _resolve_seed(rng)
    dyn_rng, lat_rng = [np.random.default_rng(s)
                        for s in np.random.SeedSequence(seed).spawn(2)]
    budget = int(math.floor(max(t) / epsilon)) + 1

    dyn_hits = 0
    for _ in range(samples):
        params = RotationParams(x0=float(dyn_rng.random()),
                                alpha=float(dyn_rng.random()),
                                epsilon=epsilon)
        try:
            hits = hitting_times_fast(params, n, step_budget=budget).m
        except BudgetExhausted as exc:
            hits = exc.partial.m if exc.partial is not None else ()
        # a hit missing within the budget lies beyond every queried time
        if all(len(hits) <= k or epsilon * hits[k] > t[k] for k in range(n)):
            dyn_hits += 1

    lat_hits = 0
    for _ in range(samples):
        g = haar_sample(lat_rng)
        if all(count_in_rect(g, t[k]) <= k for k in range(n)):
            lat_hits += 1

    return JointHitCdf(
        t=t, dynamic=dyn_hits / samples,
        dynamic_ci=clopper_pearson(dyn_hits, samples),
        lattice=lat_hits / samples,
        lattice_ci=clopper_pearson(lat_hits, samples),
        trials=samples,
        meta={"epsilon": epsilon, "seed": seed, "step_budget": budget})


# ---------------------------------------------------------------------------
# sweeps over a grid of barrier heights


@dataclass(frozen=True)
class SweepReport:
    """Reversal estimates across a grid of barrier heights, with every
    discard category carried alongside (resampled draws, censored flights,
    audit skips) rather than folded into the estimates."""

    delta: float
    rows: tuple
    meta: dict = field(default_factory=dict)

    def counters(self) -> dict:
        return {
            "censored": sum(r.censored for r in self.rows),
            "resampled": sum(r.resampled for r in self.rows),
            "audit_checked": sum(r.audit["checked"] for r in self.rows),
            "audit_mismatches": sum(r.audit["mismatches"]
                                    for r in self.rows),
            "audit_skipped": sum(r.audit["skipped"] for r in self.rows),
        }

    def to_csv(self, path_or_buf) -> None:
        import csv
        buf, close = _open_maybe(path_or_buf)
        try:
            w = csv.writer(buf)
            w.writerow(["epsilon", "estimate", "ci_low", "ci_high",
                        "trials", "successes", "censored", "resampled"])
            for r in self.rows:
                w.writerow([_fmt(r.epsilon), _fmt(r.estimate),
                            _fmt(r.ci[0]), _fmt(r.ci[1]), r.trials,
                            r.successes, r.censored, r.resampled])
        finally:
            if close:
                buf.close()


def reversal_sweep(delta: float, samples: int, epsilons=None,
                   measure: MeasureSpec = None, rng=None, *,
                   max_returns: int = DEFAULT_RETURN_BUDGET,
                   step_budget: int = DEFAULT_STEP_BUDGET,
                   audit_fraction: float = 0.01,
                   threads: int = 1) -> SweepReport:
    """Reversal probability across a grid of barrier heights.

    Each height gets its own child seed, so the sweep is reproducible as a
    whole and per row.
    """
    if epsilons is None:
        epsilons = DEFAULT_EPSILON_GRID
    epsilons = tuple(float(e) for e in epsilons)
    if not epsilons:
        raise ValueError("need at least one barrier height")
    seed = _resolve_seed(rng)
    child = np.random.SeedSequence(seed).spawn(len(epsilons))
    rows = []
    for eps, ss in zip(epsilons, child):
        rows.append(estimate_reversal(
            eps, delta, samples, measure=measure,
            rng=int(ss.generate_state(1, np.uint64)[0] % (2 ** 63)),
            max_returns=max_returns, step_budget=step_budget,
            audit_fraction=audit_fraction, threads=threads))
    return SweepReport(delta=delta, rows=tuple(rows),
                       meta={"seed": seed, "samples": samples,
                             "epsilons": epsilons})
