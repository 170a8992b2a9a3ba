"""Monte Carlo bookkeeping: exact binomial intervals and small result
containers that serialize to delimited text."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from scipy import stats


def clopper_pearson(successes: int, trials: int, level: float = 0.95):
    """Exact two-sided binomial confidence interval for a proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else float(
        stats.beta.ppf(alpha / 2.0, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(
        stats.beta.ppf(1.0 - alpha / 2.0, successes + 1, trials - successes))
    return lo, hi


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _open_maybe(path_or_buf, mode="w"):
    if isinstance(path_or_buf, (str, bytes)):
        return open(path_or_buf, mode, newline=""), True
    return path_or_buf, False


@dataclass(frozen=True)
class PmfEstimate:
    """Empirical probability mass function on an integer support.

    ``tail`` carries the mass of outcomes beyond the support (including
    censored runs), so the probabilities and the tail add to one exactly in
    count space.
    """

    support: tuple
    probs: tuple
    tail: float
    trials: int
    meta: dict = field(default_factory=dict)

    def counts(self) -> tuple:
        # probabilities are stored as count/trials, so this inverts exactly
        return tuple(int(round(p * self.trials)) for p in self.probs)

    def tail_count(self) -> int:
        return int(round(self.tail * self.trials))

    def total(self) -> float:
        return (sum(self.counts()) + self.tail_count()) / self.trials

    def intervals(self, level: float = 0.95) -> tuple:
        """Exact binomial confidence interval for each support point."""
        return tuple(clopper_pearson(c, self.trials, level)
                     for c in self.counts())

    def to_csv(self, path_or_buf) -> None:
        buf, close = _open_maybe(path_or_buf)
        try:
            w = csv.writer(buf)
            w.writerow(["value", "probability", "ci_low", "ci_high"])
            for v, p, (lo, hi) in zip(self.support, self.probs,
                                      self.intervals()):
                w.writerow([v, _fmt(p), _fmt(lo), _fmt(hi)])
            lo, hi = clopper_pearson(self.tail_count(), self.trials)
            w.writerow(["tail", _fmt(self.tail), _fmt(lo), _fmt(hi)])
        finally:
            if close:
                buf.close()


@dataclass(frozen=True)
class CdfEstimate:
    """Empirical distribution function evaluated on a fixed grid."""

    grid: tuple
    values: tuple
    trials: int
    meta: dict = field(default_factory=dict)

    def to_csv(self, path_or_buf) -> None:
        buf, close = _open_maybe(path_or_buf)
        try:
            w = csv.writer(buf)
            w.writerow(["t", "cdf", "ci_low", "ci_high"])
            for t, v in zip(self.grid, self.values):
                lo, hi = clopper_pearson(int(round(v * self.trials)),
                                         self.trials)
                w.writerow([_fmt(t), _fmt(v), _fmt(lo), _fmt(hi)])
        finally:
            if close:
                buf.close()


def tv_distance(p: PmfEstimate, q: PmfEstimate) -> float:
    """Total variation distance between two pmf estimates on equal supports."""
    if p.support != q.support:
        raise ValueError("pmf supports differ")
    acc = sum(abs(a - b) for a, b in zip(p.probs, q.probs))
    return 0.5 * (acc + abs(p.tail - q.tail))


def sup_distance(p: CdfEstimate, q: CdfEstimate) -> float:
    """Largest pointwise gap between two distribution functions sharing a grid."""
    if p.grid != q.grid:
        raise ValueError("cdf grids differ")
    return max(abs(a - b) for a, b in zip(p.values, q.values))
