"""Random affine lattices and the continuum limit of the exit statistics.

In the small-window limit the rescaled hit pattern of a random launch
converges to the strip pattern of a random unimodular affine lattice: the
points of the lattice inside the unit-height horizontal strip, ordered by
abscissa, play the role of the hitting times.  This module samples such
lattices from the invariant measure, enumerates their strip patterns,
counts points in boxes, and estimates the limiting exit-index law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetExhausted,
    DegenerateLattice,
    EmptySample,
    FlowOverflow,
)
from .iet import _lagrange_reduce_t, _strip_points, lattice_iet
from .mcstats import PmfEstimate

MAX_FLOW_TIME = 60.0
BOUNDARY_TOL = 1e-12
FUNDAMENTAL_Y_MAX = 1e6


@dataclass(frozen=True)
class AffineLattice:
    """Unimodular planar lattice with a translation offset.

    Points are ``k @ matrix + offset`` for integer rows ``k``.  The matrix
    rows form the basis; its determinant must be 1 up to float tolerance.
    """

    matrix: tuple
    offset: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (2, 2):
            raise ValueError("matrix must be 2x2")
        det = float(np.linalg.det(m))
        if not math.isclose(det, 1.0, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"matrix determinant must be 1, got {det}")
        object.__setattr__(self, "matrix", tuple(map(tuple, m)))
        v = np.asarray(self.offset, dtype=np.float64)
        if v.shape != (2,):
            raise ValueError("offset must be a 2-vector")
        object.__setattr__(self, "offset", tuple(v))

    def matrix_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=np.float64)

    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=np.float64)


def haar_sample(rng) -> AffineLattice:
    """Lattice drawn from the invariant probability measure.

    The shape is sampled in the standard fundamental domain (|x| <= 1/2,
    |x + iy| > 1, truncated at height 1e6), rotated by a uniform angle, and
    shifted by a uniform point of its fundamental cell.
    """
    ymin = math.sqrt(3.0) / 2.0
    while True:
        x = float(rng.uniform(-0.5, 0.5))
        # inverse transform for the density proportional to 1/y^2
        u = float(rng.random())
        y = 1.0 / (1.0 / ymin - u * (1.0 / ymin - 1.0 / FUNDAMENTAL_Y_MAX))
        if x * x + y * y > 1.0:
            break
    sy = math.sqrt(y)
    shape = np.array([[sy, x / sy], [0.0, 1.0 / sy]])
    theta = float(rng.uniform(0.0, 2.0 * math.pi))
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])
    m = shape @ rot
    k = rng.random(2)
    return AffineLattice(matrix=m, offset=k @ m)


def flow_apply(g: AffineLattice, t: float) -> AffineLattice:
    """Apply the diagonal flow diag(e^(-t/2), e^(t/2)) to any lattice."""
    if abs(t) > MAX_FLOW_TIME:
        raise FlowOverflow(f"|t| must not exceed {MAX_FLOW_TIME}, got {t}")
    d = np.array([math.exp(-t / 2.0), math.exp(t / 2.0)])
    return AffineLattice(matrix=g.matrix_array() * d[np.newaxis, :],
                         offset=g.offset_array() * d)


def rotation_lattice(x0: float, alpha: float) -> AffineLattice:
    """Affine lattice whose strip points encode the rotation hit pattern."""
    return AffineLattice(matrix=np.array([[1.0, alpha], [0.0, 1.0]]),
                         offset=np.array([0.0, x0]))


def geodesic_push(x0: float, alpha: float, t: float) -> AffineLattice:
    """Rotation-pattern lattice carried along the diagonal flow.

    At t = 2 ln(1/eps) the strip points of the result are the hitting
    times of the (x0, alpha) rotation into the half-width-eps/2 window,
    rescaled by eps.  t = 0 returns the unflowed shear lattice itself.
    """
    return flow_apply(rotation_lattice(x0, alpha), t)


# ---------------------------------------------------------------------------
# point counting


def _trim_range(pred, lo, hi):
    guard = 0
    while lo <= hi and not pred(lo):
        lo += 1
        guard += 1
        if guard > 64:
            raise AssertionError("range trim did not converge")
    guard = 0
    while hi >= lo and not pred(hi):
        hi -= 1
        guard += 1
        if guard > 64:
            raise AssertionError("range trim did not converge")
    return lo, hi


def count_in_box(g: AffineLattice, x_lo: float, x_hi: float,
                 y_lo: float, y_hi: float) -> int:
    """Number of lattice points with x_lo < x <= x_hi and y_lo <= y <= y_hi.

    Slicing runs over a reduced basis so skew bases from long diagonal
    flows cost the same as round ones, but membership is evaluated at the
    original integer coordinates.  Structured bases (a zero entry, an exact
    power-of-two scale) then classify boundary columns exactly: the flowed
    shear lattice keeps its x = 0 column at float zero, which is what makes
    the strict lower edge reliable in the window-count correspondence.
    """
    if x_hi < x_lo or y_hi < y_lo:
        raise ValueError("empty box bounds")
    red, u = _lagrange_reduce_t(g.matrix_array())
    inv = np.linalg.inv(red)
    off = g.offset_array()
    m = g.matrix_array()
    m00, m01 = float(m[0, 0]), float(m[0, 1])
    m10, m11 = float(m[1, 0]), float(m[1, 1])
    ox, oy = float(off[0]), float(off[1])
    (u00, u01), (u10, u11) = u
    r1, r2 = red[0], red[1]
    corners = np.array([[x, y] for x in (x_lo, x_hi) for y in (y_lo, y_hi)])
    kc = (corners - off) @ inv
    j_lo = math.floor(kc[:, 1].min()) - 2
    j_hi = math.ceil(kc[:, 1].max()) + 2
    total = 0
    for j in range(j_lo, j_hi + 1):
        bx = j * r2[0] + ox
        by = j * r2[1] + oy

        def inside(i):
            k = i * u00 + j * u10
            l = i * u01 + j * u11
            x = k * m00 + l * m10 + ox
            y = k * m01 + l * m11 + oy
            return x_lo < x <= x_hi and y_lo <= y <= y_hi

        bounds = []
        ok = True
        for c, b, lo, hi in ((r1[0], bx, x_lo, x_hi), (r1[1], by, y_lo, y_hi)):
            if c == 0.0:
                if not lo <= b <= hi:
                    ok = False
                    break
                continue
            t0 = (lo - b) / c
            t1 = (hi - b) / c
            bounds.append((min(t0, t1), max(t0, t1)))
        if not ok or not bounds:
            # a zero row direction cannot happen for a rank-2 basis, and a
            # slice unbounded in i would mean an infinite count
            if not ok:
                continue
            raise AssertionError("degenerate reduced basis")
        lo_f = max(b[0] for b in bounds)
        hi_f = min(b[1] for b in bounds)
        if hi_f - lo_f > 10 ** 15:
            raise BudgetExhausted("slice too long to count")
        i_lo, i_hi = _trim_range(inside, math.floor(lo_f) - 2,
                                 math.ceil(hi_f) + 2)
        if i_hi >= i_lo:
            total += i_hi - i_lo + 1
    return total


def count_in_rect(g: AffineLattice, x_max: float) -> int:
    """Points in the standard strip window (0, x_max] x [-1/2, 1/2]."""
    return count_in_box(g, 0.0, x_max, -0.5, 0.5)


# ---------------------------------------------------------------------------
# strip patterns


def strip_pattern(g: AffineLattice, count: int = None, x_max: float = None,
                  x_budget: float = 10 ** 6, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Strip points of the lattice sorted by abscissa.

    Returns an (N, 2) array of the points with 0 < x and |y| <= 1/2, the
    first ``count`` of them or all up to ``x_max``.  Abscissa ties and
    ordinates within ``tol`` of the strip boundary raise DegenerateLattice;
    exceeding ``x_budget`` raises BudgetExhausted.
    """
    if (count is None) == (x_max is None):
        raise ValueError("give exactly one of count and x_max")
    m = g.matrix_array()
    off = g.offset_array()
    if x_max is not None:
        if x_max > x_budget:
            raise BudgetExhausted(f"x_max {x_max} beyond budget {x_budget}")
        pts = _strip_points(m, x_max, 0.5 + tol, offset=off)
        return _checked(pts, tol)
    window = 4.0
    while True:
        pts = _strip_points(m, window, 0.5 + tol, offset=off)
        if len(pts) >= count:
            return _checked(pts, tol)[:count]
        if window > x_budget:
            raise BudgetExhausted(
                f"{len(pts)} of {count} strip points within abscissa {x_budget}",
                found=len(pts), partial=_checked(pts, tol))
        window *= 2.0


def _checked(pts, tol):
    if len(pts) and np.any(np.abs(np.abs(pts[:, 1]) - 0.5) <= tol):
        raise DegenerateLattice("ordinate on the strip boundary")
    keep = np.abs(pts[:, 1]) <= 0.5
    pts = pts[keep]
    if len(pts) > 1 and np.any(np.diff(pts[:, 0]) <= tol):
        raise DegenerateLattice("tied abscissas in the strip pattern")
    return pts


@dataclass(frozen=True)
class LimitProcessSample:
    """Strip pattern of one lattice with its gap and exit bookkeeping.

    ``x`` are the strip abscissas, ``eta`` their gaps (the first gap is
    measured from zero), ``xi`` the alternating partial gap sums;
    ``exit_index`` is the first crossing index minus one, or None when the
    alternating sum never turns nonpositive within the pattern.
    """

    lattice: AffineLattice
    x: tuple
    eta: tuple
    xi: tuple
    exit_index: "int | None"


def tube_points(g: AffineLattice, count: int,
                x_budget: float = 10 ** 6) -> LimitProcessSample:
    """First ``count`` strip points with gaps, alternating sums and the
    exit index they determine.

    Raises BudgetExhausted when the strip holds fewer than ``count`` points
    up to abscissa ``x_budget`` and DegenerateLattice on boundary ordinates
    or tied abscissas.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    pts = strip_pattern(g, count=count, x_budget=x_budget)
    xs, eta, xi = [], [], []
    prev = 0.0
    acc = 0.0
    q = None
    for idx, (x, _) in enumerate(pts):
        gap = float(x) - prev
        xs.append(float(x))
        eta.append(gap)
        acc = acc + gap if idx % 2 == 0 else acc - gap
        xi.append(float(acc))
        prev = float(x)
        if q is None and acc <= 0.0:
            q = idx
    return LimitProcessSample(lattice=g, x=tuple(xs), eta=tuple(eta),
                              xi=tuple(xi), exit_index=q)


def limit_exit_index(g: AffineLattice, cutoff: int = 10 ** 5,
                     x_budget: float = 10 ** 6) -> "int | None":
    """Exit index of the strip pattern through the section exchange.

    Finds the first strip point, then advances gap by gap with the induced
    three-interval exchange, so the cost per step is constant regardless of
    how far apart the strip points are.  Returns None when censored.
    """
    m = g.matrix_array()
    off = g.offset_array()
    window = 4.0
    while True:
        pts = _strip_points(m, window, 0.5 + BOUNDARY_TOL, offset=off)
        if len(pts):
            pts = _checked(pts, BOUNDARY_TOL)
            if len(pts):
                break
        if window > x_budget:
            return None
        window *= 2.0
    x1, y1 = float(pts[0, 0]), float(pts[0, 1])
    iet = lattice_iet(m)
    brk0, brk1 = iet.breaks
    sh0, sh1, sh2 = iet.shifts
    ps0, ps1, ps2 = iet.psi
    acc = x1
    z = -y1
    # scalar three-branch stepping; equivalent to iet_apply/iet_piece but
    # without per-step call overhead
    for j in range(2, cutoff + 1):
        if z < brk0:
            step = ps0
            z += sh0
        elif z < brk1:
            step = ps1
            z += sh1
        else:
            step = ps2
            z += sh2
        acc = acc - step if j % 2 == 0 else acc + step
        if acc <= 0.0:
            return j - 1
    return None


def limiting_exit_law(k_max: int, samples: int, seed: int,
                      cutoff: int = None) -> PmfEstimate:
    """Monte Carlo estimate of the limiting exit-index distribution.

    Draws lattices from the invariant measure and records the exit index of
    each strip pattern.  Degenerate lattices are resampled and counted in
    the metadata; censored patterns go into the tail mass, so probabilities
    and tail always add to one.  The default cutoff stops each walk as soon
    as its exit index is known to exceed ``k_max``, which only moves mass
    between the indistinguishable tail categories.
    """
    if samples <= 0:
        raise EmptySample("samples must be positive")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if cutoff is None:
        cutoff = k_max + 2
    rng = np.random.default_rng(seed)
    support = tuple(range(1, k_max + 1, 2))
    counts = {k: 0 for k in support}
    degenerate = censored = beyond = 0
    produced = 0
    while produced < samples:
        g = haar_sample(rng)
        try:
            q = limit_exit_index(g, cutoff=cutoff)
        except (DegenerateLattice, BudgetExhausted):
            degenerate += 1
            continue
        produced += 1
        if q is None:
            censored += 1
        elif q in counts:
            counts[q] += 1
        else:
            beyond += 1
    tail = (censored + beyond) / samples
    return PmfEstimate(
        support=support,
        probs=tuple(counts[k] / samples for k in support),
        tail=tail,
        trials=samples,
        meta={"seed": seed, "degenerate": degenerate, "censored": censored,
              "beyond_support": beyond, "cutoff": cutoff})
