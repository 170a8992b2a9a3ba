"""Interval exchange transformations attached to the tube dynamics.

Two constructions produce three-interval exchanges here.  Inducing the
circle rotation on its hit window gives the classical three-gap first-return
map with exact dyadic data (:func:`induce_rotation`).  Sectioning the linear
flow on a unimodular lattice by the unit-height strip gives the continuum
analogue (:func:`lattice_iet`): each piece of the section interval is
claimed by the lattice vector that carries it to the next strip crossing.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhausted, DegenerateLattice, OutOfDomain
from .rotation import RotationParams, _Stepper

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class IET3:
    """Exchange of up to three subintervals of [0, domain).

    ``breaks`` are the interior breakpoints, ``shifts`` the translation each
    piece undergoes, ``labels`` the first-return time of the rotation on that
    piece, ``images_order`` the pieces listed bottom to top after the
    exchange (1-based).  The exact integer data lives at denominator
    2**scale: ``window`` is the window length, ``right_shift`` and
    ``left_shift`` the two elementary return displacements.

    ``degenerate`` marks the collapsed case of a single piece translating by
    zero (the orbit re-enters the window with no offset).
    """

    domain: float
    breaks: tuple
    shifts: tuple
    labels: tuple
    images_order: tuple
    degenerate: bool
    scale: int
    window: int
    right_shift: int
    left_shift: "int | None"
    q_r: int
    q_l: "int | None"


def induce_rotation(alpha: float, epsilon: float) -> IET3:
    """First-return map of the rotation by ``alpha`` to its hit window.

    The window is [0, epsilon) in coordinates shifted so that the barrier
    band starts at 0.  Return times take at most the three values q_r, q_l
    and q_r + q_l, and the pieces come back in reversed order (3 2 1).
    """
    params = RotationParams(x0=0.0, alpha=alpha, epsilon=epsilon)
    st = _Stepper(params)
    d = float(st.D)
    if st.a == 0:
        return IET3(
            domain=epsilon, breaks=(), shifts=(0.0,), labels=(st.q_r,),
            images_order=(1,), degenerate=True, scale=st.D.bit_length() - 1,
            window=st.E, right_shift=0, left_shift=None, q_r=st.q_r, q_l=None)
    a_r = st.a / d
    b_r = st.b / d
    return IET3(
        domain=epsilon,
        breaks=((st.E - st.a) / d, st.b / d),
        shifts=(a_r, a_r - b_r, -b_r),
        labels=(st.q_r, st.q_r + st.q_l, st.q_l),
        images_order=(3, 2, 1),
        degenerate=False,
        scale=st.D.bit_length() - 1,
        window=st.E, right_shift=st.a, left_shift=st.b,
        q_r=st.q_r, q_l=st.q_l)


def iet_apply(iet, y: float) -> float:
    """Image of ``y`` under the exchange."""
    lo, hi = _domain_bounds(iet)
    if not lo <= y < hi:
        raise OutOfDomain(f"{y} outside [{lo}, {hi})")
    piece = bisect_right(iet.breaks, y)
    return y + iet.shifts[piece]


def iet_piece(iet, y: float) -> int:
    """Index (0-based) of the piece containing ``y``."""
    lo, hi = _domain_bounds(iet)
    if not lo <= y < hi:
        raise OutOfDomain(f"{y} outside [{lo}, {hi})")
    return bisect_right(iet.breaks, y)


def iet_invert(iet, y: float) -> float:
    """Preimage of ``y`` under the exchange."""
    lo, hi = _domain_bounds(iet)
    if not lo <= y < hi:
        raise OutOfDomain(f"{y} outside [{lo}, {hi})")
    edges = (lo,) + tuple(iet.breaks) + (hi,)
    start = lo
    for piece in iet.images_order:
        length = edges[piece] - edges[piece - 1]
        if y < start + length or piece == iet.images_order[-1]:
            return y - iet.shifts[piece - 1]
        start += length
    raise OutOfDomain(f"no image interval contains {y}")  # pragma: no cover


def _domain_bounds(iet):
    if isinstance(iet, LatticeIET):
        return -0.5, 0.5
    return 0.0, iet.domain


# ---------------------------------------------------------------------------
# lattice-induced exchange on the strip section


@dataclass(frozen=True)
class LatticeIET:
    """Exchange on the section interval I = [-1/2, 1/2) induced by a
    unimodular planar lattice.

    Piece i is claimed by lattice vector ``vectors[i]``: a strip point with
    ordinate y in that piece is followed, ``psi[i]`` to the right, by one
    with ordinate y + ``shifts[i]``.  Generic lattices give exactly three
    pieces returning in reversed order.
    """

    matrix: tuple
    breaks: tuple
    shifts: tuple
    psi: tuple
    vectors: tuple
    images_order: tuple


def _lagrange_reduce(matrix):
    """Basis of the same lattice with rows as short as possible."""
    return _lagrange_reduce_t(matrix)[0]


def _lagrange_reduce_t(matrix):
    """Reduced basis together with the integer row transform.

    Returns (red, u) with red = u @ matrix and u unimodular, so a point
    (i, j) @ red has original integer coordinates (i, j) @ u.
    """
    m = np.array(matrix, dtype=np.float64)
    b1, b2 = m[0].copy(), m[1].copy()
    u1, u2 = [1, 0], [0, 1]
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
        u1, u2 = u2, u1
    while True:
        denom = b1 @ b1
        if denom == 0.0:
            raise DegenerateLattice("zero basis vector")
        mu = round(float((b2 @ b1) / denom))
        b2 = b2 - mu * b1
        u2 = [u2[0] - mu * u1[0], u2[1] - mu * u1[1]]
        if b2 @ b2 >= denom:
            return np.array([b1, b2]), (tuple(u1), tuple(u2))
        b1, b2 = b2, b1
        u1, u2 = u2, u1


def _strip_points(matrix, x_max, y_bound, offset=(0.0, 0.0), point_budget=10 ** 7):
    """Lattice translates ``k @ matrix + offset`` with 0 < x <= x_max and
    |y| <= y_bound, as an array sorted by abscissa.

    Enumerates integer coordinates against a reduced basis so the cost
    scales with the number of points, not with the skewness of the basis.
    """
    red = _lagrange_reduce(matrix)
    r1x, r1y = float(red[0, 0]), float(red[0, 1])
    r2x, r2y = float(red[1, 0]), float(red[1, 1])
    ox, oy = float(offset[0]), float(offset[1])
    det = r1x * r2y - r1y * r2x
    # second-coefficient range from the corners of the target box
    j_lo, j_hi = math.inf, -math.inf
    for cx in (0.0, x_max):
        for cy in (-y_bound, y_bound):
            j = ((cy - oy) * r1x - (cx - ox) * r1y) / det
            j_lo, j_hi = min(j_lo, j), max(j_hi, j)
    j_lo = math.floor(j_lo) - 1
    j_hi = math.ceil(j_hi) + 1
    if (j_hi - j_lo) > point_budget:
        raise BudgetExhausted("coefficient range exceeds the point budget",
                              found=0)
    out = []
    for j in range(j_lo, j_hi + 1):
        bx = j * r2x + ox
        by = j * r2y + oy
        lo, hi = -math.inf, math.inf
        ok = True
        for c, b, blo, bhi in ((r1x, bx, 0.0, x_max), (r1y, by, -y_bound, y_bound)):
            if c == 0.0:
                if not blo - 1e-9 <= b <= bhi + 1e-9:
                    ok = False
                    break
                continue
            t0 = (blo - b) / c
            t1 = (bhi - b) / c
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > lo:
                lo = t0
            if t1 < hi:
                hi = t1
        if not ok or lo > hi:
            continue
        i_lo = math.floor(lo) - 1
        i_hi = math.ceil(hi) + 1
        if len(out) + (i_hi - i_lo) > point_budget:
            raise BudgetExhausted("strip enumeration exceeds the point budget",
                                  found=len(out))
        if i_hi - i_lo <= 256:
            for i in range(i_lo, i_hi + 1):
                px = i * r1x + bx
                if 0.0 < px <= x_max:
                    py = i * r1y + by
                    if -y_bound <= py <= y_bound:
                        out.append((px, py))
        else:
            i_arr = np.arange(i_lo, i_hi + 1, dtype=np.float64)
            px = i_arr * r1x + bx
            py = i_arr * r1y + by
            keep = (px > 0.0) & (px <= x_max) & (np.abs(py) <= y_bound)
            out.extend(zip(px[keep].tolist(), py[keep].tolist()))
    out.sort()
    return np.array(out, dtype=np.float64).reshape(len(out), 2)


def lattice_iet(matrix, x_start: float = 4.0, x_budget: float = 10 ** 6,
                tol: float = BOUNDARY_TOL) -> LatticeIET:
    """Section exchange of the lattice spanned by the rows of ``matrix``.

    Relative lattice vectors with positive abscissa and |ordinate| < 1 claim
    parts of I = [-1/2, 1/2) in order of increasing abscissa: vector u
    claims [u_y - 1/2, u_y + 1/2) intersected with whatever is still
    unclaimed.  Exactly three claiming vectors with the reversed return
    order is the generic outcome; anything else raises DegenerateLattice.
    """
    x_max = x_start
    while True:
        pts = _strip_points(matrix, x_max, 1.0 - tol)
        pieces = _claim(pts, tol)
        if pieces is not None:
            break
        if x_max > x_budget:
            raise BudgetExhausted(
                f"section not fully claimed by abscissa {x_budget}")
        x_max *= 2.0
    if len(pieces) != 3:
        raise DegenerateLattice(
            f"expected 3 claimed pieces, got {len(pieces)}")
    xs = [u[0] for (_, _, u) in pieces]
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(xs[i] - xs[j]) <= tol:
                raise DegenerateLattice("tied abscissas among claiming vectors")
    # a non-claiming point tied with a claimer makes the claim order ambiguous
    claimers = {u for (_, _, u) in pieces}
    last_x = max(u[0] for u in claimers)
    for px, py in pts:
        if px > last_x + tol:
            break
        if (float(px), float(py)) in claimers:
            continue
        if any(abs(px - u[0]) <= tol for u in claimers):
            raise DegenerateLattice("candidate tied with a claiming abscissa")
    breaks = (pieces[1][0], pieces[2][0])
    if pieces[0][1] - pieces[1][0] > tol or pieces[1][1] - pieces[2][0] > tol:
        raise DegenerateLattice("claimed pieces do not tile the section")
    shifts = tuple(-u[1] for (_, _, u) in pieces)
    # a genuine (3 2 1) exchange: images tile I in reversed piece order
    starts = [lo + s for (lo, _, _), s in zip(pieces, shifts)]
    order = sorted(range(3), key=lambda i: starts[i])
    if order != [2, 1, 0]:
        raise DegenerateLattice("images do not come back in reversed order")
    edges = [-0.5, breaks[0], breaks[1], 0.5]
    pos = -0.5
    for i in (2, 1, 0):
        if abs(starts[i] - pos) > 10 * tol:
            raise DegenerateLattice("image intervals do not tile the section")
        pos += edges[i + 1] - edges[i]
    return LatticeIET(
        matrix=tuple(map(tuple, np.asarray(matrix, dtype=np.float64))),
        breaks=breaks,
        shifts=shifts,
        psi=tuple(u[0] for (_, _, u) in pieces),
        vectors=tuple((float(u[0]), float(u[1])) for (_, _, u) in pieces),
        images_order=(3, 2, 1))


def _claim(pts, tol):
    """Greedy claim of I by strip vectors in abscissa order.

    Returns the list of (lo, hi, vector) pieces sorted by lo once I is
    fully claimed, or None if the supplied points do not cover it yet.
    Raises DegenerateLattice on claims that collide within tol.
    """
    free = [(-0.5, 0.5)]
    claimed = []
    for ux, uy in pts:
        if not free:
            break
        lo, hi = uy - 0.5, uy + 0.5
        nxt = []
        for flo, fhi in free:
            ilo, ihi = max(flo, lo), min(fhi, hi)
            if ihi - ilo > tol:
                claimed.append((ilo, ihi, (float(ux), float(uy))))
                if ilo - flo > tol:
                    nxt.append((flo, ilo))
                if fhi - ihi > tol:
                    nxt.append((ihi, fhi))
            else:
                nxt.append((flo, fhi))
        free = [iv for iv in nxt if iv[1] - iv[0] > tol]
    if free:
        return None
    claimed.sort(key=lambda p: p[0])
    # merge adjacent fragments claimed by the same vector
    merged = [claimed[0]]
    for lo, hi, u in claimed[1:]:
        plo, phi, pu = merged[-1]
        if u == pu and abs(lo - phi) <= tol:
            merged[-1] = (plo, hi, u)
        else:
            merged.append((lo, hi, u))
    return merged


def alternating_crossing(values) -> "int | None":
    """Smallest k >= 1 whose alternating partial sum v1 - v2 + ... is <= 0."""
    acc = 0.0
    for k, v in enumerate(values, start=1):
        acc = acc + v if k % 2 == 1 else acc - v
        if acc <= 0.0:
            return k
    return None


def birkhoff_exit(iet: LatticeIET, y0: float, cutoff: int = 10 ** 6) -> "int | None":
    """Smallest even k with sum_{j<k} (-1)^j psi(T^j(-y0)) <= 0.

    Iterates the section exchange from -y0 and accumulates the signed
    abscissa advances.  Returns None if no even crossing occurs within
    ``cutoff`` iterations.
    """
    z = -y0
    acc = 0.0
    for j in range(cutoff):
        step = iet.psi[iet_piece(iet, z)]
        acc += step if j % 2 == 0 else -step
        if j % 2 == 1 and acc <= 0.0:
            return j + 1
        z = iet_apply(iet, z)
    return None
