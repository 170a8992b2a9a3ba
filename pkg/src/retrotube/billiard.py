"""Billiard in the corrugated half-infinite tube.

The tube is [0, inf) x [0, 1] with vertical mirror segments of height
``epsilon/2`` growing from both walls at every integer abscissa x = 1, 2, ...
A particle enters through the open end x = 0 and bounces specularly: off the
horizontal walls (vertical velocity flips) and off the mirror faces
(horizontal velocity flips).  The package's claim of interest is that the
tube acts as an approximate retroreflector: the particle comes back out with
nearly reversed velocity and nearly unchanged ordinate.

Two independent routes compute the exit data.  :func:`trace` is a direct
float simulation of the bounce sequence, deliberately ignorant of the
rotation reduction.  :func:`exit_record_from_returns` goes through the exact
integer hitting-time machinery.  Tests drive both and compare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CornerHit, ParityError
from .rotation import RotationParams, exit_returns, flight_time

DEFAULT_MAX_EVENTS = 10 ** 6
CORNER_TOL = 1e-9


def fold(u: float) -> float:
    """Fold an unfolded ordinate back into the tube: tent map of period 2."""
    r = u % 2.0
    return r if r <= 1.0 else 2.0 - r


@dataclass(frozen=True)
class InitialCondition:
    """Entry ordinate and direction of a launch.

    ``angle`` is the direction as a fraction of pi, in (-1/2, 1/2); the
    stored ``slope`` is tan(pi * angle).  Either may be given; they must be
    consistent when both are.
    """

    y_in: float
    slope: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.y_in < 1.0:
            raise ValueError(f"y_in must lie strictly inside (0, 1), got {self.y_in}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")

    @classmethod
    def from_angle(cls, y_in: float, angle: float, epsilon: float) -> "InitialCondition":
        if not -0.5 < angle < 0.5:
            raise ValueError(f"angle must lie in (-1/2, 1/2), got {angle}")
        return cls(y_in=y_in, slope=math.tan(math.pi * angle), epsilon=epsilon)

    def rotation_params(self) -> RotationParams:
        return RotationParams.from_slope(self.y_in, self.slope, self.epsilon)


@dataclass(frozen=True)
class TraceEvent:
    """One elementary event of a traced trajectory.

    ``kind`` is "barrier" (mirror hit), "pass" (integer plane crossed without
    touching a mirror), "wall" (bounce off y=0 or y=1) or "exit".  ``s`` is
    the horizontal arc length travelled so far, ``t`` the elapsed time.
    """

    kind: str
    s: float
    x: float
    y: float
    t: float


@dataclass(frozen=True)
class ExitRecord:
    """Exit data of a trajectory that left the tube.

    ``q`` is the number of mirror reflections, ``flight`` the total time
    inside, ``y_out`` the exit ordinate.  ``reversed_exactly`` says whether
    the outgoing direction is the exact reversal of the incoming one.  ``z``
    is the unfolded ordinate at the turning point, ``zbar`` at the exit,
    ``z_dist`` the distance of z to the nearest integer, ``h_count`` the
    number of horizontal-wall bounces, ``n`` the integer return times.
    """

    y_in: float
    slope: float
    epsilon: float
    q: int
    flight: float
    y_out: float
    reversed_exactly: bool
    z: float
    zbar: float
    z_dist: float
    h_count: int
    n: tuple

    def ordinate_certificate(self) -> float:
        """Margin of |y_out - y_in| <= epsilon * q (nonnegative iff it holds)."""
        return self.epsilon * self.q - abs(self.y_out - self.y_in)

    def turning_certificate(self) -> float:
        """Margin of dist(z, Z) <= epsilon * q / 2 (nonnegative iff it holds)."""
        return self.epsilon * self.q / 2.0 - self.z_dist


@dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of a float trace: the event list, the exit data (None if the
    trajectory was still inside when the event budget ran out), and the
    number of integer-plane crossings processed."""

    events: tuple
    record: "ExitRecord | None"
    crossings: int


def reversal_sufficient(epsilon: float, q: int, y_in: float) -> bool:
    """True when epsilon * q is small enough to force an exact reversal.

    If epsilon * q < min(y_in, 1 - y_in) the unfolded exit ordinate is
    trapped in the reflected copy of the entry interval, so the exit
    direction must be the exact reversal of the entry direction.
    """
    return epsilon * q < min(y_in, 1.0 - y_in)


def _exit_record(ic: InitialCondition, n, q: int) -> ExitRecord:
    outbound = sum(n[j] for j in range(0, q, 2))
    z = ic.y_in + ic.slope * outbound
    zbar = 2.0 * z - ic.y_in
    y_out = fold(zbar)
    k = math.floor(zbar)
    rev = (q % 2 == 1) and (k % 2 == 1)
    z_dist = abs(z - round(z))
    return ExitRecord(
        y_in=ic.y_in, slope=ic.slope, epsilon=ic.epsilon,
        q=q, flight=flight_time(n, q, ic.slope), y_out=y_out,
        reversed_exactly=rev, z=z, zbar=zbar, z_dist=z_dist,
        h_count=abs(k), n=tuple(n))


def exit_record_from_returns(ic: InitialCondition, max_returns: int = 10 ** 6,
                             step_budget: int = 10 ** 9) -> "ExitRecord | None":
    """Exit data through the exact integer hitting-time route.

    Returns None when the trajectory has not exited within the budgets
    (censored sample; callers count these separately).
    """
    n, q = exit_returns(ic.rotation_params(), max_returns=max_returns,
                        step_budget=step_budget)
    if q is None:
        return None
    if q % 2 == 0:
        raise ParityError(f"even exit index {q} from return sequence {n[:8]}")
    return _exit_record(ic, n, q)


def trace(ic: InitialCondition, max_events: int = DEFAULT_MAX_EVENTS,
          include_horizontal: bool = False,
          corner_tol: float = CORNER_TOL) -> TrajectoryRecord:
    """Float simulation of the bounce sequence, event by event.

    Raises CornerHit when a plane crossing lands within ``corner_tol`` of a
    mirror tip or a wall corner, where the reflection law is ambiguous.
    Trajectories that neither exit nor hit a mirror within ``max_events``
    plane crossings come back censored (record=None); a horizontal launch
    outside the mirror band is censored immediately since no plane can ever
    reflect it.
    """
    y_in, slope, eps = ic.y_in, ic.slope, ic.epsilon
    half = eps / 2.0
    sec = math.sqrt(1.0 + slope * slope)
    events = []
    reflections = []  # arc lengths s at which a mirror was hit

    def add_wall_events(s_from, s_to, x_from, direction):
        # ordinate crossings of integer levels between two plane events
        z0 = y_in + slope * s_from
        z1 = y_in + slope * s_to
        lo, hi = (z0, z1) if z0 <= z1 else (z1, z0)
        first = math.floor(lo) + 1
        for k in range(first, math.floor(hi) + 1):
            sk = (k - y_in) / slope
            xk = x_from + direction * (sk - s_from)
            events.append(TraceEvent(kind="wall", s=sk, x=xk,
                                     y=float(k % 2), t=sk * sec))

    if slope == 0.0 and not (y_in <= half or y_in >= 1.0 - half):
        # rides between the mirrors forever; no event can ever occur
        return TrajectoryRecord(events=(), record=None, crossings=0)

    s = 0
    x = 0
    direction = 1
    crossings = 0
    while crossings < max_events:
        nxt = x + direction
        if nxt == 0:
            s_exit = s + 1
            if include_horizontal and slope != 0.0:
                add_wall_events(s, s_exit, x, direction)
            zbar = y_in + slope * s_exit
            y_out = fold(zbar)
            events.append(TraceEvent(kind="exit", s=float(s_exit), x=0.0,
                                     y=y_out, t=s_exit * sec))
            q = len(reflections)
            if q % 2 == 0:
                raise ParityError(f"trace exited after an even reflection count {q}")
            k = math.floor(zbar)
            # outbound and inbound arcs have equal length, so the turning
            # point sits exactly half way through the total arc
            outbound = s_exit // 2
            z = y_in + slope * outbound
            rec = ExitRecord(
                y_in=y_in, slope=slope, epsilon=eps, q=q,
                flight=s_exit * sec, y_out=y_out,
                reversed_exactly=(q % 2 == 1) and (k % 2 == 1),
                z=z, zbar=zbar, z_dist=abs(z - round(z)),
                h_count=abs(k), n=_gaps(reflections))
            return TrajectoryRecord(events=tuple(events), record=rec,
                                    crossings=crossings)
        s_next = s + 1
        crossings += 1
        zeta = y_in + slope * s_next
        u = fold(zeta)
        if (abs(u - half) <= corner_tol or abs(u - (1.0 - half)) <= corner_tol
                or u <= corner_tol or u >= 1.0 - corner_tol):
            raise CornerHit(
                f"crossing at x={nxt} lands at ordinate {u}, within "
                f"{corner_tol} of a mirror tip or wall corner")
        if include_horizontal and slope != 0.0:
            add_wall_events(s, s_next, x, direction)
        if u <= half or u >= 1.0 - half:
            events.append(TraceEvent(kind="barrier", s=float(s_next),
                                     x=float(nxt), y=u, t=s_next * sec))
            reflections.append(s_next)
            direction = -direction
        else:
            events.append(TraceEvent(kind="pass", s=float(s_next),
                                     x=float(nxt), y=u, t=s_next * sec))
        s = s_next
        x = nxt
    return TrajectoryRecord(events=tuple(events), record=None,
                            crossings=crossings)


def _gaps(times):
    out = []
    prev = 0
    for t in times:
        out.append(t - prev)
        prev = t
    return tuple(out)
