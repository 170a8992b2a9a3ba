"""Exception types shared across the package."""


class BudgetExhausted(RuntimeError):
    """A step or return budget ran out before the requested data was produced."""

    def __init__(self, message, found=None, partial=None):
        super().__init__(message)
        self.found = found          # how many items were produced before giving up
        self.partial = partial      # optional partial result


class PrecisionLoss(RuntimeError):
    """The fast hitting path could not resolve the orbit at working precision.

    Unreachable with the exact integer backend; kept so callers can still
    write the documented fallback (catch and retry with the naive path).
    """


class ParityError(ValueError):
    """An exit index that must be odd was even (or vice versa)."""


class HorizonExceeded(ValueError):
    """A continuous-time query ran past the last computed hitting time."""


class CornerHit(RuntimeError):
    """A trajectory passed through a barrier endpoint within tolerance.

    The specular reflection is undefined there; samples raising this are
    discarded and counted, never silently perturbed.
    """


class OutOfDomain(ValueError):
    """A point fed to an interval exchange lies outside its domain."""


class DegenerateLattice(RuntimeError):
    """A lattice configuration without the generic 3-interval structure
    (tied abscissas, ordinates on the section boundary, or fewer than the
    expected continuity intervals)."""


class FlowOverflow(ValueError):
    """Diagonal flow time large enough to overflow the matrix entries."""


class ConfigError(ValueError):
    """Bad run configuration (unknown key, malformed or out-of-range value)."""


class EmptySample(ValueError):
    """An estimator was asked to run with zero samples."""


class ArityError(ValueError):
    """A joint-distribution query with unsupported arity."""


class InsufficientData(RuntimeError):
    """Too few tail events to fit a slope."""
