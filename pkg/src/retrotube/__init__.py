"""Retroreflection statistics of a corrugated half-infinite tube.

The tube [0, inf) x [0, 1] carries short vertical mirrors at the integer
abscissas.  A particle entering at the open end bounces specularly until
it leaves again; this package computes those flights exactly through a
circle-rotation reduction, traces them geometrically as an independent
oracle, and estimates the laws of the exit index, the flight time, and
the probability of exact velocity reversal, against limit distributions
sampled from random affine lattices.
"""

from .billiard import (ExitRecord, InitialCondition, TrajectoryRecord,
                       exit_record_from_returns, fold, reversal_sufficient,
                       trace)
from .errors import (ArityError, BudgetExhausted, ConfigError, CornerHit,
                     DegenerateLattice, EmptySample, FlowOverflow,
                     HorizonExceeded, InsufficientData, OutOfDomain,
                     ParityError, PrecisionLoss)
from .experiments import (DEFAULT_EPSILON_GRID, DEFAULT_T_GRID, JointHitCdf,
                          MeasureSpec, ReversalEstimate, SweepReport,
                          TailDiagnostic, estimate_Q_pmf, estimate_reversal,
                          estimate_T_cdf, joint_hit_cdf, reversal_sweep,
                          tail_diagnostic)
from .iet import (IET3, LatticeIET, birkhoff_exit, induce_rotation,
                  iet_apply, iet_invert, iet_piece, lattice_iet)
from .lattice import (AffineLattice, LimitProcessSample, count_in_box,
                      count_in_rect, flow_apply, geodesic_push, haar_sample,
                      limit_exit_index, limiting_exit_law, rotation_lattice,
                      strip_pattern, tube_points)
from .mcstats import (CdfEstimate, PmfEstimate, clopper_pearson,
                      sup_distance, tv_distance)
from .rotation import (HitSequence, RotationParams, TransferMatrices,
                       continuous_position, exit_index, exit_returns,
                       flight_time, hitting_times_fast, hitting_times_naive,
                       visit_count)
from .sampling import ExitBatch, block_sizes, block_streams, exit_sweep, \
    run_blocks, visit_counts

__version__ = "0.1.0"

__all__ = [
    "AffineLattice", "ArityError", "BudgetExhausted", "CdfEstimate",
    "ConfigError", "CornerHit", "DEFAULT_EPSILON_GRID", "DEFAULT_T_GRID",
    "DegenerateLattice", "EmptySample", "ExitBatch", "ExitRecord",
    "FlowOverflow", "HitSequence", "HorizonExceeded", "IET3",
    "InitialCondition", "InsufficientData", "JointHitCdf", "LatticeIET",
    "LimitProcessSample", "MeasureSpec", "OutOfDomain", "ParityError",
    "PmfEstimate", "PrecisionLoss", "ReversalEstimate", "RotationParams",
    "SweepReport", "TailDiagnostic", "TrajectoryRecord", "TransferMatrices",
    "birkhoff_exit", "block_sizes", "block_streams", "clopper_pearson",
    "continuous_position", "count_in_box", "count_in_rect", "estimate_Q_pmf",
    "estimate_T_cdf", "estimate_reversal", "exit_index",
    "exit_record_from_returns", "exit_returns", "exit_sweep", "flow_apply",
    "fold", "flight_time", "geodesic_push", "haar_sample",
    "hitting_times_fast", "hitting_times_naive", "iet_apply", "iet_invert",
    "iet_piece", "induce_rotation", "joint_hit_cdf", "lattice_iet",
    "limit_exit_index", "limiting_exit_law", "reversal_sufficient",
    "reversal_sweep", "rotation_lattice", "run_blocks", "strip_pattern",
    "sup_distance", "tail_diagnostic", "trace", "tube_points",
    "tv_distance", "visit_count", "visit_counts", "__version__",
]
