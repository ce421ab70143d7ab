"""surety: probability-of-failure certification and optimal uncertainty
bounds, built on a constrained, monitorable, parallelizable derivative-free
solver stack."""

__version__ = "0.1.0"

from .core import (Box, CountedFunction, DimensionMismatch, EvaluationError,
                   InfeasiblePoint, NotFiniteError, SuretyError, clip_to_box)
from .termination import (AllOf, AnyOf, ChangeOverGeneration, EvaluationLimit,
                          GenerationLimit)
from .monitors import Monitor
from .maps import (CarddealerMap, EqualPortionMap, MapError, PoolMap,
                   SequentialMap, build_map, carddealer_assignment,
                   equalportion_assignment)
from .solvers import (DifferentialEvolutionSolver, NelderMeadSolver,
                      PowellSolver, make_solver)
from .multistart import (MultistartResult, buckshot_starts, cluster_minima,
                         lattice_centers, run_multistart)
from .constraints import (ConstraintProgram, ParseError, PenaltySpec,
                          ProjectionError, build_penalty, parse_constraints,
                          wrap_cost)
from .measures import (DiracMeasure, ImpositionError, ProductMeasure,
                       impose_expectation, mean_and_range, packed_bounds,
                       unpack)
from .uq import (CertificationReport, GlobalSearchSpec, OUQProblem, OUQResult,
                 certify, diameter, estimate_mean, mcdiarmid_bound,
                 oscillation, ouq_objective, ouq_solve, run_certification,
                 suboscillation)

__all__ = [
    "Box", "CountedFunction", "SuretyError", "DimensionMismatch",
    "NotFiniteError", "EvaluationError", "InfeasiblePoint", "clip_to_box",
    "ChangeOverGeneration", "EvaluationLimit", "GenerationLimit", "AnyOf",
    "AllOf", "Monitor", "SequentialMap", "CarddealerMap", "EqualPortionMap",
    "PoolMap", "MapError", "build_map", "carddealer_assignment",
    "equalportion_assignment", "NelderMeadSolver", "PowellSolver",
    "DifferentialEvolutionSolver", "make_solver", "buckshot_starts",
    "lattice_centers", "cluster_minima", "run_multistart", "MultistartResult",
    "ConstraintProgram", "ParseError", "ProjectionError", "PenaltySpec",
    "parse_constraints", "build_penalty", "wrap_cost", "DiracMeasure",
    "ProductMeasure", "ImpositionError", "impose_expectation",
    "mean_and_range", "packed_bounds", "unpack", "GlobalSearchSpec",
    "CertificationReport", "OUQProblem", "OUQResult", "oscillation",
    "suboscillation", "diameter", "mcdiarmid_bound", "certify",
    "estimate_mean", "run_certification", "ouq_objective", "ouq_solve",
]
