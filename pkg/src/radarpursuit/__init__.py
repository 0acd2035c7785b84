"""Greedy on/off-grid range and speed estimation for FMCW chirp trains."""

from .signal import (
    SPEED_OF_LIGHT,
    Measurement,
    RadarConfig,
    Scene,
    Target,
    exact_atom,
    factorized_atom,
    synthesize,
)
from .dictionary import GridSpec, ParamGrid, TaylorDictionary, build_grid
from .solvers import ALGORITHMS, Estimate, SolverOptions, SolverReport, solve
from .evaluation import (
    AggregateResult,
    SceneDistribution,
    SweepPoint,
    TrialMetrics,
    associate,
    normalized_error,
    run_sweep,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "RadarConfig",
    "Target",
    "Scene",
    "Measurement",
    "exact_atom",
    "factorized_atom",
    "synthesize",
    "GridSpec",
    "ParamGrid",
    "TaylorDictionary",
    "build_grid",
    "ALGORITHMS",
    "SolverOptions",
    "SolverReport",
    "Estimate",
    "solve",
    "SceneDistribution",
    "SweepPoint",
    "TrialMetrics",
    "AggregateResult",
    "normalized_error",
    "associate",
    "run_trial",
    "run_sweep",
    "__version__",
]
