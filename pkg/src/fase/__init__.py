"""Functional adjacency spectral embedding for index-varying network data.

Estimates smooth node-level latent processes from a series of symmetric
network snapshots by expanding the processes in a B-spline basis and running
gradient descent on the least-squares reconstruction error, together with a
spectral initializer, model selection, baselines, synthetic generators, and
rotation-aware error metrics.
"""

from .align import (
    AlignmentReport,
    err_theta_mid,
    err_z,
    err_z_star,
    procrustes,
    sequential_procrustes,
)
from .archive import DataError, load_series, save_series
from .baselines import ase_per_snapshot, omni_embed
from .basis import SplineBasis, make_basis
from .estimators import FASE, NGCVSearch
from .fitting import (
    DivergenceError,
    FaseFit,
    FitOptions,
    fit_fase,
    fit_fase_penalized,
    fit_fase_sequential,
    fit_pipeline,
    predict,
    predict_adjacency,
)
from .model import (
    SnapshotSeries,
    as_series,
    evaluate_processes,
    evaluate_trajectories,
    expected_adjacency,
    gradient,
    objective,
    penalized_gradient,
    penalized_objective,
)
from .spectral import (
    SpectralDiagnostics,
    ase,
    default_L,
    diagnostics,
    initialize,
    partition_indices,
)
from .synthetic import (
    InfeasibleDensityError,
    ScenarioSpec,
    gen_scenario_i,
    gen_scenario_ii,
    gen_scenario_iii,
    generator_basis,
    make_interpolation_task,
)
from .tuning import (
    TuningGrid,
    TuningResult,
    coordinate_descent_select,
    grid_select,
    ngcv,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "DataError",
    "DivergenceError",
    "FASE",
    "FaseFit",
    "FitOptions",
    "InfeasibleDensityError",
    "NGCVSearch",
    "ScenarioSpec",
    "SnapshotSeries",
    "SpectralDiagnostics",
    "SplineBasis",
    "TuningGrid",
    "TuningResult",
    "as_series",
    "ase",
    "ase_per_snapshot",
    "coordinate_descent_select",
    "default_L",
    "diagnostics",
    "err_theta_mid",
    "err_z",
    "err_z_star",
    "evaluate_processes",
    "evaluate_trajectories",
    "expected_adjacency",
    "fit_fase",
    "fit_fase_penalized",
    "fit_fase_sequential",
    "fit_pipeline",
    "gen_scenario_i",
    "gen_scenario_ii",
    "gen_scenario_iii",
    "generator_basis",
    "gradient",
    "grid_select",
    "initialize",
    "load_series",
    "make_basis",
    "make_interpolation_task",
    "ngcv",
    "objective",
    "omni_embed",
    "partition_indices",
    "penalized_gradient",
    "penalized_objective",
    "predict",
    "predict_adjacency",
    "procrustes",
    "save_series",
    "sequential_procrustes",
]
