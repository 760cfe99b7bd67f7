"""Max-min fairness beamforming for joint communications and sensing.

The package bundles two solvers for the weighted max-min SINR/SCNR
beamforming problem under per-antenna power constraints — a low-complexity
smoothed first-order method and a fractional-programming baseline —
together with a Monte-Carlo benchmark harness.
"""

from .fp_solver import EpigraphOptions, FPOptions, solve_fp
from .metrics import Beamformers, MetricsReport, evaluate, scnr, sinr, to_db
from .scene import (
    Scene,
    SystemConfig,
    TargetResponse,
    derive_seed,
    generate_scene,
    path_loss_amplitude,
    steering_vector,
)
from .smooth_solver import SolverOptions, initial_beamformers, solve_smooth
from .trace import RunTrace

__version__ = "0.1.0"

__all__ = [
    "Beamformers",
    "EpigraphOptions",
    "FPOptions",
    "MetricsReport",
    "RunTrace",
    "Scene",
    "SolverOptions",
    "SystemConfig",
    "TargetResponse",
    "derive_seed",
    "evaluate",
    "generate_scene",
    "initial_beamformers",
    "path_loss_amplitude",
    "scnr",
    "sinr",
    "solve_fp",
    "solve_smooth",
    "steering_vector",
    "to_db",
    "__version__",
]
