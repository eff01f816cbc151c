"""Design optimisation of parallel kinematic manipulators.

A Sobol-seeded, coarse-to-fine multi-start Nelder-Mead search over a
constraint/reward evaluation of a discretised desired workspace.
"""
from ._backend import BACKEND
from .errors import (ConfigError, DegeneratePoseError, NoFeasibleDesignError,
                     NoFeasiblePointError, PkmoptError, UnsupportedDimensionError)
from .evaluation import (ActuatorBracket, ConstraintConfig, DesignProblem, RewardStrategy,
                         ValidPointRecord, best_actuator_bracket, evaluate_design)
from .geometry import RDWSpec, Segment3, grid_points, inverse_condition_index, rotation_uv, segment_distance
from .mechanisms import get_mechanism, numeric_jacobian
from .multistart import MultiStartConfig, RunResult, initial_simplexes, oracle_scan, run_cascade
from .neldermead import NMConfig, coarse_config, fine_config, single_start
from .sobol import sobol_points

__version__ = "0.1.0"
