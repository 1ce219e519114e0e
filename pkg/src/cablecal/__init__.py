"""Kinematic calibration of 6-axis serial robots from drawstring cable lengths."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("cablecal")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from ._accel import BACKEND
from .data import MeasurementSet, SyntheticScenario, load, save, synthesize
from .error_model import (
    ParamLayout,
    apply_deviation,
    identification_jacobian,
    objective,
    residuals,
)
from .kinematics import (
    DHLink, RobotModel, cable_length, end_position, forward_kinematics, link_transform, load_model, save_model,
)
from .metrics import MetricTriple, compare, evaluate
from .solvers import SolveReport, SolverConfig, least_squares_step, lm_solve, lm_step, ls_solve, slm_solve
from .ukf import UkfConfig, UkfState, ukf_calibrate, ukf_slm_calibrate
