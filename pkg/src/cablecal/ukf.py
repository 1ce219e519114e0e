"""Unscented Kalman filter over the static kinematic-parameter state.

The state is the deviation vector itself, the process model is the
identity plus additive noise ``Q``, and each scalar cable reading is one
observation. Sigma points follow the scaled unscented transform with
``2N + 1`` points.

Weighted sums are accumulated relative to the centre sigma point,
``mean = y_0 + sum_{i>=1} wm_i (y_i - y_0)``, which is algebraically equal to
``sum_i wm_i y_i`` but avoids cancelling the large negative centre weight
that small ``alpha`` produces.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .error_model import DH_ONLY, ParamLayout, check_deviation, predicted_lengths_many, rmse
from .kinematics import RobotModel
from .solvers import SolveReport, SolverConfig, slm_solve

JITTER_START = 1e-12
JITTER_MAX = 1e-6


@dataclass
class UkfConfig:
    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0
    q_process: float | np.ndarray = 1e-10
    r_meas: float = 0.1**2
    p0: float | np.ndarray = 1e-4
    epochs: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.r_meas > 0:
            raise ValueError("r_meas must be > 0")
        if not np.all(np.asarray(self.p0) > 0):
            raise ValueError("p0 must be > 0")
        if not np.all(np.asarray(self.q_process) >= 0):
            raise ValueError("q_process must be >= 0")
        if int(self.epochs) < 1:
            raise ValueError("epochs must be >= 1")

    def to_dict(self):
        def plain(v):
            return np.asarray(v).tolist()

        return {
            "alpha": self.alpha, "beta": self.beta, "kappa": self.kappa,
            "q_process": plain(self.q_process), "r_meas": self.r_meas,
            "p0": plain(self.p0), "epochs": self.epochs,
        }

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        for key in ("q_process", "p0"):
            if isinstance(obj.get(key), list):
                obj[key] = np.asarray(obj[key], dtype=float)
        return cls(**obj)


@dataclass
class UkfState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != (self.x.size, self.x.size):
            raise ValueError(f"covariance shape {self.p.shape} does not match state size {self.x.size}")

    @classmethod
    def initial(cls, n: int, p0) -> "UkfState":
        return cls(np.zeros(n), np.diag(np.broadcast_to(np.asarray(p0, dtype=float), (n,)).copy()))


@dataclass
class SigmaSet:
    points: np.ndarray  # (2N+1, N), row 0 is the mean
    wm: np.ndarray
    wc: np.ndarray


class Observation(NamedTuple):
    y_hat: float
    s: float
    p_xy: np.ndarray
    sigmas: SigmaSet | None = None


def scaled_weights(n: int, alpha: float, beta: float, kappa: float):
    """Mean/covariance weights and the spread factor ``n + lambda``."""
    lam = alpha**2 * (n + kappa) - n
    c = n + lam
    if not c > 0:
        raise ValueError(f"degenerate sigma spread: n + lambda = {c:g}")
    wm = np.full(2 * n + 1, 0.5 / c)
    wc = wm.copy()
    wm[0] = lam / c
    wc[0] = lam / c + (1.0 - alpha**2 + beta)
    return wm, wc, c


def psd_sqrt(p: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding diagonal jitter 1e-12..1e-6 if needed."""
    try:
        return np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.trace(p)) / p.shape[0], 1.0)
    jitter = JITTER_START
    while jitter <= JITTER_MAX:
        try:
            return np.linalg.cholesky(p + jitter * scale * np.eye(p.shape[0]))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise np.linalg.LinAlgError("state covariance is not positive semidefinite even after jitter")


def sigma_points(state: UkfState, cfg: UkfConfig) -> SigmaSet:
    n = state.x.size
    wm, wc, c = scaled_weights(n, cfg.alpha, cfg.beta, cfg.kappa)
    L = psd_sqrt(state.p) * math.sqrt(c)
    points = np.empty((2 * n + 1, n))
    points[0] = state.x
    points[1:n + 1] = state.x + L.T
    points[n + 1:] = state.x - L.T
    return SigmaSet(points, wm, wc)


def _centered_mean(values, wm):
    return values[0] + wm[1:] @ (values[1:] - values[0])


def _symmetrize(p):
    return 0.5 * (p + p.T)


def predict(state: UkfState, cfg: UkfConfig) -> UkfState:
    """Identity process model: propagate sigma points unchanged, add ``Q``."""
    sig = sigma_points(state, cfg)
    x = _centered_mean(sig.points, sig.wm)
    dev = sig.points - x
    p = (dev.T * sig.wc) @ dev
    n = x.size
    p = p + np.diag(np.broadcast_to(np.asarray(cfg.q_process, dtype=float), (n,)))
    return UkfState(x, _symmetrize(p))


def observe_fn(state_pred: UkfState, h: Callable[[np.ndarray], np.ndarray], cfg: UkfConfig) -> Observation:
    """Unscented statistics of a scalar measurement ``h`` under ``state_pred``.

    ``h`` maps a ``(k, N)`` stack of states to ``k`` predicted readings.
    """
    sig = sigma_points(state_pred, cfg)
    y = np.asarray(h(sig.points), dtype=float).reshape(-1)
    y_hat = float(_centered_mean(y, sig.wm))
    dy = y - y_hat
    dx = sig.points - state_pred.x
    s = float(sig.wc @ (dy * dy)) + cfg.r_meas
    p_xy = (dx.T * sig.wc) @ dy
    return Observation(y_hat, s, p_xy, sig)


def observe(state_pred: UkfState, model: RobotModel, q, cfg: UkfConfig) -> Observation:
    """Cable-length observation at joint configuration ``q``."""
    q = np.asarray(q, dtype=float).reshape(1, 6)
    return observe_fn(state_pred, lambda xs: predicted_lengths_many(model, xs, q)[:, 0], cfg)


def update(state_pred: UkfState, y_measured: float, obs: Observation) -> UkfState:
    y_hat, s, p_xy = obs[0], obs[1], obs[2]
    if not s > 0:
        raise FloatingPointError(f"innovation variance must be positive, got {s!r}")
    gain = p_xy / s
    x = state_pred.x + gain * (float(y_measured) - y_hat)
    p = state_pred.p - s * np.outer(gain, gain)
    return UkfState(x, _symmetrize(p))


def ukf_calibrate(model: RobotModel, data, cfg: UkfConfig | None = None,
                  layout: ParamLayout = DH_ONLY) -> tuple[np.ndarray, SolveReport]:
    """Sequential UKF pass(es) over the dataset, starting from ``x = 0``.

    ``rmse_history`` holds the full-dataset RMSE before the first update and
    after every measurement.
    """
    cfg = cfg or UkfConfig()
    if len(data) < 1:
        raise ValueError("measurement set is empty")
    t0 = time.perf_counter()
    state = UkfState.initial(layout.size, cfg.p0)
    history = [rmse(model, state.x, data)]
    traces = [float(np.trace(state.p))]
    for _ in range(int(cfg.epochs)):
        for qi, zi in zip(data.q, data.z):
            state = predict(state, cfg)
            state = update(state, zi, observe(state, model, qi, cfg))
            history.append(rmse(model, state.x, data))
            traces.append(float(np.trace(state.p)))
    x_hat = check_deviation(state.x, layout)
    report = SolveReport(
        x_hat=x_hat,
        rmse_history=history,
        iterations=len(history) - 1,
        converged=True,
        wall_time=time.perf_counter() - t0,
        method="ukf",
        extras={"covariance": state.p, "trace_history": traces},
    )
    return x_hat, report


def ukf_slm_calibrate(model: RobotModel, data, ucfg: UkfConfig | None = None,
                      scfg: SolverConfig | None = None, layout: ParamLayout = DH_ONLY) -> SolveReport:
    """UKF pre-calibration followed by SLM started from the UKF mean."""
    t0 = time.perf_counter()
    x_ukf, ukf_report = ukf_calibrate(model, data, ucfg, layout)
    slm_report = slm_solve(model, data, scfg, x0=x_ukf, layout=layout)
    boundary = len(ukf_report.rmse_history) - 1
    return SolveReport(
        x_hat=slm_report.x_hat,
        rmse_history=ukf_report.rmse_history + slm_report.rmse_history[1:],
        iterations=boundary + slm_report.iterations,
        converged=slm_report.converged,
        wall_time=time.perf_counter() - t0,
        method="ukf-slm",
        stage_boundary=boundary,
        extras={
            "ukf_x_hat": x_ukf,
            "ukf_rmse": ukf_report.final_rmse,
            "ukf_wall_time": ukf_report.wall_time,
            "slm_wall_time": slm_report.wall_time,
            "slm_iterations": slm_report.iterations,
            "step_sizes": slm_report.extras["step_sizes"],
        },
    )
