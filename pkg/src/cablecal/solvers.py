"""Batch identification: least squares, Levenberg-Marquardt and the
variable step-size LM variant (SLM).

All three share one loop. Each iteration forms ``J`` and ``E`` at the
current estimate, solves the damped normal equations and moves by
``delta_t`` times that step. ``delta_t`` is fixed at 1 for LS/LM and decays
geometrically for SLM.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .error_model import DH_ONLY, ParamLayout, check_deviation, identification_jacobian, residuals, zero_deviation

COND_LIMIT = 1e12
DIVERGENCE_PATIENCE = 10


class SingularSystemError(np.linalg.LinAlgError):
    """Normal equations too ill-conditioned for an undamped solve."""


@dataclass
class SolverConfig:
    lam: float = 0.01
    delta0: float = 1.0
    mu: float = 0.95
    max_iter: int = 200
    tol: float = 1e-9

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lam must be finite and >= 0")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be > 0")
        if not 0 < self.mu <= 1:
            raise ValueError("mu must lie in (0, 1]")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        self.max_iter = int(self.max_iter)

    def to_dict(self):
        return {"lambda": self.lam, "delta0": self.delta0, "mu": self.mu, "max_iter": self.max_iter, "tol": self.tol}

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        if "lambda" in obj:
            obj["lam"] = obj.pop("lambda")
        return cls(**obj)


@dataclass
class SolveReport:
    x_hat: np.ndarray
    rmse_history: list
    iterations: int
    converged: bool
    wall_time: float
    method: str = ""
    stage_boundary: int | None = None
    extras: dict = field(default_factory=dict)

    @property
    def final_rmse(self) -> float:
        return self.rmse_history[-1]

    def iterations_to(self, threshold: float) -> int | None:
        """First history index whose RMSE is at or below ``threshold``."""
        for i, r in enumerate(self.rmse_history):
            if r <= threshold:
                return i
        return None


def _normal_equations(j, e):
    j = np.asarray(j, dtype=float)
    e = np.asarray(e, dtype=float).reshape(-1)
    if j.ndim != 2 or j.shape[0] != e.size:
        raise ValueError(f"shape mismatch: J {j.shape}, E {e.shape}")
    return j.T @ j, j.T @ e


def _solve_spd(a, b):
    # Cholesky first; LinAlgError here means a is not numerically positive definite
    L = np.linalg.cholesky(a)
    y = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, y)


def least_squares_step(j, e) -> np.ndarray:
    """``(J^T J)^-1 J^T E``; raises ``SingularSystemError`` on rank deficiency."""
    jtj, jte = _normal_equations(j, e)
    cond = np.linalg.cond(jtj)
    if not cond < COND_LIMIT:
        raise SingularSystemError(
            f"J^T J is singular or ill-conditioned (cond={cond:.3g}); "
            "redundant parameters need damping, use the LM method"
        )
    try:
        return _solve_spd(jtj, jte)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def lm_step(j, e, lam: float) -> np.ndarray:
    """Damped step ``(J^T J + lam I)^-1 J^T E``."""
    if not lam >= 0:
        raise ValueError("lam must be >= 0")
    if lam == 0:
        return least_squares_step(j, e)
    jtj, jte = _normal_equations(j, e)
    jtj[np.diag_indices_from(jtj)] += lam
    return _solve_spd(jtj, jte)


def _rms(e):
    return float(math.sqrt(np.mean(e * e)))


def _iterate(model, data, cfg: SolverConfig, *, decay: bool, method: str, x0=None, lam=None,
             layout: ParamLayout = DH_ONLY):
    t0 = time.perf_counter()
    lam = cfg.lam if lam is None else lam
    x = zero_deviation(layout) if x0 is None else check_deviation(x0).copy()
    e = residuals(model, x, data)
    history = [_rms(e)]
    iterates = [x.copy()]
    deltas = []
    delta = cfg.delta0 if decay else 1.0
    converged = history[0] < cfg.tol
    rises = 0
    it = 0
    while not converged and it < cfg.max_iter:
        J = identification_jacobian(model, x, data)
        step = lm_step(J, e, lam)
        x = x + delta * step
        deltas.append(delta)
        e = residuals(model, x, data)
        history.append(_rms(e))
        iterates.append(x.copy())
        it += 1
        if abs(history[-1] - history[-2]) < cfg.tol or history[-1] < cfg.tol:
            converged = True
            break
        rises = rises + 1 if history[-1] > history[-2] else 0
        if rises >= DIVERGENCE_PATIENCE:
            break
        if decay:
            delta = delta * cfg.mu
    return SolveReport(
        x_hat=x,
        rmse_history=history,
        iterations=it,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        method=method,
        extras={"iterates": iterates, "step_sizes": deltas, "diverged": rises >= DIVERGENCE_PATIENCE},
    )


def ls_solve(model, data, cfg: SolverConfig | None = None, x0=None, layout=DH_ONLY) -> SolveReport:
    """Iterated undamped least squares (Gauss-Newton)."""
    return _iterate(model, data, cfg or SolverConfig(), decay=False, method="ls", x0=x0, lam=0.0, layout=layout)


def lm_solve(model, data, cfg: SolverConfig | None = None, x0=None, layout=DH_ONLY) -> SolveReport:
    return _iterate(model, data, cfg or SolverConfig(), decay=False, method="lm", x0=x0, layout=layout)


def slm_solve(model, data, cfg: SolverConfig | None = None, x0=None, layout=DH_ONLY) -> SolveReport:
    """LM with a step-size multiplier ``delta_t = delta0 * mu**t``."""
    return _iterate(model, data, cfg or SolverConfig(), decay=True, method="slm", x0=x0, layout=layout)
