"""Cable-length error model: parameter deviations, residuals, objective and
the identification Jacobian.

A deviation vector ``x`` is ordered ``[da_1..6, dd_1..6, dalpha_1..6,
dtheta_1..6]`` (24 entries). Two optional extensions append entries:
the anchor point (3, mm) and a constant cable zero offset (1, mm). The
vector length therefore identifies the layout uniquely: 24, 25 (offset),
27 (anchor) or 28 (both).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._kernels import N_FULL, cable_lengths
from .kinematics import RobotModel

N_DH = 24
LENGTH_STEP = 1e-6
ANGLE_STEP = 1e-7

_DH_NAMES = tuple(f"{p}{j}" for p in ("a", "d", "alpha", "theta") for j in range(1, 7))


@dataclass(frozen=True)
class ParamLayout:
    """Which entries of the full kernel row a deviation vector touches."""

    identify_anchor: bool = False
    identify_cable_offset: bool = False

    @cached_property
    def full_index(self) -> np.ndarray:
        idx = list(range(N_DH))
        if self.identify_anchor:
            idx += [24, 25, 26]
        if self.identify_cable_offset:
            idx.append(27)
        return np.array(idx)

    @property
    def size(self) -> int:
        return len(self.full_index)

    @cached_property
    def names(self) -> tuple[str, ...]:
        names = list(_DH_NAMES)
        if self.identify_anchor:
            names += ["anchor_x", "anchor_y", "anchor_z"]
        if self.identify_cable_offset:
            names.append("cable_offset")
        return tuple(names)

    @cached_property
    def steps(self) -> np.ndarray:
        """Central-difference step per column: 1e-6 mm or 1e-7 rad."""
        h = np.full(self.size, LENGTH_STEP)
        h[12:24] = ANGLE_STEP
        return h

    @cached_property
    def is_angle(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[12:24] = True
        return mask

    @classmethod
    def for_size(cls, n: int) -> "ParamLayout":
        try:
            anchor, offset = {24: (False, False), 25: (False, True), 27: (True, False), 28: (True, True)}[n]
        except KeyError:
            raise ValueError(f"deviation vector must have 24, 25, 27 or 28 entries, got {n}") from None
        return cls(anchor, offset)


DH_ONLY = ParamLayout()


def check_deviation(x, layout: ParamLayout | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    layout = layout or ParamLayout.for_size(x.size)
    if x.size != layout.size:
        raise ValueError(f"deviation vector must have {layout.size} entries, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("deviation vector contains non-finite values")
    return x


def zero_deviation(layout: ParamLayout = DH_ONLY) -> np.ndarray:
    return np.zeros(layout.size)


def random_deviation(rng: np.random.Generator, length_bound=0.5, angle_bound=0.005,
                     layout: ParamLayout = DH_ONLY) -> np.ndarray:
    """Uniform deviation within +-length_bound (mm) / +-angle_bound (rad)."""
    bounds = np.where(layout.is_angle, angle_bound, length_bound)
    return rng.uniform(-bounds, bounds)


def _perturbed_rows(model: RobotModel, xs, layout: ParamLayout) -> np.ndarray:
    xs = np.atleast_2d(xs)
    rows = np.tile(model.as_vector(), (xs.shape[0], 1))
    rows[:, layout.full_index] += xs
    return rows


def apply_deviation(model: RobotModel, x) -> RobotModel:
    """Model with ``x`` added to its DH fields (and anchor/offset if present)."""
    x = check_deviation(x)
    layout = ParamLayout.for_size(x.size)
    return RobotModel.from_vector(_perturbed_rows(model, x, layout)[0])


def predicted_lengths(model: RobotModel, x, qs) -> np.ndarray:
    """Nominal cable lengths ``Z'`` of the model perturbed by ``x``."""
    x = check_deviation(x)
    return cable_lengths(_perturbed_rows(model, x, ParamLayout.for_size(x.size)), qs)[0]


def predicted_lengths_many(model: RobotModel, xs, qs) -> np.ndarray:
    """``predicted_lengths`` for a ``(k, n)`` stack of deviations; returns ``(k, m)``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return cable_lengths(_perturbed_rows(model, xs, ParamLayout.for_size(xs.shape[1])), qs)


def residuals(model: RobotModel, x, data) -> np.ndarray:
    """Measured minus predicted cable length, ``E = Z - Z'(x)``, in mm."""
    if len(data) < 1:
        raise ValueError("measurement set is empty")
    return data.z - predicted_lengths(model, x, data.q)


def objective(model: RobotModel, x, data) -> float:
    """Mean squared cable-length residual (mm^2)."""
    e = residuals(model, x, data)
    return float(np.mean(e * e))


def rmse(model: RobotModel, x, data) -> float:
    return float(np.sqrt(objective(model, x, data)))


def identification_jacobian(model: RobotModel, x, data) -> np.ndarray:
    """``d Z'_i / d x_k`` by central differences, shape ``(m, n)``.

    All 2n perturbed parameter rows go through the kernel in one batch.
    Because the residual is ``Z - Z'``, it linearises as ``e - J dx``.
    """
    if len(data) < 1:
        raise ValueError("measurement set is empty")
    x = check_deviation(x)
    layout = ParamLayout.for_size(x.size)
    n = layout.size
    h = layout.steps
    shifts = np.diag(h)
    xs = np.concatenate([x + shifts, x - shifts])
    f = cable_lengths(_perturbed_rows(model, xs, layout), data.q)
    J = ((f[:n] - f[n:]) / (2.0 * h)[:, None]).T
    if not np.all(np.isfinite(J)):
        raise FloatingPointError("identification Jacobian has non-finite entries")
    return J


def reference_jacobian(model: RobotModel, x, data) -> np.ndarray:
    """Column-by-column central differences, one perturbation at a time.

    Deliberately avoids the stacked path of ``identification_jacobian`` so
    the two can be compared.
    """
    x = check_deviation(x)
    layout = ParamLayout.for_size(x.size)
    J = np.empty((len(data), x.size))
    for k in range(x.size):
        hk = float(layout.steps[k])
        up = x.copy()
        up[k] = x[k] + hk
        down = x.copy()
        down[k] = x[k] - hk
        J[:, k] = (predicted_lengths(model, up, data.q) - predicted_lengths(model, down, data.q)) / (2.0 * hk)
    return J
