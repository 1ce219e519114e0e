"""Standard-DH forward kinematics of a 6-link serial arm and the drawstring
cable-length measurement model.

Units: millimetres for lengths, radians for angles. The effective joint
angle of link ``i`` is ``q_i + theta_offset_i``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import N_FULL, cable_lengths

N_LINKS = 6


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class DHLink:
    a: float
    d: float
    alpha: float
    theta_offset: float = 0.0

    def __post_init__(self):
        for name in ("a", "d", "alpha", "theta_offset"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not _finite(self.a, self.d, self.alpha, self.theta_offset):
            raise ValueError(f"DH link has non-finite field: {self}")


@dataclass(frozen=True)
class RobotModel:
    """Nominal DH chain plus the fixed cable anchor ``P_0`` in the base frame.

    ``cable_offset`` is a constant added to every cable reading. It is zero
    unless the optional zero-offset identification is enabled.
    """

    links: tuple[DHLink, ...]
    anchor: tuple[float, float, float] = (0.0, 0.0, 0.0)
    cable_offset: float = 0.0

    def __post_init__(self):
        links = tuple(self.links)
        if len(links) != N_LINKS:
            raise ValueError(f"expected {N_LINKS} links, got {len(links)}")
        if not all(isinstance(link, DHLink) for link in links):
            raise TypeError("links must be DHLink instances")
        anchor = tuple(float(v) for v in self.anchor)
        if len(anchor) != 3 or not _finite(*anchor):
            raise ValueError(f"anchor must be a finite 3-vector, got {self.anchor!r}")
        if not _finite(float(self.cable_offset)):
            raise ValueError("cable_offset must be finite")
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "cable_offset", float(self.cable_offset))

    @classmethod
    def from_arrays(cls, a, d, alpha, theta_offset=None, anchor=(0.0, 0.0, 0.0), cable_offset=0.0):
        theta_offset = np.zeros(N_LINKS) if theta_offset is None else theta_offset
        links = tuple(DHLink(*vals) for vals in zip(a, d, alpha, theta_offset))
        return cls(links, tuple(anchor), cable_offset)

    def as_vector(self) -> np.ndarray:
        """Absolute parameter row in the batched-kernel layout (length 28)."""
        out = np.empty(N_FULL)
        for j, link in enumerate(self.links):
            out[j] = link.a
            out[6 + j] = link.d
            out[12 + j] = link.alpha
            out[18 + j] = link.theta_offset
        out[24:27] = self.anchor
        out[27] = self.cable_offset
        return out

    @classmethod
    def from_vector(cls, v) -> "RobotModel":
        v = np.asarray(v, dtype=float)
        return cls.from_arrays(v[0:6], v[6:12], v[12:18], v[18:24], v[24:27], v[27])

    # -- config file ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "links": [
                {"a_mm": l.a, "d_mm": l.d, "alpha_rad": l.alpha, "theta_offset_rad": l.theta_offset}
                for l in self.links
            ],
            "anchor_mm": list(self.anchor),
        }
        if self.cable_offset:
            out["cable_offset_mm"] = self.cable_offset
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "RobotModel":
        try:
            links = tuple(
                DHLink(l["a_mm"], l["d_mm"], l["alpha_rad"], l["theta_offset_rad"]) for l in obj["links"]
            )
            anchor = tuple(obj["anchor_mm"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed robot model config: {exc!r}") from exc
        return cls(links, anchor, obj.get("cable_offset_mm", 0.0))


def load_model(path) -> RobotModel:
    with open(path, encoding="utf-8") as fh:
        return RobotModel.from_dict(json.load(fh))


def save_model(model: RobotModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def _joint_vector(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (N_LINKS,):
        raise ValueError(f"joint configuration must have {N_LINKS} entries, got {q.shape[0]}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint configuration contains non-finite values")
    return q


def link_transform(link: DHLink, q: float) -> np.ndarray:
    """4x4 homogeneous transform of one standard-DH link at joint angle ``q``."""
    q = float(q)
    if not math.isfinite(q):
        raise ValueError("joint angle must be finite")
    th = q + link.theta_offset
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(link.alpha), math.sin(link.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, link.a * ct],
            [st, ct * ca, -ct * sa, link.a * st],
            [0.0, sa, ca, link.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def forward_kinematics(model: RobotModel, q) -> np.ndarray:
    """Base-to-flange transform, the ordered product of the six link transforms."""
    q = _joint_vector(q)
    T = np.eye(4)
    for link, qi in zip(model.links, q):
        T = T @ link_transform(link, qi)
    return T


def end_position(model: RobotModel, q) -> np.ndarray:
    return forward_kinematics(model, q)[:3, 3].copy()


def cable_length(model: RobotModel, q) -> float:
    """Distance from the flange origin to the anchor, plus any cable offset."""
    diff = end_position(model, q) - np.asarray(model.anchor)
    return float(np.linalg.norm(diff)) + model.cable_offset


def cable_lengths_batch(model: RobotModel, qs, backend=None) -> np.ndarray:
    """Vectorised ``cable_length`` over an ``(m, 6)`` stack of configurations."""
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    if not np.all(np.isfinite(qs)):
        raise ValueError("joint configurations contain non-finite values")
    return cable_lengths(model.as_vector(), qs, backend=backend)[0]
