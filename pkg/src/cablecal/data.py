"""Measurement sets: CSV persistence and seeded synthetic scenarios."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .error_model import DH_ONLY, ParamLayout, check_deviation, predicted_lengths, random_deviation
from .kinematics import RobotModel

CSV_HEADER = "q1_rad,q2_rad,q3_rad,q4_rad,q5_rad,q6_rad,z_mm"
# accepted on load only; save always writes CSV_HEADER
_DEG_HEADER = "q1_deg,q2_deg,q3_deg,q4_deg,q5_deg,q6_deg,z_mm"

RNG_ALGORITHM = "numpy.random.Generator(PCG64); normals via ziggurat"


class DataFormatError(ValueError):
    """Malformed measurement file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class MeasurementSet:
    q: np.ndarray  # (m, 6) rad
    z: np.ndarray  # (m,) mm
    provenance: str = ""

    def __post_init__(self):
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float))
        self.z = np.asarray(self.z, dtype=float).reshape(-1)
        if self.z.size < 1:
            raise ValueError("measurement set must contain at least one point")
        if self.q.shape != (self.z.size, 6):
            raise ValueError(f"expected q of shape ({self.z.size}, 6), got {self.q.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.z))):
            raise ValueError("measurement set contains non-finite values")
        if np.any(self.z <= 0):
            raise ValueError("measured cable lengths must be positive")

    def __len__(self):
        return self.z.size

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.q).tobytes())
        h.update(np.ascontiguousarray(self.z).tobytes())
        return h.hexdigest()


def load(path) -> MeasurementSet:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataFormatError("file is empty", 1)
    header = lines[0].rstrip("\r")
    if header == CSV_HEADER:
        scale = 1.0
    elif header == _DEG_HEADER:
        scale = math.pi / 180.0
    else:
        raise DataFormatError(f"unexpected header {header!r}; expected {CSV_HEADER!r}", 1)
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        fields = next(csv.reader([raw.rstrip("\r")]), [])
        if len(fields) != 7:
            raise DataFormatError(f"expected 7 columns, got {len(fields)}", lineno)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise DataFormatError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise DataFormatError("non-finite value", lineno)
        if vals[6] <= 0:
            raise DataFormatError("cable length must be positive", lineno)
        rows.append(vals)
    if not rows:
        raise DataFormatError("no measurements after header", 2)
    arr = np.array(rows)
    return MeasurementSet(arr[:, :6] * scale, arr[:, 6], provenance=str(path))


def save(data: MeasurementSet, path) -> None:
    if len(data) < 1:
        raise ValueError("refusing to write an empty measurement set")
    out = [CSV_HEADER]
    for qi, zi in zip(data.q, data.z):
        out.append(",".join(f"{v:.17g}" for v in (*qi, zi)))
    Path(path).write_bytes(("\n".join(out) + "\n").encode("utf-8"))


@dataclass
class SyntheticScenario:
    nominal: RobotModel
    x_true: np.ndarray | None = None
    noise_std: float = 0.0
    seed: int = 0
    n_points: int = 120
    joint_ranges: tuple = ((-math.pi / 2, math.pi / 2),) * 6
    # used only when x_true is None: uniform draw within these bounds
    length_bound: float = 0.5
    angle_bound: float = 0.005
    layout: ParamLayout = field(default=DH_ONLY)

    def __post_init__(self):
        if self.noise_std < 0 or not math.isfinite(self.noise_std):
            raise ValueError("noise_std must be finite and >= 0")
        if int(self.n_points) < 1:
            raise ValueError("n_points must be >= 1")
        ranges = np.asarray(self.joint_ranges, dtype=float)
        if ranges.shape != (6, 2) or not np.all(np.isfinite(ranges)) or np.any(ranges[:, 0] >= ranges[:, 1]):
            raise ValueError("joint_ranges must be six finite (min, max) pairs with min < max")
        self.joint_ranges = tuple(map(tuple, ranges))
        if self.x_true is not None:
            self.x_true = check_deviation(self.x_true, self.layout)

    @classmethod
    def from_dict(cls, obj: dict, base_dir=None) -> "SyntheticScenario":
        nominal = obj["nominal"]
        if isinstance(nominal, str):
            p = Path(nominal)
            if base_dir is not None and not p.is_absolute():
                p = Path(base_dir) / p
            nominal = json.loads(p.read_text(encoding="utf-8"))
        layout = ParamLayout(bool(obj.get("identify_anchor", False)), bool(obj.get("identify_cable_offset", False)))
        kwargs = dict(
            nominal=RobotModel.from_dict(nominal),
            x_true=obj.get("x_true"),
            noise_std=float(obj.get("noise_std_mm", obj.get("noise_std", 0.0))),
            seed=int(obj.get("seed", 0)),
            n_points=int(obj.get("n_points", 120)),
            layout=layout,
        )
        if "joint_ranges_rad" in obj:
            kwargs["joint_ranges"] = obj["joint_ranges_rad"]
        if "length_bound_mm" in obj:
            kwargs["length_bound"] = float(obj["length_bound_mm"])
        if "angle_bound_rad" in obj:
            kwargs["angle_bound"] = float(obj["angle_bound_rad"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {
            "nominal": self.nominal.to_dict(),
            "noise_std_mm": self.noise_std,
            "seed": self.seed,
            "n_points": self.n_points,
            "joint_ranges_rad": [list(r) for r in self.joint_ranges],
            "length_bound_mm": self.length_bound,
            "angle_bound_rad": self.angle_bound,
            "identify_anchor": self.layout.identify_anchor,
            "identify_cable_offset": self.layout.identify_cable_offset,
        }
        if self.x_true is not None:
            out["x_true"] = [float(v) for v in self.x_true]
        return out


def load_scenario(path) -> SyntheticScenario:
    path = Path(path)
    return SyntheticScenario.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)


def synthesize(scenario: SyntheticScenario) -> tuple[MeasurementSet, np.ndarray]:
    """Draw joint configurations and (noisy) cable readings with known truth.

    Draw order from the seeded generator is fixed: deviation (only if not
    given), joint configurations, then measurement noise.
    """
    rng = np.random.default_rng(scenario.seed)
    if scenario.x_true is None:
        x_true = random_deviation(rng, scenario.length_bound, scenario.angle_bound, scenario.layout)
    else:
        x_true = scenario.x_true.copy()
    lo, hi = np.asarray(scenario.joint_ranges).T
    q = rng.uniform(lo, hi, size=(scenario.n_points, 6))
    z = predicted_lengths(scenario.nominal, x_true, q)
    if scenario.noise_std > 0:
        z = z + rng.normal(0.0, scenario.noise_std, size=z.shape)
    tag = f"synthetic seed={scenario.seed} n={scenario.n_points} noise_std={scenario.noise_std:g}mm"
    return MeasurementSet(q, z, provenance=tag), x_true


def save_deviation(x, path, layout: ParamLayout | None = None) -> None:
    x = check_deviation(x, layout)
    layout = layout or ParamLayout.for_size(x.size)
    obj = {"names": list(layout.names), "values": [float(v) for v in x]}
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_deviation(path) -> np.ndarray:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    values = obj["values"] if isinstance(obj, dict) else obj
    return check_deviation(values)
