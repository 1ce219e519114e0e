"""Accuracy metrics and method comparison tables.

Note on ``std``: it is the mean *absolute* cable-length error,
``(1/m) * sum |e_i|``, not a standard deviation. The name is kept because it
is the column heading calibration results are conventionally reported under.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

BEFORE = "Before"


@dataclass(frozen=True)
class MetricTriple:
    rmse: float
    std: float
    max: float

    def to_dict(self):
        return {"rmse_mm": self.rmse, "std_mm": self.std, "max_mm": self.max}

    @classmethod
    def from_dict(cls, obj):
        return cls(float(obj["rmse_mm"]), float(obj["std_mm"]), float(obj["max_mm"]))

    def as_tuple(self):
        return (self.rmse, self.std, self.max)


def evaluate(residuals) -> MetricTriple:
    e = np.asarray(residuals, dtype=float).reshape(-1)
    if e.size < 1:
        raise ValueError("cannot evaluate an empty residual vector")
    if not np.all(np.isfinite(e)):
        raise ValueError("residuals contain non-finite values")
    ae = np.abs(e)
    top = float(np.max(ae))
    # scale before squaring so tiny or huge residuals neither underflow nor overflow
    rms = top * math.sqrt(np.mean((ae / top) ** 2)) if top > 0 else 0.0
    return MetricTriple(rmse=float(min(rms, top)), std=float(np.mean(ae)), max=top)


def gain_pct(best: MetricTriple, other: MetricTriple) -> tuple[float, float, float]:
    """Relative improvement of ``best`` over ``other``, percent, 2 decimals."""
    return tuple(
        round((o - b) / o * 100.0, 2) if o != 0 else 0.0
        for b, o in zip(best.as_tuple(), other.as_tuple())
    )


@dataclass(frozen=True)
class Row:
    method: str
    metrics: MetricTriple
    gain: tuple[float, float, float] | None = None


class ComparisonTable:
    """Rows sorted by RMSE; the uncalibrated row, if any, always last.

    The top row carries its percentage gain over the runner-up method.
    """

    def __init__(self, rows: list[Row]):
        self.rows = rows

    def to_records(self) -> list[dict]:
        return [
            {
                "method": r.method,
                "rmse_mm": r.metrics.rmse,
                "std_mm": r.metrics.std,
                "max_mm": r.metrics.max,
                "gain_pct": None if r.gain is None else list(r.gain),
            }
            for r in self.rows
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=2)

    def to_text(self) -> str:
        width = max(len("Method"), *(len(r.method) for r in self.rows))
        lines = [f"{'Method':<{width}}  {'RMSE(mm)':>10}  {'Std(mm)':>10}  {'Max(mm)':>10}  Gain(%) RMSE/Std/Max"]
        for r in self.rows:
            m = r.metrics
            gain = "" if r.gain is None else "/".join(f"{g:.2f}" for g in r.gain)
            lines.append(f"{r.method:<{width}}  {m.rmse:>10.4f}  {m.std:>10.4f}  {m.max:>10.4f}  {gain}".rstrip())
        return "\n".join(lines) + "\n"


def compare(reports, before: MetricTriple | None = None) -> ComparisonTable:
    """Build a comparison table from ``(method name, MetricTriple)`` pairs."""
    reports = list(reports)
    if not reports and before is None:
        raise ValueError("nothing to compare")
    names = [name for name, _ in reports]
    if before is not None:
        names.append(BEFORE)
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate method names: {sorted(n for n in set(names) if names.count(n) > 1)}")
    ranked = sorted(reports, key=lambda item: item[1].rmse)
    rows = [Row(name, metrics) for name, metrics in ranked]
    if len(rows) >= 2:
        rows[0] = Row(rows[0].method, rows[0].metrics, gain_pct(rows[0].metrics, rows[1].metrics))
    if before is not None:
        rows.append(Row(BEFORE, before))
    return ComparisonTable(rows)
