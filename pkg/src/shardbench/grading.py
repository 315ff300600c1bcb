"""Low / Medium / High grades on the three criteria.

uniformity   mean coefficient of variation of per-shard counts (before and
             after the drop); lower is better
rebalancing  moved-records ratio; lower is better
speed        mean lookup time divided by the fastest algorithm's
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

from .errors import IncompleteInputError

HIGH, MEDIUM, LOW = "High", "Medium", "Low"
CRITERIA = ("uniformity", "rebalancing", "speed")


@dataclass(frozen=True)
class Thresholds:
    """Upper bounds (inclusive) for High and Medium on each criterion."""

    uniformity_high: float = 0.06
    uniformity_medium: float = 0.15
    rebalancing_high: float = 1.05
    rebalancing_medium: float = 1.5
    speed_high: float = 2.0
    speed_medium: float = 64.0

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class GradeRow:
    algorithm: str
    uniformity: str
    rebalancing: str
    speed: str
    uniformity_cv: float
    rebalancing_ratio: float
    speed_factor: float

    def grades(self) -> tuple[str, str, str]:
        return self.uniformity, self.rebalancing, self.speed


def _level(value: float, high: float, medium: float) -> str:
    if value <= high:
        return HIGH
    if value <= medium:
        return MEDIUM
    return LOW


def _number(row, name: str) -> float:
    value = getattr(row, name, None)
    if value is None or (isinstance(value, float) and math.isnan(value)):
        raise IncompleteInputError(f"{getattr(row, 'algorithm', '?')}: missing {name}")
    return float(value)


def _walk_ratio(trace) -> float | None:
    # a NodeWalkTrace, or the removal-step ratios already extracted from one
    if hasattr(trace, "steps"):
        ratios = [s.report.ratio for s in trace.steps if s.action == "remove"]
    else:
        ratios = list(trace)
    return sum(ratios) / len(ratios) if ratios else None


def grade(
    rows: Sequence,
    traces: Mapping[str, Any] | None = None,
    thresholds: Thresholds = Thresholds(),
) -> list[GradeRow]:
    """Grade each row.  When node-walk traces are given, the worse of the
    simulation ratio and the mean node-removal ratio counts for rebalancing."""
    if not rows:
        raise IncompleteInputError("no rows to grade")
    timings = [_number(r, "lookup_ns") for r in rows]
    fastest = min(timings)
    if fastest <= 0:
        raise IncompleteInputError("lookup times must be positive")
    out = []
    for row, ns in zip(rows, timings):
        cv = (_number(row, "cv_before") + _number(row, "cv_after")) / 2
        ratio = _number(row, "moved_ratio")
        if traces and row.algorithm in traces:
            walk = _walk_ratio(traces[row.algorithm])
            if walk is not None:
                ratio = max(ratio, walk)
        factor = ns / fastest
        out.append(GradeRow(
            algorithm=row.algorithm,
            uniformity=_level(cv, thresholds.uniformity_high, thresholds.uniformity_medium),
            rebalancing=_level(ratio, thresholds.rebalancing_high, thresholds.rebalancing_medium),
            speed=_level(factor, thresholds.speed_high, thresholds.speed_medium),
            uniformity_cv=cv,
            rebalancing_ratio=ratio,
            speed_factor=factor,
        ))
    return out
