"""Score reports: the referee's verdict on a single benchmark run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .jsonutil import (
    FieldError,
    as_bool,
    as_float,
    as_int,
    as_list,
    as_obj,
    as_str,
    no_extra_keys,
    require,
)

TERMINATIONS = ("completed", "timeout", "disconnect")


@dataclass(frozen=True)
class AchievementResult:
    id: str
    satisfied: bool
    points_awarded: int


@dataclass(frozen=True)
class ScoreReport:
    scenario_id: str
    achievements: tuple[AchievementResult, ...]  # rubric order
    total: int
    elapsed_s: float
    termination: str  # one of TERMINATIONS

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "achievements": [
                {"id": a.id, "satisfied": a.satisfied, "points_awarded": a.points_awarded}
                for a in self.achievements
            ],
            "total": self.total,
            "elapsed_s": self.elapsed_s,
            "termination": self.termination,
        }


def report_from_dict(value: Any, path: str) -> ScoreReport:
    obj = as_obj(value, path)
    no_extra_keys(
        obj, {"scenario_id", "achievements", "total", "elapsed_s", "termination"}, path
    )
    results = []
    for i, item in enumerate(as_list(require(obj, "achievements", path), f"{path}.achievements")):
        ipath = f"{path}.achievements[{i}]"
        entry = as_obj(item, ipath)
        no_extra_keys(entry, {"id", "satisfied", "points_awarded"}, ipath)
        results.append(
            AchievementResult(
                as_str(require(entry, "id", ipath), f"{ipath}.id"),
                as_bool(require(entry, "satisfied", ipath), f"{ipath}.satisfied"),
                as_int(require(entry, "points_awarded", ipath), f"{ipath}.points_awarded"),
            )
        )
    termination = as_str(require(obj, "termination", path), f"{path}.termination")
    if termination not in TERMINATIONS:
        raise FieldError(f"{path}.termination", f"unknown termination {termination!r}")
    return ScoreReport(
        scenario_id=as_str(require(obj, "scenario_id", path), f"{path}.scenario_id"),
        achievements=tuple(results),
        total=as_int(require(obj, "total", path), f"{path}.total"),
        elapsed_s=as_float(require(obj, "elapsed_s", path), f"{path}.elapsed_s"),
        termination=termination,
    )
