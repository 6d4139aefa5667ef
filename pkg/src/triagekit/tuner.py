"""Exhaustive grid search over retrieval/scoring/aggregation hyperparameters.

The default grid covers: similarity threshold 0.2..0.8 step 0.05, decay rate
0.001..0.01 step 0.001, each interaction point 0..2 step 0.1, and the
aggregation weight over the open interval (0, 1) at step 0.05 (endpoints
excluded). Grid values are generated as ``lo + index * step`` from integer
indices so enumeration never drifts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, TunerError


class GridPoint(NamedTuple):
    tau: float
    decay_rate: float
    ip_assignment: float
    ip_commit: float
    ip_discussion: float
    weight: float


@dataclass(frozen=True)
class Axis:
    """Inclusive arithmetic progression ``lo, lo+step, ..., hi``."""

    lo: float
    hi: float
    step: float

    def values(self) -> tuple[float, ...]:
        if self.hi < self.lo or self.step <= 0:
            raise ConfigError(f"bad axis [{self.lo}, {self.hi}] step {self.step}")
        n = int(round((self.hi - self.lo) / self.step))
        if abs(self.lo + n * self.step - self.hi) > 1e-9:
            raise ConfigError(
                f"step {self.step} does not evenly divide [{self.lo}, {self.hi}]"
            )
        return tuple(round(self.lo + i * self.step, 10) for i in range(n + 1))

    @classmethod
    def fixed(cls, value: float) -> "Axis":
        return cls(value, value, 1.0)


@dataclass(frozen=True)
class HyperParamGrid:
    tau: Axis = Axis(0.2, 0.8, 0.05)
    decay_rate: Axis = Axis(0.001, 0.01, 0.001)
    ip_assignment: Axis = Axis(0.0, 2.0, 0.1)
    ip_commit: Axis = Axis(0.0, 2.0, 0.1)
    ip_discussion: Axis = Axis(0.0, 2.0, 0.1)
    weight: Axis = Axis(0.05, 0.95, 0.05)  # open-interval (0, 1) endpoints excluded
    objective_k: int = 1

    def axes(self) -> dict[str, tuple[float, ...]]:
        return {
            "tau": self.tau.values(),
            "decay_rate": self.decay_rate.values(),
            "ip_assignment": self.ip_assignment.values(),
            "ip_commit": self.ip_commit.values(),
            "ip_discussion": self.ip_discussion.values(),
            "weight": self.weight.values(),
        }

    @property
    def size(self) -> int:
        return math.prod(len(v) for v in self.axes().values())

    def iter_points(self) -> Iterator[GridPoint]:
        axes = self.axes()
        return map(
            GridPoint._make,
            product(
                axes["tau"],
                axes["decay_rate"],
                axes["ip_assignment"],
                axes["ip_commit"],
                axes["ip_discussion"],
                axes["weight"],
            ),
        )

    def with_fixed(self, **fixed: float) -> "HyperParamGrid":
        """Pin some axes to single values and sweep the rest."""
        replacements: dict[str, Axis] = {}
        for name, value in fixed.items():
            if name not in self.axes():
                raise ConfigError(f"unknown grid axis {name!r}")
            replacements[name] = Axis.fixed(value)
        return HyperParamGrid(
            tau=replacements.get("tau", self.tau),
            decay_rate=replacements.get("decay_rate", self.decay_rate),
            ip_assignment=replacements.get("ip_assignment", self.ip_assignment),
            ip_commit=replacements.get("ip_commit", self.ip_commit),
            ip_discussion=replacements.get("ip_discussion", self.ip_discussion),
            weight=replacements.get("weight", self.weight),
            objective_k=self.objective_k,
        )


@dataclass(frozen=True)
class TuneResult:
    best_point: GridPoint
    best_score: float
    table: tuple[tuple[GridPoint, float], ...]

    def best_params_dict(self) -> dict:
        return {
            "tau": self.best_point.tau,
            "decay_rate": self.best_point.decay_rate,
            "ip_assignment": self.best_point.ip_assignment,
            "ip_commit": self.best_point.ip_commit,
            "ip_discussion": self.best_point.ip_discussion,
            "weight": self.best_point.weight,
            "score": self.best_score,
        }

    def save_json(self, path: str | Path) -> None:
        payload = {
            "best": self.best_params_dict(),
            "table": [
                {"params": list(point), "score": score} for point, score in self.table
            ],
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(GridPoint._fields) + ["score"])
            for point, score in self.table:
                writer.writerow(list(point) + [score])


def grid_search(
    grid: HyperParamGrid,
    objective: Callable[[GridPoint], float],
    shuffle_seed: int | None = None,
) -> TuneResult:
    """Evaluate the objective at every grid point and return the maximizer.

    Ties are broken by the lexicographically smallest parameter tuple, so the
    result is independent of enumeration order; ``shuffle_seed`` only
    permutes evaluation order.
    """
    points = list(grid.iter_points())
    if not points:
        raise TunerError("empty hyperparameter grid")
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(points))
        points = [points[i] for i in order]
    table = [(point, float(objective(point))) for point in points]
    best_point, best_score = min(table, key=lambda row: (-row[1], row[0]))
    return TuneResult(best_point=best_point, best_score=best_score, table=tuple(table))


def topk_objective(
    rank_for_params: Callable[[GridPoint, object], Sequence[str]],
    validation: Sequence,
    truth_of: Callable[[object], str],
    k: int,
) -> Callable[[GridPoint], float]:
    """Objective: fraction of validation issues whose true label appears in
    the first k of the ranking produced under the candidate parameters."""
    if not validation:
        raise TunerError("empty validation set")
    def objective(point: GridPoint) -> float:
        hits = sum(
            1 for item in validation if truth_of(item) in rank_for_params(point, item)[:k]
        )
        return hits / len(validation)
    return objective
