from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class RunReport:
    """Outcome of one evolutionary run.

    Sizes are decimal strings: pointer-based GSGP sizes overflow 64-bit
    integers within a few dozen generations.
    """

    engine: str
    seed: int
    dataset: str
    n_train: int
    n_test: int
    n_features: int
    config: dict[str, Any]
    train_rmse_trace: list[float] = field(default_factory=list)
    size_trace: list[str] = field(default_factory=list)
    time_trace: list[float] = field(default_factory=list)
    best_train_rmse: float = math.inf
    best_test_rmse: float | None = None
    best_size: str = "0"
    best_term_count: int | None = None
    wall_time: float = 0.0
    best_expression: str | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["config"] = json.loads(json.dumps(d["config"]))  # tuples become lists
        d["train_rmse_trace"] = [_json_float(v) for v in self.train_rmse_trace]
        d["best_train_rmse"] = _json_float(self.best_train_rmse)
        d["best_test_rmse"] = _json_float(self.best_test_rmse)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunReport":
        d = dict(d)
        d["train_rmse_trace"] = [_from_json_float(v) for v in d.get("train_rmse_trace", [])]
        d["best_train_rmse"] = _from_json_float(d.get("best_train_rmse"))
        d["best_test_rmse"] = _from_json_float(d.get("best_test_rmse"))
        return cls(**d)

    def without_timing(self) -> dict[str, Any]:
        d = self.to_dict()
        d.pop("wall_time")
        d.pop("time_trace")
        return d


def _json_float(v):
    # JSON has no infinity; the worst-fitness sentinel is written as a string
    if v is None:
        return None
    return v if math.isfinite(v) else str(v)


def _from_json_float(v):
    if v is None:
        return None
    return float(v)


def fitness(sem: np.ndarray, y: np.ndarray) -> float:
    """Training RMSE, or ``inf`` when the semantics contain non-finite values."""
    with np.errstate(over="ignore", invalid="ignore"):
        err = float(np.sqrt(np.mean((sem - y) ** 2)))
    return err if math.isfinite(err) else math.inf


def tournament_select(fitnesses, k: int, rng: np.random.Generator) -> int:
    """Index of the fittest of ``k`` uniform draws with replacement.

    Ties go to the earliest draw.
    """
    n = len(fitnesses)
    if n == 0:
        raise ValueError("empty population")
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    draws = rng.integers(0, n, size=k)
    best = int(draws[0])
    best_fit = fitnesses[best]
    for i in draws[1:]:
        f = fitnesses[int(i)]
        if f < best_fit:
            best, best_fit = int(i), f
    return best
