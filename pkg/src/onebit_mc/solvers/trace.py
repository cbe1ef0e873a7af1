"""Solver configuration and per-iteration traces."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Any

import numpy as np

TRACE_COLUMNS = (
    "iteration",
    "rel_change",
    "residual_norm",
    "multiplier_norm",
    "rank",
    "elapsed_s",
    "block",
)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by every solver.

    ``theta`` is the singular-value threshold and ``delta`` the constant step.
    ``record_iterates`` keeps copies of every ``X`` and multiplier, which the
    convergence monitors need.
    """

    theta: float
    delta: float
    max_iters: int = 500
    tol: float = 1e-4
    sketch_size: int | None = None
    sigma_z: np.ndarray | None = None
    seed: int = 0
    record_iterates: bool = False
    divergence_limit: float = 1e12

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.sketch_size is not None and self.sketch_size < 1:
            raise ValueError(f"sketch_size must be >= 1, got {self.sketch_size}")


@dataclass
class SolverTrace:
    solver: str
    rel_change: list[float] = field(default_factory=list)
    residual_norm: list[float] = field(default_factory=list)
    multiplier_norm: list[float] = field(default_factory=list)
    rank: list[int] = field(default_factory=list)
    elapsed_s: list[float] = field(default_factory=list)
    block: list[int] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    multipliers: list[np.ndarray] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.rel_change)

    @property
    def iterations(self) -> int:
        return len(self)

    def rows(self):
        for k in range(len(self)):
            yield {
                "iteration": k + 1,
                "rel_change": self.rel_change[k],
                "residual_norm": self.residual_norm[k],
                "multiplier_norm": self.multiplier_norm[k],
                "rank": self.rank[k],
                "elapsed_s": self.elapsed_s[k],
                "block": self.block[k] if self.block else "",
            }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows())

    @classmethod
    def from_csv(cls, path, solver: str = "") -> "SolverTrace":
        tr = cls(solver)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                tr.rel_change.append(float(row["rel_change"]))
                tr.residual_norm.append(float(row["residual_norm"]))
                tr.multiplier_norm.append(float(row["multiplier_norm"]))
                tr.rank.append(int(row["rank"]))
                tr.elapsed_s.append(float(row["elapsed_s"]))
                if row["block"] != "":
                    tr.block.append(int(row["block"]))
        return tr
