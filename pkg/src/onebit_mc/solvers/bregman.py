"""Adaptive thresholds via Bregman iteration around the inner SVT solver."""
from __future__ import annotations

import numpy as np

from ..model import OneBitProblem, apply_A
from .obsvt import obsvt2
from .trace import SolverConfig


class OuterIterationError(RuntimeError):
    def __init__(self, outer: int, cause: Exception):
        super().__init__(f"inner solve failed at outer iteration {outer}: {cause}")
        self.outer = outer


def bregman_adaptive(p: OneBitProblem, cfg: SolverConfig, epsilon: float,
                     outer_max: int = 10, inner=obsvt2):
    """Outer loop ``t_{k+1} = t + (t_k - A(X_k))^+`` with signs held fixed.

    Each pass re-solves the inner problem against the shifted target, which
    amounts to moving every threshold further into its feasible side by the
    previous violation. Stops once ``||t_{k+1} - t_k||_2 <= epsilon``.

    Returns the final matrix and the list of targets ``[t_0, t_1, ...]``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if outer_max < 1:
        raise ValueError(f"outer_max must be >= 1, got {outer_max}")
    t0 = p._target.copy()
    targets = [t0]
    t_k = t0
    x = None
    for outer in range(1, outer_max + 1):
        try:
            x, _ = inner(p, cfg, target=t_k)
        except Exception as exc:
            raise OuterIterationError(outer, exc) from exc
        t_next = t0 + np.maximum(t_k - apply_A(p, x), 0.0)
        targets.append(t_next)
        if np.linalg.norm(t_next - t_k) <= epsilon:
            break
        t_k = t_next
    return x, targets
