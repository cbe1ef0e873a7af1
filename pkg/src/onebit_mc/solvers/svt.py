"""Singular value shrinkage."""
from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import svds

FULL_SVD_MAX_DIM = 512


class SVDFailure(ArithmeticError):
    pass


def _full_svd(a):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(a)))
        fro = np.linalg.norm(a) if finite else float("nan")
        cond = np.linalg.cond(a) if finite else float("nan")
        raise SVDFailure(
            f"SVD of {a.shape} matrix failed ({exc}); finite={finite}, "
            f"fro={fro:.3e}, cond={cond:.3e}"
        ) from exc


def _shrink_factors(u, s, vt, theta):
    s = np.maximum(s - theta, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep], int(keep.sum())


def svt_shrink(y_mat, theta: float) -> np.ndarray:
    """Soft-threshold the singular values of ``y_mat`` by ``theta``.

    Examples
    --------
    >>> svt_shrink(np.diag([3.0, 1.0]), 2.0)
    array([[1., 0.],
           [0., 0.]])
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    a = np.asarray(y_mat, dtype=float)
    return _shrink_factors(*_full_svd(a), theta)[0]


class Shrinker:
    """Shrinkage operator that remembers the rank of its last output.

    Inputs whose smaller side exceeds ``full_max`` use a truncated SVD with
    rank guess ``last_rank + 5``, doubled while every computed singular value
    still exceeds ``theta``.
    """

    def __init__(self, theta: float, full_max: int = FULL_SVD_MAX_DIM):
        if theta < 0:
            raise ValueError(f"theta must be nonnegative, got {theta}")
        self.theta = theta
        self.full_max = full_max
        self.rank = 0

    def __call__(self, y_mat: np.ndarray) -> np.ndarray:
        small = min(y_mat.shape)
        if small <= self.full_max:
            out, self.rank = _shrink_factors(*_full_svd(y_mat), self.theta)
            return out
        k = min(self.rank + 5, small - 1)
        while True:
            u, s, vt = svds(y_mat, k=k)
            if s.min() <= self.theta:
                break
            if k == small - 1:
                # saturated at the largest truncated rank; the last value may matter
                u, s, vt = _full_svd(y_mat)
                break
            k = min(2 * k, small - 1)
        out, self.rank = _shrink_factors(u, s, vt, self.theta)
        return out
