"""Core data types for dithered one-bit matrix completion.

Matrices are plain ``float64`` numpy arrays. ``vec`` is row-major throughout,
so the observation at ``(i, j)`` sits at column ``i * n2 + j`` of the dense
sensing matrix.

Stacked vectors of length ``m * m'`` are laid out block by block: block ``l``
holds the ``m'`` observed cells of dither sequence ``l`` in the mask's
canonical (row-major sorted) order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

DENSE_B_MAX_COLUMNS = 4096


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Validate ``x`` as a finite 2-D real matrix and return it as float64."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True, eq=False)
class ObservationMask:
    """Ordered set of observed cells of an ``n1 x n2`` matrix.

    Positions are sorted row-major on construction and never reordered, so
    every stacked vector can index the observed cells by slot ``k``.
    """

    dims: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        n1, n2 = (int(d) for d in self.dims)
        if n1 < 1 or n2 < 1:
            raise ValueError(f"mask dims must be positive, got {self.dims}")
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have the same length")
        if rows.size == 0:
            raise ValueError("mask must contain at least one position")
        if rows.min() < 0 or rows.max() >= n1 or cols.min() < 0 or cols.max() >= n2:
            raise ValueError(f"mask positions out of bounds for dims {(n1, n2)}")
        flat = rows * n2 + cols
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if np.any(np.diff(flat) == 0):
            raise ValueError("mask positions must be unique")
        rows, cols = rows[order], cols[order]
        for arr in (rows, cols, flat):
            arr.setflags(write=False)
        object.__setattr__(self, "dims", (n1, n2))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_flat", flat)

    @classmethod
    def from_positions(cls, dims, positions) -> "ObservationMask":
        pos = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
        return cls(tuple(dims), pos[:, 0], pos[:, 1])

    @classmethod
    def full(cls, dims) -> "ObservationMask":
        n1, n2 = dims
        r, c = np.divmod(np.arange(n1 * n2), n2)
        return cls((n1, n2), r, c)

    @property
    def m_prime(self) -> int:
        return int(self.rows.size)

    @property
    def flat_index(self) -> np.ndarray:
        """Row-major linear index of every observed cell."""
        return self._flat

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.rows, self.cols])

    def __eq__(self, other):
        if not isinstance(other, ObservationMask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._flat, other._flat)

    def __hash__(self):
        return hash((self.dims, self._flat.tobytes()))

    def __len__(self):
        return self.m_prime


def project_mask(x, mask: ObservationMask) -> np.ndarray:
    """Observed entries of ``x`` in mask order (length ``m'``)."""
    x = as_matrix(x, "x")
    if x.shape != mask.dims:
        raise ValueError(f"matrix shape {x.shape} does not match mask dims {mask.dims}")
    return x[mask.rows, mask.cols]


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SignStack:
    """``m x m'`` array of one-bit samples in {-1, +1}."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError(f"sign stack must be 2-D (m, m'), got shape {v.shape}")
        if not np.all((v == 1) | (v == -1)):
            raise ValueError("sign stack entries must be -1 or +1")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def m_prime(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class DitherStack:
    """``m x m'`` dither thresholds plus the scheme that produced them.

    ``scheme`` is a plain dict such as ``{"kind": "uniform", "a": 1.0}``.
    """

    values: np.ndarray
    scheme: dict = field(default_factory=lambda: {"kind": "custom"})
    rng_seed: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"dither stack must be 2-D (m, m'), got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("dither stack contains NaN or Inf")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def m_prime(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class OneBitProblem:
    """Mask, signs and dithers: the one-bit polyhedron ``A(X) >= t``.

    ``noisy`` records that the signs were taken from a noise-corrupted
    matrix, in which case the clean truth need not be feasible.
    """

    mask: ObservationMask
    signs: SignStack
    dithers: DitherStack
    noisy: bool = False
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.signs.values.shape != self.dithers.values.shape:
            raise ValueError(
                f"sign stack {self.signs.values.shape} and dither stack "
                f"{self.dithers.values.shape} differ in shape"
            )
        if self.signs.m_prime != self.mask.m_prime:
            raise ValueError(
                f"stacks have {self.signs.m_prime} slots but mask has {self.mask.m_prime}"
            )
        t = self.signs.values * self.dithers.values
        t.setflags(write=False)
        object.__setattr__(self, "_target", t.ravel())

    @property
    def dims(self) -> tuple[int, int]:
        return self.mask.dims

    @property
    def m(self) -> int:
        return self.signs.m

    @property
    def m_prime(self) -> int:
        return self.mask.m_prime

    @property
    def size(self) -> int:
        """Number of one-bit constraints, ``m * m'``."""
        return self.m * self.m_prime


def apply_A(p: OneBitProblem, x) -> np.ndarray:
    """Forward operator: block ``l`` holds ``signs[l] * x[mask]``."""
    obs = project_mask(x, p.mask)
    return (p.signs.values * obs[None, :]).ravel()


def apply_A_adjoint(p: OneBitProblem, y) -> np.ndarray:
    """Adjoint operator, scattering ``sum_l signs[l] * y[l]`` onto the mask."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != p.size:
        raise ValueError(f"vector length {y.size} does not match m*m' = {p.size}")
    out = np.zeros(p.dims)
    out[p.mask.rows, p.mask.cols] = np.einsum(
        "lk,lk->k", p.signs.values, y.reshape(p.m, p.m_prime)
    )
    return out


def target_vector(p: OneBitProblem) -> np.ndarray:
    """``t = vec(R) * vec(Gamma)`` in stacked block order."""
    return p._target.copy()


def materialize_dense_B(p: OneBitProblem, max_columns: int = DENSE_B_MAX_COLUMNS) -> np.ndarray:
    """Dense ``(m m') x (n1 n2)`` sensing matrix. Test oracle only."""
    n1, n2 = p.dims
    if n1 * n2 > max_columns:
        raise ValueError(
            f"dense B would have {n1 * n2} columns, above the cap of {max_columns}"
        )
    B = np.zeros((p.size, n1 * n2))
    row = np.arange(p.size)
    col = np.tile(p.mask.flat_index, p.m)
    B[row, col] = p.signs.values.ravel()
    return B
