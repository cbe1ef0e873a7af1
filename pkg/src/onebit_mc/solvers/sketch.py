"""Block Gaussian sketches of the stacked one-bit constraints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sketch:
    """Sketch ``S`` acting on one block of a length ``m*m'`` vector.

    ``matrix`` is the ``s x m'`` operator actually applied. For Gaussian
    sketches it is ``G / sqrt(m')`` with ``G`` standard normal (kept in
    ``gaussian``), so ``E[matrix.T @ matrix] = (s / m') I``: the expected
    step grows with the sketch length and a full-length sketch matches the
    identity on average.
    """

    block: int
    m: int
    m_prime: int
    matrix: np.ndarray
    gaussian: np.ndarray | None = None

    @property
    def s(self) -> int:
        return self.matrix.shape[0]

    def _slice(self):
        lo = self.block * self.m_prime
        return slice(lo, lo + self.m_prime)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.size != self.m * self.m_prime:
            raise ValueError(f"vector length {v.size} does not match m*m' = {self.m * self.m_prime}")
        return self.matrix @ v[self._slice()]

    def apply_transpose(self, w) -> np.ndarray:
        out = np.zeros(self.m * self.m_prime)
        out[self._slice()] = self.matrix.T @ np.asarray(w, dtype=float)
        return out


def make_sketch(m: int, m_prime: int, s: int, seed=None, identity: bool = False) -> Sketch:
    """Draw a block index uniformly over all ``m`` blocks and an ``s x m'`` Gaussian.

    ``identity=True`` is a test hook returning the ``m' x m'`` identity on the
    chosen block (requires ``s == m'``).
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    block = int(rng.integers(m))
    if identity:
        if s != m_prime:
            raise ValueError("identity sketch requires s == m'")
        return Sketch(block, m, m_prime, np.eye(m_prime))
    if not 1 <= s < m_prime:
        raise ValueError(f"sketch size must satisfy 1 <= s < m' = {m_prime}, got {s}")
    g = rng.standard_normal((s, m_prime))
    return Sketch(block, m, m_prime, g / np.sqrt(m_prime), g)
