"""Seeded dither generation (uniform, Gaussian, discrete).

Each dither sequence ``l`` draws from its own substream, spawned from
``np.random.SeedSequence(seed)``; row ``l`` of a stack is therefore the same
whatever ``m`` is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DitherStack, ObservationMask

SCHEMES = ("uniform", "gaussian", "discrete")


@dataclass(frozen=True)
class DitherSpec:
    """Dither law plus the number of sequences ``m`` and the RNG seed.

    Parameters used per scheme: ``uniform`` -> ``a`` (support ``[-a, a]``);
    ``gaussian`` -> ``mean``, ``var``; ``discrete`` -> ``levels`` (even ``M``)
    and ``amplitude`` (peak-to-peak ``D``).
    """

    scheme: str
    m: int = 1
    seed: int = 0
    a: float | None = None
    mean: float = 0.0
    var: float | None = None
    levels: int | None = None
    amplitude: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown dither scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.scheme == "uniform":
            if self.a is None or not self.a > 0:
                raise ValueError(f"uniform dither needs a > 0, got a={self.a}")
        elif self.scheme == "gaussian":
            if self.var is None or not self.var > 0:
                raise ValueError(f"gaussian dither needs var > 0, got var={self.var}")
        else:
            M = self.levels
            if M is None or M < 2 or M % 2:
                raise ValueError(f"discrete dither needs an even M >= 2, got M={M}")
            if self.amplitude is None or not self.amplitude > 0:
                raise ValueError(f"discrete dither needs D > 0, got D={self.amplitude}")

    def describe(self) -> dict:
        if self.scheme == "uniform":
            return {"kind": "uniform", "a": float(self.a)}
        if self.scheme == "gaussian":
            return {"kind": "gaussian", "mean": float(self.mean), "var": float(self.var)}
        return {"kind": "discrete", "M": int(self.levels), "D": float(self.amplitude)}


def discrete_atoms(levels: int, amplitude: float) -> np.ndarray:
    """Support ``{k D / M}`` for ``k`` in ``{-M/2..-1, 1..M/2}`` (no zero atom)."""
    half = levels // 2
    k = np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)])
    return k * amplitude / levels


def sequence_rngs(seed: int, m: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(m)]


def generate(spec: DitherSpec, mask: ObservationMask) -> DitherStack:
    n = mask.m_prime
    rows = []
    for rng in sequence_rngs(spec.seed, spec.m):
        if spec.scheme == "uniform":
            rows.append(rng.uniform(-spec.a, spec.a, size=n))
        elif spec.scheme == "gaussian":
            rows.append(rng.normal(spec.mean, np.sqrt(spec.var), size=n))
        else:
            rows.append(rng.choice(discrete_atoms(spec.levels, spec.amplitude), size=n))
    return DitherStack(np.vstack(rows), spec.describe(), spec.seed)


def dynamic_range(y_observed) -> float:
    """Largest absolute observed value."""
    y = np.asarray(y_observed, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("dynamic range of an empty vector is undefined")
    return float(np.max(np.abs(y)))


def spec_from_range(scheme: str, dr: float, m: int = 1, seed: int = 0, levels: int | None = None) -> DitherSpec:
    """Dither spec scaled to a dynamic range ``dr``.

    gaussian: ``N(0, dr**2 / 9)``; uniform: ``U[-dr, dr]``; discrete: ``M``
    atoms spanning ``[-dr, dr]`` (``D = 2 dr``).
    """
    if not dr > 0:
        raise ValueError(f"dynamic range must be positive to size a dither, got {dr}")
    if scheme == "gaussian":
        return DitherSpec("gaussian", m=m, seed=seed, mean=0.0, var=dr**2 / 9)
    if scheme == "uniform":
        return DitherSpec("uniform", m=m, seed=seed, a=dr)
    if scheme == "discrete":
        return DitherSpec("discrete", m=m, seed=seed, levels=levels, amplitude=2 * dr)
    raise ValueError(f"unknown dither scheme {scheme!r}")
