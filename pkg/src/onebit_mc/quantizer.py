"""One-bit sampling of observed entries against dither stacks."""
from __future__ import annotations

import numpy as np

from .model import (
    DitherStack,
    ObservationMask,
    OneBitProblem,
    SignStack,
    apply_A,
    as_matrix,
    project_mask,
)

# Ties (x == tau) are recorded as +1.
TIE_RULE = "sign(0)=+1"


def _signs(obs: np.ndarray, dithers: DitherStack) -> np.ndarray:
    return np.where(obs[None, :] >= dithers.values, 1.0, -1.0)


def sample(x, mask: ObservationMask, dithers: DitherStack) -> OneBitProblem:
    obs = project_mask(x, mask)
    if dithers.m_prime != mask.m_prime:
        raise ValueError(f"dither stack has {dithers.m_prime} slots, mask has {mask.m_prime}")
    return OneBitProblem(mask, SignStack(_signs(obs, dithers)), dithers,
                         metadata={"tie_rule": TIE_RULE})


def sample_noisy(x, z, mask: ObservationMask, dithers: DitherStack) -> OneBitProblem:
    """Signs of ``x + z`` against the dithers; the problem is flagged noisy."""
    x = as_matrix(x, "x")
    z = as_matrix(z, "z")
    if z.shape != x.shape:
        raise ValueError(f"noise shape {z.shape} does not match signal shape {x.shape}")
    p = sample(x + z, mask, dithers)
    return OneBitProblem(p.mask, p.signs, p.dithers, noisy=True, metadata=p.metadata)


def residual_plus(p: OneBitProblem, x) -> np.ndarray:
    """``(t - A(x))^+``; all zeros exactly when ``x`` lies in the one-bit polyhedron."""
    return np.maximum(p._target - apply_A(p, x), 0.0)


def sigma_z_default(noise_std: float, size: int, factor: float = 3.0) -> np.ndarray:
    """Per-constraint noise allowance ``factor * noise_std`` (3-sigma rule)."""
    if noise_std < 0:
        raise ValueError(f"noise std must be nonnegative, got {noise_std}")
    return np.full(size, factor * float(noise_std))
