"""Probit maximum-likelihood baseline solved by proximal gradient ascent."""
from __future__ import annotations

import time

import numpy as np
from scipy.special import log_ndtr

from ..model import DitherStack, OneBitProblem, apply_A_adjoint, project_mask
from .obsvt import Callback, _rel_change
from .svt import Shrinker
from .trace import SolverConfig, SolverTrace

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def log_likelihood(p: OneBitProblem, x, std: float) -> float:
    """``sum log Phi(r (X - tau) / std)`` over all observed samples."""
    z = p.signs.values * (project_mask(x, p.mask)[None, :] - p.dithers.values) / std
    return float(log_ndtr(z).sum())


def log_likelihood_grad(p: OneBitProblem, x, std: float) -> np.ndarray:
    z = p.signs.values * (project_mask(x, p.mask)[None, :] - p.dithers.values) / std
    # inverse Mills ratio phi(z)/Phi(z), computed in log space for large -z
    mills = np.exp(-0.5 * z**2 - _LOG_SQRT_2PI - log_ndtr(z))
    return apply_A_adjoint(p, (mills / std).ravel())


def dither_as_noise(p: OneBitProblem, noise_std: float = 0.0):
    """Recast dithered signs as zero-threshold probit samples.

    The likelihood then ignores the recorded dither values and absorbs them
    into the noise: the returned problem has all thresholds at zero and the
    returned scale is ``sqrt(noise_std^2 + var(tau))``. Only meaningful for
    zero-mean dithers.
    """
    if noise_std < 0:
        raise ValueError(f"noise_std must be nonnegative, got {noise_std}")
    var = float(np.var(p.dithers.values))
    std = float(np.sqrt(noise_std**2 + var))
    if not std > 0:
        raise ValueError("dither-as-noise scale is zero; use mle_baseline with the known dithers")
    zeros = DitherStack(np.zeros_like(p.dithers.values), {**p.dithers.scheme, "absorbed": True},
                        p.dithers.rng_seed)
    q = OneBitProblem(p.mask, p.signs, zeros, noisy=p.noisy,
                      metadata={**p.metadata, "dither_as_noise_std": std})
    return q, std


def mle_baseline(p: OneBitProblem, std: float, cfg: SolverConfig,
                 callback: Callback | None = None):
    """Maximize the probit likelihood under Gaussian noise of scale ``std``.

    Iterates ``X <- D_theta(X + delta * grad)`` from ``X = 0``. Not reaching
    ``tol`` within ``max_iters`` is reported through ``trace.converged``; the
    last iterate is still returned.
    """
    if p.m != 1:
        raise ValueError(f"mle_baseline expects a single dither sequence, got m={p.m}")
    if not std > 0:
        raise ValueError(f"noise std must be positive, got {std}")
    shrink = Shrinker(cfg.theta)
    x = np.zeros(p.dims)
    tr = SolverTrace("mle")
    tr.meta.update(theta=cfg.theta, delta=cfg.delta, tol=cfg.tol, std=std)
    start = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        grad = log_likelihood_grad(p, x, std)
        x_new = shrink(x + cfg.delta * grad)
        rel = _rel_change(x_new, x)
        tr.rel_change.append(rel)
        tr.residual_norm.append(float(np.linalg.norm(grad)))
        tr.multiplier_norm.append(float("nan"))
        tr.rank.append(shrink.rank)
        tr.elapsed_s.append(time.perf_counter() - start)
        if cfg.record_iterates:
            tr.iterates.append(x_new.copy())
        moved = np.any(x)
        x = x_new
        if callback is not None and callback(k, x):
            tr.converged, tr.stop_reason = True, "callback"
            break
        if moved and rel <= cfg.tol:
            tr.converged, tr.stop_reason = True, "tol"
            break
    else:
        tr.stop_reason = "max_iters"
    tr.meta["log_likelihood"] = log_likelihood(p, x, std)
    return x, tr
