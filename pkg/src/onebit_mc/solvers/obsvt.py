"""Uzawa-type SVT solvers for the one-bit polyhedron.

All solvers start from a zero multiplier and alternate

    X_k = D_theta(A*(y_{k-1}))
    y_k = update(y_{k-1}, t - A(X_k))

stopping when the relative Frobenius change of ``X`` drops to ``tol`` or the
iterate satisfies every one-bit constraint.
"""
from __future__ import annotations

import logging
import time
from typing import Callable

import numpy as np

from ..model import OneBitProblem, apply_A, apply_A_adjoint, project_mask
from .sketch import make_sketch
from .svt import Shrinker
from .trace import SolverConfig, SolverTrace

log = logging.getLogger(__name__)

Callback = Callable[[int, np.ndarray], bool]


class SolverDivergence(RuntimeError):
    pass


def sign_mismatch(p: OneBitProblem, x) -> float:
    """Fraction of one-bit samples that ``x`` would reproduce differently."""
    obs = project_mask(x, p.mask)
    resampled = np.where(obs[None, :] >= p.dithers.values, 1.0, -1.0)
    return float(np.mean(resampled != p.signs.values))


def _rel_change(x, x_prev):
    prev = np.linalg.norm(x_prev)
    if prev == 0.0:
        return 0.0 if not np.any(x) else float("inf")
    return float(np.linalg.norm(x - x_prev) / prev)


def _run(p, cfg, name, update, target=None, callback=None, step_note=None):
    """Shared loop. ``update(y, residual, k)`` returns ``(y_new, violation, block)``.

    ``violation`` is the vector whose vanishing counts as feasibility.
    """
    t = p._target if target is None else target
    shrink = Shrinker(cfg.theta)
    y = np.zeros(t.size)
    x_prev = np.zeros(p.dims)
    x = x_prev
    tr = SolverTrace(name)
    tr.meta.update(theta=cfg.theta, delta=cfg.delta, tol=cfg.tol, m=p.m,
                   delta_theorem3_bound=2.0 / p.m)
    if step_note:
        tr.meta["step_note"] = step_note
    start = time.perf_counter()
    for k in range(1, cfg.max_iters + 1):
        x = shrink(apply_A_adjoint(p, y))
        residual = t - apply_A(p, x)
        y, violation, block = update(y, residual, k)
        y_norm = float(np.linalg.norm(y))
        if not np.isfinite(y_norm) or y_norm > cfg.divergence_limit:
            raise SolverDivergence(
                f"{name}: multiplier norm {y_norm:.3e} exceeded {cfg.divergence_limit:.1e} "
                f"at iteration {k}; step delta={cfg.delta:g} is likely too large "
                f"(theorem bound for the clamped update is 2/m = {2.0 / p.m:g})"
            )
        rel = _rel_change(x, x_prev)
        tr.rel_change.append(rel)
        tr.residual_norm.append(float(np.linalg.norm(np.maximum(residual, 0.0))))
        tr.multiplier_norm.append(y_norm)
        tr.rank.append(shrink.rank)
        tr.elapsed_s.append(time.perf_counter() - start)
        if block is not None:
            tr.block.append(block)
        if cfg.record_iterates:
            tr.iterates.append(x.copy())
            tr.multipliers.append(y.copy())
        if callback is not None and callback(k, x):
            tr.stop_reason = "callback"
            tr.converged = True
            break
        if not np.any(violation > 0):
            tr.stop_reason = "feasible"
            tr.converged = True
            break
        if np.any(x_prev) and rel <= cfg.tol:
            tr.stop_reason = "tol"
            tr.converged = True
            break
        x_prev = x
    else:
        tr.stop_reason = "max_iters"
    tr.meta["final_multiplier"] = y
    return x, tr


def obsvt1(p: OneBitProblem, cfg: SolverConfig, callback: Callback | None = None):
    """Projected Uzawa: ``y <- (y + delta (t - A X))^+``."""
    if cfg.delta >= 2.0 / p.m:
        log.warning("obsvt1: delta=%g violates the convergence bound delta < 2/m = %g",
                    cfg.delta, 2.0 / p.m)

    def update(y, residual, k):
        return np.maximum(y + cfg.delta * residual, 0.0), residual, None

    return _run(p, cfg, "obsvt1", update, callback=callback)


def obsvt1_noisy(p: OneBitProblem, cfg: SolverConfig, callback: Callback | None = None):
    """Noise-tolerant variant with target ``t - sigma_z``.

    Each coordinate is updated only while ``A(X) <= t`` holds for it.
    """
    if cfg.sigma_z is None:
        raise ValueError("obsvt1_noisy requires cfg.sigma_z")
    sigma_z = np.broadcast_to(np.asarray(cfg.sigma_z, dtype=float), (p.size,))
    if np.any(sigma_z < 0):
        raise ValueError("sigma_z must be elementwise nonnegative")
    t1 = p._target - sigma_z

    def update(y, residual, k):
        # residual = t - A(X); t1 - A(X) = residual - sigma_z
        g = np.maximum(residual - sigma_z, 0.0) * (residual >= 0)
        return np.maximum(y + cfg.delta * g, 0.0), g, None

    x, tr = _run(p, cfg, "obsvt1_noisy", update, callback=callback)
    tr.meta["sigma_z_max"] = float(sigma_z.max())
    tr.meta["t1_min"] = float(t1.min())
    return x, tr


def obsvt2(p: OneBitProblem, cfg: SolverConfig, callback: Callback | None = None, target=None):
    """Unclamped update on the violation: ``y <- y + delta (t - A X)^+``."""

    def update(y, residual, k):
        v = np.maximum(residual, 0.0)
        return y + cfg.delta * v, v, None

    x, tr = _run(p, cfg, "obsvt2", update, target=target, callback=callback)
    tr.meta["hamming"] = sign_mismatch(p, x)
    return x, tr


def randomized_obsvt(p: OneBitProblem, cfg: SolverConfig, callback: Callback | None = None):
    """Sketch-and-project variant of :func:`obsvt2`.

    Each iteration draws a fresh block index and Gaussian sketch ``S`` and
    updates that block of the multiplier by ``delta S^T (S v)^+`` where ``v``
    is the block's constraint violation. ``sketch_size >= m'`` uses the
    identity sketch.
    """
    if cfg.sketch_size is None:
        raise ValueError("randomized_obsvt requires cfg.sketch_size")
    rng = np.random.default_rng(cfg.seed)
    full = cfg.sketch_size >= p.m_prime
    s = p.m_prime if full else cfg.sketch_size

    def update(y, residual, k):
        sk = make_sketch(p.m, p.m_prime, s, rng, identity=full)
        v = np.maximum(residual, 0.0)
        w = np.maximum(sk.apply(v), 0.0)
        return y + cfg.delta * sk.apply_transpose(w), v, sk.block

    x, tr = _run(p, cfg, "randomized_obsvt", update, callback=callback)
    tr.meta.update(sketch_size=s, identity_sketch=full, hamming=sign_mismatch(p, x))
    return x, tr
