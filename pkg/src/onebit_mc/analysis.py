"""Reconstruction metrics, recovery bounds and convergence monitors."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .model import OneBitProblem, apply_A, as_matrix, project_mask
from .solvers.sketch import make_sketch
from .solvers.trace import SolverConfig, SolverTrace


def relative_error(x_hat, x_true) -> float:
    x_hat = as_matrix(x_hat, "x_hat")
    x_true = as_matrix(x_true, "x_true")
    if x_hat.shape != x_true.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {x_true.shape}")
    denom = np.linalg.norm(x_true)
    if denom == 0:
        raise ValueError("relative error is undefined for an all-zero truth")
    return float(np.linalg.norm(x_hat - x_true) / denom)


def hamming_distance(s1, s2) -> float:
    a = np.asarray(s1).ravel()
    b = np.asarray(s2).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("hamming distance needs at least one entry")
    return float(np.count_nonzero(a != b) / a.size)


def t_ave(x, p: OneBitProblem) -> float:
    """Average distance between observed entries and their dithers."""
    return float(np.abs(apply_A(p, x) - p._target).sum() / p.size)


def t_ave_elementwise(x, p: OneBitProblem) -> float:
    obs = project_mask(x, p.mask)
    return float(np.abs(obs[None, :] - p.dithers.values).sum() / p.size)


def expected_t_ave(x, alpha: float) -> float:
    """Mean of :func:`t_ave` under ``U[-alpha, alpha]`` dithers and a uniform mask.

    Exact only when ``max|X| <= alpha``; a ``RuntimeWarning`` flags the
    other case.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x = as_matrix(x, "x")
    if np.max(np.abs(x)) > alpha:
        warnings.warn("max|X| exceeds alpha; closed form is outside its regime", RuntimeWarning)
    n1, n2 = x.shape
    return alpha / 2 + float(np.sum(x**2)) / (2 * alpha * n1 * n2)


def consistency_check(x_hat, p: OneBitProblem) -> tuple[bool, float]:
    """Resample signs from ``x_hat`` against the problem's dithers."""
    obs = project_mask(x_hat, p.mask)
    resampled = np.where(obs[None, :] >= p.dithers.values, 1.0, -1.0)
    h = hamming_distance(resampled, p.signs.values)
    return h == 0.0, h


# constant hidden in the sample-size requirement "mm' >~ sqrt(r) max(n1, n2)"
SAMPLE_CONSTANT = 1.0


@dataclass(frozen=True)
class RecoveryBound:
    epsilon: float
    fro_bound: float
    samples_ok: bool
    sample_constant: float = SAMPLE_CONSTANT


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def theorem1_bound(n1, n2, r, alpha, m, m_prime, failure_prob) -> RecoveryBound:
    """Frobenius error bound for consistent reconstructions.

    ``epsilon`` solves ``failure_prob = 2 exp(-eps^2 m m' / (4 alpha^2))`` and
    the bound is ``4 sqrt(eps alpha n1 n2)``.
    """
    _check_positive(n1=n1, n2=n2, r=r, alpha=alpha, m=m, m_prime=m_prime)
    if not 0 < failure_prob < 1:
        raise ValueError(f"failure_prob must lie in (0, 1), got {failure_prob}")
    mm = m * m_prime
    eps = 2 * alpha * math.sqrt(math.log(2 / failure_prob) / mm)
    fro = 4 * math.sqrt(eps * alpha * n1 * n2)
    return RecoveryBound(eps, fro, mm >= SAMPLE_CONSTANT * math.sqrt(r) * max(n1, n2))


def theorem2_bound(n1, n2, r, alpha, m, m_prime, failure_prob, hamming) -> float:
    """:func:`theorem1_bound` plus the sign-inconsistency penalty."""
    if not 0 <= hamming <= 1:
        raise ValueError(f"hamming distance must lie in [0, 1], got {hamming}")
    base = theorem1_bound(n1, n2, r, alpha, m, m_prime, failure_prob).fro_bound
    return base + 2 * alpha * math.sqrt(2 * n1 * n2 * hamming)


def corollary1_epsilon(mm_prime, alpha, n1, n2, r) -> float:
    """``eps`` solved from ``mm' = 2 alpha^(5/2) (n1 + n2) r / eps^(5/2)``."""
    _check_positive(mm_prime=mm_prime, alpha=alpha, n1=n1, n2=n2, r=r)
    return (2 * alpha**2.5 * (n1 + n2) * r / mm_prime) ** 0.4


def noise_admissible(z, x_final, x_true) -> bool:
    """``||Z||_F^2 <= ||X_final - X||_F^2 / 2``."""
    z = as_matrix(z, "z")
    x_final = as_matrix(x_final, "x_final")
    x_true = as_matrix(x_true, "x_true")
    if not z.shape == x_final.shape == x_true.shape:
        raise ValueError("z, x_final and x_true must share a shape")
    return bool(np.sum(z**2) <= 0.5 * np.sum((x_final - x_true) ** 2))


# -- convergence monitors ---------------------------------------------------

VARIANTS = {"obsvt1": "obsvt1", "obsvt2": "obsvt2", "randomized": "randomized_obsvt"}


def reference_run(solver, p: OneBitProblem, cfg: SolverConfig, **kw):
    """Stand-in for the exact optimum: same solver, tol 1e-10, 10x iterations."""
    ref_cfg = replace(cfg, tol=1e-10, max_iters=10 * cfg.max_iters, record_iterates=False)
    x, tr = solver(p, ref_cfg, **kw)
    return x, tr.meta["final_multiplier"]


@dataclass
class MonitorReport:
    variant: str
    lhs: list[float] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    lemma_lhs: list[float] = field(default_factory=list)
    lemma_rhs: list[float] = field(default_factory=list)
    violations: list[int] = field(default_factory=list)
    lemma_violations: list[int] = field(default_factory=list)
    note: str = "reference is a tol=1e-10 rerun of the same solver, not the exact optimum"
    meta: dict = field(default_factory=dict)

    @property
    def slack(self) -> np.ndarray:
        return np.asarray(self.rhs) - np.asarray(self.lhs)

    @property
    def flagged(self) -> bool:
        return bool(self.violations or self.lemma_violations)

    def to_csv(self, path) -> None:
        viol = set(self.violations)
        lviol = set(self.lemma_violations)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "lhs", "rhs", "slack", "violated",
                        "lemma_lhs", "lemma_rhs", "lemma_violated"])
            for k in range(len(self.lhs)):
                w.writerow([k + 1, self.lhs[k], self.rhs[k], self.rhs[k] - self.lhs[k],
                            int(k + 1 in viol), self.lemma_lhs[k], self.lemma_rhs[k],
                            int(k + 1 in lviol)])


def _violated(lhs, rhs, rtol):
    return lhs > rhs + rtol * max(abs(lhs), abs(rhs), 1.0)


def convergence_monitor(trace: SolverTrace, x_ref, y_ref, m: int, delta: float,
                        variant: str, rtol: float = 1e-9) -> MonitorReport:
    """Check the per-iteration multiplier contraction against a reference.

    ``obsvt1``: ``|y_k - y*|^2 <= |y_{k-1} - y*|^2 - (2 delta - delta^2 m) |X_k - X*|^2``.
    ``obsvt2``: same with coefficient ``m delta^2``.
    ``randomized``: coefficient 0 along the sample path; the real statement
    holds only in expectation, see :func:`sketch_expected_decrease`.
    Every variant also checks ``|X_k - X*|^2 <= |y_{k-1} - y*|^2 / m``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)}")
    if trace.solver != VARIANTS[variant]:
        raise ValueError(f"trace from solver {trace.solver!r} cannot be checked as {variant!r}")
    if not trace.iterates or len(trace.iterates) != len(trace.multipliers):
        raise ValueError("trace has no recorded iterates; rerun with record_iterates=True")
    coef = {"obsvt1": 2 * delta - delta**2 * m, "obsvt2": m * delta**2, "randomized": 0.0}[variant]
    y_ref = np.asarray(y_ref, dtype=float)
    rep = MonitorReport(variant, meta={"coefficient": coef, "m": m, "delta": delta})
    y_prev = np.zeros_like(y_ref)
    for k, (xk, yk) in enumerate(zip(trace.iterates, trace.multipliers), start=1):
        dx = float(np.sum((xk - x_ref) ** 2))
        dy_prev = float(np.sum((y_prev - y_ref) ** 2))
        lhs = float(np.sum((yk - y_ref) ** 2))
        rhs = dy_prev - coef * dx
        rep.lhs.append(lhs)
        rep.rhs.append(rhs)
        if _violated(lhs, rhs, rtol):
            rep.violations.append(k)
        rep.lemma_lhs.append(dx)
        rep.lemma_rhs.append(dy_prev / m)
        if _violated(dx, dy_prev / m, rtol):
            rep.lemma_violations.append(k)
        y_prev = yk
    return rep


def sketch_expected_decrease(p: OneBitProblem, x, y, y_ref, delta: float, s: int,
                             n_sketches: int = 200, seed=0) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of ``|y - y*|^2 - |y_new - y*|^2``.

    ``y_new`` is one randomized multiplier step from the fixed state
    ``(x, y)`` with a freshly drawn sketch.
    """
    rng = np.random.default_rng(seed)
    v = np.maximum(p._target - apply_A(p, x), 0.0)
    before = float(np.sum((y - y_ref) ** 2))
    gains = np.empty(n_sketches)
    for i in range(n_sketches):
        sk = make_sketch(p.m, p.m_prime, s, rng, identity=s >= p.m_prime)
        y_new = y + delta * sk.apply_transpose(np.maximum(sk.apply(v), 0.0))
        gains[i] = before - float(np.sum((y_new - y_ref) ** 2))
    return float(gains.mean()), float(gains.std(ddof=1) / np.sqrt(n_sketches))
