"""Seeded experiment grids: instance generation, solver dispatch, CSV output.

Config files are YAML mappings; see ``configs/`` and the README for the
schema. Unknown keys are rejected.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import analysis
from .dither import dynamic_range, generate, spec_from_range
from .model import DitherStack, ObservationMask, OneBitProblem, project_mask
from .quantizer import TIE_RULE, sample, sample_noisy, sigma_z_default
from .solvers import (
    SolverConfig,
    mle_baseline,
    obsvt1,
    obsvt1_noisy,
    obsvt2,
    randomized_obsvt,
)
from .solvers.bregman import bregman_adaptive
from .solvers.mle import dither_as_noise

log = logging.getLogger(__name__)

SOLVERS = ("obsvt1", "obsvt1-noisy", "obsvt2", "rand-obsvt", "bregman", "mle")
NOISE_KINDS = ("none", "gaussian", "poisson")
FACTOR_LAWS = ("gaussian", "uniform01")
DITHER_SCHEMES = ("gaussian", "uniform", "discrete")

LEDGER = {
    "dr_definition": "max_abs_observed",
    "tie_rule": TIE_RULE,
    "sigma_z_rule": "3*noise_std",
    "sample_constant": analysis.SAMPLE_CONSTANT,
}


class ConfigError(ValueError):
    pass


def _only(d, allowed, where):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


@dataclass
class MatrixSpec:
    n1: int = 100
    n2: int = 100
    rank: int = 5
    factors: str = "gaussian"


@dataclass
class NoiseSpec:
    kind: str = "none"
    std: float = 0.0
    lam: float = 0.5


@dataclass
class DitherChoice:
    scheme: str = "gaussian"
    levels: int | None = None

    @property
    def label(self) -> str:
        return f"discrete{self.levels}" if self.scheme == "discrete" else self.scheme


@dataclass
class SolverParams:
    alpha: float = 5.0
    delta_scale: float = 1.2
    max_iters: int = 1000
    tol: float = 1e-4
    sigma_factor: float = 3.0
    betas: list = field(default_factory=lambda: [0.5])
    mle_lambda: float = 0.2
    mle_max_iters: int = 1000
    bregman_epsilon: float = 1e-3
    bregman_outer: int = 5


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    matrix: MatrixSpec = field(default_factory=MatrixSpec)
    fractions: list = field(default_factory=lambda: [0.5])
    dithers: list = field(default_factory=lambda: [DitherChoice()])
    m: list = field(default_factory=lambda: [1])
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    solvers: list = field(default_factory=lambda: ["obsvt2"])
    solver: SolverParams = field(default_factory=SolverParams)
    repetitions: int = 5
    seed: int = 0
    output: str = "results"

    def __post_init__(self):
        self.validate()

    def validate(self):
        mx = self.matrix
        if min(mx.n1, mx.n2, mx.rank) < 1:
            raise ConfigError("matrix n1, n2 and rank must be positive")
        if mx.factors not in FACTOR_LAWS:
            raise ConfigError(f"matrix.factors must be one of {FACTOR_LAWS}")
        if not self.fractions or any(not 0 < f <= 1 for f in self.fractions):
            raise ConfigError("fractions must be a nonempty list of values in (0, 1]")
        if not self.m or any(int(v) < 1 for v in self.m):
            raise ConfigError("m must be a nonempty list of positive counts")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.noise.kind not in NOISE_KINDS:
            raise ConfigError(f"noise.kind must be one of {NOISE_KINDS}")
        if self.noise.kind == "gaussian" and self.noise.std < 0:
            raise ConfigError("noise.std must be >= 0")
        if self.noise.kind == "poisson" and not self.noise.lam > 0:
            raise ConfigError("noise.lam must be > 0")
        for d in self.dithers:
            if d.scheme not in DITHER_SCHEMES:
                raise ConfigError(f"dither scheme must be one of {DITHER_SCHEMES}")
            if d.scheme == "discrete" and (d.levels is None or d.levels < 2 or d.levels % 2):
                raise ConfigError("discrete dithers need an even 'levels' >= 2")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ConfigError(f"unknown solver {s!r}; expected one of {SOLVERS}")
        if any(not 0 < b <= 1 for b in self.solver.betas):
            raise ConfigError("solver.betas must lie in (0, 1]")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw or {})
        _only(raw, [f for f in cls.__dataclass_fields__], "config")
        kw = dict(raw)
        subs = {"matrix": MatrixSpec, "noise": NoiseSpec, "solver": SolverParams}
        for key, typ in subs.items():
            if key in kw:
                val = kw[key] or {}
                _only(val, typ.__dataclass_fields__, key)
                kw[key] = typ(**val)
        if "dithers" in kw:
            items = []
            for d in kw["dithers"]:
                d = {"scheme": d} if isinstance(d, str) else d
                _only(d, DitherChoice.__dataclass_fields__, "dithers entry")
                items.append(DitherChoice(**d))
            kw["dithers"] = items
        for key in ("fractions", "m", "solvers"):
            if key in kw and not isinstance(kw[key], list):
                kw[key] = [kw[key]]
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Instance:
    x_true: np.ndarray
    mask: ObservationMask
    dithers: DitherStack
    z: np.ndarray | None
    dr: float


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def make_matrix(spec: MatrixSpec, rng) -> np.ndarray:
    shape1, shape2 = (spec.n1, spec.rank), (spec.n2, spec.rank)
    if spec.factors == "gaussian":
        x1, x2 = rng.standard_normal(shape1), rng.standard_normal(shape2)
    else:
        x1, x2 = rng.uniform(size=shape1), rng.uniform(size=shape2)
    return x1 @ x2.T


def make_noise(spec: NoiseSpec, shape, rng):
    if spec.kind == "gaussian":
        return spec.std * rng.standard_normal(shape)
    if spec.kind == "poisson":
        # raw draws, not mean-centred
        return rng.poisson(spec.lam, size=shape).astype(float)
    return None


def make_instance(cfg: ExperimentConfig, seed: int, fraction: float | None = None,
                  dither: DitherChoice | None = None, m: int | None = None,
                  rep: int = 0) -> Instance:
    """Truth, mask and noise keyed by ``(seed, fraction, rep)``; dithers add ``m`` and scheme.

    Paired comparisons across solvers, schemes and ``m`` therefore share the
    same matrix and mask.
    """
    fraction = cfg.fractions[0] if fraction is None else fraction
    dither = cfg.dithers[0] if dither is None else dither
    m = cfg.m[0] if m is None else m
    mx = cfg.matrix
    n_cells = mx.n1 * mx.n2
    m_prime = int(round(fraction * n_cells))
    if m_prime < 1:
        raise ConfigError(f"fraction {fraction} observes no entries of a {mx.n1}x{mx.n2} matrix")
    frac_key = int(round(fraction * 1e6))
    rng = _rng(seed, 1, rep)
    x = make_matrix(mx, rng)
    z = make_noise(cfg.noise, x.shape, _rng(seed, 2, rep))
    idx = _rng(seed, 3, frac_key, rep).choice(n_cells, size=m_prime, replace=False)
    mask = ObservationMask((mx.n1, mx.n2), idx // mx.n2, idx % mx.n2)
    observed = project_mask(x if z is None else x + z, mask)
    dr = dynamic_range(observed)
    scheme_key = DITHER_SCHEMES.index(dither.scheme) * 10_000 + (dither.levels or 0)
    dseed = int(np.random.SeedSequence(int(seed), spawn_key=(4, frac_key, scheme_key, rep))
                .generate_state(1)[0])
    spec = spec_from_range(dither.scheme, dr, m=m, seed=dseed, levels=dither.levels)
    return Instance(x, mask, generate(spec, mask), z, dr)


def build_problem(inst: Instance) -> OneBitProblem:
    if inst.z is None:
        return sample(inst.x_true, inst.mask, inst.dithers)
    return sample_noisy(inst.x_true, inst.z, inst.mask, inst.dithers)


def solver_config(cfg: ExperimentConfig, p: OneBitProblem, **extra) -> SolverConfig:
    n1, n2 = p.dims
    sp = cfg.solver
    return SolverConfig(
        theta=sp.alpha * math.sqrt(n1 * n2),
        delta=sp.delta_scale * n1 * n2 / p.m_prime,
        max_iters=sp.max_iters,
        tol=sp.tol,
        **extra,
    )


def noise_std(spec: NoiseSpec) -> float:
    if spec.kind == "gaussian":
        return spec.std
    if spec.kind == "poisson":
        return math.sqrt(spec.lam)
    return 0.0


def run_solver(name: str, cfg: ExperimentConfig, p: OneBitProblem, beta: float | None = None,
               seed: int = 0, callback=None):
    """Dispatch one solver by CLI name; returns ``(x_hat, trace_or_None, extras)``."""
    sp = cfg.solver
    if name == "obsvt1":
        x, tr = obsvt1(p, solver_config(cfg, p), callback=callback)
    elif name == "obsvt1-noisy":
        sz = sigma_z_default(noise_std(cfg.noise), p.size, sp.sigma_factor)
        x, tr = obsvt1_noisy(p, solver_config(cfg, p, sigma_z=sz), callback=callback)
    elif name == "obsvt2":
        x, tr = obsvt2(p, solver_config(cfg, p), callback=callback)
    elif name == "rand-obsvt":
        s = max(1, int(round((beta or sp.betas[0]) * p.m_prime)))
        x, tr = randomized_obsvt(p, solver_config(cfg, p, sketch_size=s, seed=seed),
                                 callback=callback)
    elif name == "bregman":
        x, targets = bregman_adaptive(p, solver_config(cfg, p), sp.bregman_epsilon,
                                      sp.bregman_outer)
        return x, None, {"outer_iterations": len(targets) - 1}
    elif name == "mle":
        q, std = dither_as_noise(p, noise_std(cfg.noise))
        # 1/L step for the probit loss; shrinkage grows with the noise-matrix spectrum
        mcfg = SolverConfig(theta=sp.mle_lambda * math.sqrt(max(p.dims)) * std**2, delta=std**2,
                            max_iters=sp.mle_max_iters, tol=sp.tol)
        x, tr = mle_baseline(q, std, mcfg, callback=callback)
    else:
        raise ConfigError(f"unknown solver {name!r}")
    return x, tr, {}


RESULT_COLUMNS = (
    "config_hash", "seed", "rep", "fraction", "m", "dither", "noise", "solver", "beta",
    "n1", "n2", "rank", "m_prime", "theta", "delta", "status", "error",
    "rel_error", "fro_error", "hamming", "consistent", "iterations", "stop_reason",
    "converged", "bound_alpha", "bound_regime", "theorem1_bound", "theorem2_bound",
    "noise_admissible", "dr_definition", "tie_rule", "sigma_z_rule", "sample_constant",
)
TIMING_COLUMNS = ("config_hash", "seed", "rep", "fraction", "m", "dither", "solver", "beta",
                  "wall_s")


def grid(cfg: ExperimentConfig):
    for fraction in cfg.fractions:
        for dither in cfg.dithers:
            for m in cfg.m:
                for solver in cfg.solvers:
                    betas = cfg.solver.betas if solver == "rand-obsvt" else [None]
                    for beta in betas:
                        for rep in range(cfg.repetitions):
                            yield fraction, dither, int(m), solver, beta, rep


def _evaluate(cfg, inst, p, x_hat, row):
    x = inst.x_true
    row["rel_error"] = analysis.relative_error(x_hat, x)
    row["fro_error"] = float(np.linalg.norm(x_hat - x))
    consistent, h = analysis.consistency_check(x_hat, p)
    row["consistent"] = int(consistent)
    row["hamming"] = h
    n1, n2 = x.shape
    if inst.dithers.scheme.get("kind") == "uniform":
        alpha, regime = inst.dithers.scheme["a"], "uniform"
    else:
        alpha, regime = max(inst.dr, float(np.max(np.abs(x)))), "non-uniform (advisory)"
    b1 = analysis.theorem1_bound(n1, n2, cfg.matrix.rank, alpha, p.m, p.m_prime, 0.05)
    row["bound_alpha"] = alpha
    row["bound_regime"] = regime
    row["theorem1_bound"] = b1.fro_bound
    row["theorem2_bound"] = analysis.theorem2_bound(
        n1, n2, cfg.matrix.rank, alpha, p.m, p.m_prime, 0.05, h)
    if inst.z is not None:
        row["noise_admissible"] = int(analysis.noise_admissible(inst.z, x_hat, x))


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True):
    """Run the whole grid; returns ``(rows, timing_rows)``.

    A failing run is recorded with ``status=failed`` and the grid continues.
    """
    digest = cfg.digest()
    rows, timings = [], []
    cache = {}
    for gi, (fraction, dither, m, solver, beta, rep) in enumerate(grid(cfg)):
        key = (fraction, dither.label, m, rep)
        if key not in cache:
            cache.clear()
            inst = make_instance(cfg, cfg.seed, fraction, dither, m, rep)
            cache[key] = (inst, build_problem(inst))
        inst, p = cache[key]
        row = dict.fromkeys(RESULT_COLUMNS, "")
        row.update(config_hash=digest, seed=cfg.seed, rep=rep, fraction=fraction, m=m,
                   dither=dither.label, noise=cfg.noise.kind, solver=solver,
                   beta="" if beta is None else beta, n1=cfg.matrix.n1, n2=cfg.matrix.n2,
                   rank=cfg.matrix.rank, m_prime=p.m_prime, **LEDGER)
        sc = solver_config(cfg, p)
        row.update(theta=sc.theta, delta=sc.delta)
        if solver == "mle" and m != 1:
            row.update(status="skipped", error="mle baseline is defined for m = 1 only")
            rows.append(row)
            continue
        start = time.perf_counter()
        try:
            x_hat, tr, extra = run_solver(solver, cfg, p, beta, seed=cfg.seed * 1000 + rep)
        except Exception as exc:  # recorded per row; the grid keeps going
            log.warning("run %d (%s) failed: %s", gi, solver, exc)
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            rows.append(row)
            continue
        wall = time.perf_counter() - start
        row["status"] = "ok"
        if tr is not None:
            row.update(iterations=len(tr), stop_reason=tr.stop_reason,
                       converged=int(tr.converged))
        else:
            row.update(iterations=extra.get("outer_iterations", ""), stop_reason="outer",
                       converged=1)
        _evaluate(cfg, inst, p, x_hat, row)
        rows.append(row)
        timings.append({"config_hash": digest, "seed": cfg.seed, "rep": rep,
                        "fraction": fraction, "m": m, "dither": dither.label,
                        "solver": solver, "beta": row["beta"], "wall_s": wall})
    if write:
        out = Path(out_dir or cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "results.csv", rows, RESULT_COLUMNS)
        write_csv(out / "timings.csv", timings, TIMING_COLUMNS)
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, default=str))
    return rows, timings


def write_csv(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def median_table(rows, by=("solver", "fraction"), value="rel_error") -> dict:
    """Median and quartiles of ``value`` grouped by the ``by`` columns."""
    groups = {}
    for r in rows:
        if r.get("status", "ok") != "ok" or r.get(value, "") == "":
            continue
        groups.setdefault(tuple(r[k] for k in by), []).append(float(r[value]))
    return {k: (float(np.median(v)), float(np.percentile(v, 25)), float(np.percentile(v, 75)))
            for k, v in groups.items()}


# -- benchmarking ------------------------------------------------------------

BENCH_COLUMNS = ("n", "rank", "rep", "solver", "reached", "iterations", "time_to_target_s",
                 "final_rel_error")


def bench(cfg: ExperimentConfig, error_target: float, sizes=(100, 300, 500),
          solvers=("obsvt2", "mle"), budget_s: float = 120.0, repetitions: int | None = None):
    """Wall-clock until the first iterate with relative error <= ``error_target``.

    Only the matrix size changes between rows; everything else follows
    ``cfg``. Runs that exhaust ``max_iters`` or ``budget_s`` are marked
    unreached. Returns ``(rows, ratios)`` with ``ratios[n] = median time of
    the last solver / median time of the first``.
    """
    reps = repetitions or cfg.repetitions
    rows = []
    for n in sizes:
        sub = ExperimentConfig.from_dict({**cfg.to_dict(), "matrix": {
            **asdict(cfg.matrix), "n1": n, "n2": n}})
        for rep in range(reps):
            inst = make_instance(sub, sub.seed, rep=rep)
            p = build_problem(inst)
            norm = np.linalg.norm(inst.x_true)
            for solver in solvers:
                state = {"k": None, "t": None, "err": None}
                start = time.perf_counter()

                def hit(k, x, state=state, start=start):
                    err = np.linalg.norm(x - inst.x_true) / norm
                    state["err"] = err
                    if err <= error_target:
                        state["k"], state["t"] = k, time.perf_counter() - start
                        return True
                    return time.perf_counter() - start > budget_s

                run_solver(solver, sub, p, callback=hit)
                rows.append({"n": n, "rank": sub.matrix.rank, "rep": rep, "solver": solver,
                             "reached": int(state["k"] is not None),
                             "iterations": state["k"] or "",
                             "time_to_target_s": state["t"] if state["t"] is not None else "",
                             "final_rel_error": state["err"]})
    ratios = {}
    for n in sizes:
        med = []
        for solver in (solvers[0], solvers[-1]):
            ts = [r["time_to_target_s"] if r["reached"] else math.inf
                  for r in rows if r["n"] == n and r["solver"] == solver]
            med.append(float(np.median(ts)))
        ratios[n] = med[1] / med[0] if med[0] > 0 else math.inf
    return rows, ratios
