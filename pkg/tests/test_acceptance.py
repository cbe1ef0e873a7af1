"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from onebit_mc.analysis import (
    convergence_monitor,
    corollary1_epsilon,
    expected_t_ave,
    reference_run,
    t_ave,
    theorem2_bound,
)
from onebit_mc.dither import DitherSpec, generate, spec_from_range
from onebit_mc.experiments import (
    ExperimentConfig,
    bench,
    build_problem,
    make_instance,
    median_table,
    run_experiment,
    solver_config,
)
from onebit_mc.model import ObservationMask, apply_A, apply_A_adjoint, materialize_dense_B, project_mask
from onebit_mc.quantizer import residual_plus, sample
from onebit_mc.solvers import obsvt2

from helpers import low_rank, random_mask, report

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
pytestmark = pytest.mark.acceptance


def _load(name, **override):
    cfg = ExperimentConfig.load(CONFIGS / f"{name}.yaml")
    return ExperimentConfig.from_dict({**cfg.to_dict(), **override})


def _random_instance(rng, max_cells=400, max_m=4, scheme=None):
    while True:
        n1, n2 = rng.integers(1, 21, size=2)
        if n1 * n2 <= max_cells:
            break
    r = int(rng.integers(1, min(n1, n2) + 1))
    x = low_rank(rng, n1, n2, r)
    mask = random_mask(rng, n1, n2, int(rng.integers(1, n1 * n2 + 1)))
    scheme = scheme or rng.choice(["uniform", "gaussian", "discrete"])
    dr = max(float(np.max(np.abs(x[mask.rows, mask.cols]))), 1e-3)
    spec = spec_from_range(scheme, dr, m=int(rng.integers(1, max_m + 1)),
                           seed=int(rng.integers(2**31)), levels=10)
    return x, sample(x, mask, generate(spec, mask))


def test_criterion_01_operator_oracles():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = {"apply": 0.0, "adjoint": 0.0, "sv": 0.0, "pinv": 0.0}
    for _ in range(50):
        x, p = _random_instance(rng)
        B = materialize_dense_B(p)
        y = rng.standard_normal(p.size)
        worst["apply"] = max(worst["apply"], np.max(np.abs(apply_A(p, x) - B @ x.ravel())))
        lhs = apply_A(p, x) @ y
        rhs = np.sum(x * apply_A_adjoint(p, y))
        worst["adjoint"] = max(worst["adjoint"], abs(lhs - rhs) / max(1.0, abs(lhs)))
        # B has rank m': its m' nonzero singular values are sqrt(m), any others vanish
        sv = np.linalg.svd(B, compute_uv=False)
        dev = np.abs(sv[:p.m_prime] - math.sqrt(p.m))
        worst["sv"] = max(worst["sv"], np.max(dev), np.max(sv[p.m_prime:], initial=0.0))
        worst["pinv"] = max(worst["pinv"], np.max(np.abs(np.linalg.pinv(B) - B.T / p.m)))
    elapsed = time.perf_counter() - start
    ok = (worst["apply"] <= 1e-12 and worst["adjoint"] <= 1e-12 and worst["sv"] <= 1e-10
          and worst["pinv"] <= 1e-10 and elapsed < 10)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert report(1, ok, f"50 instances; max deviations {detail}; {elapsed:.1f}s")


def test_criterion_02_truth_feasible():
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        x, p = _random_instance(rng, max_m=6)
        worst = max(worst, float(np.max(residual_plus(p, x))))
    elapsed = time.perf_counter() - start
    ok = worst == 0.0 and elapsed < 5
    assert report(2, ok, f"200 cases; max (t - A(X))^+ = {worst!r}; {elapsed:.2f}s")


def test_criterion_03_t_ave_oracle():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    z_scores = []
    for _ in range(20):
        n1, n2 = (int(v) for v in rng.integers(10, 31, size=2))
        x = low_rank(rng, n1, n2, int(rng.integers(1, 5)))
        alpha = float(rng.uniform(1.0, 2.0)) * np.max(np.abs(x))
        mask = ObservationMask.full((n1, n2))
        m = -(-1_000_000 // mask.m_prime)
        d = generate(DitherSpec("uniform", a=alpha, m=m, seed=int(rng.integers(2**31))), mask)
        p = sample(x, mask, d)
        mean = t_ave(x, p)
        # every cell gets m draws, so the standard error is the stratified one
        gaps = np.abs(project_mask(x, mask)[None, :] - d.values)
        se = math.sqrt(np.mean(gaps.var(axis=0, ddof=1)) / gaps.size)
        z_scores.append(abs(mean - expected_t_ave(x, alpha)) / se)
    elapsed = time.perf_counter() - start
    worst = max(z_scores)
    ok = worst <= 3 and elapsed < 60
    assert report(3, ok, f"20 matrices, >=1e6 draws each; worst |z| = {worst:.2f}; {elapsed:.1f}s")


def test_criterion_04_contraction_monitor():
    cfg = ExperimentConfig.from_dict({"matrix": {"n1": 50, "n2": 50, "rank": 3},
                                      "fractions": [0.5], "dithers": ["gaussian"],
                                      "noise": {"kind": "none"}})
    start = time.perf_counter()
    total = iters = 0
    for rep in range(10):
        p = build_problem(make_instance(cfg, 0, rep=rep))
        sc = solver_config(cfg, p)
        x_ref, y_ref = reference_run(obsvt2, p, sc)
        _, tr = obsvt2(p, replace(sc, record_iterates=True))
        rep_ = convergence_monitor(tr, x_ref, y_ref, p.m, sc.delta, "obsvt2")
        total += len(rep_.violations)
        iters += len(tr)
    elapsed = time.perf_counter() - start
    ok = total == 0 and elapsed < 120
    assert report(4, ok, f"10 instances, {iters} iterations, {total} violations; {elapsed:.1f}s")


def test_criterion_05_solver_ordering():
    cfg = _load("fig1a")
    start = time.perf_counter()
    rows, _ = run_experiment(cfg, write=False)
    elapsed = time.perf_counter() - start
    med = {k: v[0] for k, v in median_table(rows, ("solver", "fraction")).items()}
    fr = cfg.fractions
    order = all(med["obsvt2", f] <= med["obsvt1", f] <= med["mle", f] for f in fr)
    decreasing = all(med["obsvt2", a] > med["obsvt2", b] for a, b in zip(fr, fr[1:]))
    ok = order and decreasing and elapsed < 600
    table = "; ".join(f"{f}: " + "/".join(f"{med[s, f]:.3f}" for s in ("obsvt2", "obsvt1", "mle"))
                      for f in fr)
    assert report(5, ok, f"obsvt2/obsvt1/mle medians {table}; {elapsed:.0f}s")


def test_criterion_06_multiple_dithers():
    cfg = _load("fig1f")
    start = time.perf_counter()
    rows, _ = run_experiment(cfg, write=False)
    elapsed = time.perf_counter() - start
    med = {k[0]: v[0] for k, v in median_table(rows, ("m",)).items()}
    ms = cfg.m
    ok = all(med[a] > med[b] for a, b in zip(ms, ms[1:])) and elapsed < 600
    line = ", ".join(f"m={m}: {med[m]:.3f}" for m in ms)
    assert report(6, ok, f"obsvt2 medians {line}; {elapsed:.0f}s")


def test_criterion_07_dither_scheme_match():
    start = time.perf_counter()
    rows_c, _ = run_experiment(_load("fig1c"), write=False)
    rows_d, _ = run_experiment(_load("fig1d"), write=False)
    elapsed = time.perf_counter() - start
    mc = {k[0]: v[0] for k, v in median_table(rows_c, ("dither",)).items()}
    md = {k[0]: v[0] for k, v in median_table(rows_d, ("dither",)).items()}
    gauss_x = mc["gaussian"] < mc["uniform"]
    unif_x = md["uniform"] < md["gaussian"]
    disc_gap = abs(mc["discrete100"] - mc["uniform"]) / mc["uniform"]
    ok = gauss_x and unif_x and disc_gap <= 0.10 and elapsed < 900
    detail = (f"gaussian X: gaussian {mc['gaussian']:.3f} vs uniform {mc['uniform']:.3f} "
              f"[{'ok' if gauss_x else 'FAIL'}]; uniform01 X: uniform {md['uniform']:.3f} vs "
              f"gaussian {md['gaussian']:.3f} [{'ok' if unif_x else 'FAIL'}]; discrete100 "
              f"gap {disc_gap:.1%} [{'ok' if disc_gap <= 0.10 else 'FAIL'}]; {elapsed:.0f}s")
    assert report(7, ok, detail)


def test_criterion_08_sketch_trend():
    cfg = _load("fig1e")
    start = time.perf_counter()
    rows, _ = run_experiment(cfg, write=False)
    elapsed = time.perf_counter() - start
    med = {float(k[0]): v[0] for k, v in median_table(rows, ("beta",), "iterations").items()}
    betas = sorted(med)
    censored = sum(r["stop_reason"] == "max_iters" for r in rows)
    ok = all(med[a] > med[b] for a, b in zip(betas, betas[1:])) and elapsed < 600
    line = ", ".join(f"beta={b}: {med[b]:.0f}" for b in betas)
    assert report(8, ok, f"median iterations {line} ({censored} runs censored at max_iters); "
                          f"{elapsed:.0f}s")


def test_criterion_09_timing_ordering():
    cfg = _load("fig1a", fractions=[0.5])
    start = time.perf_counter()
    rows, ratios = bench(cfg, math.sqrt(0.8), sizes=(100, 300), budget_s=60)
    elapsed = time.perf_counter() - start
    ok = all(r > 1 for r in ratios.values()) and elapsed < 600
    reached = {(r["n"], r["solver"]): 0 for r in rows}
    for r in rows:
        reached[r["n"], r["solver"]] += int(r["reached"])
    line = "; ".join(f"n={n}: mle/obsvt2 median time ratio {ratios[n]:.3g} "
                     f"(reached obsvt2 {reached[n, 'obsvt2']}/5, mle {reached[n, 'mle']}/5)"
                     for n in ratios)
    assert report(9, ok, f"{line}; {elapsed:.0f}s")


def test_criterion_10_bound_sanity():
    cfg = _load("bounds")
    rows, _ = run_experiment(cfg, write=False)
    ok_rows = [r for r in rows if r["status"] == "ok"]
    worst, violations = 0.0, 0
    for r in ok_rows:
        bound = theorem2_bound(r["n1"], r["n2"], r["rank"], r["bound_alpha"], r["m"],
                               r["m_prime"], 0.05, r["hamming"])
        violations += r["fro_error"] > bound
        worst = max(worst, r["fro_error"] / bound)
    ok = violations == 0 and len(ok_rows) == len(rows)
    assert report(10, ok, f"{len(ok_rows)} noiseless uniform-dither runs, {violations} violations; "
                           f"largest error/bound ratio {worst:.3f}")


def test_criterion_11_corollary_slope():
    start = time.perf_counter()
    mm = np.logspace(5, 6, 21)
    eps = [corollary1_epsilon(v, 1.0, 100, 100, 5) for v in mm]
    slope = float(np.polyfit(np.log(mm), np.log(eps), 1)[0])
    elapsed = time.perf_counter() - start
    ok = abs(slope + 0.4) <= 0.02 and elapsed < 1
    assert report(11, ok, f"log-log slope {slope:.4f}; {elapsed * 1e3:.1f}ms")
