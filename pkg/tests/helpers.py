import numpy as np

from onebit_mc.dither import DitherSpec, generate, spec_from_range, dynamic_range
from onebit_mc.model import ObservationMask, project_mask
from onebit_mc.quantizer import sample, sample_noisy


def random_mask(rng, n1, n2, m_prime):
    idx = rng.choice(n1 * n2, size=m_prime, replace=False)
    return ObservationMask((n1, n2), idx // n2, idx % n2)


def low_rank(rng, n1, n2, r):
    return rng.standard_normal((n1, r)) @ rng.standard_normal((n2, r)).T


def make_problem(seed=0, n1=6, n2=5, r=2, frac=0.6, m=2, scheme="uniform", noise=0.0):
    """Small sampled instance; returns ``(x_true, problem)``."""
    rng = np.random.default_rng(seed)
    x = low_rank(rng, n1, n2, r)
    mask = random_mask(rng, n1, n2, max(1, int(round(frac * n1 * n2))))
    z = noise * rng.standard_normal(x.shape) if noise else None
    dr = dynamic_range(project_mask(x if z is None else x + z, mask))
    stack = generate(spec_from_range(scheme, dr, m=m, seed=seed + 1, levels=10), mask)
    p = sample(x, mask, stack) if z is None else sample_noisy(x, z, mask, stack)
    return x, p


CRITERIA = []


def report(number, ok, detail):
    """Record and print one acceptance line; the terminal summary repeats them in order."""
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA.append(line)
    print(line)
    return ok
