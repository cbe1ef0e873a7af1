from .obsvt import obsvt1, obsvt1_noisy, obsvt2, randomized_obsvt, SolverDivergence
from .svt import Shrinker, SVDFailure, svt_shrink
from .sketch import Sketch, make_sketch
from .trace import SolverConfig, SolverTrace
from .mle import dither_as_noise, mle_baseline, log_likelihood, log_likelihood_grad
from .bregman import OuterIterationError, bregman_adaptive
