"""Statistical multiresolution estimation for linear inverse problems.

Convex-penalty estimation under white noise where data fidelity is
enforced as a hard constraint on the maximum of calibrated residual
projections over an atom dictionary, with the threshold calibrated by
Monte-Carlo simulation of the pure-noise statistic.
"""

from smre.dictionary import build_dyadic, build_intervals, build_trigonometric
from smre.grid import Grid, NoiseModel, Signal, draw_white_noise, inner, norm
from smre.mrstat import MrFamily, eval_T, eval_t, lambda_inf
from smre.operators import ConvolutionOperator, DiagonalOperator, IdentityOperator, make_kernel
from smre.penalties import (
    H1Penalty,
    NegentropyPenalty,
    SquaredL2Penalty,
    TVPenalty,
    make_penalty,
)
from smre.quantile import borel_bound, quantile, quantile_se, simulate
from smre.solver import (
    ConstraintSet,
    SolverConfig,
    project_admissible,
    solve_penalized_ls,
    solve_shrinkage,
    solve_smre,
)

__version__ = "0.1.0"
