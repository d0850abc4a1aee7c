"""Fractional Sobolev spaces on a periodic grid: operators, norms, obstacle problems.

Spectral fractional Laplacians on the torus [-L, L)^N, dual norms over a masked
domain, an accelerated projected-gradient obstacle solver, the compactness and
Mosco-convergence experiments built on them, and a fixed-point QVI solver.
"""

from .dualnorm import DualNormResult, dual_norm_2, dual_norm_q
from .errors import (ConvergenceError, ParameterError, PremiseError, SizeError,
                     ValidationError)
from .experiments import (ObstacleSequenceSpec, counterexample_sequence, make_obstacle_sequence,
                          run_cone_compactness, run_counterexample, run_mosco_sweep)
from .grid import DomainMask, Grid, GridFunction, bump, random_field
from .norms import (NormParams, brezis_lieb_defect, hsp_seminorm, lp_norm, poincare_constant,
                    sobolev_exponent)
from .qvi import ObstacleMapSpec, QVIResult, apply_obstacle_map, solve_qvi
from .spectral import (MultiplierSymbol, apply_multiplier, bessel_inverse, frac_laplacian,
                       kernel_matrix, power_symbol, product_rule_remainder, riesz_potential)
from .vi import VIProblem, VISolution, dense_vi_oracle, solve_unconstrained, solve_vi

__all__ = [
    "ConvergenceError", "DomainMask", "DualNormResult", "Grid", "GridFunction",
    "MultiplierSymbol", "NormParams", "ObstacleMapSpec", "ObstacleSequenceSpec",
    "ParameterError", "PremiseError", "QVIResult", "SizeError", "VIProblem", "VISolution",
    "ValidationError", "apply_multiplier", "apply_obstacle_map", "bessel_inverse",
    "brezis_lieb_defect", "bump", "counterexample_sequence", "dense_vi_oracle",
    "dual_norm_2", "dual_norm_q", "frac_laplacian", "hsp_seminorm", "kernel_matrix",
    "lp_norm", "make_obstacle_sequence", "poincare_constant", "power_symbol",
    "product_rule_remainder", "random_field", "riesz_potential", "run_cone_compactness",
    "run_counterexample", "run_mosco_sweep", "sobolev_exponent", "solve_qvi",
    "solve_unconstrained", "solve_vi",
]
