"""Lindstedt series of quasi-periodic tori of the dissipative standard map.

Two independent routes compute the same coefficients: the direct
order-by-order expansion (:mod:`.lindstedt`) and a coefficient-doubling
quasi-Newton method based on automatic reducibility (:mod:`.newton`).
"""

from .cohomology import (solve_parametric_formal, solve_parametric_numeric, solve_second_difference,
                         solve_standard)
from .diagnostics import (GevreyFit, coefficient_norms, estimate_diophantine, fit_gevrey, gamma_N,
                          in_G, residual_scan, tilde_nu)
from .epsseries import (EpsSeries, ScalarSeries, SeriesMatrix, compose_perturbation, eval_series,
                        series_add, series_mul, window)
from .errors import InvariantError, ValidationError
from .fourier import Frequency, TrigPoly
from .lindstedt import HullExpansion, MapSpec, direct_expansion, hull_to_embedding
from .newton import (NewtonState, ReducibilityPack, build_reducibility, invariance_error, newton_step,
                     run_doubling)
from .precision import DOUBLE, EXTENDED, get_precision

__all__ = [
    "DOUBLE", "EXTENDED", "EpsSeries", "Frequency", "GevreyFit", "HullExpansion", "InvariantError",
    "MapSpec", "NewtonState", "ReducibilityPack", "ScalarSeries", "SeriesMatrix", "TrigPoly",
    "ValidationError", "build_reducibility", "coefficient_norms", "compose_perturbation",
    "direct_expansion", "estimate_diophantine", "eval_series", "fit_gevrey", "gamma_N",
    "get_precision", "hull_to_embedding", "in_G", "invariance_error", "newton_step",
    "residual_scan", "run_doubling", "series_add", "series_mul", "solve_parametric_formal",
    "solve_parametric_numeric", "solve_second_difference", "solve_standard", "tilde_nu", "window",
]
