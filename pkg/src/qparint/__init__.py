"""Simulated quantum multilevel parametric integration.

Approximates ``S f(s) = int_{[0,1]^d2} f(s, t) dt`` for ``f`` in the unit
ball of ``C^r([0,1]^(d1+d2))`` with a multilevel scheme whose level
integrals are estimated by a classical simulation of quantum amplitude
estimation, and compares it with deterministic and Monte Carlo methods.
"""

from .grid import MeshSpec, PiecewiseLagrange, composite_weights, interpolate, mesh_points
from .functions import (CORPUS, SmoothFunction, constant_function, corpus_function, kink_function,
                        lacunary_function)
from .detail import DetailContext, FixedPointCodec, NodeSet, level_stencil, reference_integral
from .quantum import (QueryLedger, RandomSource, NormBoundViolation, err_bound, median_boost,
                      qae_mean, quantum_integrate, sample_qae)
from .multilevel import (LevelSchedule, ParintResult, build_schedule, measure_sup_error,
                         prepare_parint, run_parint, sample_parint)
from .baselines import BaselineResult, deterministic_baseline, mc_baseline
from .fooling import BumpFamily, fooling_instance, rho
from .bench import BenchConfig, ExperimentRecord, SlopeFit, emit, fit_slope, run_sweep

__version__ = "0.1.0"

__all__ = [
    "MeshSpec", "PiecewiseLagrange", "composite_weights", "interpolate", "mesh_points",
    "SmoothFunction", "corpus_function", "CORPUS", "constant_function", "kink_function",
    "lacunary_function",
    "DetailContext", "FixedPointCodec", "NodeSet", "level_stencil", "reference_integral",
    "QueryLedger", "RandomSource", "NormBoundViolation", "err_bound", "median_boost",
    "qae_mean", "quantum_integrate", "sample_qae",
    "LevelSchedule", "ParintResult", "build_schedule", "measure_sup_error",
    "prepare_parint", "run_parint", "sample_parint",
    "BaselineResult", "deterministic_baseline", "mc_baseline",
    "BumpFamily", "fooling_instance", "rho",
    "BenchConfig", "ExperimentRecord", "SlopeFit", "emit", "fit_slope", "run_sweep",
]
