"""Geometric-sum invariant measures and certified performance bounds for
homogeneous nearest-neighbor random walks in the quarter-plane.

The decision pipeline: build the balance curves of a walk, decide whether
its invariant measure is a finite weighted sum of geometric terms, solve
for the weights and closed-form performance values when it is, and fall
back to certified upper and lower bounds through a perturbed walk and a
finite linear program when it is not.
"""

from .model import (F1, F2, PerformanceFunctional, RandomWalk,
                    evaluate_functional, load_fixture, load_model,
                    normalize_walk, save_model, validate_walk)
from .curves import BranchPointError, build_curves, branch_points
from .detection import (DetectionConfig, DetectionOutcome, GeometricTerm,
                        UnsupportedRegimeError, detect)
from .measure import (CoefficientError, GeometricMixture, balance_residuals,
                      chain_coefficients, exact_performance, product_form,
                      solve_coefficients)
from .perturbation import (PerturbationError, PerturbationResult,
                           build_mixture_perturbation,
                           build_product_perturbation, candidate_terms,
                           chain_from_candidate)
from .bounds import (BoundError, BoundResult, bound_performance, sweep_bounds,
                     sweep_csv, sweep_summary, weighted_sum)
from .oracle import (OracleValue, TruncationWarning, finite_horizon_reward,
                     oracle_performance, stationary_truncated,
                     verify_condition, verify_invariance)

__version__ = "0.1.0"

__all__ = [
    "F1", "F2", "PerformanceFunctional", "RandomWalk",
    "evaluate_functional", "load_fixture", "load_model", "normalize_walk",
    "save_model", "validate_walk",
    "BranchPointError", "build_curves", "branch_points",
    "DetectionConfig", "DetectionOutcome", "GeometricTerm",
    "UnsupportedRegimeError", "detect",
    "CoefficientError", "GeometricMixture", "balance_residuals",
    "chain_coefficients", "exact_performance", "product_form",
    "solve_coefficients",
    "PerturbationError", "PerturbationResult", "build_mixture_perturbation",
    "build_product_perturbation", "candidate_terms", "chain_from_candidate",
    "BoundError", "BoundResult", "bound_performance", "sweep_bounds",
    "sweep_csv", "sweep_summary", "weighted_sum",
    "OracleValue", "TruncationWarning", "finite_horizon_reward",
    "oracle_performance", "stationary_truncated", "verify_condition",
    "verify_invariance",
]
