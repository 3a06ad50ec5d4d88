"""Anomalous invasion speeds in a coupled Fisher-KPP system.

    u_t = d u_xx + alpha u (1 - u) + beta v
    v_t = v_xx + v (1 - v)
"""
from .bounds import (
    SeedProfile, SuperSolutionSpec, USubSolutionSpec, VSubSolutionSpec, certify_bounds,
    run_certificate,
)
from .estimators import RegimeClassifier, SpreadingSpeedEstimator, expected_speed, linear_speed, measure
from .front_solver import FrontProfile, evaluate_front, solve_front
from .linear_analysis import (
    Params, anomalous_speed, classify_regime, find_pinched_double_roots, linear_spreading_speed,
)
from .simulator import FieldState, InitialDataSpec, WindowPolicy, init_state, ordering_test, run
from .speed_tracker import SpeedRegressor, fit_speed, invasion_point

__version__ = "0.1.0"

__all__ = [
    "Params", "anomalous_speed", "classify_regime", "find_pinched_double_roots",
    "linear_spreading_speed", "FrontProfile", "solve_front", "evaluate_front",
    "FieldState", "InitialDataSpec", "WindowPolicy", "init_state", "run", "ordering_test",
    "invasion_point", "fit_speed", "SpeedRegressor", "SeedProfile", "VSubSolutionSpec",
    "USubSolutionSpec", "SuperSolutionSpec", "certify_bounds", "run_certificate",
    "RegimeClassifier", "SpreadingSpeedEstimator", "expected_speed", "linear_speed", "measure",
]
