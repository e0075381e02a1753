"""Deterministic simulator and checker for fault-tolerant scalar optimization.

Agents holding admissible convex costs run distributed gradient methods while
up to ``f`` of them crash or act Byzantine. The package simulates those runs
and checks each trace against an independently computed valid set.
"""

from .adversary import (CrashEvent, CrashSchedule, STRATEGIES, apply_adversary,
                        generate_crash_schedule, strategy_from_dict)
from .config import load_scenario, scenario_from_dict
from .engine import DelayModel, RoundRecord, ScenarioConfig, Trace, run_async, run_sync, simulate
from .errors import (ConfigError, DomainError, FtoptError, NumericError, ParameterError,
                     ProtocolViolation)
from .functions import (AdmissibleFunction, Huber, ScaledSum, SmoothAbs, argmin_interval,
                        evaluate, gradient, huber, scaled_sum, smooth_abs, verify_admissible)
from .kernels import BACKEND
from .protocol import StepSchedule, stepsize
from .valid_set import (FaultSplit, ValidSet, WeightConstraint, brute_force_valid_set,
                        compute_valid_set_async, compute_valid_set_byz, compute_valid_set_crash,
                        dist_to_set, gradient_envelope, weight_feasibility)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleFunction", "BACKEND", "ConfigError", "CrashEvent", "CrashSchedule", "DelayModel",
    "DomainError", "FaultSplit", "FtoptError", "Huber", "NumericError", "ParameterError",
    "ProtocolViolation", "RoundRecord", "STRATEGIES", "ScaledSum", "ScenarioConfig", "SmoothAbs",
    "StepSchedule", "Trace", "ValidSet", "WeightConstraint", "apply_adversary", "argmin_interval",
    "brute_force_valid_set", "compute_valid_set_async", "compute_valid_set_byz",
    "compute_valid_set_crash", "dist_to_set", "evaluate", "generate_crash_schedule", "gradient",
    "gradient_envelope", "huber", "load_scenario", "run_async", "run_sync", "scaled_sum",
    "scenario_from_dict", "simulate", "smooth_abs", "stepsize", "strategy_from_dict",
    "verify_admissible", "weight_feasibility",
]
