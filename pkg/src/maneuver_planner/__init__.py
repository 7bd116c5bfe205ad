"""Maneuver planning for automated driving.

Frenet-frame trajectory synthesis feeds symbolic maneuver facts into a PDDL
problem, which a Fast-Forward style search solves each replanning cycle.
"""

from .collision import Footprint, check_trajectory
from .geometry import CartesianState, FrenetState, build_reference_path, cartesian_to_frenet, frenet_to_cartesian
from .kernels import BACKEND
from .optimizer import ManeuverKind, OptimizationParams, Trajectory, generate_candidates, select_optimal
from .simulation import OPMThresholds, Outcome, evaluate_opm, run_batch, run_closed_loop
from .streams import NoPlan, PlannerConfig, PlanningSnapshot, PlanResult, plan_with_streams
from .world import LaneMap, Scenario, load_scenario, scenario_from_dict

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CartesianState", "Footprint", "FrenetState", "LaneMap", "ManeuverKind", "NoPlan",
    "OPMThresholds", "OptimizationParams", "Outcome", "PlanResult", "PlannerConfig", "PlanningSnapshot",
    "Scenario", "Trajectory", "build_reference_path", "cartesian_to_frenet", "check_trajectory",
    "evaluate_opm", "frenet_to_cartesian", "generate_candidates", "load_scenario", "plan_with_streams",
    "run_batch", "run_closed_loop", "scenario_from_dict", "select_optimal",
]
