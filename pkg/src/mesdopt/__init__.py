# SPDX-License-Identifier: Apache-2.0

"""Day-ahead co-optimization of mobile energy storage journeys and dispatch."""

from . import exceptions
from . import testing
from ._about import __version__
from ._bnb import relative_gap
from ._bnb import solve
from ._enums import RowSense
from ._enums import SolveStatus
from ._enums import Strategy
from ._enums import VarKind
from ._grid import BaselineLosses
from ._grid import PowerFlowSolution
from ._grid import SensitivityBundle
from ._grid import StepSensitivity
from ._grid import baseline_losses
from ._grid import compute_sensitivities
from ._grid import linearize
from ._grid import run_power_flow
from ._grid import step_sensitivity
from ._lpformat import export_model
from ._lpformat import import_model
from ._milp import LinearRow
from ._milp import MilpModel
from ._milp import MilpSolution
from ._milp import VariableDecl
from ._milp import key_name
from ._options import GridLimits
from ._options import SolverOptions
from ._plans import FeasibilityResult
from ._plans import TransitPlan
from ._plans import check_transit_feasibility
from ._plans import iter_transit_plans
from ._plans import random_transit_plan
from ._profiles import resample_profile
from ._scenario import GridNetwork
from ._scenario import MesdSpec
from ._scenario import RoadNetwork
from ._scenario import Scenario
from ._scenario import StationMap
from ._scenario import load_scenario
from ._scenario import save_scenario
from ._scenario import scenario_from_dict
from ._scenario import shipped_scenario
from ._schedule import Schedule
from ._schedule import comparison_table
from ._schedule import read_schedule
from ._schedule import reduction_rate
from ._schedule import write_schedule
from ._schedule import zero_schedule
from ._scheduler import Precomputed
from ._scheduler import assemble
from ._scheduler import prepare
from ._scheduler import solve_all
from ._scheduler import solve_case1
from ._scheduler import solve_case2_stationary
from ._scheduler import solve_case3_pev
from ._scheduler import solve_no_storage
from ._scheduler import sweep
from ._simplex import LpSolution
from ._simplex import solve_lp
from ._transit import PathTable
from ._transit import TransitMatrix
from ._transit import build_transit_matrix
from ._transit import edge_travel_times
from ._transit import emit_connection_constraints
from ._transit import emit_flag_constraints
from ._transit import fastest_paths
from ._transit import normalized_steps
from ._validator import ValidationReport
from ._validator import replay
from ._validator import soc_replay
from .exceptions import Error

__all__ = [
    "BaselineLosses",
    "Error",
    "FeasibilityResult",
    "GridLimits",
    "GridNetwork",
    "LinearRow",
    "LpSolution",
    "MesdSpec",
    "MilpModel",
    "MilpSolution",
    "PathTable",
    "PowerFlowSolution",
    "Precomputed",
    "RoadNetwork",
    "RowSense",
    "Scenario",
    "Schedule",
    "SensitivityBundle",
    "SolveStatus",
    "SolverOptions",
    "StationMap",
    "StepSensitivity",
    "Strategy",
    "TransitMatrix",
    "TransitPlan",
    "ValidationReport",
    "VarKind",
    "VariableDecl",
    "__version__",
    "assemble",
    "baseline_losses",
    "build_transit_matrix",
    "check_transit_feasibility",
    "comparison_table",
    "compute_sensitivities",
    "edge_travel_times",
    "emit_connection_constraints",
    "emit_flag_constraints",
    "exceptions",
    "export_model",
    "fastest_paths",
    "import_model",
    "iter_transit_plans",
    "key_name",
    "linearize",
    "load_scenario",
    "normalized_steps",
    "prepare",
    "random_transit_plan",
    "read_schedule",
    "reduction_rate",
    "relative_gap",
    "replay",
    "resample_profile",
    "run_power_flow",
    "save_scenario",
    "scenario_from_dict",
    "shipped_scenario",
    "soc_replay",
    "solve",
    "solve_all",
    "solve_case1",
    "solve_case2_stationary",
    "solve_case3_pev",
    "solve_lp",
    "solve_no_storage",
    "step_sensitivity",
    "sweep",
    "testing",
    "write_schedule",
    "zero_schedule",
]
