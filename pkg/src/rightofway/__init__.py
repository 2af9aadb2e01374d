"""Deterministic multi-agent safety filtering with auctioned avoidance credit.

Agents with constant-speed unicycle dynamics share responsibility for a
joint pairwise-distance safety constraint. When nominal controls become
jointly unsafe, the required corrective effort is either split by a
least-squares filter (baseline) or allocated through a progressive
second price auction over avoidance credit, so agents with higher
private valuations keep more of their right of way.
"""

__version__ = "0.1.0"

from .allocation import (CorrectionAssignment, UncontrollableCorrection,
                         credit_to_correction, qp_baseline,
                         synthesize_control, synthesize_control_vector)
from .auction import (AuctionOutcome, Bid, ValuationParams, allocate,
                      best_response, marginal_valuation, run_auction,
                      valuation, vcg_payment, welfare_oracle)
from .backend import active_backend
from .dynamics import AgentState, DynamicsParams, control_field, drift, step, step_all
from .engine import (AgentSpec, EventRecord, ScenarioConfig, SimulationFault,
                     TrajectoryLog, effort_summary, nominal_control,
                     run_scenario, trigger_check)
from .safety import (BarrierParams, PairDerivatives, SafetyConstraint,
                     active_set, assemble_constraint, lse_aggregate,
                     pair_barrier, pair_derivatives, safety_deficit,
                     softmin_weights)

__all__ = [
    "__version__",
    "active_backend",
    "AgentState", "DynamicsParams", "drift", "control_field", "step", "step_all",
    "BarrierParams", "PairDerivatives", "SafetyConstraint", "pair_barrier",
    "pair_derivatives", "lse_aggregate", "softmin_weights",
    "assemble_constraint", "safety_deficit", "active_set",
    "ValuationParams", "Bid", "AuctionOutcome", "valuation",
    "marginal_valuation", "allocate", "vcg_payment", "best_response",
    "run_auction", "welfare_oracle",
    "CorrectionAssignment", "UncontrollableCorrection",
    "credit_to_correction", "synthesize_control", "synthesize_control_vector",
    "qp_baseline",
    "AgentSpec", "ScenarioConfig", "EventRecord", "TrajectoryLog",
    "SimulationFault", "nominal_control", "trigger_check", "run_scenario",
    "effort_summary",
]
