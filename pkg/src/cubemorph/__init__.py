"""Homogeneous self-reconfiguration of cube-shaped agents on a lattice.

Agents occupy distinct cells of a bounded 2D or 3D integer lattice and
move one at a time by sliding or corner motions. Each agent prefers to
be near a target shape; the shared objective is an exact potential, so
annealed local decisions drive the swarm to assemble the target. The
package provides the motion/utility model, a Metropolis learning rule in
bit-identical global and decentralized variants (with a compiled fast
path), deterministic completeness planners, exact finite-chain analysis
for desk-scale verification, scenario files, and a command line.
"""

from __future__ import annotations

from .game import (
    RestrictedActionSet,
    TargetConfiguration,
    dist_to_target,
    potential,
    restricted_action_set,
    unilateral_delta,
    utility,
)
from .lattice import (
    CellPos,
    Configuration,
    DomainError,
    EnvBounds,
    Motion,
    MotionKind,
    candidate_motions,
    is_configuration_grounded,
    is_grounded,
    motion_deltas,
    validate_configuration,
)
from .learning import (
    LearningParams,
    Mode,
    Proposal,
    StepRecord,
    Trace,
    acceptance_probability,
    local_acceptance_probability,
    propose,
    run,
    step,
    step_local,
)
from .oracle import (
    ReducibleChainError,
    StateCapError,
    StateSpace,
    detailed_balance_residual,
    enumerate_states,
    exact_transition_matrix,
    gibbs_distribution,
    stationary_distribution,
)
from .planner import (
    MotionPlan,
    PlanStep,
    PlannerError,
    astar_path,
    find_mobile_agent,
    flatten_3d,
    plan_2d,
    plan_3d,
    validate_plan,
)
from .rng import SplitMix64
from .scenario import (
    GENERATOR_KINDS,
    Scenario,
    ScenarioError,
    generate_scenario,
    load,
    save,
)
from .harness import (
    MetricsSummary,
    run_experiment,
    run_oracle_check,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "CellPos",
    "Configuration",
    "DomainError",
    "EnvBounds",
    "GENERATOR_KINDS",
    "LearningParams",
    "MetricsSummary",
    "Mode",
    "Motion",
    "MotionKind",
    "MotionPlan",
    "PlanStep",
    "PlannerError",
    "Proposal",
    "ReducibleChainError",
    "RestrictedActionSet",
    "Scenario",
    "ScenarioError",
    "SplitMix64",
    "StateCapError",
    "StateSpace",
    "StepRecord",
    "TargetConfiguration",
    "Trace",
    "acceptance_probability",
    "astar_path",
    "candidate_motions",
    "detailed_balance_residual",
    "dist_to_target",
    "enumerate_states",
    "exact_transition_matrix",
    "find_mobile_agent",
    "flatten_3d",
    "generate_scenario",
    "gibbs_distribution",
    "is_configuration_grounded",
    "is_grounded",
    "load",
    "local_acceptance_probability",
    "motion_deltas",
    "plan_2d",
    "plan_3d",
    "potential",
    "propose",
    "restricted_action_set",
    "run",
    "run_experiment",
    "run_oracle_check",
    "run_sweep",
    "save",
    "stationary_distribution",
    "step",
    "step_local",
    "unilateral_delta",
    "utility",
    "validate_configuration",
    "validate_plan",
]
