"""Metropolis learning engine.

Each step activates one agent, proposes a uniformly drawn motion from its
restricted action set, and accepts with probability

    alpha = min(1, (q_rev / q_fwd) * exp(delta_phi / tau)),

where q_fwd and q_rev are the uniform proposal probabilities at the
current and prospective states and delta_phi is the potential change. The
chain is reversible with stationary distribution proportional to
exp(potential / tau); as tau decreases the mass concentrates on potential
maximizers, i.e. on target coverage.

Two activation disciplines are exposed. ``global`` mode draws the acting
agent uniformly per step. ``local`` mode models independent unit-rate
agent clocks whose ticks are serialized; the next ticking agent is again
uniform, so the event chains of the two modes coincide and only the
accounting differs (``step_local`` evaluates alpha from the acting agent's
own quantities, which equals the global expression because a unilateral
move changes the potential by exactly that agent's utility change).

``step``/``step_local`` are single-transition reference operations;
``run`` drives the batched kernel, which reproduces them bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np

from . import _kernels
from .game import (
    TargetConfiguration,
    potential,
    restricted_action_set,
    unilateral_delta,
)
from .game import dist_to_target
from .lattice import CellPos, Configuration, DomainError, EnvBounds, motion_deltas
from .rng import SplitMix64

EXP_CLAMP = 700.0

_CHUNK_STEPS = 1 << 20


class Mode(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class LearningParams:
    tau: float
    seed: int
    max_steps: int
    mode: Mode = Mode.GLOBAL

    def __post_init__(self):
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise DomainError("tau must be a positive finite float")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= (1 << 64):
            raise DomainError("seed must be an integer in [0, 2**64)")
        if not isinstance(self.max_steps, int) or self.max_steps < 0:
            raise DomainError("max_steps must be a non-negative integer")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class Proposal:
    """One proposed relocation, with its proposal and acceptance odds."""

    agent: int
    from_pos: CellPos
    to_pos: CellPos
    q_fwd: float
    q_rev: float
    accept_prob: float


@dataclass(frozen=True)
class StepRecord:
    step: int
    agent: int
    proposal: Optional[Proposal]
    accepted: bool
    potential_after: float


def acceptance_probability(delta_phi: float, q_fwd: float, q_rev: float, tau: float) -> float:
    """min(1, (q_rev / q_fwd) * exp(delta_phi / tau)).

    The exponent is clamped to +-700 to stay inside double range; every
    code path (reference ops, both kernels, the exact-chain oracle) funnels
    through this exact sequence of float operations.
    """
    if not tau > 0.0:
        raise DomainError("tau must be positive")
    if not (q_fwd > 0.0 and q_rev > 0.0):
        raise DomainError("proposal probabilities must be positive")
    ratio = q_rev / q_fwd
    arg = delta_phi / tau
    if arg > EXP_CLAMP:
        arg = EXP_CLAMP
    elif arg < -EXP_CLAMP:
        arg = -EXP_CLAMP
    alpha = ratio * math.exp(arg)
    return 1.0 if alpha > 1.0 else alpha


def proposal_for(
    config: Configuration,
    target: TargetConfiguration,
    bounds: EnvBounds,
    tau: float,
    agent: int,
    dest: CellPos,
) -> Proposal:
    """Deterministically evaluate the proposal (agent -> dest).

    This is the global accounting: delta_phi is the potential change of
    the whole configuration, obtained through the unilateral identity.
    Raises DomainError if dest is not in the agent's allowed motions.
    """
    ras = restricted_action_set(agent, config, bounds)
    moves = ras.motions
    dest = tuple(dest)
    if dest not in moves:
        raise DomainError(f"destination {dest} not in agent {agent}'s motion set")
    q_fwd = 1.0 / len(moves)
    moved = config.move(agent, dest)
    rev_moves = restricted_action_set(agent, moved, bounds).motions
    if not rev_moves:
        raise RuntimeError("reversibility violated: reverse move set is empty")
    q_rev = 1.0 / len(rev_moves)
    delta = unilateral_delta(agent, ras.origin, dest, config, target)
    alpha = acceptance_probability(delta, q_fwd, q_rev, tau)
    return Proposal(agent, ras.origin, dest, q_fwd, q_rev, alpha)


def local_acceptance_probability(
    agent: int,
    src: CellPos,
    dst: CellPos,
    config: Configuration,
    target: TargetConfiguration,
    bounds: EnvBounds,
    tau: float,
) -> float:
    """Acceptance probability from the acting agent's own quantities.

    Uses only the agent's two distances and the sizes of its forward and
    reverse motion sets; no other agent's utility is read. Equals the
    global accounting bit-for-bit because both reduce to the same float
    expression.
    """
    src = tuple(src)
    dst = tuple(dst)
    if config.position_of(agent) != src:
        raise DomainError(f"agent {agent} is not at {src}")
    moves = restricted_action_set(agent, config, bounds).motions
    if dst not in moves:
        raise DomainError(f"destination {dst} not in agent {agent}'s motion set")
    moved = config.move(agent, dst)
    rev_moves = restricted_action_set(agent, moved, bounds).motions
    d_src = dist_to_target(src, target)
    d_dst = dist_to_target(dst, target)
    delta = 1.0 / (d_dst + 1) - 1.0 / (d_src + 1)
    return acceptance_probability(delta, 1.0 / len(moves), 1.0 / len(rev_moves), tau)


def propose(
    config: Configuration,
    target: TargetConfiguration,
    bounds: EnvBounds,
    tau: float,
    rng: SplitMix64,
    agent: Optional[int] = None,
) -> Optional[Proposal]:
    """Draw one proposal; None signals a self-loop (blocked agent).

    When ``agent`` is None the acting agent is drawn uniformly first.
    RNG consumption: one draw for the agent (if drawn), then one draw for
    the destination index unless the agent has no motions.
    """
    if agent is None:
        agent = rng.randbelow(config.n_agents)
    ras = restricted_action_set(agent, config, bounds)
    moves = ras.motions
    if not moves:
        return None
    idx = rng.randbelow(len(moves))
    dest = moves[idx]
    q_fwd = 1.0 / len(moves)
    moved = config.move(agent, dest)
    rev_moves = restricted_action_set(agent, moved, bounds).motions
    if not rev_moves:
        raise RuntimeError("reversibility violated: reverse move set is empty")
    q_rev = 1.0 / len(rev_moves)
    delta = unilateral_delta(agent, ras.origin, dest, config, target)
    alpha = acceptance_probability(delta, q_fwd, q_rev, tau)
    return Proposal(agent, ras.origin, dest, q_fwd, q_rev, alpha)


def _finish(
    state: Configuration,
    scenario,
    rng: SplitMix64,
    prop: Optional[Proposal],
    agent: int,
    step_index: int,
) -> Tuple[Configuration, StepRecord]:
    if prop is None:
        record = StepRecord(step_index, agent, None, False, potential(state, scenario.target))
        return state, record
    u = rng.random()
    accepted = u < prop.accept_prob
    new_state = state.move(prop.agent, prop.to_pos) if accepted else state
    record = StepRecord(step_index, prop.agent, prop, accepted, potential(new_state, scenario.target))
    return new_state, record


def step(
    state: Configuration, scenario, rng: SplitMix64, step_index: int = 0
) -> Tuple[Configuration, StepRecord]:
    """One transition with a uniformly drawn acting agent (global mode)."""
    agent = rng.randbelow(state.n_agents)
    prop = propose(state, scenario.target, scenario.bounds, scenario.params.tau, rng, agent=agent)
    return _finish(state, scenario, rng, prop, agent, step_index)


def step_local(
    agent: int, state: Configuration, scenario, rng: SplitMix64, step_index: int = 0
) -> Tuple[Configuration, StepRecord]:
    """One transition for an externally activated agent (local clocks).

    The acceptance probability is evaluated by the agent itself via
    ``local_acceptance_probability``; the proposal record is otherwise
    identical to the global path.
    """
    ras = restricted_action_set(agent, state, scenario.bounds)
    moves = ras.motions
    if not moves:
        return _finish(state, scenario, rng, None, agent, step_index)
    idx = rng.randbelow(len(moves))
    dest = moves[idx]
    alpha = local_acceptance_probability(
        agent, ras.origin, dest, state, scenario.target, scenario.bounds, scenario.params.tau
    )
    moved = state.move(agent, dest)
    rev_moves = restricted_action_set(agent, moved, scenario.bounds).motions
    prop = Proposal(agent, ras.origin, dest, 1.0 / len(moves), 1.0 / len(rev_moves), alpha)
    return _finish(state, scenario, rng, prop, agent, step_index)


@dataclass
class Trace:
    """Outcome of a run, stored as compact per-step arrays.

    ``dests`` holds flattened cell indices into the padded bounds box
    (-1 for self-loop steps). ``records`` materializes StepRecord objects
    by replaying the arrays; use the arrays directly for long runs.
    """

    scenario_name: str
    params: LearningParams
    bounds: EnvBounds
    dim: int
    initial_positions: Tuple[CellPos, ...]
    final_positions: Tuple[CellPos, ...]
    initial_potential: float
    final_potential: float
    n_steps: int
    converged_at: Optional[int]
    agents: np.ndarray
    dests: np.ndarray
    n_fwd: np.ndarray
    n_rev: np.ndarray
    accepted: np.ndarray
    alphas: np.ndarray
    potentials: np.ndarray

    def unpack_cell(self, flat_index: int) -> CellPos:
        lo = self.bounds.lower if self.dim == 3 else (*self.bounds.lower, 0)
        hi = self.bounds.upper if self.dim == 3 else (*self.bounds.upper, 0)
        ny = hi[1] - lo[1] + 1
        nz = hi[2] - lo[2] + 1
        x, rem = divmod(int(flat_index), ny * nz)
        y, z = divmod(rem, nz)
        cell = (x + lo[0], y + lo[1], z + lo[2])
        return cell if self.dim == 3 else cell[:2]

    def iter_positions(self) -> Iterator[Tuple[CellPos, ...]]:
        """Yield the configuration after each step (n_steps items)."""
        positions = list(self.initial_positions)
        for t in range(self.n_steps):
            if self.accepted[t]:
                positions[int(self.agents[t])] = self.unpack_cell(int(self.dests[t]))
            yield tuple(positions)

    def records(self) -> List[StepRecord]:
        out = []
        positions = list(self.initial_positions)
        for t in range(self.n_steps):
            agent = int(self.agents[t])
            dest_flat = int(self.dests[t])
            if dest_flat < 0:
                prop = None
                accepted = False
            else:
                dest = self.unpack_cell(dest_flat)
                prop = Proposal(
                    agent,
                    positions[agent],
                    dest,
                    1.0 / int(self.n_fwd[t]),
                    1.0 / int(self.n_rev[t]),
                    float(self.alphas[t]),
                )
                accepted = bool(self.accepted[t])
                if accepted:
                    positions[agent] = dest
            out.append(StepRecord(t + 1, agent, prop, accepted, float(self.potentials[t])))
        return out

    def potential_curve(self) -> List[Tuple[int, float]]:
        """(step, potential) samples: step 0, every step up to 10**4, then
        every 100th, and always the final step."""
        samples = [(0, self.initial_potential)]
        for t in range(1, self.n_steps + 1):
            if t <= 10_000 or t % 100 == 0 or t == self.n_steps:
                samples.append((t, float(self.potentials[t - 1])))
        return samples


def _padded_geometry(bounds: EnvBounds):
    if bounds.dim == 3:
        lo = np.asarray(bounds.lower, dtype=np.int64)
        hi = np.asarray(bounds.upper, dtype=np.int64)
    else:
        lo = np.asarray((*bounds.lower, 0), dtype=np.int64)
        hi = np.asarray((*bounds.upper, 0), dtype=np.int64)
    return lo, hi


def build_distance_field(bounds: EnvBounds, target: TargetConfiguration) -> np.ndarray:
    """Flat int32 field of L1 distances to the nearest target cell, laid
    out over the padded bounds box in x-major order."""
    lo, hi = _padded_geometry(bounds)
    xs = np.arange(lo[0], hi[0] + 1, dtype=np.int64)
    ys = np.arange(lo[1], hi[1] + 1, dtype=np.int64)
    zs = np.arange(lo[2], hi[2] + 1, dtype=np.int64)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    best = None
    for cell in target.cells:
        padded = cell if len(cell) == 3 else (*cell, 0)
        d = np.abs(gx - padded[0]) + np.abs(gy - padded[1]) + np.abs(gz - padded[2])
        best = d if best is None else np.minimum(best, d)
    return np.ascontiguousarray(best.reshape(-1), dtype=np.int32)


def _pack_positions(config: Configuration) -> np.ndarray:
    arr = np.zeros((config.n_agents, 3), dtype=np.int64)
    for i, pos in enumerate(config.positions):
        arr[i, 0] = pos[0]
        arr[i, 1] = pos[1]
        if len(pos) == 3:
            arr[i, 2] = pos[2]
    return arr


def _unpack_positions(arr: np.ndarray, dim: int) -> Tuple[CellPos, ...]:
    if dim == 3:
        return tuple((int(r[0]), int(r[1]), int(r[2])) for r in arr)
    return tuple((int(r[0]), int(r[1])) for r in arr)


def run(scenario, params: Optional[LearningParams] = None, stop_at_convergence: bool = True) -> Trace:
    """Run the learning chain on a scenario and return its trace.

    Stops at full target coverage (potential N) or after max_steps. Pass
    stop_at_convergence=False to keep sampling after coverage is first
    reached (used for stationary-distribution statistics); converged_at
    still records the first hit.
    """
    p = params if params is not None else scenario.params
    backend = _kernels.get_backend()
    config = scenario.initial
    dim = config.dim
    n = config.n_agents

    lo, hi = _padded_geometry(scenario.bounds)
    dist = build_distance_field(scenario.bounds, scenario.target)
    deltas = np.asarray(
        [d if dim == 3 else (*d, 0) for d in motion_deltas(dim)], dtype=np.int64
    )
    positions = _pack_positions(config)

    initial_potential = 0.0
    ny = int(hi[1] - lo[1] + 1)
    nz = int(hi[2] - lo[2] + 1)
    for i in range(n):
        idx = (int(positions[i, 0]) - int(lo[0])) * ny * nz + (
            int(positions[i, 1]) - int(lo[1])
        ) * nz + (int(positions[i, 2]) - int(lo[2]))
        initial_potential += 1.0 / (int(dist[idx]) + 1)

    chunks = []
    rng_state = p.seed
    remaining = p.max_steps
    total = 0
    converged_at: Optional[int] = None
    final_potential = initial_potential

    while True:
        chunk = min(_CHUNK_STEPS, remaining)
        agents_out = np.zeros(chunk, dtype=np.int32)
        dest_out = np.zeros(chunk, dtype=np.int64)
        nfwd_out = np.zeros(chunk, dtype=np.int32)
        nrev_out = np.zeros(chunk, dtype=np.int32)
        acc_out = np.zeros(chunk, dtype=np.uint8)
        alpha_out = np.zeros(chunk, dtype=np.float64)
        pot_out = np.zeros(chunk, dtype=np.float64)
        done, conv, rng_state, final_potential = backend.run_chain(
            positions,
            lo,
            hi,
            dim,
            deltas,
            dist,
            p.tau,
            rng_state,
            chunk,
            stop_at_convergence,
            agents_out,
            dest_out,
            nfwd_out,
            nrev_out,
            acc_out,
            alpha_out,
            pot_out,
        )
        if done:
            chunks.append(
                (
                    agents_out[:done],
                    dest_out[:done],
                    nfwd_out[:done],
                    nrev_out[:done],
                    acc_out[:done],
                    alpha_out[:done],
                    pot_out[:done],
                )
            )
        if conv >= 0 and converged_at is None:
            converged_at = total + conv
        total += done
        remaining -= done
        if remaining <= 0 or (stop_at_convergence and converged_at is not None):
            break

    if chunks:
        agents = np.concatenate([c[0] for c in chunks])
        dests = np.concatenate([c[1] for c in chunks])
        n_fwd = np.concatenate([c[2] for c in chunks])
        n_rev = np.concatenate([c[3] for c in chunks])
        accepted = np.concatenate([c[4] for c in chunks])
        alphas = np.concatenate([c[5] for c in chunks])
        potentials = np.concatenate([c[6] for c in chunks])
    else:
        agents = np.zeros(0, dtype=np.int32)
        dests = np.zeros(0, dtype=np.int64)
        n_fwd = np.zeros(0, dtype=np.int32)
        n_rev = np.zeros(0, dtype=np.int32)
        accepted = np.zeros(0, dtype=np.uint8)
        alphas = np.zeros(0, dtype=np.float64)
        potentials = np.zeros(0, dtype=np.float64)

    return Trace(
        scenario_name=scenario.name,
        params=p,
        bounds=scenario.bounds,
        dim=dim,
        initial_positions=config.positions,
        final_positions=_unpack_positions(positions, dim),
        initial_potential=initial_potential,
        final_potential=final_potential,
        n_steps=total,
        converged_at=converged_at,
        agents=agents,
        dests=dests,
        n_fwd=n_fwd,
        n_rev=n_rev,
        accepted=accepted,
        alphas=alphas,
        potentials=potentials,
    )
