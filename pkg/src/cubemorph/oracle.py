"""Exact finite-chain analysis for desk-scale instances.

Enumerates the full labeled state space (every ordered placement of the
agents, grounded ones only in 3D), assembles the exact one-step
transition matrix of the learning chain, and computes its stationary
distribution. Because the move acceptance here reuses the same float
pipeline as the simulator, the matrix is the ground truth for what the
simulator samples, so stationary/occupancy claims can be checked to
numerical precision rather than by Monte Carlo alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .game import TargetConfiguration, potential, restricted_action_set
from .lattice import (
    CellPos,
    Configuration,
    DomainError,
    EnvBounds,
    is_configuration_grounded,
)
from .learning import acceptance_probability

DEFAULT_STATE_CAP = 20_000

StateKey = Tuple[CellPos, ...]


class StateCapError(RuntimeError):
    """The labeled state space would exceed the enumeration cap."""

    def __init__(self, estimate: int, cap: int):
        super().__init__(
            f"state space too large to enumerate: about {estimate} labeled "
            f"placements exceeds the cap of {cap}"
        )
        self.estimate = estimate
        self.cap = cap


class ReducibleChainError(RuntimeError):
    """The chain is not irreducible; carries example unreachable pairs."""

    def __init__(self, pairs: Sequence[Tuple[StateKey, StateKey]]):
        shown = "; ".join(f"{a} -/-> {b}" for a, b in pairs[:3])
        super().__init__(f"chain is reducible, e.g. {shown}")
        self.pairs = list(pairs)


@dataclass(frozen=True)
class StateSpace:
    """All labeled states of n agents in the given environment."""

    bounds: EnvBounds
    n_agents: int
    states: Tuple[StateKey, ...]

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self) -> Dict[StateKey, int]:
        return {s: i for i, s in enumerate(self.states)}


def enumerate_states(
    n_agents: int, bounds: EnvBounds, cap: int = DEFAULT_STATE_CAP
) -> StateSpace:
    """Every ordered placement of the agents on distinct agent cells,
    keeping only grounded ones in 3D. States are emitted in lexicographic
    order of the position tuple. Raises StateCapError when the number of
    placements (before the groundedness filter) would exceed ``cap``."""
    if n_agents < 1:
        raise DomainError("need at least one agent")
    cells = bounds.agent_cells()
    m = len(cells)
    if n_agents > m:
        raise DomainError(f"{n_agents} agents cannot fit in {m} cells")
    estimate = 1
    for k in range(n_agents):
        estimate *= m - k
        if estimate > cap:
            raise StateCapError(estimate, cap)
    keep_all = bounds.dim == 2
    states: List[StateKey] = []
    for placement in permutations(cells, n_agents):
        if keep_all or is_configuration_grounded(Configuration(placement), bounds):
            states.append(placement)
    return StateSpace(bounds, n_agents, tuple(states))


def exact_transition_matrix(
    space: StateSpace, target: TargetConfiguration, tau: float
) -> np.ndarray:
    """One-step transition matrix of the learning chain over the space.

    Matches the simulator event for event: pick an agent uniformly; if
    its motion set is empty the step is a self-loop, otherwise pick one
    of its ``n`` motions uniformly and accept with the shared move-
    acceptance probability. The acceptance value is computed by the same
    code path the simulator uses, so matrix entries equal the simulator's
    probabilities bit for bit.
    """
    idx = space.index()
    n_states = space.n_states
    n_agents = space.n_agents
    bounds = space.bounds
    P = np.zeros((n_states, n_states))
    for i, state in enumerate(space.states):
        config = Configuration(state)
        phi_here = potential(config, target)
        for agent in range(n_agents):
            ras = restricted_action_set(agent, config, bounds)
            motions = ras.motions
            if not motions:
                P[i, i] += 1.0 / n_agents
                continue
            q_fwd = 1.0 / len(motions)
            src = state[agent]
            for dest in motions:
                moved = config.move(agent, dest)
                j = idx.get(moved.positions)
                if j is None:
                    raise DomainError(
                        f"successor {moved.positions} missing from the state space"
                    )
                reverse = restricted_action_set(agent, moved, bounds).motions
                if src not in reverse:
                    raise RuntimeError(
                        f"reversibility violated: {src}->{dest} for agent {agent}"
                    )
                q_rev = 1.0 / len(reverse)
                delta = potential(moved, target) - phi_here
                alpha = acceptance_probability(delta, q_fwd, q_rev, tau)
                p = (1.0 / n_agents) * q_fwd * alpha
                P[i, j] += p
                P[i, i] += (1.0 / n_agents) * q_fwd * (1.0 - alpha)
    return P


def _check_strongly_connected(P: np.ndarray, space: StateSpace) -> None:
    n = P.shape[0]
    mask = P > 0.0
    np.fill_diagonal(mask, False)

    def reach(transpose: bool) -> np.ndarray:
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        adj = mask.T if transpose else mask
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(adj[v]):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return seen

    fwd = reach(False)
    bwd = reach(True)
    pairs: List[Tuple[StateKey, StateKey]] = []
    for v in np.flatnonzero(~fwd):
        pairs.append((space.states[0], space.states[int(v)]))
    for v in np.flatnonzero(~bwd):
        pairs.append((space.states[int(v)], space.states[0]))
    if pairs:
        raise ReducibleChainError(pairs)


def stationary_distribution(
    P: np.ndarray,
    space: StateSpace,
    residual_tol: float = 1e-12,
    max_iters: int = 500_000,
) -> np.ndarray:
    """Stationary distribution of the chain, to high precision.

    Requires irreducibility (raises ReducibleChainError otherwise, naming
    unreachable state pairs). Power iteration runs on the lazy chain
    (P + I)/2, which shares the stationary vector but cannot oscillate;
    convergence is declared on the residual against P itself.
    """
    n = P.shape[0]
    if P.shape != (n, n) or n != space.n_states:
        raise DomainError("matrix does not match the state space")
    rows = P.sum(axis=1)
    if not np.allclose(rows, 1.0, atol=1e-9):
        raise DomainError("rows must sum to 1")
    _check_strongly_connected(P, space)
    Q = 0.5 * (P + np.eye(n))
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        nxt = pi @ Q
        nxt /= nxt.sum()
        if np.max(np.abs(nxt @ P - nxt)) <= residual_tol:
            return nxt
        pi = nxt
    raise RuntimeError(
        f"power iteration did not reach residual {residual_tol} in {max_iters} iterations"
    )


def gibbs_distribution(
    space: StateSpace, target: TargetConfiguration, tau: float
) -> np.ndarray:
    """Boltzmann weights of the potential: pi(s) proportional to
    exp(potential(s)/tau), computed with a max shift for stability."""
    if tau <= 0.0:
        raise DomainError("tau must be positive")
    phis = np.array(
        [potential(Configuration(s), target) for s in space.states]
    )
    w = np.exp((phis - phis.max()) / tau)
    return w / w.sum()


def detailed_balance_residual(P: np.ndarray, pi: np.ndarray) -> float:
    """max |pi_i P_ij - pi_j P_ji| over all state pairs."""
    F = pi[:, None] * P
    return float(np.max(np.abs(F - F.T)))
