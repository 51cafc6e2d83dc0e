"""Coverage game over the lattice: per-agent utilities, the shared
potential, and position-dependent restricted action sets.

Each agent's utility is 1 / (d + 1) where d is its L1 distance to the
nearest target cell; the potential is the sum of utilities. Relocating one
agent changes the potential by exactly that agent's utility change, so the
potential is maximized (value N) precisely when every agent sits on a
distinct target cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, Tuple

from .lattice import (
    CellPos,
    Configuration,
    DomainError,
    EnvBounds,
    axis_directions,
    candidate_motions,
    grounded_agent_flags,
    validate_dim,
)


@dataclass(frozen=True)
class TargetConfiguration:
    """The set of cells to be covered; cells sorted lexicographically."""

    cells: Tuple[CellPos, ...]

    def __post_init__(self):
        if not self.cells:
            raise DomainError("target must contain at least one cell")
        dim = len(self.cells[0])
        validate_dim(dim)
        seen = set()
        for cell in self.cells:
            if len(cell) != dim:
                raise DomainError("all target cells must share one dimension")
            if cell in seen:
                raise DomainError(f"duplicate target cell {cell}")
            seen.add(cell)
            if dim == 3 and cell[2] < 1:
                raise DomainError(f"target cell {cell} lies in the ground layer")
        object.__setattr__(self, "cells", tuple(sorted(self.cells)))

    @classmethod
    def from_iterable(cls, cells: Iterable[CellPos]) -> "TargetConfiguration":
        return cls(tuple(tuple(c) for c in cells))

    @property
    def dim(self) -> int:
        return len(self.cells[0])

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_set(self) -> FrozenSet[CellPos]:
        return frozenset(self.cells)


def dist_to_target(pos: CellPos, target: TargetConfiguration) -> int:
    """Minimum L1 distance from a cell to the target set."""
    if len(pos) != target.dim:
        raise DomainError("position and target dimensions differ")
    return min(sum(abs(p - t) for p, t in zip(pos, cell)) for cell in target.cells)


def utility(agent: int, config: Configuration, target: TargetConfiguration) -> float:
    return 1.0 / (dist_to_target(config.position_of(agent), target) + 1)


def utility_exact(agent: int, config: Configuration, target: TargetConfiguration) -> Fraction:
    return Fraction(1, dist_to_target(config.position_of(agent), target) + 1)


def potential(config: Configuration, target: TargetConfiguration) -> float:
    """Sum of utilities, accumulated in agent-id order.

    The summation order fixes the floating-point result; the kernels use
    the same order so recorded potentials agree bit-for-bit.
    """
    total = 0.0
    for pos in config.positions:
        total += 1.0 / (min(sum(abs(p - t) for p, t in zip(pos, cell)) for cell in target.cells) + 1)
    return total


def potential_exact(config: Configuration, target: TargetConfiguration) -> Fraction:
    total = Fraction(0)
    for agent in range(config.n_agents):
        total += utility_exact(agent, config, target)
    return total


@dataclass(frozen=True)
class RestrictedActionSet:
    """Actions available to one agent at the current state.

    ``actions`` holds destination cells in ascending lexicographic order.
    In 3D a blocked agent gets the singleton (origin,): staying is its only
    action. A mobile agent's set never contains the origin.
    """

    agent: int
    origin: CellPos
    actions: Tuple[CellPos, ...]

    @property
    def motions(self) -> Tuple[CellPos, ...]:
        """Destinations that actually relocate the agent."""
        return tuple(a for a in self.actions if a != self.origin)


def restricted_action_set(
    agent: int, config: Configuration, bounds: EnvBounds
) -> RestrictedActionSet:
    """The agent's restricted action set.

    2D: every candidate motion is allowed (possibly none).
    3D: if some neighbor of the agent would lose ground contact without it,
    the agent must stay. Otherwise the allowed motions are the candidate
    motions whose destination keeps the mover itself grounded (landing at
    z = 1 or next to another agent with independent ground contact).
    """
    pos = config.position_of(agent)
    if config.dim == 2:
        return RestrictedActionSet(agent, pos, candidate_motions(agent, config, bounds))

    flags = grounded_agent_flags(config, bounds, excluded=agent)
    cell_to_agent = {p: i for i, p in enumerate(config.positions)}
    dirs = axis_directions(3)

    for d in dirs:
        nb = (pos[0] + d[0], pos[1] + d[1], pos[2] + d[2])
        j = cell_to_agent.get(nb)
        if j is not None and not flags[j]:
            return RestrictedActionSet(agent, pos, (pos,))

    kept = []
    for dest in candidate_motions(agent, config, bounds):
        if dest[2] == 1:
            kept.append(dest)
            continue
        for d in dirs:
            nb = (dest[0] + d[0], dest[1] + d[1], dest[2] + d[2])
            j = cell_to_agent.get(nb)
            if j is not None and j != agent and flags[j]:
                kept.append(dest)
                break
    if not kept:
        return RestrictedActionSet(agent, pos, (pos,))
    return RestrictedActionSet(agent, pos, tuple(kept))


def unilateral_delta(
    agent: int,
    src: CellPos,
    dst: CellPos,
    config: Configuration,
    target: TargetConfiguration,
) -> float:
    """Potential change caused by relocating one agent from src to dst.

    Equal to the agent's own utility change; computed from the agent's two
    distances only, with the same float operations the kernels use.
    """
    if config.position_of(agent) != tuple(src):
        raise DomainError(f"agent {agent} is not at {tuple(src)}")
    src = tuple(src)
    dst = tuple(dst)
    if dst != src and dst in config.occupied():
        raise DomainError(f"destination {dst} is occupied")
    if len(dst) != config.dim:
        raise DomainError("destination dimension mismatch")
    if dst == src:
        return 0.0
    d_src = dist_to_target(src, target)
    d_dst = dist_to_target(dst, target)
    return 1.0 / (d_dst + 1) - 1.0 / (d_src + 1)
