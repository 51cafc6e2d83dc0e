"""Deterministic reconfiguration planning.

These constructive procedures certify that any valid target is reachable
through individual agent motions, which is what makes the learning chain
irreducible over the valid state space:

* ``plan_2d`` fills target cells deepest-first (depth = motion-graph
  distance to the nearest non-target cell), routing the nearest free
  agent to each; filling deep cells first guarantees the shallower
  approach corridor is still open.
* ``flatten_3d`` repeatedly picks a mobile agent above the first layer
  (one whose removal does not disconnect the structure from the ground)
  and routes it down to layer z = 1.
* ``plan_3d`` flattens the initial configuration, solves the remaining
  rearrangement inside layer z = 1 as a 2D problem, then replays the
  target's flattening plan in reverse to rebuild the target shape.

Every emitted step is a legal motion of the acting agent's restricted
action set at that intermediate state, so a plan is also a positive-
probability path of the learning chain.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .game import TargetConfiguration, restricted_action_set
from .lattice import (
    CellPos,
    Configuration,
    DomainError,
    EnvBounds,
    axis_directions,
    articulation_points_from_adjacency,
    classify_motion_kind,
    grounded_agent_flags,
    is_configuration_grounded,
    motion_deltas,
    validate_configuration,
)


class PlannerError(RuntimeError):
    """A planning phase could not make progress; carries the context."""

    def __init__(self, phase: str, message: str, context: Optional[dict] = None):
        super().__init__(f"{phase}: {message}")
        self.phase = phase
        self.context = context or {}


@dataclass(frozen=True)
class PlanStep:
    agent: int
    src: CellPos
    dst: CellPos


@dataclass
class MotionPlan:
    """An ordered list of single-agent motions."""

    steps: List[PlanStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def to_json_obj(self) -> list:
        return [
            {"agent": s.agent, "from": list(s.src), "to": list(s.dst)}
            for s in self.steps
        ]

    @classmethod
    def from_json_obj(cls, obj: Sequence[dict]) -> "MotionPlan":
        steps = [
            PlanStep(int(e["agent"]), tuple(e["from"]), tuple(e["to"])) for e in obj
        ]
        return cls(steps)


def _heuristic(a: CellPos, b: CellPos) -> int:
    # Each motion changes every coordinate by at most 1 and at most two
    # coordinates at once, so both bounds below are admissible.
    cheb = max(abs(x - y) for x, y in zip(a, b))
    l1 = sum(abs(x - y) for x, y in zip(a, b))
    return max(cheb, (l1 + 1) // 2)


def astar_path(
    start: CellPos,
    goal: CellPos,
    blocked: FrozenSet[CellPos] | Set[CellPos],
    bounds: EnvBounds,
) -> Optional[List[CellPos]]:
    """Shortest motion path start -> goal avoiding blocked cells.

    Returns the cell sequence including both endpoints, or None when the
    goal is unreachable (a blocked goal is unreachable, not an error).
    Deterministic: ties are broken by cell order.
    """
    start = tuple(start)
    goal = tuple(goal)
    if not bounds.contains_agent(start) or not bounds.contains_agent(goal):
        raise DomainError("start and goal must be agent cells inside bounds")
    if start in blocked:
        raise DomainError("start cell is blocked")
    if goal in blocked:
        return None
    if start == goal:
        return [start]
    deltas = motion_deltas(bounds.dim)
    best: Dict[CellPos, int] = {start: 0}
    parent: Dict[CellPos, CellPos] = {}
    heap: List[Tuple[int, CellPos]] = [(_heuristic(start, goal), start)]
    while heap:
        f, cell = heapq.heappop(heap)
        g = best[cell]
        if f > g + _heuristic(cell, goal):
            continue
        if cell == goal:
            path = [cell]
            while path[-1] != start:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        for d in deltas:
            nb = tuple(c + dc for c, dc in zip(cell, d))
            if nb in blocked or not bounds.contains_agent(nb):
                continue
            ng = g + 1
            if ng < best.get(nb, ng + 1):
                best[nb] = ng
                parent[nb] = cell
                heapq.heappush(heap, (ng + _heuristic(nb, goal), nb))
    return None


def _emit_path(plan: MotionPlan, agent: int, path: Sequence[CellPos]) -> None:
    for src, dst in zip(path, path[1:]):
        plan.steps.append(PlanStep(agent, src, dst))


def _target_depths(target_set: Set[CellPos], bounds: EnvBounds) -> Dict[CellPos, int]:
    """Motion-graph distance from each target cell to the nearest
    non-target cell of the environment."""
    from collections import deque

    deltas = motion_deltas(bounds.dim)
    depth: Dict[CellPos, int] = {}
    queue = deque()
    for cell in bounds.agent_cells():
        if cell not in target_set:
            depth[cell] = 0
            queue.append(cell)
    while queue:
        cell = queue.popleft()
        d = depth[cell]
        for dl in deltas:
            nb = tuple(c + dc for c, dc in zip(cell, dl))
            if nb in depth or not bounds.contains_agent(nb):
                continue
            depth[nb] = d + 1
            queue.append(nb)
    return depth


def plan_2d(initial: Configuration, target: TargetConfiguration, bounds: EnvBounds) -> MotionPlan:
    """Cover every target cell, filling deepest cells first.

    Target cells are filled in decreasing depth (distance to the nearest
    non-target cell), so every unfilled cell always keeps a corridor of
    strictly shallower, still-unfilled cells out to free space. For each
    cell the nearest not-yet-placed agent (by path distance avoiding
    placed agents) walks in along a fully free route. Agents placed on a
    target cell never move again.
    """
    if initial.dim != 2 or target.dim != 2 or bounds.dim != 2:
        raise DomainError("plan_2d requires 2D inputs")
    validate_configuration(initial, bounds)
    if target.n_cells != initial.n_agents:
        raise DomainError("target size must equal the number of agents")
    for cell in target.cells:
        if not bounds.contains_agent(cell):
            raise DomainError(f"target cell {cell} outside bounds")

    target_set = target.cell_set()
    cell_to_agent = {p: i for i, p in enumerate(initial.positions)}
    placed_cells: Set[CellPos] = set()
    plan = MotionPlan()
    if initial.occupied() == target_set:
        return plan

    depth = _target_depths(target_set, bounds)
    missing = [c for c in target_set if c not in depth]
    if missing:
        raise PlannerError(
            "plan_2d", f"target cells unreachable from free space: {sorted(missing)}"
        )
    order = sorted(target_set, key=lambda c: (-depth[c], c))
    deltas = motion_deltas(2)

    for goal in order:
        occupant = cell_to_agent.get(goal)
        if occupant is not None:
            placed_cells.add(goal)
            continue
        # Deterministic uniform-cost search from the goal outward over
        # non-placed cells; the first agent popped is the nearest pending
        # agent and the parent chain back to the goal is entirely free.
        best: Dict[CellPos, int] = {goal: 0}
        parent: Dict[CellPos, CellPos] = {}
        heap: List[Tuple[int, CellPos]] = [(0, goal)]
        route: Optional[List[CellPos]] = None
        while heap:
            d, cell = heapq.heappop(heap)
            if d > best[cell]:
                continue
            agent = cell_to_agent.get(cell)
            if agent is not None:
                route = [cell]
                while route[-1] != goal:
                    route.append(parent[route[-1]])
                break
            for dl in deltas:
                nb = (cell[0] + dl[0], cell[1] + dl[1])
                if nb in placed_cells or not bounds.contains_agent(nb):
                    continue
                nd = d + 1
                if nd < best.get(nb, nd + 1):
                    best[nb] = nd
                    parent[nb] = cell
                    heapq.heappush(heap, (nd, nb))
        if route is None:
            raise PlannerError(
                "plan_2d",
                f"no agent can reach target cell {goal}",
                {"cell": goal, "positions": tuple(sorted(cell_to_agent))},
            )
        mover = cell_to_agent.pop(route[0])
        _emit_path(plan, mover, route)
        cell_to_agent[goal] = mover
        placed_cells.add(goal)
    return plan


_GROUND_NODE = -1


def _collapsed_ground_graph(config: Configuration) -> Dict[int, Set[int]]:
    """Graph over agents above layer 1 plus one node for the whole layer-1
    population; used to find agents whose removal keeps everyone anchored."""
    gp = _GROUND_NODE
    adj: Dict[int, Set[int]] = {gp: set()}
    cell_to_agent = {p: i for i, p in enumerate(config.positions)}
    uppers = [i for i, p in enumerate(config.positions) if p[2] >= 2]
    for i in uppers:
        adj.setdefault(i, set())
        pos = config.positions[i]
        for d in axis_directions(3):
            nb = (pos[0] + d[0], pos[1] + d[1], pos[2] + d[2])
            j = cell_to_agent.get(nb)
            if j is None:
                continue
            if config.positions[j][2] == 1:
                adj[i].add(gp)
                adj[gp].add(i)
            else:
                adj[i].add(j)
    return adj


def _mobility_candidates(config: Configuration, bounds: EnvBounds) -> List[int]:
    """Agents above layer 1 that may move without stranding anyone,
    ascending by id."""
    adj = _collapsed_ground_graph(config)
    cut = articulation_points_from_adjacency(adj)
    out = []
    for i in sorted(k for k in adj if k != _GROUND_NODE):
        if i in cut:
            continue
        if restricted_action_set(i, config, bounds).motions:
            out.append(i)
    return out


def find_mobile_agent(config: Configuration, bounds: EnvBounds) -> int:
    """Smallest-id agent above z = 1 that can move without stranding any
    other agent. Preconditions: 3D, grounded, some agent above z = 1."""
    if config.dim != 3:
        raise DomainError("find_mobile_agent requires a 3D configuration")
    validate_configuration(config, bounds)
    if not is_configuration_grounded(config, bounds):
        raise DomainError("configuration must be grounded")
    if all(p[2] == 1 for p in config.positions):
        raise DomainError("no agent above layer z = 1")
    cands = _mobility_candidates(config, bounds)
    if not cands:
        raise PlannerError(
            "find_mobile_agent",
            "no mobile agent despite preconditions",
            {"positions": config.positions},
        )
    return cands[0]


def _descend_path(agent: int, config: Configuration, bounds: EnvBounds) -> Optional[List[CellPos]]:
    """Shortest legal route taking a mobile agent to a free layer-1 cell.

    While this agent moves, every other agent keeps its ground contact
    (the agent was chosen that way), so a cell is a legal stop iff it is
    free, above the ground layer, and either at z = 1 or adjacent to some
    other agent with independent ground contact. That graph is static, so
    one A* search suffices; the heuristic z - 1 counts the mandatory
    descent. Returns None when no route exists.
    """
    start = config.position_of(agent)
    flags = grounded_agent_flags(config, bounds, excluded=agent)
    cell_to_agent = {p: i for i, p in enumerate(config.positions)}
    occupied = set(config.positions)
    dirs = axis_directions(3)
    deltas = motion_deltas(3)

    def legal(cell: CellPos) -> bool:
        if cell in occupied and cell != start:
            return False
        if not bounds.contains_agent(cell):
            return False
        if cell[2] == 1:
            return True
        for d in dirs:
            nb = (cell[0] + d[0], cell[1] + d[1], cell[2] + d[2])
            j = cell_to_agent.get(nb)
            if j is not None and j != agent and flags[j]:
                return True
        return False

    best: Dict[CellPos, int] = {start: 0}
    parent: Dict[CellPos, CellPos] = {}
    heap: List[Tuple[int, CellPos]] = [(start[2] - 1, start)]
    while heap:
        f, cell = heapq.heappop(heap)
        g = best[cell]
        if f > g + (cell[2] - 1):
            continue
        if cell[2] == 1:
            path = [cell]
            while path[-1] != start:
                path.append(parent[path[-1]])
            path.reverse()
            return path
        for d in deltas:
            nb = (cell[0] + d[0], cell[1] + d[1], cell[2] + d[2])
            if not legal(nb):
                continue
            ng = g + 1
            if ng < best.get(nb, ng + 1):
                best[nb] = ng
                parent[nb] = cell
                heapq.heappush(heap, (ng + nb[2] - 1, nb))
    return None


def flatten_3d(initial: Configuration, bounds: EnvBounds) -> Tuple[MotionPlan, Configuration]:
    """Move every agent down into layer z = 1.

    Each iteration selects the first mobile above-layer agent that admits
    a descent route and routes it; the above-layer population shrinks by
    one per iteration. Raises PlannerError if layer capacity is too small
    or no candidate can be routed.
    """
    if initial.dim != 3 or bounds.dim != 3:
        raise DomainError("flatten_3d requires 3D inputs")
    validate_configuration(initial, bounds)
    if not is_configuration_grounded(initial, bounds):
        raise DomainError("configuration must be grounded")
    layer_capacity = (bounds.upper[0] - bounds.lower[0] + 1) * (bounds.upper[1] - bounds.lower[1] + 1)
    if layer_capacity < initial.n_agents:
        raise PlannerError(
            "flatten_3d",
            f"layer z = 1 holds {layer_capacity} cells < {initial.n_agents} agents",
        )

    config = initial
    plan = MotionPlan()
    while any(p[2] >= 2 for p in config.positions):
        cands = _mobility_candidates(config, bounds)
        if not cands:
            raise PlannerError(
                "flatten_3d",
                "no mobile agent despite agents above layer 1",
                {"positions": config.positions},
            )
        path = None
        mover = None
        for agent in cands:
            path = _descend_path(agent, config, bounds)
            if path is not None:
                mover = agent
                break
        if path is None:
            raise PlannerError(
                "flatten_3d",
                "no descent route for any mobile agent",
                {"candidates": cands, "positions": config.positions},
            )
        _emit_path(plan, mover, path)
        config = config.move(mover, path[-1])
    return plan, config


def _project_layer(config: Configuration) -> Configuration:
    return Configuration(tuple((p[0], p[1]) for p in config.positions))


def plan_3d(initial: Configuration, target: TargetConfiguration, bounds: EnvBounds) -> MotionPlan:
    """Reconfigure a grounded 3D structure into the target cell set.

    Three phases: flatten the initial structure into layer z = 1,
    rearrange within the layer (a 2D problem, since every layer agent
    keeps its own ground contact), then run the target's flattening plan
    backwards to assemble the target shape. Reversed steps are re-labeled
    with whichever agent currently occupies the step's cell.
    """
    if initial.dim != 3 or target.dim != 3 or bounds.dim != 3:
        raise DomainError("plan_3d requires 3D inputs")
    validate_configuration(initial, bounds)
    if target.n_cells != initial.n_agents:
        raise DomainError("target size must equal the number of agents")
    for cell in target.cells:
        if not bounds.contains_agent(cell):
            raise DomainError(f"target cell {cell} outside bounds")
    target_cfg = Configuration(target.cells)
    if not is_configuration_grounded(initial, bounds):
        raise DomainError("initial configuration must be grounded")
    if not is_configuration_grounded(target_cfg, bounds):
        raise DomainError("target configuration must be grounded")

    if initial.occupied() == target.cell_set():
        return MotionPlan()

    plan_down, mid_initial = flatten_3d(initial, bounds)
    plan_target_down, mid_target = flatten_3d(target_cfg, bounds)

    # Rearrange inside layer z = 1 by planar planning, then lift back.
    bounds_2d = EnvBounds(bounds.lower[:2], bounds.upper[:2])
    layer_plan = plan_2d(
        _project_layer(mid_initial),
        TargetConfiguration.from_iterable((p[0], p[1]) for p in mid_target.positions),
        bounds_2d,
    )

    plan = MotionPlan(list(plan_down.steps))
    occupant = {p: i for i, p in enumerate(mid_initial.positions)}
    for s in layer_plan.steps:
        src = (s.src[0], s.src[1], 1)
        dst = (s.dst[0], s.dst[1], 1)
        agent = occupant.pop(src)
        occupant[dst] = agent
        plan.steps.append(PlanStep(agent, src, dst))
    for s in reversed(plan_target_down.steps):
        agent = occupant.pop(s.dst)
        occupant[s.src] = agent
        plan.steps.append(PlanStep(agent, s.dst, s.src))
    return plan


def validate_plan(
    initial: Configuration,
    target: Optional[TargetConfiguration],
    bounds: EnvBounds,
    plan: MotionPlan,
    strict: bool = False,
) -> Configuration:
    """Replay a plan, checking every step; returns the final configuration.

    Checks per step: the agent stands at src, dst is a free agent cell,
    the displacement is a valid motion, and (3D) the configuration stays
    grounded. With strict=True each step must additionally be a member of
    the acting agent's restricted action set, i.e. a positive-probability
    learning transition. Finally the occupied set must equal the target.
    """
    validate_configuration(initial, bounds)
    config = initial
    for n, s in enumerate(plan.steps):
        if config.position_of(s.agent) != s.src:
            raise PlannerError("validate", f"step {n}: agent {s.agent} is not at {s.src}")
        delta = tuple(b - a for a, b in zip(s.src, s.dst))
        classify_motion_kind(delta)
        if s.dst in config.occupied():
            raise PlannerError("validate", f"step {n}: destination {s.dst} occupied")
        if not bounds.contains_agent(s.dst):
            raise PlannerError("validate", f"step {n}: destination {s.dst} outside bounds")
        if strict:
            allowed = restricted_action_set(s.agent, config, bounds).motions
            if s.dst not in allowed:
                raise PlannerError(
                    "validate", f"step {n}: {s.src}->{s.dst} not in agent {s.agent}'s motion set"
                )
        config = config.move(s.agent, s.dst)
        if config.dim == 3 and not is_configuration_grounded(config, bounds):
            raise PlannerError("validate", f"step {n}: configuration ungrounded after {s.dst}")
    if target is not None and config.occupied() != target.cell_set():
        raise PlannerError("validate", "final configuration does not cover the target")
    return config
