"""Integer-lattice geometry for cube agents in 2D and 3D.

Cells are d-tuples of ints (d in {2, 3}). Agents occupy distinct cells of a
finite axis-aligned box. Two primitive relocation motions exist: a sliding
motion changes one coordinate by 1, a corner motion changes two coordinates
by 1 each. In 3D the plane z = 0 is a ground plane that agents can never
occupy but that anchors the ground-contact ("grounded") predicate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

CellPos = Tuple[int, ...]

_AXIS_DIRS_2D = ((-1, 0), (0, -1), (0, 1), (1, 0))
_AXIS_DIRS_3D = ((-1, 0, 0), (0, -1, 0), (0, 0, -1), (0, 0, 1), (0, 1, 0), (1, 0, 0))


class DomainError(ValueError):
    """An operation was invoked outside its stated domain."""


def validate_dim(dim: int) -> int:
    if dim not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {dim!r}")
    return dim


def axis_directions(dim: int) -> Tuple[CellPos, ...]:
    """Unit steps along the axes; adjacency in connectivity graphs."""
    validate_dim(dim)
    return _AXIS_DIRS_3D if dim == 3 else _AXIS_DIRS_2D


class MotionKind(Enum):
    SLIDING = "sliding"
    CORNER = "corner"


@dataclass(frozen=True)
class Motion:
    """A primitive translation: one axis step, or a two-axis diagonal step."""

    delta: CellPos
    kind: MotionKind

    def __post_init__(self):
        validate_dim(len(self.delta))
        if classify_motion_kind(self.delta) is not self.kind:
            raise DomainError(f"delta {self.delta} is not a {self.kind.value} motion")


def classify_motion_kind(delta: Sequence[int]) -> MotionKind:
    """Classify a displacement vector, or raise DomainError if it is neither
    a sliding nor a corner motion."""
    validate_dim(len(delta))
    nonzero = [abs(c) for c in delta if c != 0]
    if nonzero == [1]:
        return MotionKind.SLIDING
    if nonzero == [1, 1]:
        return MotionKind.CORNER
    raise DomainError(f"delta {tuple(delta)} is not a valid motion")


@lru_cache(maxsize=None)
def motion_deltas(dim: int) -> Tuple[CellPos, ...]:
    """All motion displacement vectors for the given dimension, in ascending
    lexicographic order (8 in 2D, 18 in 3D).

    The order is load-bearing: proposal sampling indexes into candidate
    lists built by iterating these deltas, and the compiled kernel uses the
    same table, so both backends see identical candidate orderings.
    """
    validate_dim(dim)
    out = []
    for delta in product((-1, 0, 1), repeat=dim):
        if sum(abs(c) for c in delta) in (1, 2):
            out.append(delta)
    return tuple(out)


@dataclass(frozen=True)
class EnvBounds:
    """Finite axis-aligned box of lattice cells (inclusive corners).

    In 3D the layer z = 0 belongs to the box but is reserved for the ground
    plane; agents occupy z >= 1. The lower corner must therefore sit at
    z = 0 so that a ground layer exists under the agents.
    """

    lower: CellPos
    upper: CellPos

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise DomainError("bounds corners must have equal dimension")
        validate_dim(len(self.lower))
        if any(l > u for l, u in zip(self.lower, self.upper)):
            raise DomainError(f"empty bounds {self.lower}..{self.upper}")
        if self.dim == 3:
            if self.lower[2] != 0:
                raise DomainError("3D bounds must start at z = 0 (ground layer)")
            if self.upper[2] < 1:
                raise DomainError("3D bounds must include at least layer z = 1")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(u - l + 1 for l, u in zip(self.lower, self.upper))

    def contains(self, cell: Sequence[int]) -> bool:
        return len(cell) == self.dim and all(
            l <= c <= u for l, c, u in zip(self.lower, cell, self.upper)
        )

    def contains_agent(self, cell: Sequence[int]) -> bool:
        """Like contains(), but excludes the 3D ground layer z = 0."""
        if not self.contains(cell):
            return False
        return self.dim == 2 or cell[2] >= 1

    def iter_cells(self) -> Iterator[CellPos]:
        ranges = [range(l, u + 1) for l, u in zip(self.lower, self.upper)]
        return iter(product(*ranges))

    def agent_cells(self) -> Tuple[CellPos, ...]:
        """All cells an agent may occupy, in lexicographic order."""
        return tuple(c for c in self.iter_cells() if self.dim == 2 or c[2] >= 1)


@dataclass(frozen=True)
class Configuration:
    """Positions of the N labeled agents; agent ids are list indices."""

    positions: Tuple[CellPos, ...]

    def __post_init__(self):
        if not self.positions:
            raise DomainError("configuration must contain at least one agent")
        dim = len(self.positions[0])
        validate_dim(dim)
        seen = set()
        for pos in self.positions:
            if len(pos) != dim:
                raise DomainError("all positions must share one dimension")
            if pos in seen:
                raise DomainError(f"duplicate cell {pos} in configuration")
            seen.add(pos)
            if dim == 3 and pos[2] < 1:
                raise DomainError(f"agent cell {pos} lies in the ground layer")

    @property
    def dim(self) -> int:
        return len(self.positions[0])

    @property
    def n_agents(self) -> int:
        return len(self.positions)

    def occupied(self) -> FrozenSet[CellPos]:
        return frozenset(self.positions)

    def position_of(self, agent: int) -> CellPos:
        if not 0 <= agent < len(self.positions):
            raise DomainError(f"unknown agent id {agent}")
        return self.positions[agent]

    def move(self, agent: int, dest: CellPos) -> "Configuration":
        """Copy of this configuration with one agent relocated."""
        self.position_of(agent)
        positions = list(self.positions)
        positions[agent] = tuple(dest)
        return Configuration(tuple(positions))


def validate_configuration(config: Configuration, bounds: EnvBounds) -> None:
    """Raise DomainError unless every agent cell lies inside bounds."""
    if config.dim != bounds.dim:
        raise DomainError("configuration and bounds dimensions differ")
    for pos in config.positions:
        if not bounds.contains_agent(pos):
            raise DomainError(f"agent cell {pos} outside bounds")


def candidate_motions(agent: int, config: Configuration, bounds: EnvBounds) -> Tuple[CellPos, ...]:
    """Destination cells reachable by one motion: in bounds, unoccupied,
    outside the ground layer. Ascending lexicographic order."""
    pos = config.position_of(agent)
    if config.dim != bounds.dim:
        raise DomainError("configuration and bounds dimensions differ")
    occupied = config.occupied()
    out = []
    for delta in motion_deltas(config.dim):
        dest = tuple(p + d for p, d in zip(pos, delta))
        if dest not in occupied and bounds.contains_agent(dest):
            out.append(dest)
    return tuple(out)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected graph over cells; edges join cells at L1 distance 1."""

    nodes: Tuple[CellPos, ...]
    adj: Mapping[CellPos, Tuple[CellPos, ...]]


def build_connectivity_graph(cells: Sequence[CellPos]) -> ConnectivityGraph:
    """Connectivity graph of a cell set (nodes sorted lexicographically)."""
    cell_list = list(cells)
    cell_set = set(cell_list)
    if len(cell_set) != len(cell_list):
        raise DomainError("duplicate cells in graph input")
    if not cell_set:
        return ConnectivityGraph((), {})
    dim = len(cell_list[0])
    validate_dim(dim)
    if any(len(c) != dim for c in cell_list):
        raise DomainError("all cells must share one dimension")
    nodes = tuple(sorted(cell_set))
    dirs = axis_directions(dim)
    adj = {}
    for cell in nodes:
        nbrs = []
        for d in dirs:
            other = tuple(c + dc for c, dc in zip(cell, d))
            if other in cell_set:
                nbrs.append(other)
        adj[cell] = tuple(sorted(nbrs))
    return ConnectivityGraph(nodes, adj)


def connected_components(graph: ConnectivityGraph) -> List[FrozenSet[CellPos]]:
    """Components as frozensets, ordered by their smallest node."""
    seen = set()
    comps = []
    for start in graph.nodes:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            node = stack.pop()
            for nb in graph.adj[node]:
                if nb not in comp:
                    comp.add(nb)
                    seen.add(nb)
                    stack.append(nb)
        comps.append(frozenset(comp))
    comps.sort(key=min)
    return comps


def articulation_points_from_adjacency(adj: Mapping) -> FrozenSet:
    """Articulation points of a simple undirected graph (iterative
    Hopcroft-Tarjan). Keys of ``adj`` are opaque sortable node ids."""
    disc: Dict = {}
    low: Dict = {}
    result = set()
    timer = 0
    order = {node: tuple(sorted(adj[node])) for node in adj}
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack = [(root, None, iter(order[root]))]
        while stack:
            node, parent, it = stack[-1]
            nb = next(it, None)
            if nb is None:
                stack.pop()
                if parent is not None:
                    if low[node] < low[parent]:
                        low[parent] = low[node]
                    if parent != root and low[node] >= disc[parent]:
                        result.add(parent)
                continue
            if nb == parent:
                continue
            if nb in disc:
                if disc[nb] < low[node]:
                    low[node] = disc[nb]
            else:
                disc[nb] = low[nb] = timer
                timer += 1
                if node == root:
                    root_children += 1
                stack.append((nb, node, iter(order[nb])))
        if root_children >= 2:
            result.add(root)
    return frozenset(result)


def articulation_points(graph: ConnectivityGraph) -> FrozenSet[CellPos]:
    """Nodes whose removal increases the number of components."""
    return articulation_points_from_adjacency(graph.adj)


def ground_plane_cells(bounds: EnvBounds) -> Tuple[CellPos, ...]:
    """All in-bounds cells with z = 0, in lexicographic order (3D only)."""
    if bounds.dim != 3:
        raise DomainError("ground plane exists only in 3D")
    return tuple(
        (x, y, 0)
        for x in range(bounds.lower[0], bounds.upper[0] + 1)
        for y in range(bounds.lower[1], bounds.upper[1] + 1)
    )


def is_grounded(
    agent: int,
    config: Configuration,
    bounds: EnvBounds,
    excluded: Optional[int] = None,
) -> bool:
    """True iff the agent reaches a ground cell through a chain of occupied
    cells and ground cells (L1 adjacency), ignoring the excluded agent.

    This is the literal search over the agent-plus-ground graph; the
    engine uses the equivalent observation that a component is grounded
    iff it contains an agent at z = 1 (only layer-1 cells touch ground).
    """
    if config.dim != 3 or bounds.dim != 3:
        raise DomainError("groundedness is a 3D predicate")
    if excluded is not None and excluded == agent:
        raise DomainError("agent cannot be excluded from its own query")
    if excluded is not None:
        config.position_of(excluded)
    start = config.position_of(agent)
    occupied = set(config.positions)
    if excluded is not None:
        occupied.discard(config.positions[excluded])
    seen = {start}
    stack = [start]
    while stack:
        cell = stack.pop()
        for d in _AXIS_DIRS_3D:
            nb = (cell[0] + d[0], cell[1] + d[1], cell[2] + d[2])
            if nb in seen or not bounds.contains(nb):
                continue
            if nb[2] == 0:
                return True
            if nb in occupied:
                seen.add(nb)
                stack.append(nb)
    return False


def grounded_agent_flags(
    config: Configuration,
    bounds: EnvBounds,
    excluded: Optional[int] = None,
) -> Tuple[bool, ...]:
    """Per-agent groundedness in one multi-source sweep.

    Seeds the search at every layer-1 agent (those are exactly the agents
    adjacent to a ground cell) and floods along agent-to-agent adjacency.
    The excluded agent is removed from the graph and reported False.
    """
    if config.dim != 3 or bounds.dim != 3:
        raise DomainError("groundedness is a 3D predicate")
    n = config.n_agents
    cell_to_agent = {pos: i for i, pos in enumerate(config.positions)}
    flags = [False] * n
    stack = []
    for i, pos in enumerate(config.positions):
        if i != excluded and pos[2] == 1:
            flags[i] = True
            stack.append(i)
    while stack:
        i = stack.pop()
        pos = config.positions[i]
        for d in _AXIS_DIRS_3D:
            nb = (pos[0] + d[0], pos[1] + d[1], pos[2] + d[2])
            j = cell_to_agent.get(nb)
            if j is not None and j != excluded and not flags[j]:
                flags[j] = True
                stack.append(j)
    return tuple(flags)


def is_configuration_grounded(config: Configuration, bounds: EnvBounds) -> bool:
    """True iff every agent is grounded (no exclusions)."""
    return all(grounded_agent_flags(config, bounds))
