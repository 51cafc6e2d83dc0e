"""Lattice primitives: motions, bounds, graphs, groundedness."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubemorph.lattice import (
    Configuration,
    DomainError,
    EnvBounds,
    MotionKind,
    articulation_points,
    axis_directions,
    build_connectivity_graph,
    candidate_motions,
    classify_motion_kind,
    connected_components,
    ground_plane_cells,
    grounded_agent_flags,
    is_configuration_grounded,
    is_grounded,
    motion_deltas,
    validate_configuration,
)


def test_motion_deltas_counts_and_order():
    d2 = motion_deltas(2)
    d3 = motion_deltas(3)
    assert len(d2) == 8
    assert len(d3) == 18
    assert list(d2) == sorted(d2)
    assert list(d3) == sorted(d3)
    for d in d2 + d3:
        mags = sorted(abs(c) for c in d if c != 0)
        assert mags in ([1], [1, 1])


def test_classify_motion_kind():
    assert classify_motion_kind((1, 0)) is MotionKind.SLIDING
    assert classify_motion_kind((0, -1, 0)) is MotionKind.SLIDING
    assert classify_motion_kind((1, 1)) is MotionKind.CORNER
    assert classify_motion_kind((-1, 0, 1)) is MotionKind.CORNER
    for bad in [(0, 0), (2, 0), (1, 1, 1), (0, 0, 0), (2, 1)]:
        with pytest.raises(DomainError):
            classify_motion_kind(bad)


def test_axis_directions():
    assert len(axis_directions(2)) == 4
    assert len(axis_directions(3)) == 6
    assert list(axis_directions(3)) == sorted(axis_directions(3))


def test_env_bounds_validation():
    with pytest.raises(DomainError):
        EnvBounds((1, 0), (0, 5))
    with pytest.raises(DomainError):
        EnvBounds((0, 0, 1), (2, 2, 3))  # ground layer must start at 0
    with pytest.raises(DomainError):
        EnvBounds((0, 0, 0), (2, 2, 0))  # no room above the ground
    b = EnvBounds((0, 0), (2, 2))
    assert b.contains((0, 0)) and b.contains_agent((2, 2))
    assert not b.contains((3, 0))
    b3 = EnvBounds((0, 0, 0), (1, 1, 2))
    assert b3.contains((0, 0, 0))
    assert not b3.contains_agent((0, 0, 0))  # z = 0 is ground, not agent space
    assert b3.contains_agent((0, 0, 1))
    assert len(b3.agent_cells()) == 2 * 2 * 2
    assert len(ground_plane_cells(b3)) == 4


def test_configuration_basics():
    with pytest.raises(DomainError):
        Configuration(((0, 0), (0, 0)))
    with pytest.raises(DomainError):
        Configuration(((0, 0, 0),))  # agents may not sit in the ground layer
    c = Configuration(((0, 0), (1, 1)))
    assert c.position_of(1) == (1, 1)
    c2 = c.move(0, (0, 1))
    assert c2.positions == ((0, 1), (1, 1))
    assert c.positions == ((0, 0), (1, 1))  # immutable
    assert c.occupied() == {(0, 0), (1, 1)}
    with pytest.raises(DomainError):
        validate_configuration(c, EnvBounds((0, 0), (0, 0)))


def test_candidate_motions_2d():
    b = EnvBounds((0, 0), (4, 4))
    c = Configuration(((2, 2),))
    assert len(candidate_motions(0, c, b)) == 8
    corner = Configuration(((0, 0),))
    assert set(candidate_motions(0, corner, b)) == {(0, 1), (1, 0), (1, 1)}
    # fully enclosed center of a 3x3 block cannot move
    block = Configuration(tuple((x, y) for x in range(3) for y in range(3)))
    center = block.positions.index((1, 1))
    assert candidate_motions(center, block, b) == ()
    motions = candidate_motions(0, c, b)
    assert list(motions) == sorted(motions)


def test_candidate_motions_exclude_occupied():
    b = EnvBounds((0, 0), (4, 4))
    c = Configuration(((1, 1), (1, 2)))
    assert (1, 2) not in candidate_motions(0, c, b)


def _n_components(nodes, adj) -> int:
    seen = set()
    count = 0
    for start in nodes:
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return count


def _brute_articulation(nodes, adj):
    full = _n_components(nodes, adj)
    out = set()
    for v in nodes:
        rest = [n for n in nodes if n != v]
        sub = {n: [m for m in adj[n] if m != v] for n in rest}
        if rest and _n_components(rest, sub) > full:
            out.add(v)
    return out


def test_articulation_matches_brute_force():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randrange(2, 12)
        cells = set()
        while len(cells) < n:
            cells.add((rng.randrange(5), rng.randrange(5)))
        g = build_connectivity_graph(sorted(cells))
        assert articulation_points(g) == _brute_articulation(g.nodes, g.adj)


def test_connected_graph_has_two_safe_nodes():
    # any connected graph with >= 2 nodes keeps >= 2 removable nodes
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randrange(2, 10)
        cells = {(0, 0)}
        while len(cells) < n:
            base = rng.choice(sorted(cells))
            d = rng.choice(axis_directions(2))
            cells.add((base[0] + d[0], base[1] + d[1]))
        g = build_connectivity_graph(sorted(cells))
        if len(connected_components(g)) != 1:
            continue
        assert len(set(g.nodes) - articulation_points(g)) >= 2


def _agent_grounded_literal(agent: int, config: Configuration, bounds: EnvBounds) -> bool:
    """Literal definition: the agent reaches some ground-plane cell by a
    path through occupied cells (plus the final hop into the ground)."""
    occupied = config.occupied()
    pos = config.positions[agent]
    seen = {pos}
    stack = [pos]
    while stack:
        cur = stack.pop()
        for d in axis_directions(3):
            nb = (cur[0] + d[0], cur[1] + d[1], cur[2] + d[2])
            if nb[2] == 0 and bounds.contains(nb):
                return True
            if nb in occupied and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return False


def _grounded_by_path_search(config: Configuration, bounds: EnvBounds) -> bool:
    return all(
        _agent_grounded_literal(a, config, bounds) for a in range(config.n_agents)
    )


def test_groundedness_exhaustive_small():
    bounds = EnvBounds((0, 0, 0), (1, 1, 2))
    cells = bounds.agent_cells()
    for n in (1, 2):
        for placement in itertools.permutations(cells, n):
            config = Configuration(placement)
            expected = _grounded_by_path_search(config, bounds)
            assert is_configuration_grounded(config, bounds) == expected
            flags = grounded_agent_flags(config, bounds)
            assert all(flags) == expected
            for agent in range(n):
                assert is_grounded(agent, config, bounds) == _agent_grounded_literal(
                    agent, config, bounds
                )


def test_groundedness_sampled_vs_literal():
    bounds = EnvBounds((0, 0, 0), (3, 3, 4))
    cells = bounds.agent_cells()
    rng = random.Random(23)
    for _ in range(150):
        n = rng.choice((3, 4, 5))
        config = Configuration(tuple(rng.sample(cells, n)))
        assert is_configuration_grounded(config, bounds) == _grounded_by_path_search(
            config, bounds
        )


def test_grounded_flags_excluded_agent():
    bounds = EnvBounds((0, 0, 0), (4, 4, 4))
    # column: removing the middle strands the top
    config = Configuration(((1, 1, 1), (1, 1, 2), (1, 1, 3)))
    flags = grounded_agent_flags(config, bounds, excluded=1)
    assert flags[0] is True or flags[0] == True  # bottom touches ground
    assert not flags[2]  # top lost its support
    flags = grounded_agent_flags(config, bounds, excluded=2)
    assert flags[0] and flags[1]


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_grounded_monotone_add(data):
    """Attaching a new agent at z = 1 or axis-adjacent to an existing one
    never breaks groundedness."""
    bounds = EnvBounds((0, 0, 0), (5, 5, 5))
    n = data.draw(st.integers(min_value=1, max_value=5))
    cells = {(0, 0, 1)}
    for _ in range(n - 1):
        frontier = sorted(
            {
                (c[0] + d[0], c[1] + d[1], c[2] + d[2])
                for c in cells
                for d in axis_directions(3)
            }
            - cells
        )
        frontier = [c for c in frontier if bounds.contains_agent(c)]
        cells.add(data.draw(st.sampled_from(frontier)))
    config = Configuration(tuple(sorted(cells)))
    assert is_configuration_grounded(config, bounds)
    frontier = sorted(
        {
            (c[0] + d[0], c[1] + d[1], c[2] + d[2])
            for c in cells
            for d in axis_directions(3)
        }
        - cells
    )
    frontier = [c for c in frontier if bounds.contains_agent(c)]
    extra = data.draw(st.sampled_from(frontier))
    grown = Configuration(tuple(sorted(cells | {extra})))
    assert is_configuration_grounded(grown, bounds)
