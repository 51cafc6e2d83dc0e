"""Deterministic planners: routing, flattening, full reconfiguration."""

from __future__ import annotations

import random
from collections import deque

import pytest

from cubemorph.game import TargetConfiguration
from cubemorph.lattice import (
    Configuration,
    DomainError,
    EnvBounds,
    motion_deltas,
)
from cubemorph.planner import (
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
from cubemorph.scenario import generate_scenario


def _bfs_distance(start, goal, blocked, bounds):
    if goal in blocked:
        return None
    seen = {start: 0}
    q = deque([start])
    while q:
        cell = q.popleft()
        if cell == goal:
            return seen[cell]
        for d in motion_deltas(bounds.dim):
            nb = tuple(c + dc for c, dc in zip(cell, d))
            if nb in blocked or nb in seen or not bounds.contains_agent(nb):
                continue
            seen[nb] = seen[cell] + 1
            q.append(nb)
    return None


def test_astar_king_distance():
    b = EnvBounds((0, 0), (5, 5))
    path = astar_path((0, 0), (3, 3), frozenset(), b)
    assert path is not None and len(path) - 1 == 3
    assert astar_path((2, 2), (2, 2), frozenset(), b) == [(2, 2)]


def test_astar_matches_bfs_oracle():
    b = EnvBounds((0, 0), (6, 6))
    rng = random.Random(5)
    cells = [(x, y) for x in range(7) for y in range(7)]
    for _ in range(60):
        blocked = frozenset(rng.sample(cells, rng.randrange(0, 20)))
        free = [c for c in cells if c not in blocked]
        start, goal = rng.sample(free, 2)
        expect = _bfs_distance(start, goal, blocked, b)
        path = astar_path(start, goal, blocked, b)
        if expect is None:
            assert path is None
        else:
            assert path is not None and len(path) - 1 == expect
            assert path[0] == start and path[-1] == goal
            assert not set(path) & blocked


def test_astar_validates_endpoints():
    b = EnvBounds((0, 0), (3, 3))
    with pytest.raises(DomainError):
        astar_path((9, 9), (0, 0), frozenset(), b)
    with pytest.raises(DomainError):
        astar_path((0, 0), (1, 1), frozenset({(0, 0)}), b)
    assert astar_path((0, 0), (1, 1), frozenset({(1, 1)}), b) is None


def test_plan_2d_fills_solid_block():
    # a 3x3 solid block has an interior cell: naive closest-first filling
    # would wall it off, deepest-first must not
    init = Configuration(tuple((x, 9) for x in range(9)))
    targ = TargetConfiguration.from_iterable(
        (x, y) for x in range(3) for y in range(3)
    )
    b = EnvBounds((-3, -3), (12, 12))
    plan = plan_2d(init, targ, b)
    final = validate_plan(init, targ, b, plan, strict=True)
    assert final.occupied() == targ.cell_set()


def test_plan_2d_identity_is_empty():
    b = EnvBounds((0, 0), (5, 5))
    cells = ((1, 1), (1, 2), (2, 1))
    plan = plan_2d(
        Configuration(cells), TargetConfiguration.from_iterable(cells), b
    )
    assert len(plan) == 0


def test_plan_2d_random_instances_strict():
    for seed in range(25):
        s = generate_scenario("2Dto2D", 4 + seed % 9, seed)
        plan = plan_2d(s.initial, s.target, s.bounds)
        final = validate_plan(s.initial, s.target, s.bounds, plan, strict=True)
        assert final.occupied() == s.target.cell_set()


def test_find_mobile_agent_tower(tower):
    config, bounds = tower
    assert find_mobile_agent(config, bounds) == 2


def test_find_mobile_agent_requires_upper_agent():
    bounds = EnvBounds((0, 0, 0), (4, 4, 3))
    flat = Configuration(((0, 0, 1), (1, 0, 1)))
    with pytest.raises(DomainError):
        find_mobile_agent(flat, bounds)


def test_flatten_tower_strict(tower):
    config, bounds = tower
    plan, layer = flatten_3d(config, bounds)
    final = validate_plan(config, None, bounds, plan, strict=True)
    assert final.positions == layer.positions
    assert all(p[2] == 1 for p in layer.positions)


def test_flatten_overhang_strict(overhang):
    config, bounds = overhang
    plan, layer = flatten_3d(config, bounds)
    validate_plan(config, None, bounds, plan, strict=True)
    assert all(p[2] == 1 for p in layer.positions)


def test_flatten_rejects_small_layer():
    bounds = EnvBounds((0, 0, 0), (0, 0, 5))  # a 1x1 chimney
    column = Configuration(((0, 0, 1), (0, 0, 2)))
    with pytest.raises(PlannerError):
        flatten_3d(column, bounds)


def test_plan_3d_examples(tower):
    config, bounds = tower
    targ = TargetConfiguration.from_iterable(((0, 4, 1), (1, 4, 1), (1, 4, 2)))
    plan = plan_3d(config, targ, bounds)
    final = validate_plan(config, targ, bounds, plan, strict=True)
    assert final.occupied() == targ.cell_set()


def test_plan_3d_random_instances_strict():
    for seed in range(12):
        kind = ("3Dto3D", "2Dto3D", "3Dto2D")[seed % 3]
        s = generate_scenario(kind, 4 + seed % 5, seed)
        plan = plan_3d(s.initial, s.target, s.bounds)
        final = validate_plan(s.initial, s.target, s.bounds, plan, strict=True)
        assert final.occupied() == s.target.cell_set()


def test_validate_plan_rejects_bad_steps(grid33):
    bounds, target = grid33
    init = Configuration(((2, 2), (1, 2)))
    with pytest.raises(PlannerError):  # agent not at claimed source
        validate_plan(init, None, bounds, MotionPlan([PlanStep(0, (0, 0), (0, 1))]))
    with pytest.raises(DomainError):  # teleport is not a motion
        validate_plan(init, None, bounds, MotionPlan([PlanStep(0, (2, 2), (0, 0))]))
    with pytest.raises(PlannerError):  # destination occupied
        validate_plan(init, None, bounds, MotionPlan([PlanStep(0, (2, 2), (1, 2))]))
    with pytest.raises(PlannerError):  # final set must equal the target
        validate_plan(init, target, bounds, MotionPlan([PlanStep(0, (2, 2), (2, 1))]))


def test_validate_plan_rejects_ungrounding_step(tower):
    config, bounds = tower
    # sliding the middle agent sideways strands the top: never a legal
    # restricted action, and the replay must flag the lost grounding
    bad = MotionPlan([PlanStep(1, (2, 2, 2), (3, 2, 2))])
    with pytest.raises(PlannerError):
        validate_plan(config, None, bounds, bad)


def test_validate_plan_strict_rejects_rule_violation():
    # the mid-column agent carries the top: the motion rule freezes it.
    # Cornering it up beside the pillar happens to leave every agent
    # grounded in the final position (the top now leans on the mover, the
    # mover on the pillar), so only strict mode can catch the violation.
    bounds = EnvBounds((0, 0, 0), (4, 4, 5))
    config = Configuration(
        ((0, 0, 1), (0, 0, 2), (0, 0, 3), (1, 0, 1), (1, 0, 2))
    )
    sneaky = MotionPlan([PlanStep(1, (0, 0, 2), (1, 0, 3))])
    final = validate_plan(config, None, bounds, sneaky)  # grounded throughout
    assert final.position_of(1) == (1, 0, 3)
    with pytest.raises(PlannerError):
        validate_plan(config, None, bounds, sneaky, strict=True)


def test_plan_json_round_trip(tower):
    config, bounds = tower
    targ = TargetConfiguration.from_iterable(((0, 4, 1), (1, 4, 1), (1, 4, 2)))
    plan = plan_3d(config, targ, bounds)
    again = MotionPlan.from_json_obj(plan.to_json_obj())
    assert again.steps == plan.steps
