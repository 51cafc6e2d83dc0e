"""Utilities, the shared potential, and restricted action sets."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from cubemorph.game import (
    TargetConfiguration,
    dist_to_target,
    potential,
    potential_exact,
    restricted_action_set,
    unilateral_delta,
    utility,
    utility_exact,
)
from cubemorph.lattice import (
    Configuration,
    DomainError,
    EnvBounds,
    candidate_motions,
    is_configuration_grounded,
)

from conftest import chain_states


def test_dist_examples():
    t = TargetConfiguration.from_iterable([(2, 2), (0, 5)])
    assert dist_to_target((0, 0), t) == 4
    assert dist_to_target((2, 2), t) == 0
    assert dist_to_target((1, 4), t) == 2


def test_target_configuration_validation():
    with pytest.raises(DomainError):
        TargetConfiguration.from_iterable([(0, 0), (0, 0)])
    with pytest.raises(DomainError):
        TargetConfiguration.from_iterable([(0, 0, 0)])  # ground layer
    t = TargetConfiguration.from_iterable([(1, 1), (0, 0)])
    assert t.cells == ((0, 0), (1, 1))  # canonical order


def test_utility_examples():
    t = TargetConfiguration.from_iterable([(0, 0)])
    c = Configuration(((0, 0), (0, 3), (9, 0)))  # dists 0, 3, 9
    assert utility(0, c, t) == 1.0
    assert utility(1, c, t) == 0.25
    assert utility_exact(2, c, t) == Fraction(1, 10)


def test_potential_example():
    t = TargetConfiguration.from_iterable([(0, 0)])
    c = Configuration(((0, 3), (9, 0)))  # dists 3 and 9
    assert potential(c, t) == 0.25 + 0.1
    assert potential_exact(c, t) == Fraction(1, 4) + Fraction(1, 10)


def test_potential_max_iff_target_covered():
    bounds = EnvBounds((0, 0), (1, 1))
    t = TargetConfiguration.from_iterable([(0, 0), (0, 1)])
    import itertools

    cover_states = 0
    for placement in itertools.permutations(bounds.agent_cells(), 2):
        c = Configuration(placement)
        if set(placement) == t.cell_set():
            assert potential(c, t) == 2.0
            cover_states += 1
        else:
            assert potential(c, t) < 2.0
    assert cover_states == 2  # both labelings


def test_restricted_2d_equals_candidates():
    bounds = EnvBounds((0, 0), (4, 4))
    c = Configuration(((2, 2), (3, 3)))
    for agent in range(2):
        ras = restricted_action_set(agent, c, bounds)
        assert ras.motions == candidate_motions(agent, c, bounds)
        assert ras.origin == c.positions[agent]


def test_restricted_3d_tower(tower):
    config, bounds = tower
    bottom = restricted_action_set(0, config, bounds)
    middle = restricted_action_set(1, config, bounds)
    top = restricted_action_set(2, config, bounds)
    # bottom and middle each support the agent above: both must stay
    assert bottom.motions == ()
    assert middle.motions == ()
    # the top may step down-and-over onto cells beside its supporter
    assert set(top.motions) == {(1, 2, 2), (3, 2, 2), (2, 1, 2), (2, 3, 2)}


def test_restricted_3d_overhang(overhang):
    config, bounds = overhang
    # the arm's end agent may move, but only to cells that stay attached
    # to the rest of the structure; the arm cell next to the column
    # carries it and must stay
    end = restricted_action_set(4, config, bounds)
    carrier = restricted_action_set(3, config, bounds)
    assert carrier.motions == ()
    expected = {
        (0, 1, 3), (2, 1, 3),  # corner around the carrier, same layer
        (1, 1, 2), (1, 1, 4),  # corner under/over the carrier
    }
    assert set(end.motions) == expected


def test_restricted_moves_preserve_grounding():
    for kind, seed in (("3Dto3D", 5), ("2Dto3D", 6)):
        scenario, states = chain_states(kind, 5, seed, 12)
        for config in states:
            assert is_configuration_grounded(config, scenario.bounds)
            for agent in range(config.n_agents):
                for dest in restricted_action_set(agent, config, scenario.bounds).motions:
                    moved = config.move(agent, dest)
                    assert is_configuration_grounded(moved, scenario.bounds), (
                        config.positions, agent, dest,
                    )


def test_restricted_moves_reversible():
    for kind, seed in (("2Dto2D", 3), ("3Dto3D", 4)):
        scenario, states = chain_states(kind, 5, seed, 12)
        for config in states:
            for agent in range(config.n_agents):
                src = config.positions[agent]
                for dest in restricted_action_set(agent, config, scenario.bounds).motions:
                    moved = config.move(agent, dest)
                    back = restricted_action_set(agent, moved, scenario.bounds).motions
                    assert src in back, (config.positions, agent, dest)


def test_exact_potential_property():
    """A unilateral move changes the potential by exactly the mover's
    utility change: checked in exact rational arithmetic, with the float
    shortcut within 1e-12."""
    checked = 0
    for kind, seed in (("2Dto2D", 1), ("3Dto3D", 2)):
        scenario, states = chain_states(kind, 6, seed, 25)
        target = scenario.target
        rng = random.Random(seed)
        for config in states:
            for agent in range(config.n_agents):
                motions = restricted_action_set(agent, config, scenario.bounds).motions
                if not motions:
                    continue
                dest = motions[rng.randrange(len(motions))]
                src = config.positions[agent]
                moved = config.move(agent, dest)
                exact_delta = potential_exact(moved, target) - potential_exact(config, target)
                exact_u = utility_exact(agent, moved, target) - utility_exact(
                    agent, config, target
                )
                assert exact_delta == exact_u
                fast = unilateral_delta(agent, src, dest, config, target)
                assert abs(fast - float(exact_delta)) <= 1e-12
                checked += 1
    assert checked >= 200


def test_unilateral_delta_domain_checks():
    t = TargetConfiguration.from_iterable([(0, 0)])
    c = Configuration(((0, 1), (1, 1)))
    with pytest.raises(DomainError):
        unilateral_delta(0, (9, 9), (0, 0), c, t)  # agent not at src
    with pytest.raises(DomainError):
        unilateral_delta(0, (0, 1), (1, 1), c, t)  # destination occupied
    assert unilateral_delta(0, (0, 1), (0, 1), c, t) == 0.0
