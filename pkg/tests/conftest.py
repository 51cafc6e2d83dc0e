"""Shared fixtures: small hand-analyzable instances and state samplers."""

from __future__ import annotations

import random

import pytest

from cubemorph.game import TargetConfiguration
from cubemorph.lattice import Configuration, EnvBounds
from cubemorph.learning import LearningParams, Mode, run
from cubemorph.scenario import Scenario, generate_scenario


@pytest.fixture
def line3():
    """One agent on a 1x3 strip; target is the far cell."""
    bounds = EnvBounds((0, 0), (0, 2))
    target = TargetConfiguration.from_iterable([(0, 2)])
    return bounds, target


@pytest.fixture
def grid33():
    """Two agents on a 3x3 board; target is a domino in the corner."""
    bounds = EnvBounds((0, 0), (2, 2))
    target = TargetConfiguration.from_iterable([(0, 0), (0, 1)])
    return bounds, target


@pytest.fixture
def box332():
    """Two agents in a 3x3 base with two layers; target is a column."""
    bounds = EnvBounds((0, 0, 0), (2, 2, 2))
    target = TargetConfiguration.from_iterable([(0, 0, 1), (0, 0, 2)])
    return bounds, target


@pytest.fixture
def tower():
    """Three stacked agents in a roomy box."""
    bounds = EnvBounds((0, 0, 0), (4, 4, 5))
    config = Configuration(((2, 2, 1), (2, 2, 2), (2, 2, 3)))
    return config, bounds


@pytest.fixture
def overhang():
    """A vertical column with a horizontal arm on top: the arm's far end
    hangs over empty space."""
    bounds = EnvBounds((0, 0, 0), (4, 4, 5))
    config = Configuration(
        ((1, 0, 1), (1, 0, 2), (1, 0, 3), (1, 1, 3), (1, 2, 3))
    )
    return config, bounds


def make_scenario(
    name: str,
    bounds: EnvBounds,
    initial: Configuration,
    target: TargetConfiguration,
    tau: float = 0.5,
    seed: int = 0,
    max_steps: int = 100_000,
    mode: Mode = Mode.GLOBAL,
) -> Scenario:
    return Scenario(
        name, bounds, initial, target,
        LearningParams(tau=tau, seed=seed, max_steps=max_steps, mode=mode),
    )


def chain_states(kind: str, n_agents: int, seed: int, n_states: int, tau: float = 1.0):
    """Valid configurations sampled by walking the learning chain on a
    generated instance; in 3D every sample is grounded by construction."""
    scenario = generate_scenario(kind, n_agents, seed, tau=tau, max_steps=0)
    out = [scenario.initial]
    py_rng = random.Random(seed * 7919 + 13)
    config = scenario.initial
    for k in range(n_states - 1):
        steps = py_rng.randrange(20, 200)
        s = scenario.with_params(seed=seed * 1000 + k, max_steps=steps)
        trace = run(
            Scenario(s.name, s.bounds, config, s.target, s.params),
            stop_at_convergence=False,
        )
        config = Configuration(trace.final_positions)
        out.append(config)
    return scenario, out
