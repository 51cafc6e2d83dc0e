"""The annealed learning rule: acceptance values, proposals, runs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cubemorph.game import TargetConfiguration, potential, restricted_action_set
from cubemorph.lattice import Configuration, DomainError, EnvBounds
from cubemorph.learning import (
    LearningParams,
    Mode,
    acceptance_probability,
    local_acceptance_probability,
    proposal_for,
    propose,
    run,
    step,
    step_local,
)
from cubemorph.rng import SplitMix64
from cubemorph.scenario import generate_scenario

from conftest import chain_states, make_scenario


def test_acceptance_probability_examples():
    # symmetric proposal, downhill by 0.5 at tau 0.5: exp(-1)
    assert acceptance_probability(-0.5, 0.125, 0.125, 0.5) == math.exp(-1.0)
    # uphill moves with symmetric proposals always pass
    assert acceptance_probability(0.75, 0.25, 0.25, 0.5) == 1.0
    # asymmetric proposal sizes alone: ratio of reverse to forward
    assert acceptance_probability(0.0, 1.0 / 5.0, 1.0 / 8.0, 1.0) == (5.0 / 8.0)
    assert acceptance_probability(0.0, 1.0 / 8.0, 1.0 / 5.0, 1.0) == 1.0
    # extreme exponents are clamped instead of overflowing
    assert acceptance_probability(1e9, 0.5, 0.5, 1e-3) == 1.0
    tiny = acceptance_probability(-1e9, 0.5, 0.5, 1e-3)
    assert 0.0 < tiny < 1e-300


def test_acceptance_probability_validation():
    with pytest.raises(DomainError):
        acceptance_probability(0.0, 0.5, 0.5, 0.0)
    with pytest.raises(DomainError):
        acceptance_probability(0.0, 0.0, 0.5, 1.0)


def test_proposal_for_asymmetric_sets(grid33):
    bounds, target = grid33
    # corner agent has 3 motions; after moving to the center it has 7
    config = Configuration(((0, 0), (2, 2)))
    prop = proposal_for(config, target, bounds, 0.5, 0, (1, 1))
    assert prop.q_fwd == 1.0 / 3.0
    assert prop.q_rev == 1.0 / 7.0
    phi0 = potential(config, target)
    phi1 = potential(config.move(0, (1, 1)), target)
    assert prop.accept_prob == acceptance_probability(
        phi1 - phi0, prop.q_fwd, prop.q_rev, 0.5
    )
    with pytest.raises(DomainError):
        proposal_for(config, target, bounds, 0.5, 0, (2, 2))  # occupied
    with pytest.raises(DomainError):
        proposal_for(config, target, bounds, 0.5, 0, (0, 2))  # not a motion


def test_propose_consumes_stream_deterministically(grid33):
    bounds, target = grid33
    config = Configuration(((0, 0), (2, 2)))
    p1 = propose(config, target, bounds, 0.5, SplitMix64(9), agent=0)
    p2 = propose(config, target, bounds, 0.5, SplitMix64(9), agent=0)
    assert p1 == p2
    assert p1.to_pos in restricted_action_set(0, config, bounds).motions


def test_empirical_acceptance_rate():
    """From the covered state of a 2-cell strip the only proposal is to
    step off the target, accepted with probability exp(-1/2); the long-run
    acceptance frequency of those proposals must match within 3 sigma."""
    bounds = EnvBounds((0, 0), (0, 1))
    target = TargetConfiguration.from_iterable([(0, 1)])
    initial = Configuration(((0, 1),))
    scenario = make_scenario(
        "strip", bounds, initial, target, tau=1.0, seed=12345, max_steps=100_000
    )
    trace = run(scenario, stop_at_convergence=False)
    on_target = 0
    off_moves = 0
    pos = initial.positions[0]
    for t in range(trace.n_steps):
        if pos == (0, 1):
            on_target += 1
            if trace.accepted[t]:
                off_moves += 1
        if trace.accepted[t]:
            pos = trace.unpack_cell(int(trace.dests[t]))
    p = math.exp(-0.5)
    freq = off_moves / on_target
    sigma = math.sqrt(p * (1 - p) / on_target)
    assert abs(freq - p) <= 3 * sigma, (freq, p, on_target)


def test_step_and_step_local_identical():
    for kind, seed in (("2Dto2D", 21), ("3Dto3D", 22)):
        scenario = generate_scenario(kind, 5, seed, tau=0.5)
        rng_a = SplitMix64(99)
        rng_b = SplitMix64(99)
        state_a = scenario.initial
        state_b = scenario.initial
        for t in range(300):
            state_a, rec_a = step(state_a, scenario, rng_a, t)
            agent = rng_b.randbelow(state_b.n_agents)
            state_b, rec_b = step_local(agent, state_b, scenario, rng_b, t)
            assert state_a.positions == state_b.positions
            assert rec_a == rec_b


def test_local_acceptance_matches_global(grid33):
    bounds, target = grid33
    config = Configuration(((0, 0), (2, 2)))
    for agent in range(2):
        src = config.positions[agent]
        for dest in restricted_action_set(agent, config, bounds).motions:
            g = proposal_for(config, target, bounds, 0.5, agent, dest).accept_prob
            l = local_acceptance_probability(agent, src, dest, config, target, bounds, 0.5)
            assert g == l


def test_run_already_converged(grid33):
    bounds, target = grid33
    scenario = make_scenario(
        "done", bounds, Configuration(target.cells), target, tau=0.5, max_steps=1000
    )
    trace = run(scenario)
    assert trace.converged_at == 0
    assert trace.n_steps == 0
    assert trace.final_positions == target.cells


def test_run_zero_budget(grid33):
    bounds, target = grid33
    scenario = make_scenario(
        "frozen", bounds, Configuration(((2, 2), (1, 2))), target, max_steps=0
    )
    trace = run(scenario)
    assert trace.n_steps == 0
    assert trace.converged_at is None
    assert trace.final_positions == scenario.initial.positions


def test_trace_replay_consistency():
    scenario = generate_scenario("2Dto2D", 6, 17, tau=0.1, max_steps=5_000)
    trace = run(scenario, stop_at_convergence=False)
    recs = trace.records()
    assert len(recs) == trace.n_steps
    positions = list(trace.initial_positions)
    for rec in recs:
        if rec.accepted:
            positions[rec.agent] = rec.proposal.to_pos
    assert tuple(positions) == trace.final_positions
    curve = trace.potential_curve()
    assert curve[0] == (0, trace.initial_potential)
    assert curve[-1] == (trace.n_steps, trace.final_potential)
    # per-step potentials agree with a fresh recomputation on replay
    check = np.array(
        [potential(Configuration(p), scenario.target) for p in trace.iter_positions()]
    )
    assert np.array_equal(check, trace.potentials)


def test_chunked_run_matches_unchunked(monkeypatch):
    import cubemorph.learning as learning

    scenario = generate_scenario("2Dto2D", 5, 31, tau=1.0, max_steps=10_000)
    whole = run(scenario, stop_at_convergence=False)
    monkeypatch.setattr(learning, "_CHUNK_STEPS", 777)
    parts = run(scenario, stop_at_convergence=False)
    assert whole.final_positions == parts.final_positions
    assert np.array_equal(whole.agents, parts.agents)
    assert np.array_equal(whole.dests, parts.dests)
    assert np.array_equal(whole.accepted, parts.accepted)
    assert np.array_equal(whole.alphas, parts.alphas)
    assert np.array_equal(whole.potentials, parts.potentials)
    assert whole.converged_at == parts.converged_at


def test_mode_field_does_not_change_the_chain():
    base = generate_scenario("2Dto2D", 5, 8, tau=0.5, max_steps=3_000)
    tr_g = run(base.with_params(mode=Mode.GLOBAL), stop_at_convergence=False)
    tr_l = run(base.with_params(mode=Mode.LOCAL), stop_at_convergence=False)
    assert tr_g.final_positions == tr_l.final_positions
    assert np.array_equal(tr_g.alphas, tr_l.alphas)


def test_params_validation():
    with pytest.raises(DomainError):
        LearningParams(tau=0.0, seed=0, max_steps=1)
    with pytest.raises(DomainError):
        LearningParams(tau=1.0, seed=-1, max_steps=1)
    with pytest.raises(DomainError):
        LearningParams(tau=1.0, seed=0, max_steps=-5)
