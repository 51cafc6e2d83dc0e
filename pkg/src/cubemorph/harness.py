"""Experiment drivers: single runs with artifacts, oracle checks, sweeps.

These wrap the simulator and the exact-chain oracle into the workflows
the command line exposes: run one scenario and write its trace and
potential curve to disk, verify the stationary distribution of a small
instance against the Boltzmann form, or sweep generated instances over
kinds, sizes, and seeds into a CSV summary.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .game import TargetConfiguration
from .lattice import EnvBounds
from .learning import LearningParams, Trace, run
from .oracle import (
    DEFAULT_STATE_CAP,
    ReducibleChainError,
    detailed_balance_residual,
    enumerate_states,
    exact_transition_matrix,
    gibbs_distribution,
    stationary_distribution,
)
from .scenario import Scenario, generate_scenario

SUP_DEVIATION_TOL = 1e-8
DETAILED_BALANCE_TOL = 1e-12

_DENSE_STEPS = 10_000
_SPARSE_EVERY = 100


@dataclass(frozen=True)
class MetricsSummary:
    scenario_name: str
    n_agents: int
    converged: bool
    steps_to_converge: Optional[int]
    n_steps: int
    initial_potential: float
    final_potential: float


def summarize(trace: Trace) -> MetricsSummary:
    return MetricsSummary(
        scenario_name=trace.scenario_name,
        n_agents=len(trace.initial_positions),
        converged=trace.converged_at is not None,
        steps_to_converge=trace.converged_at,
        n_steps=trace.n_steps,
        initial_potential=trace.initial_potential,
        final_potential=trace.final_potential,
    )


def _sample_steps(n_steps: int) -> List[int]:
    """Step indices kept in written artifacts: everything for short runs,
    every 100th step plus the final one for long runs."""
    if n_steps <= _DENSE_STEPS:
        return list(range(1, n_steps + 1))
    steps = list(range(_SPARSE_EVERY, n_steps + 1, _SPARSE_EVERY))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def write_curve_csv(trace: Trace, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "potential"])
        for step, phi in trace.potential_curve():
            w.writerow([step, repr(phi)])


def write_trace_json(trace: Trace, path: Union[str, Path]) -> None:
    records = []
    for step in _sample_steps(trace.n_steps):
        i = step - 1
        dest = int(trace.dests[i])
        records.append(
            {
                "step": step,
                "agent": int(trace.agents[i]),
                "dest": list(trace.unpack_cell(dest)) if dest >= 0 else None,
                "accepted": bool(trace.accepted[i]),
                "alpha": float(trace.alphas[i]),
                "potential": float(trace.potentials[i]),
            }
        )
    obj = {
        "scenario": trace.scenario_name,
        "params": {
            "tau": trace.params.tau,
            "seed": trace.params.seed,
            "max_steps": trace.params.max_steps,
            "mode": trace.params.mode.value,
        },
        "n_steps": trace.n_steps,
        "converged_at": trace.converged_at,
        "initial": [list(c) for c in trace.initial_positions],
        "final": [list(c) for c in trace.final_positions],
        "initial_potential": trace.initial_potential,
        "final_potential": trace.final_potential,
        "records": records,
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_experiment(
    scenario: Scenario,
    params: Optional[LearningParams] = None,
    out_dir: Optional[Union[str, Path]] = None,
    stop_at_convergence: bool = True,
) -> Tuple[Trace, MetricsSummary]:
    """Run one scenario; optionally write <name>.trace.json and
    <name>.curve.csv into ``out_dir``."""
    trace = run(scenario, params=params, stop_at_convergence=stop_at_convergence)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_json(trace, out / f"{trace.scenario_name}.trace.json")
        write_curve_csv(trace, out / f"{trace.scenario_name}.curve.csv")
    return trace, summarize(trace)


def default_oracle_target(n_agents: int, bounds: EnvBounds) -> TargetConfiguration:
    """First n agent cells of the bounds in lexicographic order (in 3D
    these stack into grounded columns)."""
    return TargetConfiguration.from_iterable(bounds.agent_cells()[:n_agents])


def run_oracle_check(
    n_agents: int,
    bounds: EnvBounds,
    tau: float,
    target: Optional[TargetConfiguration] = None,
    cap: int = DEFAULT_STATE_CAP,
) -> dict:
    """Exact verification that the chain's stationary distribution is the
    Boltzmann distribution of the potential on one desk-scale instance.

    Returns a report dict with the measured deviations and a ``pass``
    flag (sup deviation <= 1e-8 and detailed-balance residual <= 1e-12).
    """
    if target is None:
        target = default_oracle_target(n_agents, bounds)
    space = enumerate_states(n_agents, bounds, cap=cap)
    P = exact_transition_matrix(space, target, tau)
    report = {
        "n_agents": n_agents,
        "dim": bounds.dim,
        "n_states": space.n_states,
        "tau": tau,
    }
    try:
        pi = stationary_distribution(P, space)
    except ReducibleChainError as e:
        report.update(
            irreducible=False,
            unreachable_pairs=[[list(map(list, a)), list(map(list, b))] for a, b in e.pairs[:5]],
            passed=False,
        )
        return report
    gibbs = gibbs_distribution(space, target, tau)
    sup = float(np.max(np.abs(pi - gibbs)))
    db = detailed_balance_residual(P, pi)
    report.update(
        irreducible=True,
        sup_deviation=sup,
        db_residual=db,
        sup_tol=SUP_DEVIATION_TOL,
        db_tol=DETAILED_BALANCE_TOL,
        passed=bool(sup <= SUP_DEVIATION_TOL and db <= DETAILED_BALANCE_TOL),
    )
    return report


@dataclass(frozen=True)
class SweepRow:
    kind: str
    n_agents: int
    seed: int
    converged: bool
    steps: int

    def as_csv_row(self) -> List[str]:
        return [
            self.kind,
            str(self.n_agents),
            str(self.seed),
            "1" if self.converged else "0",
            str(self.steps),
        ]


def _sweep_one(args: Tuple[str, int, int, float, int]) -> SweepRow:
    kind, n_agents, seed, tau, max_steps = args
    scenario = generate_scenario(kind, n_agents, seed, tau=tau, max_steps=max_steps)
    trace = run(scenario)
    converged = trace.converged_at is not None
    steps = trace.converged_at if converged else trace.n_steps
    return SweepRow(kind, n_agents, seed, converged, steps)


def run_sweep(
    kinds: Sequence[str],
    sizes: Sequence[int],
    seeds: Sequence[int],
    tau: float = 0.001,
    max_steps: int = 1_000_000,
    out_csv: Optional[Union[str, Path]] = None,
    jobs: Optional[int] = None,
) -> List[SweepRow]:
    """Run every (kind, size, seed) combination; optionally write a CSV
    with header kind,n_agents,seed,converged,steps."""
    work = [
        (kind, n, seed, tau, max_steps)
        for kind in kinds
        for n in sizes
        for seed in seeds
    ]
    if jobs is not None and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, work))
    else:
        rows = [_sweep_one(w) for w in work]
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "n_agents", "seed", "converged", "steps"])
            for row in rows:
                w.writerow(row.as_csv_row())
    return rows
