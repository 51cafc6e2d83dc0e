"""Command-line interface.

Subcommands:

* ``run``    — simulate a scenario (from file or generated on the fly).
               Exit 0 when the target was covered, 2 when the step budget
               ran out first, 1 on invalid input.
* ``plan``   — build a deterministic motion plan for a scenario, verify
               it step by step, and write it as JSON.
* ``oracle`` — exact stationary-distribution check on a small instance.
               Exit 0 when the measured deviations are within tolerance.
* ``sweep``  — run a grid of generated instances into a CSV summary.
* ``gen``    — write a generated scenario to a JSON file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .game import TargetConfiguration
from .harness import run_experiment, run_oracle_check, run_sweep
from .lattice import Configuration, DomainError, EnvBounds
from .learning import LearningParams, Mode
from .oracle import StateCapError
from .planner import PlannerError, plan_2d, plan_3d, validate_plan
from .scenario import (
    GENERATOR_KINDS,
    Scenario,
    ScenarioError,
    generate_scenario,
    load,
    save,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


def _parse_bounds(text: str) -> EnvBounds:
    """Parse 'WxH' (2D) or 'WxHxL' (3D; L layers above the ground plane)."""
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise DomainError(f"bounds must look like 8x8 or 4x4x3, got {text!r}")
    if len(dims) == 2:
        w, h = dims
        if w < 1 or h < 1:
            raise DomainError("bounds extents must be positive")
        return EnvBounds((0, 0), (w - 1, h - 1))
    if len(dims) == 3:
        w, h, layers = dims
        if w < 1 or h < 1 or layers < 1:
            raise DomainError("bounds extents must be positive")
        return EnvBounds((0, 0, 0), (w - 1, h - 1, layers))
    raise DomainError(f"bounds must have 2 or 3 extents, got {text!r}")


def _parse_seeds(text: str) -> List[int]:
    """'12' means seeds 0..11; '3,7,9' is an explicit list."""
    if "," in text:
        return [int(p) for p in text.split(",") if p]
    return list(range(int(text)))


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.scenario is not None:
        scenario = load(args.scenario)
        overrides = {}
        if args.tau is not None:
            overrides["tau"] = args.tau
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.max_steps is not None:
            overrides["max_steps"] = args.max_steps
        if args.mode is not None:
            overrides["mode"] = Mode(args.mode)
        return scenario.with_params(**overrides) if overrides else scenario
    if args.kind is None or args.agents is None:
        raise ScenarioError(
            "bad-params", "provide --scenario FILE, or both --kind and --agents"
        )
    return generate_scenario(
        args.kind,
        args.agents,
        args.seed if args.seed is not None else 0,
        tau=args.tau if args.tau is not None else 0.001,
        max_steps=args.max_steps if args.max_steps is not None else 1_000_000,
        mode=Mode(args.mode) if args.mode is not None else Mode.GLOBAL,
    )


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", metavar="FILE", help="scenario JSON file")
    p.add_argument("--kind", choices=GENERATOR_KINDS, help="generate an instance of this kind")
    p.add_argument("--agents", type=int, help="number of agents for --kind")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--tau", type=float, default=None, help="temperature")
    p.add_argument("--max-steps", type=int, default=None, help="step budget")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                   help="learning rule variant (identical chains)")


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    trace, metrics = run_experiment(
        scenario,
        out_dir=args.out,
        stop_at_convergence=not args.full_budget,
    )
    status = (
        f"converged at step {metrics.steps_to_converge}"
        if metrics.converged
        else f"did not converge within {metrics.n_steps} steps"
    )
    print(
        f"{metrics.scenario_name}: {status}; potential "
        f"{metrics.initial_potential:.6f} -> {metrics.final_potential:.6f} "
        f"of {metrics.n_agents}"
    )
    if args.out:
        print(f"wrote {Path(args.out) / (metrics.scenario_name + '.trace.json')}")
        print(f"wrote {Path(args.out) / (metrics.scenario_name + '.curve.csv')}")
    return EXIT_OK if metrics.converged else EXIT_BUDGET


def _cmd_plan(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    planner = plan_2d if scenario.dim == 2 else plan_3d
    plan = planner(scenario.initial, scenario.target, scenario.bounds)
    validate_plan(scenario.initial, scenario.target, scenario.bounds, plan, strict=True)
    text = json.dumps(plan.to_json_obj(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"{scenario.name}: {len(plan)} steps, verified; wrote {args.out}")
    else:
        sys.stdout.write(text)
        print(f"{scenario.name}: {len(plan)} steps, verified", file=sys.stderr)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    bounds = _parse_bounds(args.bounds)
    target = None
    if args.scenario is not None:
        scen = load(args.scenario)
        bounds = scen.bounds
        target = scen.target
        n_agents = scen.n_agents
    else:
        n_agents = args.agents
    report = run_oracle_check(n_agents, bounds, args.tau, target=target, cap=args.cap)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["passed"] else EXIT_ERROR


def _cmd_sweep(args: argparse.Namespace) -> int:
    kinds = [k for k in args.kinds.split(",") if k]
    for k in kinds:
        if k not in GENERATOR_KINDS:
            raise ScenarioError("bad-params", f"unknown kind {k!r}")
    sizes = [int(s) for s in args.sizes.split(",") if s]
    seeds = _parse_seeds(args.seeds)
    rows = run_sweep(
        kinds,
        sizes,
        seeds,
        tau=args.tau,
        max_steps=args.max_steps,
        out_csv=args.out,
        jobs=args.jobs,
    )
    n_conv = sum(1 for r in rows if r.converged)
    print(f"{n_conv}/{len(rows)} runs converged")
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    scenario = generate_scenario(
        args.kind,
        args.agents,
        args.seed if args.seed is not None else 0,
        tau=args.tau if args.tau is not None else 0.001,
        max_steps=args.max_steps if args.max_steps is not None else 1_000_000,
        mode=Mode(args.mode) if args.mode is not None else Mode.GLOBAL,
    )
    save(scenario, args.out)
    print(f"wrote {args.out} ({scenario.name}: {scenario.n_agents} agents, dim {scenario.dim})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cubemorph",
        description="Self-reconfiguring lattice agents: simulate, plan, verify.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario")
    _add_scenario_args(p)
    p.add_argument("--out", metavar="DIR", help="write trace JSON and potential curve CSV here")
    p.add_argument("--full-budget", action="store_true",
                   help="keep sampling after the target is covered")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plan", help="deterministic motion plan for a scenario")
    _add_scenario_args(p)
    p.add_argument("--out", metavar="FILE", help="write the plan JSON here (default stdout)")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("oracle", help="exact stationary-distribution check")
    p.add_argument("--agents", type=int, default=2, help="number of agents")
    p.add_argument("--bounds", default="3x3",
                   help="environment size, WxH or WxHxL (L layers above ground)")
    p.add_argument("--tau", type=float, default=0.5, help="temperature")
    p.add_argument("--cap", type=int, default=20_000, help="state enumeration cap")
    p.add_argument("--scenario", metavar="FILE",
                   help="check this scenario's bounds/target instead")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("sweep", help="grid of generated runs into a CSV")
    p.add_argument("--kinds", default=",".join(GENERATOR_KINDS),
                   help="comma-separated generator kinds")
    p.add_argument("--sizes", default="4,8", help="comma-separated agent counts")
    p.add_argument("--seeds", default="5", help="seed count, or comma-separated seeds")
    p.add_argument("--tau", type=float, default=0.001)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.add_argument("--out", metavar="FILE", help="CSV output path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen", help="write a generated scenario JSON")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--out", metavar="FILE", required=True)
    p.set_defaults(func=_cmd_gen)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, DomainError, PlannerError, StateCapError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
