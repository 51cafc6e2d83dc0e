"""Scenario files: a complete reconfiguration problem instance.

A scenario bundles the environment bounds, the initial and target cell
sets, and the learning parameters. The on-disk form is canonical JSON
(sorted keys, two-space indent, trailing newline) so that save -> load ->
save is byte-identical. Validation failures carry a stable ``code`` so
callers and the command line can distinguish error classes.

``generate_scenario`` builds reproducible random instances: connected
shapes grown cell by cell from a seeded generator, in four styles
(flat-to-flat, flat-to-volume, volume-to-flat, volume-to-volume).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Set, Tuple, Union

from .game import TargetConfiguration
from .lattice import (
    CellPos,
    Configuration,
    DomainError,
    EnvBounds,
    axis_directions,
    is_configuration_grounded,
)
from .learning import LearningParams, Mode
from .rng import SplitMix64

GENERATOR_KINDS = ("2Dto2D", "2Dto3D", "3Dto2D", "3Dto3D")

_SHAPE_OFFSET = 10
_MARGIN = 3


class ScenarioError(ValueError):
    """Invalid scenario content; ``code`` is a stable machine-readable tag."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Scenario:
    name: str
    bounds: EnvBounds
    initial: Configuration
    target: TargetConfiguration
    params: LearningParams

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def n_agents(self) -> int:
        return self.initial.n_agents

    def with_params(self, **kw) -> "Scenario":
        return replace(self, params=replace(self.params, **kw))

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "bounds": {"min": list(self.bounds.lower), "max": list(self.bounds.upper)},
            "initial": [list(c) for c in self.initial.positions],
            "target": [list(c) for c in self.target.cells],
            "params": {
                "tau": self.params.tau,
                "seed": self.params.seed,
                "max_steps": self.params.max_steps,
                "mode": self.params.mode.value,
            },
        }


def _require(obj: dict, field: str, where: str):
    if field not in obj:
        raise ScenarioError("missing-field", f"{where} lacks required field '{field}'")
    return obj[field]


def _parse_cell(raw, dim: int, where: str) -> CellPos:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != dim
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
    ):
        raise ScenarioError(
            "bad-cell", f"{where}: {raw!r} is not a length-{dim} integer cell"
        )
    return tuple(raw)


def _parse_cells(raw, dim: int, where: str) -> List[CellPos]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("bad-cell", f"{where} must be a non-empty list of cells")
    return [_parse_cell(c, dim, f"{where}[{i}]") for i, c in enumerate(raw)]


def from_json_obj(obj: dict) -> Scenario:
    """Build and fully validate a scenario from parsed JSON."""
    if not isinstance(obj, dict):
        raise ScenarioError("malformed-json", "top level must be an object")
    name = _require(obj, "name", "scenario")
    if not isinstance(name, str) or not name:
        raise ScenarioError("missing-field", "name must be a non-empty string")
    dim = _require(obj, "dim", "scenario")
    if dim not in (2, 3):
        raise ScenarioError("bad-dimension", f"dim must be 2 or 3, got {dim!r}")

    braw = _require(obj, "bounds", "scenario")
    if not isinstance(braw, dict):
        raise ScenarioError("bad-bounds", "bounds must be an object")
    lo = _parse_cell(_require(braw, "min", "bounds"), dim, "bounds.min")
    hi = _parse_cell(_require(braw, "max", "bounds"), dim, "bounds.max")
    try:
        bounds = EnvBounds(lo, hi)
    except DomainError as e:
        raise ScenarioError("bad-bounds", str(e)) from e

    initial_cells = _parse_cells(_require(obj, "initial", "scenario"), dim, "initial")
    target_cells = _parse_cells(_require(obj, "target", "scenario"), dim, "target")
    if len(set(initial_cells)) != len(initial_cells):
        raise ScenarioError("duplicate-cell", "initial contains repeated cells")
    if len(set(target_cells)) != len(target_cells):
        raise ScenarioError("duplicate-cell", "target contains repeated cells")
    if len(target_cells) != len(initial_cells):
        raise ScenarioError(
            "target-size",
            f"target has {len(target_cells)} cells for {len(initial_cells)} agents",
        )
    for c in initial_cells + target_cells:
        if not bounds.contains_agent(c):
            raise ScenarioError("out-of-bounds", f"cell {c} is not an agent cell of the bounds")

    try:
        initial = Configuration(tuple(initial_cells))
        target = TargetConfiguration.from_iterable(target_cells)
    except DomainError as e:
        raise ScenarioError("bad-cell", str(e)) from e

    if dim == 3:
        if not is_configuration_grounded(initial, bounds):
            raise ScenarioError("ungrounded", "initial configuration is not grounded")
        if not is_configuration_grounded(Configuration(target.cells), bounds):
            raise ScenarioError("ungrounded-target", "target configuration is not grounded")
        base = (bounds.upper[0] - bounds.lower[0] + 1) * (bounds.upper[1] - bounds.lower[1] + 1)
        if base < len(initial_cells):
            raise ScenarioError(
                "layer1-capacity",
                f"layer z = 1 has {base} cells but there are {len(initial_cells)} agents",
            )

    praw = _require(obj, "params", "scenario")
    if not isinstance(praw, dict):
        raise ScenarioError("bad-params", "params must be an object")
    try:
        params = LearningParams(
            tau=float(_require(praw, "tau", "params")),
            seed=int(_require(praw, "seed", "params")),
            max_steps=int(_require(praw, "max_steps", "params")),
            mode=Mode(_require(praw, "mode", "params")),
        )
    except ScenarioError:
        raise
    except (DomainError, ValueError, TypeError) as e:
        raise ScenarioError("bad-params", str(e)) from e

    return Scenario(name, bounds, initial, target, params)


def loads(text: str) -> Scenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError("malformed-json", str(e)) from e
    return from_json_obj(obj)


def load(path: Union[str, Path]) -> Scenario:
    return loads(Path(path).read_text())


def dumps(scenario: Scenario) -> str:
    return json.dumps(scenario.to_json_obj(), indent=2, sort_keys=True) + "\n"


def save(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(scenario))


def _grow_shape(n: int, dim: int, rng: SplitMix64) -> List[CellPos]:
    """Connected shape of n cells grown cell by cell from the origin cell,
    choosing uniformly among the axis-adjacent frontier. 3D shapes grow
    upward from layer 1 and stay grounded by construction."""
    start: CellPos = (0, 0) if dim == 2 else (0, 0, 1)
    cells: Set[CellPos] = {start}
    dirs = axis_directions(dim)
    while len(cells) < n:
        frontier = sorted(
            {
                tuple(c + d for c, d in zip(cell, delta))
                for cell in cells
                for delta in dirs
            }
            - cells
        )
        if dim == 3:
            frontier = [c for c in frontier if c[2] >= 1]
        cells.add(frontier[rng.randbelow(len(frontier))])
    return sorted(cells)


def _lift(cells: Sequence[CellPos]) -> List[CellPos]:
    return [(c[0], c[1], 1) for c in cells]


def _offset(cells: Sequence[CellPos], dx: int) -> List[CellPos]:
    return [(c[0] + dx,) + tuple(c[1:]) for c in cells]


def generate_scenario(
    kind: str,
    n_agents: int,
    seed: int,
    tau: float = 0.001,
    max_steps: int = 1_000_000,
    mode: Union[str, Mode] = Mode.GLOBAL,
) -> Scenario:
    """Reproducible random instance of one of the four generator kinds.

    The kind names the initial and target shape styles: a ``2D`` side is
    a flat shape (in a 3D world it sits in layer z = 1), a ``3D`` side is
    a grounded volume. Only ``2Dto2D`` produces a 2-dimensional world.
    The target is the initial shape translated sideways for same-style
    kinds, and a freshly grown shape placed sideways otherwise. Bounds
    pad the union of both shapes by a 3-cell margin (z up to two above
    the tallest shape).
    """
    if kind not in GENERATOR_KINDS:
        raise ScenarioError(
            "bad-params", f"kind must be one of {GENERATOR_KINDS}, got {kind!r}"
        )
    if n_agents < 1:
        raise ScenarioError("bad-params", "n_agents must be at least 1")
    rng = SplitMix64(seed)
    src_style, dst_style = kind.split("to")
    dim = 2 if kind == "2Dto2D" else 3

    initial = _grow_shape(n_agents, 2 if src_style == "2D" else 3, rng)
    if dim == 3 and src_style == "2D":
        initial = _lift(initial)
    if src_style == dst_style:
        target = _offset(initial, _SHAPE_OFFSET)
    else:
        target = _grow_shape(n_agents, 2 if dst_style == "2D" else 3, rng)
        if dim == 3 and dst_style == "2D":
            target = _lift(target)
        target = _offset(target, _SHAPE_OFFSET)

    all_cells = initial + target
    xs = [c[0] for c in all_cells]
    ys = [c[1] for c in all_cells]
    if dim == 2:
        bounds = EnvBounds(
            (min(xs) - _MARGIN, min(ys) - _MARGIN),
            (max(xs) + _MARGIN, max(ys) + _MARGIN),
        )
    else:
        zs = [c[2] for c in all_cells]
        bounds = EnvBounds(
            (min(xs) - _MARGIN, min(ys) - _MARGIN, 0),
            (max(xs) + _MARGIN, max(ys) + _MARGIN, max(zs) + 2),
        )

    name = f"{kind}-n{n_agents}-s{seed}"
    params = LearningParams(tau=tau, seed=seed, max_steps=max_steps, mode=Mode(mode))
    scenario = Scenario(
        name,
        bounds,
        Configuration(tuple(initial)),
        TargetConfiguration.from_iterable(target),
        params,
    )
    # Round through the validator so generated instances obey the same
    # contract as loaded ones.
    return from_json_obj(scenario.to_json_obj())
