"""Simultaneous calibration and navigation of ultrasonic beacon clusters.

Scenarios are plain dicts in the same JSON layout the ``scan`` command-line
tool reads. Any function taking a ``scenario`` also accepts a path to a JSON
file, or ``None`` for the built-in default.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Mapping, Sequence, Union

from . import _core
from ._core import (
    CalibrationError,
    FilterError,
    PositioningError,
    ScanError,
    ScenarioError,
    SimulationError,
)

__all__ = [
    "CalibrationError",
    "FilterError",
    "PositioningError",
    "ScanError",
    "ScenarioError",
    "SimulationError",
    "analytical_tc",
    "compute_cdf",
    "default_scenario",
    "gauss_newton_fix",
    "load_scenario",
    "monte_carlo",
    "run",
    "simulate",
    "sweep_dmin",
    "transform_point",
]

ScenarioLike = Union[None, str, os.PathLike, Mapping[str, Any]]


def default_scenario() -> dict:
    """The built-in L-shaped corridor scenario."""
    return json.loads(_core.default_scenario())


def load_scenario(scenario: ScenarioLike) -> dict:
    """Validates a scenario and returns it with every field filled in."""
    return json.loads(_core.normalize_scenario(_to_text(scenario)))


def simulate(scenario: ScenarioLike = None) -> list:
    """Ground-truth poses, odometry and ultrasound observations per epoch."""
    return json.loads(_core.simulate(_to_text(scenario)))


def run(
    scenario: ScenarioLike = None,
    *,
    filter: str = "ekf",
    method: str = "analytical",
    inverse: bool = False,
    seed: int | None = None,
) -> dict:
    """Simulates and runs the pipeline once.

    Returns ``summary`` and ``calibration`` dicts, the global ``trajectory`` as
    an (N, 7) array of epoch, estimated x, y, theta and true x, y, theta, and
    the run's ``warnings``.
    """
    text = _to_text(scenario, seed=seed)
    out = _core.run(text, filter, method, inverse)
    return {
        "summary": json.loads(out["summary"]),
        "calibration": json.loads(out["calibration"]),
        "trajectory": out["trajectory"],
        "warnings": list(out["warnings"]),
    }


def monte_carlo(
    scenario: ScenarioLike = None,
    *,
    runs: int = 100,
    filter: str = "ekf",
    method: str = "analytical",
    inverse: bool = False,
    seed: int | None = None,
    threads: int = 0,
) -> dict:
    """Seeded batch of runs (seeds ``seed``, ``seed + 1``, ...) with aggregate statistics."""
    text = _to_text(scenario)
    base = _scenario_seed(text) if seed is None else seed
    return json.loads(_core.monte_carlo(text, filter, method, inverse, runs, base, threads))


def sweep_dmin(
    scenario: ScenarioLike = None,
    *,
    values: Iterable[float] = (0.5, 1.5, 2.5, 5.0),
    runs: int = 100,
    filter: str = "ekf",
    method: str = "analytical",
    inverse: bool = False,
    seed: int | None = None,
    threads: int = 0,
) -> list:
    """One Monte Carlo batch per ``d_min`` value."""
    text = _to_text(scenario)
    base = _scenario_seed(text) if seed is None else seed
    return json.loads(
        _core.sweep_dmin(text, filter, method, inverse, list(values), runs, base, threads)
    )


def gauss_newton_fix(
    values: Sequence[float],
    beacons: Sequence[Sequence[float]],
    *,
    z_mr: float = 0.5,
    mode: str = "spherical",
    init: Sequence[float] = (0.0, 0.0),
) -> dict:
    """Static position fix from one cluster's ranges or range differences."""
    return _core.gauss_newton_fix(list(values), [tuple(b) for b in beacons], z_mr, mode, tuple(init))


def analytical_tc(local_a, global_a, local_b, global_b) -> tuple:
    """Similarity transform (t1, t2, t3, t4) through two point correspondences."""
    return tuple(_core.analytical_tc(local_a, global_a, local_b, global_b))


def transform_point(point, transform) -> tuple:
    """Maps a local point into the global frame."""
    return tuple(_core.transform_point(point, transform))


def compute_cdf(samples: Iterable[float]):
    """Sorted errors and their cumulative fractions."""
    return _core.compute_cdf(list(samples))


def _to_text(scenario: ScenarioLike, seed: int | None = None) -> str:
    if scenario is None:
        data = default_scenario()
    elif isinstance(scenario, (str, os.PathLike)):
        try:
            with open(scenario, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file {scenario}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file {scenario} is not valid JSON: {exc}") from exc
    else:
        data = dict(scenario)
    if seed is not None:
        data["seed"] = seed
    return json.dumps(data)


def _scenario_seed(text: str) -> int:
    return int(json.loads(_core.normalize_scenario(text))["seed"])
