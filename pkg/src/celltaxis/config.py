"""Run configuration: YAML schema, validation, and round-trip echo.

Validation is strict: unknown keys are rejected and every numeric range
is checked before a solver starts, with error messages naming the
offending key.  The echoed config in a run's metadata is sufficient to
reproduce the run exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grids import Grid1D
from .initial import KINDS as INITIAL_KINDS
from .initial import InitialCondition
from .model import DomainError, ModelParams

SOLVERS = ("lattice", "continuum", "stefan", "steady", "stability")


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_float(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(value)


def _check_keys(d: dict, allowed: set[str], context: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {context}: {', '.join(sorted(map(str, unknown)))}"
        )


@dataclass
class StefanStage:
    nodes_per_phase: int = 100
    t_end: float | None = None
    snapshot_times: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"nodes_per_phase": self.nodes_per_phase}
        if self.t_end is not None:
            out["t_end"] = self.t_end
        if self.snapshot_times:
            out["snapshot_times"] = list(self.snapshot_times)
        return out


@dataclass
class RunConfig:
    solver: str
    params: ModelParams
    n: int = 400
    nodes_per_phase: int = 100
    initial: InitialCondition | None = None
    t_end: float = 0.0
    snapshot_times: list[float] = field(default_factory=list)
    stop_on_hit: bool = False
    track_onset: bool = False
    method: str = "rk2"
    deterministic: bool = True
    continue_with_stefan: StefanStage | None = None
    also_run_direct: bool = False
    steady: dict | None = None
    stability: dict | None = None
    handoff: dict | None = None

    def grid(self) -> Grid1D:
        return Grid1D(self.n, self.params.L)

    def to_dict(self) -> dict:
        """Config echo: everything needed to reproduce the run."""
        out = {
            "solver": self.solver,
            "params": {
                "alpha": self.params.alpha,
                "chi0": self.params.chi0,
                "L": self.params.L,
                "jump_low": self.params.jump_low,
                "jump_high": self.params.jump_high,
            },
            "grid": {"n": self.n},
            "t_end": self.t_end,
            "snapshot_times": list(self.snapshot_times),
            "method": self.method,
            "deterministic": True,
        }
        if self.solver == "stefan":
            out["grid"]["nodes_per_phase"] = self.nodes_per_phase
        if self.initial is not None:
            out["initial"] = {"kind": self.initial.kind, **self.initial.options}
        if self.stop_on_hit:
            out["stop_on_hit"] = True
        if self.track_onset:
            out["track_onset"] = True
        if self.continue_with_stefan is not None:
            out["continue_with_stefan"] = self.continue_with_stefan.to_dict()
        if self.also_run_direct:
            out["also_run_direct"] = True
        for key in ("steady", "stability", "handoff"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


_TOP_KEYS = {
    "solver",
    "params",
    "grid",
    "initial",
    "t_end",
    "snapshot_times",
    "stop_on_hit",
    "track_onset",
    "method",
    "deterministic",
    "continue_with_stefan",
    "also_run_direct",
    "steady",
    "stability",
    "handoff",
}


def config_from_dict(raw: dict) -> RunConfig:
    _require(isinstance(raw, dict), "config root must be a mapping")
    _check_keys(raw, _TOP_KEYS, "config")

    solver = raw.get("solver")
    _require(solver in SOLVERS, f"solver must be one of {SOLVERS}, got {solver!r}")

    praw = raw.get("params")
    _require(isinstance(praw, dict), "params must be a mapping")
    _check_keys(praw, {"alpha", "chi0", "L", "jump_low", "jump_high"}, "params")
    for key in ("alpha", "chi0", "L"):
        _require(key in praw, f"params.{key} is required")
    kwargs = {k: _as_float(v, f"params.{k}") for k, v in praw.items()}
    try:
        params = ModelParams(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"params: {exc}") from exc

    graw = raw.get("grid", {})
    _require(isinstance(graw, dict), "grid must be a mapping")
    _check_keys(graw, {"n", "nodes_per_phase"}, "grid")
    n = _as_int(graw.get("n", 400), "grid.n")
    _require(n >= 3, f"grid.n must be >= 3, got {n}")
    npp = _as_int(graw.get("nodes_per_phase", 100), "grid.nodes_per_phase")
    _require(npp >= 8, f"grid.nodes_per_phase must be >= 8, got {npp}")

    initial = None
    if "initial" in raw:
        iraw = raw["initial"]
        _require(isinstance(iraw, dict), "initial must be a mapping")
        kind = iraw.get("kind")
        _require(
            kind in INITIAL_KINDS,
            f"initial.kind must be one of {INITIAL_KINDS}, got {kind!r}",
        )
        options = {k: v for k, v in iraw.items() if k != "kind"}
        initial = InitialCondition(kind, options)

    t_end = _as_float(raw.get("t_end", 0.0), "t_end")
    _require(t_end >= 0.0, f"t_end must be >= 0, got {t_end}")
    snaps = raw.get("snapshot_times", [])
    _require(isinstance(snaps, list), "snapshot_times must be a list")
    snap_times = [_as_float(s, "snapshot_times[]") for s in snaps]
    _require(
        all(0.0 <= s <= t_end for s in snap_times) or solver in ("steady", "stability"),
        "snapshot_times must lie within [0, t_end]",
    )
    _require(
        snap_times == sorted(snap_times), "snapshot_times must be sorted ascending"
    )

    method = raw.get("method", "rk2")
    _require(method in ("rk2", "euler"), f"method must be rk2 or euler, got {method!r}")

    deterministic = raw.get("deterministic", True)
    _require(
        deterministic is True,
        "deterministic must be true: the pipeline has no random elements",
    )

    stefan_stage = None
    if "continue_with_stefan" in raw:
        _require(
            solver == "continuum" and bool(raw.get("stop_on_hit")),
            "continue_with_stefan requires solver=continuum with stop_on_hit=true",
        )
        sraw = raw["continue_with_stefan"]
        _require(isinstance(sraw, dict), "continue_with_stefan must be a mapping")
        _check_keys(
            sraw, {"nodes_per_phase", "t_end", "snapshot_times"}, "continue_with_stefan"
        )
        stefan_stage = StefanStage(
            nodes_per_phase=_as_int(
                sraw.get("nodes_per_phase", 100), "continue_with_stefan.nodes_per_phase"
            ),
            t_end=_as_float(sraw["t_end"], "continue_with_stefan.t_end")
            if "t_end" in sraw
            else None,
            snapshot_times=[
                _as_float(s, "continue_with_stefan.snapshot_times[]")
                for s in sraw.get("snapshot_times", [])
            ],
        )

    for key, needed in (("steady", "steady"), ("stability", "stability")):
        if raw.get(key) is not None:
            _require(
                solver == needed, f"{key} section only applies to solver={needed}"
            )
    if solver == "steady":
        sraw = raw.get("steady")
        _require(isinstance(sraw, dict), "solver=steady requires a steady section")
        _check_keys(sraw, {"C", "n_half_periods", "branch", "n"}, "steady")
        _require("C" in sraw, "steady.C is required")
        _as_float(sraw["C"], "steady.C")
    if solver == "stability":
        sraw = raw.get("stability")
        _require(isinstance(sraw, dict), "solver=stability requires a stability section")
        _check_keys(sraw, {"rho_bar", "modes"}, "stability")
        _require("rho_bar" in sraw, "stability.rho_bar is required")
        rb = _as_float(sraw["rho_bar"], "stability.rho_bar")
        _require(0.0 <= rb <= 1.0, "stability.rho_bar must lie in [0, 1]")

    handoff = raw.get("handoff")
    if solver == "stefan":
        _require(
            isinstance(handoff, dict),
            "solver=stefan requires a handoff section with the serialized state",
        )
        _check_keys(
            handoff, {"t_c", "x_c", "node", "rho", "grid"}, "handoff"
        )
        for key in ("t_c", "x_c", "node", "rho", "grid"):
            _require(key in handoff, f"handoff.{key} is required")
        _require(isinstance(handoff["rho"], list), "handoff.rho must be a list")
        _require(
            len(handoff["rho"]) == _as_int(handoff["grid"].get("n"), "handoff.grid.n"),
            "handoff.rho length must equal handoff.grid.n",
        )
    elif handoff is not None:
        raise ConfigError("handoff section only applies to solver=stefan")

    if solver in ("lattice", "continuum"):
        _require(initial is not None, f"solver={solver} requires an initial section")
    if raw.get("stop_on_hit"):
        _require(
            solver == "continuum", "stop_on_hit only applies to solver=continuum"
        )
        _require(
            params.alpha > 0.75, "stop_on_hit requires alpha > 3/4"
        )

    return RunConfig(
        solver=solver,
        params=params,
        n=n,
        nodes_per_phase=npp,
        initial=initial,
        t_end=t_end,
        snapshot_times=snap_times,
        stop_on_hit=bool(raw.get("stop_on_hit", False)),
        track_onset=bool(raw.get("track_onset", False)),
        method=method,
        deterministic=True,
        continue_with_stefan=stefan_stage,
        also_run_direct=bool(raw.get("also_run_direct", False)),
        steady=raw.get("steady"),
        stability=raw.get("stability"),
        handoff=handoff,
    )


def load_config(path: str | Path) -> RunConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"could not parse {path}: {exc}") from exc
    return config_from_dict(raw)
