"""Named experiment presets.

The aggregation presets share one documented bell-shaped initial profile
(the qualitative behaviour - plateau formation, edge values, coarsening
order - is what they reproduce; exact event times depend on the datum).
Snapshot schedules follow the corresponding figure panels of the study
each preset mirrors.
"""

from __future__ import annotations

from .config import RunConfig, config_from_dict

_BASE_PARAMS = {"alpha": 0.95, "chi0": 16.0, "L": 8.0}
_BELL = {"kind": "bell", "baseline": 0.2, "amplitude": 0.05, "width": 0.8}
_FIG4_SNAPS = [0.0, 1.0911, 1.1356, 2.0, 8.6778, 9.344]

_PRESETS: dict[str, tuple[str, dict]] = {
    "fig2": (
        "aggregation from a small bell profile, n=400: oscillations then a "
        "single sharp plateau with edges near the configured jump values",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 400},
            "initial": _BELL,
            "t_end": 7.0,
            "snapshot_times": [0.0, 1.3, 1.38, 1.8, 6.0, 7.0],
            "track_onset": True,
        },
    ),
    "fig3": (
        "same data as fig2 on n=800: oscillations appear earlier and at a "
        "lower density level, edge values closer to the jump pair",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 800},
            "initial": _BELL,
            "t_end": 7.6,
            "snapshot_times": [0.0, 1.1675, 1.255, 1.805, 7.2, 7.6],
            "track_onset": True,
        },
    ),
    "fig4": (
        "same data as fig2 on n=1200: onset level closer still to the lower "
        "edge of the unstable interval",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 1200},
            "initial": _BELL,
            "t_end": 9.344,
            "snapshot_times": _FIG4_SNAPS,
            "track_onset": True,
        },
    ),
    "fig5": (
        "macroscopic coarsening: a wide plateau absorbs a much narrower "
        "neighbour, ending with a single plateau",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 400},
            "initial": {
                "kind": "two-plateau",
                "baseline": 0.05,
                "height": 0.99,
                "centers": [3.0, 5.2],
                "widths": [1.6, 0.5],
                "edge": 0.03,
            },
            "t_end": 18.0,
            "snapshot_times": [0.0, 8.0, 13.0, 18.0],
        },
    ),
    "fig6": (
        "low-mass profile converging to a smooth bell steady state below "
        "the unstable interval",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 400},
            "initial": {
                "kind": "bell",
                "baseline": 0.1,
                "amplitude": 0.15,
                "width": 1.0,
            },
            "t_end": 12.0,
            "snapshot_times": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
        },
    ),
    "fig7": (
        "a thin high-density region persists although the uniform state "
        "with the same (small) mass is locally stable",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 400},
            "initial": {
                "kind": "spike-on-flat",
                "baseline": 0.01,
                "height": 0.99,
                "width": 0.25,
                "edge": 0.025,
            },
            "t_end": 1.1111,
            "snapshot_times": [0.0, 0.2222, 0.6667, 1.1111],
        },
    ),
    "fig8": (
        "fig4 run stopped at first contact with the unstable interval, then "
        "continued by the three-phase moving-boundary solver",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 1200},
            "initial": _BELL,
            "t_end": 9.344,
            "snapshot_times": [],
            "stop_on_hit": True,
            "continue_with_stefan": {
                "nodes_per_phase": 100,
                "t_end": 9.344,
                "snapshot_times": _FIG4_SNAPS[1:],
            },
        },
    ),
    "fig9": (
        "fig8 plus the direct n=1200 run at synchronized snapshot times, "
        "with an overlay comparison of the two solutions",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 1200},
            "initial": _BELL,
            "t_end": 9.344,
            "snapshot_times": _FIG4_SNAPS,
            "stop_on_hit": True,
            "also_run_direct": True,
            "continue_with_stefan": {
                "nodes_per_phase": 100,
                "t_end": 9.344,
                "snapshot_times": _FIG4_SNAPS[1:],
            },
        },
    ),
    "onset": (
        "flat-topped profile pushed into the unstable interval: records the "
        "time and density level at which grid oscillations first appear",
        {
            "solver": "continuum",
            "params": _BASE_PARAMS,
            "grid": {"n": 400},
            "initial": {
                "kind": "bell",
                "baseline": 0.2,
                "amplitude": 0.1,
                "width": 1.8,
                "shape": 4,
            },
            "t_end": 2.6,
            "snapshot_times": [0.0, 2.6],
            "track_onset": True,
        },
    ),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_description(name: str) -> str:
    return _PRESETS[name][0]


def load_preset(name: str, *, n_override: int | None = None) -> RunConfig:
    if name not in _PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        )
    _, raw = _PRESETS[name]
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    if n_override is not None:
        raw["grid"] = dict(raw.get("grid", {}), n=int(n_override))
    return config_from_dict(raw)
