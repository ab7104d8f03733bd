"""Command-line interface: run experiments, hand runs off to the
moving-boundary solver, list presets, and emit plot scripts.

Exit codes: 0 success, 1 solver abort (partial outputs flagged in the
summary), 2 configuration/validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, RunConfig, config_from_dict, load_config
from .continuum import (
    SimResult,
    count_plateaus,
    detect_plateau_edges,
    simulate_continuum,
)
from .elliptic import ChemoattractantSolver
from .grids import Field, Grid1D
from .initial import InitialCondition
from .lattice import simulate_lattice
from .model import ModelParams, dispersion_rate, stability_predicates, unstable_interval
from .presets import load_preset, preset_description, preset_names
from .snapshots import SnapshotRecord, SnapshotSeries, read_series, write_series
from .steady import construct_smooth_steady, verify_weak_steady
from .stefan import StefanAbort, assemble_global, insert_spike, simulate_stefan

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2


def _metadata(config: RunConfig) -> dict:
    iv = unstable_interval(config.params)
    return {
        "tool": "celltaxis",
        "version": __version__,
        "config": config.to_dict(),
        "grid": {"n": config.n, "L": config.params.L, "h": config.grid().h},
        "unstable_interval": [iv.lo, iv.hi] if iv else None,
    }


def _diag_summary(diag) -> dict:
    return diag.as_dict()


def _edges_summary(state, params) -> dict:
    edges = detect_plateau_edges(state, params)
    return {
        "plateau_edges": [
            {"x": e[0], "left": e[1], "right": e[2]} for e in edges
        ],
        "plateau_count": count_plateaus(state, params),
    }


def _run_field_solver(config: RunConfig, outdir: Path) -> int:
    grid = config.grid()
    initial = config.initial.build(grid)
    series = SnapshotSeries(_metadata(config), grid)

    if config.solver == "lattice":
        result = simulate_lattice(
            initial, config.params, config.t_end, config.snapshot_times,
            method=config.method,
        )
        states, diag, hit = result.states, result.diagnostics, None
    else:
        result = simulate_continuum(
            initial,
            config.params,
            config.t_end,
            config.snapshot_times,
            stop_on_hit=config.stop_on_hit,
            method=config.method,
            track_onset=config.track_onset,
        )
        states, diag, hit = result.states, result.diagnostics, result.hit

    for st in states:
        series.append(
            SnapshotRecord(
                t=st.t,
                rho=st.rho.values,
                S=st.S.values,
                diagnostics={"mass": st.rho.discrete_mass()},
            )
        )

    summary = {
        "solver": config.solver,
        "diagnostics": _diag_summary(diag),
        "final_mass": diag.mass_final,
        "events": {},
    }
    if states:
        summary.update(_edges_summary(states[-1], config.params))
    if hit is not None:
        summary["events"]["hit"] = {
            "t_c": hit.t_c,
            "x_c": hit.x_c,
            "node": hit.node,
        }
        hs = result.hit_state
        series.append(
            SnapshotRecord(
                t=hs.t,
                rho=hs.rho.values,
                S=hs.S.values,
                diagnostics={"mass": hs.rho.discrete_mass(), "hit_state": True},
            )
        )
    write_series(series, outdir, summary)

    status = EXIT_OK
    if diag.dt_underflow:
        summary["partial"] = True
        write_series(series, outdir, summary)
        status = EXIT_SOLVER

    if config.continue_with_stefan is not None and hit is not None:
        stage = config.continue_with_stefan
        stefan_dir = outdir / "stefan"
        status = max(
            status,
            _run_stefan_from_state(
                config, result, stage.nodes_per_phase,
                stage.t_end if stage.t_end is not None else config.t_end,
                stage.snapshot_times, stefan_dir,
            ),
        )
        if config.also_run_direct:
            direct_dir = outdir / "direct"
            direct_cfg_dict = config.to_dict()
            direct_cfg_dict.pop("stop_on_hit", None)
            direct_cfg_dict.pop("continue_with_stefan", None)
            direct_cfg_dict.pop("also_run_direct", None)
            direct_cfg = config_from_dict(direct_cfg_dict)
            status = max(status, _run_field_solver(direct_cfg, direct_dir))
            _write_comparison(outdir, stefan_dir, direct_dir, config.params)
    return status


def _run_stefan_from_state(
    config: RunConfig, result: SimResult, nodes_per_phase, t_end, snaps, outdir: Path
) -> int:
    decomp = insert_spike(
        result.hit_state, result.hit, config.params, nodes_per_phase=nodes_per_phase
    )
    grid = result.hit_state.rho.grid
    return _write_stefan_run(config, decomp, grid, t_end, snaps, outdir)


def _write_stefan_run(config, decomp, grid, t_end, snaps, outdir: Path) -> int:
    params = config.params
    aborted = False
    try:
        res = simulate_stefan(decomp, params, t_end, snaps, grid)
    except StefanAbort as exc:
        res = exc.result
        aborted = True
    series = SnapshotSeries(_metadata(config), grid)
    solver = ChemoattractantSolver(grid)
    for snap in res.snapshots:
        rho_g = assemble_global(snap.decomposition, grid)
        series.append(
            SnapshotRecord(
                t=snap.t,
                rho=rho_g,
                S=snap.S.values,
                diagnostics={"mass": snap.mass},
                boundaries=[float(b) for b in snap.boundaries],
            )
        )
    d = res.diagnostics
    summary = {
        "solver": "stefan",
        "diagnostics": {
            "steps": d.steps,
            "dt_min": d.dt_min,
            "dt_max": d.dt_max,
            "mass_initial": d.mass_initial,
            "mass_final": d.mass_final,
            "rel_mass_drift": d.rel_mass_drift,
            "low_phase_max_seen": d.low_phase_max_seen,
            "dt_underflow": d.dt_underflow,
        },
        "events": {
            "insertions": d.insertions,
            "collapses": d.collapses,
        },
        "final_boundaries": [float(b) for b in res.final.boundaries],
        "partial": aborted,
    }
    write_series(series, outdir, summary)
    return EXIT_SOLVER if aborted else EXIT_OK


def _write_comparison(outdir: Path, stefan_dir: Path, direct_dir: Path, params):
    """Overlay record: L1 differences between the two solutions away from
    the plateau edges, at synchronized snapshot times."""
    stefan = read_series(stefan_dir)
    direct = read_series(direct_dir)
    grid = direct.grid
    x = grid.x
    rows = []
    for srec in stefan.snapshots:
        match = [d for d in direct.snapshots if abs(d.t - srec.t) < 1e-9]
        if not match:
            continue
        drec = match[0]
        exclusion = list(srec.boundaries or [])
        for pos, _, _ in detect_plateau_edges(Field(grid, drec.rho), params):
            exclusion.append(pos)
        mask = np.ones(grid.n, dtype=bool)
        for pos in exclusion:
            mask &= np.abs(x - pos) > 0.5
        l1 = float(np.trapezoid(np.abs(srec.rho - drec.rho) * mask, dx=grid.h))
        total = float(np.trapezoid(drec.rho, dx=grid.h))
        rows.append(
            {"t": srec.t, "l1_far_field": l1, "total_mass": total,
             "l1_over_mass": l1 / total if total else None}
        )
    with open(outdir / "comparison.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def _run_steady(config: RunConfig, outdir: Path) -> int:
    opts = dict(config.steady)
    profile = construct_smooth_steady(
        float(opts["C"]),
        config.params.L,
        int(opts.get("n_half_periods", 1)),
        config.params,
        n=int(opts.get("n", 2001)),
        branch=opts.get("branch"),
    )
    grid = profile.rho.grid
    series = SnapshotSeries(_metadata(config), grid)
    series.append(
        SnapshotRecord(
            t=0.0, rho=profile.rho.values, S=profile.S.values,
            diagnostics={"mass": profile.rho.discrete_mass()},
        )
    )
    report = profile.residual
    summary = {
        "solver": "steady",
        "energy": profile.energy,
        "half_period": profile.half_period,
        "segments": [
            {"x_lo": s.x_lo, "x_hi": s.x_hi, "max_flux_residual": s.max_flux_residual,
             "relative": s.relative}
            for s in report.segments
        ],
        "jumps": [],
        "passed": report.passed,
    }
    write_series(series, outdir, summary)
    return EXIT_OK


def _run_stability(config: RunConfig, outdir: Path) -> int:
    opts = dict(config.stability)
    rho_bar = float(opts["rho_bar"])
    modes = [int(k) for k in opts.get("modes", [1, 2, 3, 4, 5, 6, 7, 8])]
    params = config.params
    iv = unstable_interval(params)
    preds = stability_predicates(rho_bar, params)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {
        "tool": "celltaxis",
        "version": __version__,
        "config": config.to_dict(),
        "rho_bar": rho_bar,
        "unstable_interval": [iv.lo, iv.hi] if iv else None,
        "predicates": preds,
        "dispersion": [
            {"k": k, "rate": dispersion_rate(k, rho_bar, params)} for k in modes
        ],
    }
    with open(outdir / "stability.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def _run_stefan_config(config: RunConfig, outdir: Path) -> int:
    from .continuum import HitEvent, SimState

    h = config.handoff
    grid = Grid1D(int(h["grid"]["n"]), float(h["grid"]["L"]))
    rho = np.asarray(h["rho"], dtype=float)
    solver = ChemoattractantSolver(grid)
    state = SimState(
        Field(grid, rho), Field(grid, solver.solve_values(rho)), float(h["t_c"])
    )
    hit = HitEvent(x_c=float(h["x_c"]), t_c=float(h["t_c"]), node=int(h["node"]))
    decomp = insert_spike(
        state, hit, config.params, nodes_per_phase=config.nodes_per_phase
    )
    return _write_stefan_run(
        config, decomp, grid, config.t_end, config.snapshot_times, outdir
    )


def run_config(config: RunConfig, outdir: Path) -> int:
    if config.solver in ("lattice", "continuum"):
        return _run_field_solver(config, outdir)
    if config.solver == "steady":
        return _run_steady(config, outdir)
    if config.solver == "stability":
        return _run_stability(config, outdir)
    if config.solver == "stefan":
        return _run_stefan_config(config, outdir)
    raise ConfigError(f"unhandled solver {config.solver!r}")


def make_handoff_config(run_dir: str | Path) -> dict:
    """Build a ready-to-run moving-boundary config from a finished run.

    The run must have stopped at a contact event (stop_on_hit); the hit
    state snapshot and event record are embedded verbatim.
    """
    run_dir = Path(run_dir)
    series = read_series(run_dir)
    with open(run_dir / "summary.json") as fh:
        summary = json.load(fh)
    hit = summary.get("events", {}).get("hit")
    if not hit:
        raise ConfigError(f"run at {run_dir} has no contact event to hand off")
    hit_snaps = [
        s for s in series.snapshots if s.diagnostics.get("hit_state")
    ]
    if not hit_snaps:
        raise ConfigError(f"run at {run_dir} has no stored hit state")
    state = hit_snaps[-1]
    cfg = series.metadata["config"]
    return {
        "solver": "stefan",
        "params": dict(cfg["params"]),
        "grid": {"n": cfg["grid"]["n"], "nodes_per_phase": 100},
        "t_end": cfg["t_end"],
        "snapshot_times": [],
        "handoff": {
            "t_c": hit["t_c"],
            "x_c": hit["x_c"],
            "node": hit["node"],
            "grid": {"n": cfg["grid"]["n"], "L": cfg["params"]["L"]},
            "rho": [float(v) for v in state.rho],
        },
    }


_PLOT_TEMPLATE = '''"""Auto-generated plot script: renders density and chemoattractant
snapshots with the unstable-interval boundaries as dotted lines."""

import csv
import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).parent
SNAPSHOTS = {snapshots!r}
UNSTABLE = {unstable!r}


def load(name):
    xs, rhos, Ss = [], [], []
    with open(HERE / name) as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["x"]))
            rhos.append(float(row["rho"]))
            Ss.append(float(row["S"]))
    return xs, rhos, Ss


def main():
    n = len(SNAPSHOTS)
    if n == 0:
        fig = plt.figure(figsize=(4, 3))
        fig.suptitle("empty series")
        fig.savefig(HERE / "figure.png", dpi=150)
        return
    cols = 2 if n > 1 else 1
    rows = math.ceil(n / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(5 * cols, 2.8 * rows),
                             squeeze=False)
    for i, (t, name) in enumerate(SNAPSHOTS):
        ax = axes[i // cols][i % cols]
        x, rho, S = load(name)
        ax.plot(x, rho, "b-", lw=1.0, label="rho")
        ax.plot(x, S, "g--", lw=0.8, label="S")
        if UNSTABLE is not None:
            for level in UNSTABLE:
                ax.axhline(level, color="k", ls=":", lw=0.8)
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(f"t = {{t:g}}")
        if i == 0:
            ax.legend(loc="upper right", fontsize=8)
    for j in range(n, rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.tight_layout()
    fig.savefig(HERE / "figure.png", dpi=150)


if __name__ == "__main__":
    main()
'''


def emit_plots(run_dir: str | Path) -> Path:
    """Write a standalone matplotlib script next to a run's data files."""
    run_dir = Path(run_dir)
    with open(run_dir / "series.json") as fh:
        index = json.load(fh)
    with open(run_dir / "metadata.json") as fh:
        metadata = json.load(fh)
    snaps = [(entry["t"], entry["file"]) for entry in index]
    script = _PLOT_TEMPLATE.format(
        snapshots=snaps, unstable=metadata.get("unstable_interval")
    )
    path = run_dir / "plot_series.py"
    path.write_text(script)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="celltaxis",
        description="1-d cell motility simulations: volume filling, adhesion, "
        "chemotaxis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file or named preset")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="YAML config file")
    src.add_argument("--preset", help="named preset (see 'presets')")
    p_run.add_argument("-o", "--output", required=True, help="output directory")
    p_run.add_argument(
        "--grid-override", type=int, default=None, metavar="N",
        help="override the grid node count",
    )

    p_hand = sub.add_parser(
        "handoff", help="emit a moving-boundary config from a stopped run"
    )
    p_hand.add_argument("run_dir", help="output directory of a stop_on_hit run")
    p_hand.add_argument("-o", "--output", required=True, help="config file to write")

    p_plot = sub.add_parser("plots", help="emit a plot script for a run directory")
    p_plot.add_argument("run_dir")

    sub.add_parser("presets", help="list available presets")

    args = parser.parse_args(argv)

    try:
        if args.command == "presets":
            for name in preset_names():
                print(f"{name:8s} {preset_description(name)}")
            return EXIT_OK

        if args.command == "plots":
            path = emit_plots(args.run_dir)
            print(path)
            return EXIT_OK

        if args.command == "handoff":
            cfg = make_handoff_config(args.run_dir)
            config_from_dict(cfg)  # validate before writing
            with open(args.output, "w") as fh:
                yaml.safe_dump(cfg, fh, sort_keys=False)
            print(args.output)
            return EXIT_OK

        # run
        if args.preset:
            try:
                config = load_preset(args.preset, n_override=args.grid_override)
            except KeyError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            config = load_config(args.config)
            if args.grid_override is not None:
                raw = config.to_dict()
                raw["grid"]["n"] = args.grid_override
                config = config_from_dict(raw)
        return run_config(config, Path(args.output))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
