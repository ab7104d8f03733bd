"""Snapshot series serialisation: CSV data files plus JSON metadata.

Layout of a run output directory:

    metadata.json   config echo, code version, grid and derived constants
    series.json     one record per snapshot: time, data file, diagnostics,
                    moving-boundary positions when applicable
    snap_NNNN.csv   per-snapshot node data, header ``x,rho,S``
    summary.json    final mass / drift, plateau edges, events

Everything is written with round-trip float formatting and no timestamps,
so identical configs produce byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grids import Field, Grid1D


@dataclass
class SnapshotRecord:
    t: float
    rho: np.ndarray
    S: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    boundaries: list[float] | None = None


@dataclass
class SnapshotSeries:
    metadata: dict
    grid: Grid1D
    snapshots: list[SnapshotRecord] = field(default_factory=list)

    def append(self, rec: SnapshotRecord) -> None:
        if self.snapshots and rec.t <= self.snapshots[-1].t:
            raise ValueError("snapshot times must be strictly increasing")
        if rec.rho.shape != (self.grid.n,) or rec.S.shape != (self.grid.n,):
            raise ValueError("snapshot value counts must match the grid")
        self.snapshots.append(rec)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_series(series: SnapshotSeries, outdir: str | Path, summary: dict) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    x = series.grid.x
    index = []
    for i, rec in enumerate(series.snapshots):
        name = f"snap_{i:04d}.csv"
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "rho", "S"])
            for xi, ri, si in zip(x, rec.rho, rec.S):
                w.writerow([repr(float(xi)), repr(float(ri)), repr(float(si))])
        entry = {"t": rec.t, "file": name, "diagnostics": rec.diagnostics}
        if rec.boundaries is not None:
            entry["boundaries"] = list(rec.boundaries)
        index.append(entry)
    _write_json(out / "metadata.json", series.metadata)
    _write_json(out / "series.json", index)
    _write_json(out / "summary.json", summary)


def read_series(outdir: str | Path) -> SnapshotSeries:
    out = Path(outdir)
    with open(out / "metadata.json") as fh:
        metadata = json.load(fh)
    with open(out / "series.json") as fh:
        index = json.load(fh)
    grid = Grid1D(n=int(metadata["grid"]["n"]), L=float(metadata["grid"]["L"]))
    series = SnapshotSeries(metadata, grid)
    for entry in index:
        data = np.genfromtxt(out / entry["file"], delimiter=",", names=True)
        rec = SnapshotRecord(
            t=float(entry["t"]),
            rho=np.atleast_1d(data["rho"]),
            S=np.atleast_1d(data["S"]),
            diagnostics=entry.get("diagnostics", {}),
            boundaries=entry.get("boundaries"),
        )
        series.append(rec)
    return series


def read_summary(outdir: str | Path) -> dict:
    with open(Path(outdir) / "summary.json") as fh:
        return json.load(fh)
