"""SVG figure emission from report artifacts.

Figures are byte-stable for identical inputs: a fixed hash salt, no
creation dates in the SVG metadata, and text rendered as paths.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import PlotInputError

_RC = {
    "svg.hashsalt": "srcgeolab",
    "svg.fonttype": "path",
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _read_csv(path: Path):
    if not path.exists():
        raise PlotInputError(str(path), "artifact file missing")
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    return {name: data[:, k] for k, name in enumerate(header)}


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_detj(csv_path: Path, out_path: Path, title: str):
    cols = _read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(cols["s"], cols["det"], lw=1.2)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("s")
        ax.set_ylabel("det Y(s)")
        ax.set_title(title)
        _save(fig, out_path)


def _plot_residuals(csv_paths, slope, intercept, out_path: Path, title: str):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        eps_all = []
        for k, path in enumerate(csv_paths):
            cols = _read_csv(path)
            ax.loglog(cols["epsilon"], cols["abs_residual"], "o-", ms=3,
                      lw=0.8, label=f"window {k}")
            eps_all.append(cols["epsilon"])
        if slope is not None and intercept is not None:
            eps = np.concatenate(eps_all)
            grid = np.array([eps.min(), eps.max()])
            ax.loglog(grid, intercept * grid ** slope, "k--", lw=1.0,
                      label=f"fit slope {slope:.3f}")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("|residual|")
        ax.set_title(title)
        ax.legend(fontsize=8)
        _save(fig, out_path)


def _plot_trajectory(csv_path: Path, out_path: Path, title: str):
    cols = _read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if "x2" in cols:
            ax.plot(cols["x1"], cols["x2"], lw=1.2)
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
            ax.set_aspect("equal", adjustable="datalim")
        else:
            ax.plot(cols["s"], cols["x1"], lw=1.2)
            ax.set_xlabel("s")
            ax.set_ylabel("x1")
        ax.set_title(title)
        _save(fig, out_path)


def emit_plots(report, report_dir: Path, out_dir: Path,
               style: str = "default") -> list:
    """Render figures for every experiment with plottable artifacts.

    `report` is the parsed report dict (or a path to report.json);
    artifact CSVs are resolved relative to `report_dir`.  Returns the list
    of written SVG paths.  Missing artifacts are input errors.
    """
    if isinstance(report, (str, Path)):
        report_path = Path(report)
        if not report_path.exists():
            raise PlotInputError(str(report_path), "report file missing")
        report = json.loads(report_path.read_text())
    if style not in ("default",):
        raise PlotInputError("style", f"unknown style {style!r}")
    report_dir = Path(report_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for record in report.get("experiments", []):
        name = record["name"]
        artifacts = record.get("artifacts", {})
        residual_paths = [
            report_dir / fname
            for key, fname in sorted(artifacts.items())
            if key.startswith("residual_csv")
        ]
        if residual_paths:
            out = out_dir / f"{name}_residuals.svg"
            results = record.get("results", {})
            _plot_residuals(residual_paths, results.get("slope"),
                            results.get("intercept"), out,
                            f"{name}: remainder scaling")
            written.append(out)
        for key in artifacts:
            if key.startswith("detj"):
                out = out_dir / f"{name}_{key.replace('_csv', '')}.svg"
                _plot_detj(report_dir / artifacts[key], out,
                           f"{name}: {key.replace('_csv', '')}")
                written.append(out)
        if "trajectory_csv" in artifacts:
            out = out_dir / f"{name}_trajectory.svg"
            _plot_trajectory(report_dir / artifacts["trajectory_csv"], out,
                             f"{name}: trajectory")
            written.append(out)
    return written
