"""CSV tables, JSON sidecars and static SVG plots for figure results.

Photon-statistics CSVs have the fixed header::

    axis_value, n_c, n_c_err, g2, g2_err, c2, c2_err, p0..p8, p0_err..p8_err, n_traj

followed by any extra columns of the series (e.g. ``c2_norm``). ``axis_value``
is in the sweep's file unit: ``delta_c`` in GHz or in units of ``g``, ``e_peak``
in GHz, ``p_avg`` in nW. ``p8`` is ``P(8)``, not a tail sum; full histograms
are in the sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..results import SweepResult
from .runners import N_P_COLUMNS, FigureResult, Overlay

STATS_COLUMNS = (
    ["n_c", "n_c_err", "g2", "g2_err", "c2", "c2_err"]
    + [f"p{n}" for n in range(N_P_COLUMNS)]
    + [f"p{n}_err" for n in range(N_P_COLUMNS)]
    + ["n_traj"]
)


class OutputError(OSError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if np.isnan(v):
        return "nan"
    return repr(v)


def column_order(result: SweepResult) -> list[str]:
    if all(c in result.columns for c in STATS_COLUMNS):
        fixed = list(STATS_COLUMNS)
    else:
        fixed = []
    return fixed + [c for c in result.columns if c not in fixed]


def write_csv(result: SweepResult, path: Path) -> None:
    cols = column_order(result)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis_value"] + cols)
            for i, x in enumerate(result.values):
                w.writerow([_fmt(x)] + [_fmt(result.columns[c][i]) for c in cols])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_sidecar(result: SweepResult, path: Path) -> None:
    doc = {"metadata": result.metadata, "columns": column_order(result), "histograms": result.histograms}
    try:
        path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


_AXIS_LABELS = {
    ("delta_c", "g"): r"$\Delta_c / g$",
    ("delta_c", "ghz"): r"$\Delta_c / 2\pi$ (GHz)",
    ("e_peak", "ghz"): r"$\mathcal{E}_0 / 2\pi$ (GHz)",
    ("p_avg", "nw"): r"$P_{avg}$ (nW)",
}
_COLUMN_LABELS = {
    "g2": r"$g^{(2)}(0)$",
    "c2": r"$C^{(2)}(0)$",
    "c2_norm": r"normalized $C^{(2)}(0)$",
    "n_c": r"$\langle a^\dagger a \rangle$",
    "p": "P(n)",
}


def plot_overlay(fig: FigureResult, overlay: Overlay, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "jcladder"
    first = fig.series[overlay.series[0]]
    meta = first.metadata
    fig_, ax = plt.subplots(figsize=(5, 3.5))
    if overlay.column == "p":
        for n in range(5):
            ax.plot(first.values, first.columns[f"p{n}"], marker="o", ms=3, label=f"P({n})")
    else:
        for name, label in zip(overlay.series, overlay.labels):
            s = fig.series[name]
            y = s.columns[overlay.column]
            err = s.columns.get(f"{overlay.column}_err")
            if err is not None and np.any(err > 0):
                ax.errorbar(s.values, y, yerr=err, marker="o", ms=3, capsize=2, label=label)
            else:
                ax.plot(s.values, y, marker="o", ms=3, label=label)
    if overlay.reference is not None:
        ax.axhline(overlay.reference, color="red", ls="--", lw=1)
    ax.set_xlabel(_AXIS_LABELS.get((meta.get("axis"), meta.get("axis_unit")), meta.get("axis", "")))
    ax.set_ylabel(_COLUMN_LABELS.get(overlay.column, overlay.column))
    ax.legend(fontsize=8)
    fig_.tight_layout()
    try:
        fig_.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig_)


def emit_outputs(result: FigureResult, out_dir: str | Path, prefix: str, plots: bool = True) -> list[Path]:
    """Write every series as CSV + JSON sidecar, and every overlay as SVG."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    written = []
    for name, series in result.series.items():
        csv_path = out / f"{prefix}_{name}.csv"
        write_csv(series, csv_path)
        json_path = csv_path.with_suffix(".json")
        write_sidecar(series, json_path)
        written += [csv_path, json_path]
    if plots:
        for ov in result.overlays:
            svg = out / f"{prefix}_{ov.name}.svg"
            plot_overlay(result, ov, svg)
            written.append(svg)
    return written
