"""Sweep orchestration for the figure configurations."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import __version__
from ..hilbert import HilbertDim
from ..jaynes_cummings import PulseParams, SystemParams, default_window
from ..lindblad import collapse_channels, cw_transmission_spectrum, ground_state, evolve, photon_count_distribution
from ..results import SweepResult
from ..statistics import mixed_distribution, moment_covariance, stats_from_moments, factorial_moments
from ..trajectories import CountHistogram, simulate_counts
from .config import ExperimentConfig, NW

log = logging.getLogger(__name__)

N_P_COLUMNS = 9


@dataclass
class Overlay:
    """One plot combining a column from several series."""

    name: str
    column: str
    series: list[str]
    labels: list[str]
    reference: float | None = None


@dataclass
class FigureResult:
    series: dict[str, SweepResult] = field(default_factory=dict)
    overlays: list[Overlay] = field(default_factory=list)

    def __getitem__(self, key: str) -> SweepResult:
        return self.series[key]


@dataclass(frozen=True)
class Distribution:
    """Per-pulse count distribution; ``n_traj is None`` marks an exact (ME) result."""

    p: np.ndarray
    n_traj: int | None
    histogram: CountHistogram | None = None
    moment_cov: np.ndarray | None = None
    prob_err: np.ndarray | None = None

    @classmethod
    def from_histogram(cls, hist: CountHistogram) -> "Distribution":
        return cls(hist.p_n, hist.n_traj, hist)

    def cov(self) -> np.ndarray:
        if self.moment_cov is not None:
            return self.moment_cov
        if self.n_traj is None:
            return np.zeros((2, 2))
        return moment_covariance(self.p, self.n_traj)

    def p_err(self) -> np.ndarray:
        if self.prob_err is not None:
            return self.prob_err
        if self.n_traj is None:
            return np.zeros_like(self.p)
        return np.sqrt(self.p * (1 - self.p) / self.n_traj)


def mix(qd: Distribution, empty: Distribution, r: float) -> Distribution:
    """Blinking mixture ``r P_qd + (1 - r) P_empty`` of two independent ensembles."""
    p = mixed_distribution(qd.p, empty.p, r)
    n = None if qd.n_traj is None else qd.n_traj + empty.n_traj
    cov = r**2 * qd.cov() + (1 - r) ** 2 * empty.cov()
    err = np.sqrt((r * _pad(qd.p_err(), len(p))) ** 2 + ((1 - r) * _pad(empty.p_err(), len(p))) ** 2)
    return Distribution(p, n, None, cov, err)


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(max(n, len(a)))
    out[: len(a)] = a
    return out


def distribution_columns(dists: Sequence[Distribution], n_p: int = N_P_COLUMNS) -> dict[str, np.ndarray]:
    stats = [stats_from_moments(*factorial_moments(d.p), d.cov()) for d in dists]
    cols: dict[str, np.ndarray] = {
        "n_c": np.array([s.n_c for s in stats]),
        "n_c_err": np.array([s.n_c_err for s in stats]),
        "g2": np.array([np.nan if s.g2 is None else s.g2 for s in stats]),
        "g2_err": np.array([s.g2_err for s in stats]),
        "c2": np.array([s.c2 for s in stats]),
        "c2_err": np.array([s.c2_err for s in stats]),
    }
    for n in range(n_p):
        cols[f"p{n}"] = np.array([_pad(d.p, n_p)[n] for d in dists])
    for n in range(n_p):
        cols[f"p{n}_err"] = np.array([_pad(d.p_err(), n_p)[n] for d in dists])
    cols["n_traj"] = np.array([0 if d.n_traj is None else d.n_traj for d in dists], dtype=np.int64)
    return cols


@dataclass(frozen=True)
class PointTask:
    params: SystemParams
    pulse: PulseParams
    n_max: int
    engine: str
    n_traj: int
    seed0: int
    n_counts: int


def simulate_point(task: PointTask) -> Distribution:
    dim = HilbertDim(task.n_max)
    channels = collapse_channels(task.params, dim)
    if task.engine == "master_equation":
        p = photon_count_distribution(task.params, task.pulse, dim, n_counts=task.n_counts, channels=channels)
        return Distribution(p, None)
    counts, _ = simulate_counts(task.params, task.pulse, channels, task.n_traj, task.seed0, dim)
    return Distribution.from_histogram(CountHistogram.from_samples(counts))


def run_points(tasks: Sequence[PointTask], threads: int = 1) -> list[Distribution]:
    """Evaluate grid points, in parallel if asked; results come back in grid order."""
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(simulate_point, tasks))
    out = []
    for i, t in enumerate(tasks):
        log.info("point %d/%d", i + 1, len(tasks))
        out.append(simulate_point(t))
    return out


def _task(cfg: ExperimentConfig, params: SystemParams, pulse: PulseParams) -> PointTask:
    return PointTask(params, pulse, cfg.n_max, cfg.engine, cfg.n_traj, cfg.seed0, cfg.n_counts)


def point_conditions(cfg: ExperimentConfig, axis: str, value: float, pulse: PulseParams | None = None):
    """``(params, pulse)`` at one point of a sweep along ``axis`` (internal units)."""
    pulse = pulse or cfg.pulse
    params = cfg.system
    if axis == "delta_c":
        return params.at_detuning(value), pulse
    if axis == "e_peak":
        return params.at_detuning(0.0), PulseParams(value, pulse.tau_p)
    if axis == "p_avg":
        return params.at_detuning(0.0), cfg.pulse_for_power(value)
    raise ValueError(f"unknown axis {axis!r}")


def _metadata(cfg: ExperimentConfig, series: str, axis: str, unit: str, dists: Sequence[Distribution]) -> dict:
    return {
        "series": series,
        "axis": axis,
        "axis_unit": unit,
        "engine": cfg.engine,
        "code_version": __version__,
        "seed0": cfg.seed0,
        "total_trajectories": int(sum(d.n_traj or 0 for d in dists)),
        "config": cfg.to_dict(),
    }


def _axis_file_values(cfg: ExperimentConfig, axis: str, unit: str, values: Sequence[float]) -> np.ndarray:
    if axis == "p_avg":
        return np.asarray(values) / NW
    if unit == "g":
        return np.asarray(values) / cfg.system.g
    return np.asarray(values) / (2 * np.pi)


def sweep_series(
    cfg: ExperimentConfig,
    name: str,
    axis: str,
    unit: str,
    values: Sequence[float],
    pulse: PulseParams | None = None,
    blinking: bool = False,
    threads: int = 1,
) -> dict[str, SweepResult]:
    """Simulate one sweep; with ``blinking`` also the empty cavity and the r-mixture."""
    conds = [point_conditions(cfg, axis, v, pulse) for v in values]
    tasks = [_task(cfg, p, pl) for p, pl in conds]
    if blinking:
        tasks += [_task(cfg, p.with_(g=0.0), pl) for p, pl in conds]
    dists = run_points(tasks, threads)
    xs = _axis_file_values(cfg, axis, unit, values)
    coupled = dists[: len(values)]
    out = {name: _series(cfg, name, axis, unit, xs, coupled)}
    if blinking:
        empty = dists[len(values) :]
        r = cfg.blinking_r if cfg.blinking_r is not None else 0.65
        mixed = [mix(q, e, r) for q, e in zip(coupled, empty)]
        out[f"{name}_empty"] = _series(cfg, f"{name}_empty", axis, unit, xs, empty)
        out[f"{name}_blinking"] = _series(cfg, f"{name}_blinking", axis, unit, xs, mixed)
        out[f"{name}_blinking"].metadata["blinking_r"] = r
    return out


def _series(cfg, name, axis, unit, xs, dists) -> SweepResult:
    cols = distribution_columns(dists)
    hists = [d.histogram.as_dict() if d.histogram is not None else [float(x) for x in d.p] for d in dists]
    return SweepResult(axis, xs, cols, hists, _metadata(cfg, name, axis, unit, dists))


def _add_normalized_c2(result: SweepResult) -> None:
    c2 = result["c2"]
    scale = np.nanmax(np.abs(c2)) if np.any(np.isfinite(c2)) else 0.0
    result.columns["c2_norm"] = c2 / scale if scale > 0 else np.zeros_like(c2)


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> FigureResult:
    sw = cfg.sweep
    series = sweep_series(cfg, "sweep", sw.axis, sw.unit, sw.values, blinking=cfg.blinking_r is not None, threads=threads)
    res = FigureResult(series)
    names, labels = ["sweep"], ["coupled"]
    if "sweep_blinking" in series:
        names.append("sweep_blinking")
        labels.append(f"blinking r={cfg.blinking_r:g}")
    res.overlays.append(Overlay("sweep_g2", "g2", names, labels, 1.0))
    res.overlays.append(Overlay("sweep_c2", "c2", names, labels, 0.0))
    return res


def run_fig2(cfg: ExperimentConfig, threads: int = 1) -> FigureResult:
    """P(n), g2 and C2 versus laser-cavity detuning, plus C2 at several drives."""
    sw = cfg.sweep
    res = FigureResult(sweep_series(cfg, "fig2abc", "delta_c", sw.unit, sw.values, threads=threads))
    names, labels = [], []
    for e in cfg.e_peak_list:
        if np.isclose(e, cfg.pulse.e_peak, rtol=1e-12):
            name = "fig2abc"
        else:
            name = f"fig2d_E{e / (2 * np.pi):g}"
            pulse = PulseParams(e, cfg.pulse.tau_p)
            res.series.update(sweep_series(cfg, name, "delta_c", sw.unit, sw.values, pulse=pulse, threads=threads))
        names.append(name)
        labels.append(f"E0/2pi = {e / (2 * np.pi):g} GHz")
    res.overlays.append(Overlay("fig2a_pn", "p", ["fig2abc"], ["P(n)"]))
    res.overlays.append(Overlay("fig2b_g2", "g2", ["fig2abc"], ["simulation"], 1.0))
    res.overlays.append(Overlay("fig2c_c2", "c2", ["fig2abc"], ["simulation"], 0.0))
    if names:
        res.overlays.append(Overlay("fig2d_c2", "c2", names, labels, 0.0))
    return res


def run_fig3(cfg: ExperimentConfig, threads: int = 1) -> FigureResult:
    """CW transmission doublet and pulsed g2 versus detuning with and without blinking."""
    res = FigureResult()
    cw = cfg.cw
    spec = cw_transmission_spectrum(cfg.system, cw.drive, cw.detunings, HilbertDim(cw.n_max))
    spec.values = np.asarray(cw.detunings) / (2 * np.pi)
    spec.metadata = {
        "series": "fig3a",
        "axis": "delta_c",
        "axis_unit": "ghz",
        "engine": "steady_state",
        "code_version": __version__,
        "config": cfg.to_dict(),
    }
    res.series["fig3a"] = spec
    sw = cfg.sweep
    res.series.update(sweep_series(cfg, "fig3b", "delta_c", sw.unit, sw.values, blinking=True, threads=threads))
    res.overlays.append(Overlay("fig3a_transmission", "n_c", ["fig3a"], ["<a+a> steady state"]))
    res.overlays.append(Overlay("fig3b_g2", "g2", ["fig3b", "fig3b_blinking"], ["no blinking", f"blinking r={cfg.blinking_r:g}"], 1.0))
    return res


def run_fig4(cfg: ExperimentConfig, threads: int = 1) -> FigureResult:
    """C2 versus detuning at the configured power and g2(delta_c = 0) versus power."""
    sw = cfg.sweep
    res = FigureResult(sweep_series(cfg, "fig4a", "delta_c", sw.unit, sw.values, blinking=True, threads=threads))
    for name in ("fig4a", "fig4a_blinking"):
        _add_normalized_c2(res.series[name])
    res.series.update(sweep_series(cfg, "fig4b", "p_avg", "nw", cfg.power_grid, blinking=True, threads=threads))
    r = cfg.blinking_r
    res.overlays.append(Overlay("fig4a_c2", "c2_norm", ["fig4a", "fig4a_blinking"], ["no blinking", f"blinking r={r:g}"], 0.0))
    res.overlays.append(Overlay("fig4b_g2", "g2", ["fig4b", "fig4b_blinking"], ["no blinking", f"blinking r={r:g}"], 1.0))
    return res


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4, "sweep": run_sweep}


def run_config(cfg: ExperimentConfig, threads: int = 1) -> FigureResult:
    return RUNNERS[cfg.figure](cfg, threads)


@dataclass
class OracleLine:
    label: str
    value: float
    expected: float
    error: float
    n_sigma: float

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.n_sigma * self.error

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        z = abs(self.value - self.expected) / self.error if self.error > 0 else float("inf")
        return f"[{status}] {self.label}: traj={self.value:.6g} me={self.expected:.6g} se={self.error:.3g} |z|={z:.2f}"


def oracle_check(
    params: SystemParams,
    pulse: PulseParams,
    n_max: int,
    n_traj: int,
    seed0: int = 0,
    n_checkpoints: int = 5,
    n_sigma: float = 3.0,
    label: str = "",
) -> list[OracleLine]:
    """Trajectory ensemble versus master equation: <a+a>(t) at checkpoints and mean counts."""
    dim = HilbertDim(n_max)
    channels = collapse_channels(params, dim)
    t0, t1 = default_window(pulse, params)
    # inside the pulse and ring-down: earlier the rare jumped trajectories
    # carry most of the variance and the sample error is unreliable
    checkpoints = np.linspace(-pulse.tau_p, min(4 * pulse.tau_p, t1), n_checkpoints)
    counts, ck = simulate_counts(params, pulse, channels, n_traj, seed0, dim, checkpoints=checkpoints)
    me = evolve(ground_state(dim), params, pulse, channels, np.concatenate([[t0], checkpoints, [t1]]))
    lines = []
    for j, t in enumerate(checkpoints):
        se = ck[:, j].std(ddof=1) / np.sqrt(n_traj)
        lines.append(OracleLine(f"{label}<a+a>(t={t * 1e3:.1f} ps)", ck[:, j].mean(), me.observables["n"][j + 1], se, n_sigma))
    se = counts.std(ddof=1) / np.sqrt(n_traj)
    lines.append(OracleLine(f"{label}mean cavity counts", counts.mean(), me.emitted[-1], se, n_sigma))
    return lines


def config_oracle_check(cfg: ExperimentConfig, n_traj: int | None = None) -> list[OracleLine]:
    sw = cfg.sweep
    picks = sorted({0, len(sw.values) // 2, len(sw.values) - 1})
    lines = []
    for i in picks:
        params, pulse = point_conditions(cfg, sw.axis, sw.values[i])
        value = sw.file_values(cfg.system.g)[i]
        lines += oracle_check(params, pulse, cfg.n_max, n_traj or min(cfg.n_traj, 10000), cfg.seed0,
                              label=f"{sw.axis}={value:g} {sw.unit}: ")
    return lines
