"""Figure configuration files.

Files are YAML and quote everything in laboratory units: frequencies as
``f/2pi`` in GHz, times in ps, powers in nW, repetition rate in MHz. They are
converted to internal units (rad/ns, ns, W, 1/ns) once, in :func:`load_config`.
Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..jaynes_cummings import (
    TWO_PI,
    ExperimentOptics,
    PulseParams,
    SystemParams,
    ghz,
    omega_from_wavelength,
    peak_drive_from_avg_power,
)

NW = 1e-9
PS = 1e-3


class ConfigError(ValueError):
    """Invalid or unreadable configuration file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RangeSpec(_Strict):
    start: float
    stop: float
    num: int = Field(ge=1)

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


GridSpec = Union[list[float], RangeSpec]


def _expand(grid: GridSpec) -> list[float]:
    values = grid.values() if isinstance(grid, RangeSpec) else [float(v) for v in grid]
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError("grid must be non-empty and finite")
    return values


class SystemFile(_Strict):
    g_ghz: float = Field(ge=0)
    kappa_ghz: float = Field(gt=0)
    gamma_ghz: float = Field(0.16, ge=0)
    gamma_d_ghz: float = Field(0.0, ge=0)
    qd_cavity_offset_ghz: float = 0.0
    wavelength_nm: float = Field(927.0, gt=0)


class PulseFile(_Strict):
    e_peak_ghz: float | None = Field(None, ge=0)
    tau_p_ps: float = Field(gt=0)


class OpticsFile(_Strict):
    eta: float = Field(gt=0, le=1)
    q_factor: float = Field(gt=0)
    f_rep_mhz: float = Field(gt=0)
    p_avg_nw: float = Field(ge=0)


class SweepFile(_Strict):
    axis: Literal["delta_c", "e_peak", "p_avg"]
    unit: Literal["g", "ghz", "nw"] = "ghz"
    grid: GridSpec

    @field_validator("grid")
    @classmethod
    def _finite(cls, grid):
        _expand(grid)
        return grid

    @model_validator(mode="after")
    def _unit_matches(self):
        allowed = {"delta_c": {"g", "ghz"}, "e_peak": {"ghz"}, "p_avg": {"nw"}}[self.axis]
        if self.unit not in allowed:
            raise ValueError(f"unit {self.unit!r} not valid for axis {self.axis!r}")
        return self


class CwFile(_Strict):
    drive_ghz: float = Field(gt=0)
    grid_ghz: GridSpec
    n_max: int = Field(4, ge=2)


class BlinkingFile(_Strict):
    r: float = Field(ge=0, le=1)


class OutputsFile(_Strict):
    dir: str = "results"
    prefix: str | None = None
    plots: bool = True


class ConfigFile(_Strict):
    name: str
    figure: Literal["fig2", "fig3", "fig4", "sweep"]
    system: SystemFile
    pulse: PulseFile
    optics: OpticsFile | None = None
    sweep: SweepFile
    e_peak_list_ghz: list[float] | None = None
    cw: CwFile | None = None
    p_avg_grid_nw: GridSpec | None = None
    blinking: BlinkingFile | None = None
    engine: Literal["trajectories", "master_equation"] = "trajectories"
    n_traj: int = Field(20000, ge=1)
    n_max: int = Field(12, ge=2)
    n_counts: int = Field(24, ge=2)
    seed0: int = Field(0, ge=0)
    outputs: OutputsFile = OutputsFile()

    @model_validator(mode="after")
    def _consistent(self):
        if self.pulse.e_peak_ghz is None and (self.optics is None):
            raise ValueError("pulse.e_peak_ghz or an optics block (with p_avg_nw) is required")
        if self.sweep.axis == "p_avg" and self.optics is None:
            raise ValueError("a p_avg sweep needs an optics block")
        if self.figure == "fig3" and self.cw is None:
            raise ValueError("fig3 needs a cw block")
        if self.figure == "fig4" and (self.p_avg_grid_nw is None or self.optics is None):
            raise ValueError("fig4 needs p_avg_grid_nw and an optics block")
        if self.figure in ("fig3", "fig4") and self.blinking is None:
            self.blinking = BlinkingFile(r=0.65)
        return self


@dataclass(frozen=True)
class Sweep:
    axis: str
    unit: str
    values: tuple[float, ...]  # internal units

    def file_values(self, g: float) -> list[float]:
        return [_to_file(self.axis, self.unit, v, g) for v in self.values]


def _to_internal(axis: str, unit: str, value: float, g: float) -> float:
    if axis == "p_avg":
        return value * NW
    if unit == "g":
        return value * g
    return ghz(value)


def _to_file(axis: str, unit: str, value: float, g: float) -> float:
    if axis == "p_avg":
        return value / NW
    if unit == "g":
        return value / g
    return value / TWO_PI


@dataclass(frozen=True)
class CwSpec:
    drive: float
    detunings: tuple[float, ...]
    n_max: int


@dataclass(frozen=True)
class ExperimentConfig:
    """A figure configuration in internal units."""

    name: str
    figure: str
    system: SystemParams
    pulse: PulseParams
    sweep: Sweep
    optics: ExperimentOptics | None = None
    e_peak_list: tuple[float, ...] = ()
    cw: CwSpec | None = None
    power_grid: tuple[float, ...] = ()
    blinking_r: float | None = None
    engine: str = "trajectories"
    n_traj: int = 20000
    n_max: int = 12
    n_counts: int = 24
    seed0: int = 0
    out_dir: str = "results"
    prefix: str | None = None
    plots: bool = True
    source: str | None = field(default=None, compare=False)

    @property
    def output_prefix(self) -> str:
        return self.prefix or self.name

    def to_dict(self) -> dict:
        """Serialize back to laboratory units (the file schema)."""
        s = self.system
        g = s.g
        out: dict = {
            "name": self.name,
            "figure": self.figure,
            "system": {
                "g_ghz": s.g / TWO_PI,
                "kappa_ghz": s.kappa / TWO_PI,
                "gamma_ghz": s.gamma / TWO_PI,
                "gamma_d_ghz": s.gamma_d / TWO_PI,
                "qd_cavity_offset_ghz": s.qd_cavity_offset / TWO_PI,
                "wavelength_nm": TWO_PI * 299792458.0 / (s.omega_c * 1e9) * 1e9,
            },
            "pulse": {"e_peak_ghz": self.pulse.e_peak / TWO_PI, "tau_p_ps": self.pulse.tau_p / PS},
            "sweep": {"axis": self.sweep.axis, "unit": self.sweep.unit, "grid": self.sweep.file_values(g)},
            "engine": self.engine,
            "n_traj": self.n_traj,
            "n_max": self.n_max,
            "n_counts": self.n_counts,
            "seed0": self.seed0,
            "outputs": {"dir": self.out_dir, "prefix": self.prefix, "plots": self.plots},
        }
        if self.optics is not None:
            o = self.optics
            out["optics"] = {"eta": o.eta, "q_factor": o.q_factor, "f_rep_mhz": o.f_rep * 1e3, "p_avg_nw": o.p_avg / NW}
        if self.e_peak_list:
            out["e_peak_list_ghz"] = [e / TWO_PI for e in self.e_peak_list]
        if self.cw is not None:
            out["cw"] = {
                "drive_ghz": self.cw.drive / TWO_PI,
                "grid_ghz": [d / TWO_PI for d in self.cw.detunings],
                "n_max": self.cw.n_max,
            }
        if self.power_grid:
            out["p_avg_grid_nw"] = [p / NW for p in self.power_grid]
        if self.blinking_r is not None:
            out["blinking"] = {"r": self.blinking_r}
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def pulse_for_power(self, p_avg: float) -> PulseParams:
        if self.optics is None:
            raise ConfigError("power conversion needs an optics block")
        optics = ExperimentOptics(self.optics.eta, self.optics.q_factor, self.optics.f_rep, p_avg)
        return PulseParams(peak_drive_from_avg_power(optics, self.pulse), self.pulse.tau_p)


def from_dict(data: dict, source: str | None = None) -> ExperimentConfig:
    try:
        f = ConfigFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from exc
    s = f.system
    omega_c = omega_from_wavelength(s.wavelength_nm)
    system = SystemParams(
        g=ghz(s.g_ghz),
        kappa=ghz(s.kappa_ghz),
        gamma=ghz(s.gamma_ghz),
        gamma_d=ghz(s.gamma_d_ghz),
        delta_a=ghz(s.qd_cavity_offset_ghz),
        delta_c=0.0,
        omega_c=omega_c,
    )
    optics = None
    if f.optics is not None:
        o = f.optics
        optics = ExperimentOptics(o.eta, o.q_factor, o.f_rep_mhz * 1e-3, o.p_avg_nw * NW)
    tau = f.pulse.tau_p_ps * PS
    if f.pulse.e_peak_ghz is not None:
        e_peak = ghz(f.pulse.e_peak_ghz)
    else:
        e_peak = peak_drive_from_avg_power(optics, PulseParams(0.0, tau), system)
    pulse = PulseParams(e_peak, tau)
    sw = f.sweep
    if sw.unit == "g" and system.g == 0:
        raise ConfigError(f"{source or 'config'}: sweep unit 'g' needs a non-zero coupling")
    sweep = Sweep(sw.axis, sw.unit, tuple(_to_internal(sw.axis, sw.unit, v, system.g) for v in _expand(sw.grid)))
    cw = None
    if f.cw is not None:
        cw = CwSpec(ghz(f.cw.drive_ghz), tuple(ghz(v) for v in _expand(f.cw.grid_ghz)), f.cw.n_max)
    return ExperimentConfig(
        name=f.name,
        figure=f.figure,
        system=system,
        pulse=pulse,
        sweep=sweep,
        optics=optics,
        e_peak_list=tuple(ghz(e) for e in (f.e_peak_list_ghz or [])),
        cw=cw,
        power_grid=tuple(p * NW for p in _expand(f.p_avg_grid_nw)) if f.p_avg_grid_nw is not None else (),
        blinking_r=f.blinking.r if f.blinking else None,
        engine=f.engine,
        n_traj=f.n_traj,
        n_max=f.n_max,
        n_counts=f.n_counts,
        seed0=f.seed0,
        out_dir=f.outputs.dir,
        prefix=f.outputs.prefix,
        plots=f.outputs.plots,
        source=source,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(data, str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
