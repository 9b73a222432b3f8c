"""Density-matrix master equation for the driven QD-cavity system.

    d rho/dt = -i [H, rho] + sum_k (c_k rho c_k+ - 1/2 {c_k+ c_k, rho})

with ``c = sqrt(2 kappa) a``, ``sqrt(2 gamma) s-`` and ``sqrt(2 gamma_d) s+ s-``.
The superoperator is applied to dense matrices directly; nothing is vectorized
into a Liouvillian.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import HilbertDim, IntegrationError, annihilation, basis, dag, pure_density, qubit_lowering, validate_density_matrix
from .jaynes_cummings import PulseParams, SystemParams, default_window, hamiltonian_terms, pulse_envelope
from .results import SweepResult

CAVITY, QD_EMISSION, DEPHASING = "cavity", "qd_emission", "dephasing"
LABELS = (CAVITY, QD_EMISSION, DEPHASING)

Drive = Union[float, PulseParams, Callable[[float], float]]


@dataclass(frozen=True)
class CollapseChannel:
    """Jump operator with its rate folded in."""

    operator: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown channel label {self.label!r}")
        op = self.operator
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError("collapse operator must be square")


def collapse_channels(params: SystemParams, dim: HilbertDim, keep_zero: bool = False) -> list[CollapseChannel]:
    """Cavity, QD emission and pure-dephasing channels; zero-rate ones are dropped."""
    a, sm = annihilation(dim), qubit_lowering(dim)
    ops = [
        (CAVITY, params.kappa, a),
        (QD_EMISSION, params.gamma, sm),
        (DEPHASING, params.gamma_d, dag(sm) @ sm),
    ]
    return [CollapseChannel(math.sqrt(2.0 * rate) * op, label) for label, rate, op in ops if rate > 0 or keep_zero]


def dim_of(op: np.ndarray) -> HilbertDim:
    side = op.shape[0]
    if side % 2:
        raise ValueError(f"operator side {side} is not 2 (n_max + 1)")
    return HilbertDim(side // 2 - 1)


def envelope_function(drive: Drive) -> Callable[[float], float]:
    if isinstance(drive, PulseParams):
        return lambda t: pulse_envelope(t, drive)
    if callable(drive):
        return drive
    value = float(drive)
    return lambda t: value


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def emitted(self) -> np.ndarray:
        """Cumulative cavity-channel emission ``int 2 kappa <a+a> dt``."""
        return self.observables["emitted"]


class _MasterEquation:
    """Right-hand side on a stack ``(K, d, d)`` of (unnormalized) density blocks.

    With ``counting=True`` block ``n`` holds the part of rho conditioned on ``n``
    cavity jumps so far; the last block absorbs ``>= K-1`` jumps.
    """

    def __init__(self, params, dim, envelope, channels, counting=False):
        self.h0, self.x = hamiltonian_terms(params, dim)
        self.envelope = envelope
        self.dim = dim
        self.counting = counting
        self.cav = None
        self.others = []
        decay = np.zeros((dim.size, dim.size), dtype=complex)
        for ch in channels:
            if ch.operator.shape != self.h0.shape:
                raise ValueError("collapse operator dimension does not match the system")
            decay += dag(ch.operator) @ ch.operator
            if ch.label == CAVITY and self.cav is None:
                self.cav = ch.operator
            else:
                self.others.append(ch.operator)
        self.decay = 0.5j * decay
        self.cav_rate = dag(self.cav) @ self.cav if self.cav is not None else np.zeros_like(decay)

    def heff(self, t):
        return self.h0 + self.envelope(t) * self.x - self.decay

    def __call__(self, t, r):
        heff = self.heff(t)
        out = -1j * (heff @ r - r @ dag(heff))
        for c in self.others:
            out += c @ r @ dag(c)
        if self.cav is not None:
            jump = self.cav @ r @ dag(self.cav)
            if self.counting:
                out[1:] += jump[:-1]
                out[-1] += jump[-1]
            else:
                out += jump
        return out

    def emission_rate(self, r):
        return np.einsum("kij,ji->", r, self.cav_rate).real


def _max_step(eq: _MasterEquation, times: np.ndarray, channels, max_phase_step: float) -> float:
    probe = np.linspace(times[0], times[-1], 401)
    e_max = max(abs(eq.envelope(float(t))) for t in probe)
    h_norm = np.linalg.norm(eq.h0 + e_max * eq.x, 2)
    rates = [np.linalg.norm(dag(c.operator) @ c.operator, 2) for c in channels]
    scale = max([h_norm, *rates, 1e-12])
    return max_phase_step / scale


def _integrate(eq, r0, times, channels, method, max_phase_step, rtol, atol, track_emission=True):
    """Return blocks at every time in ``times`` plus the cumulative emission."""
    n_t = len(times)
    out = np.empty((n_t,) + r0.shape, dtype=complex)
    emitted = np.zeros(n_t)
    out[0] = r0
    if method == "rk4":
        h_max = _max_step(eq, times, channels, max_phase_step)
        r, acc = r0.copy(), 0.0
        for i in range(n_t - 1):
            span = times[i + 1] - times[i]
            n_sub = max(1, math.ceil(span / h_max))
            h = span / n_sub
            t = times[i]
            for _ in range(n_sub):
                k1 = eq(t, r)
                k2 = eq(t + 0.5 * h, r + 0.5 * h * k1)
                k3 = eq(t + 0.5 * h, r + 0.5 * h * k2)
                k4 = eq(t + h, r + h * k3)
                if track_emission:
                    e1, e2, e3, e4 = (eq.emission_rate(s) for s in (r, r + 0.5 * h * k1, r + 0.5 * h * k2, r + h * k3))
                    acc += h / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4)
                r = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t += h
            if not np.all(np.isfinite(r)):
                raise IntegrationError(f"non-finite density matrix at t={t}")
            out[i + 1] = r
            emitted[i + 1] = acc
        return out, emitted
    shape = r0.shape
    size = r0.size

    def rhs(t, y):
        r = y[:size].reshape(shape)
        return np.concatenate([eq(t, r).ravel(), [eq.emission_rate(r)]])

    y0 = np.concatenate([r0.ravel(), [0.0]]).astype(complex)
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, method=method.upper(), t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(sol.message)
    ys = sol.y.T
    return ys[:, :size].reshape((n_t,) + shape), ys[:, size].real


def evolve(
    rho0: np.ndarray,
    params: SystemParams,
    envelope: Drive,
    channels: Sequence[CollapseChannel],
    grid: Sequence[float],
    method: str = "rk4",
    max_phase_step: float = 0.05,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> EvolutionResult:
    """Integrate the master equation and record observables on ``grid``.

    ``method`` is ``"rk4"`` (fixed step, ``dt * max(|H|, rates) <= max_phase_step``)
    or any ``scipy.integrate.solve_ivp`` method name such as ``"dop853"``.
    """
    rho0 = validate_density_matrix(rho0)
    dim = dim_of(rho0)
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    eq = _MasterEquation(params, dim, envelope_function(envelope), channels)
    blocks, emitted = _integrate(eq, rho0[None], times, channels, method, max_phase_step, rtol, atol)
    states = blocks[:, 0]
    traces = np.einsum("tii->t", states).real
    drift = np.max(np.abs(traces - 1.0))
    if drift > 1e-4:
        raise IntegrationError(f"trace drifted by {drift:.2e}; reduce the step size")
    a, sm = annihilation(dim), qubit_lowering(dim)
    ops = {"n": dag(a) @ a, "n2": dag(a) @ dag(a) @ a @ a, "qd": dag(sm) @ sm}
    obs = {name: np.einsum("tij,ji->t", states, op).real for name, op in ops.items()}
    obs["emitted"] = emitted
    return EvolutionResult(times, states, obs)


def ground_state(dim: HilbertDim) -> np.ndarray:
    return pure_density(basis(dim, 0))


def pulse_emission(
    params: SystemParams,
    pulse: PulseParams,
    dim: HilbertDim,
    channels: Sequence[CollapseChannel] | None = None,
    n_points: int = 201,
    **kwargs,
) -> EvolutionResult:
    """Evolve ``|g,0>`` through one pulse over the default window."""
    if channels is None:
        channels = collapse_channels(params, dim)
    t0, t1 = default_window(pulse, params)
    return evolve(ground_state(dim), params, pulse, channels, np.linspace(t0, t1, n_points), **kwargs)


def photon_count_distribution(
    params: SystemParams,
    pulse: PulseParams,
    dim: HilbertDim,
    n_counts: int = 16,
    channels: Sequence[CollapseChannel] | None = None,
    method: str = "dop853",
    **kwargs,
) -> np.ndarray:
    """Exact per-pulse cavity-photon count distribution from the counting-resolved master equation.

    Returns ``P(0) .. P(n_counts)`` where the last entry is ``P(>= n_counts)``.
    """
    if channels is None:
        channels = collapse_channels(params, dim)
    eq = _MasterEquation(params, dim, envelope_function(pulse), channels, counting=True)
    r0 = np.zeros((n_counts + 1, dim.size, dim.size), dtype=complex)
    r0[0] = ground_state(dim)
    times = np.array(default_window(pulse, params))
    opts = {"max_phase_step": 0.05, "rtol": 1e-9, "atol": 1e-12} | kwargs
    blocks, _ = _integrate(eq, r0, times, channels, method, **opts)
    p = np.einsum("kii->k", blocks[-1]).real
    return np.clip(p, 0.0, None) / p.sum()


def steady_state(
    params: SystemParams,
    drive: float,
    channels: Sequence[CollapseChannel],
    dim: HilbertDim,
    tol: float = 1e-9,
    max_time: float | None = None,
    max_phase_step: float = 0.5,
) -> np.ndarray:
    """Steady state under constant drive by long-time RK4 integration.

    Any fixed point of a stable RK4 step is a fixed point of the master
    equation, so the step only needs to be stable here, not accurate.
    """
    rates = [c for c in channels if np.any(c.operator)]
    if not rates:
        raise ValueError("steady state needs at least one decay channel")
    slowest = params.kappa if params.kappa > 0 else max(params.gamma, params.gamma_d)
    if max_time is None:
        max_time = 200.0 / slowest
    chunk = 1.0 / max(params.kappa, params.gamma, params.gamma_d)
    eq = _MasterEquation(params, dim, envelope_function(drive), channels)
    r = ground_state(dim)[None]
    t = 0.0
    while t < max_time:
        blocks, _ = _integrate(eq, r, np.array([t, t + chunk]), channels, "rk4", max_phase_step, 0, 0, False)
        new = blocks[-1]
        change = np.max(np.abs(new - r))
        r, t = new, t + chunk
        if change < tol:
            rho = r[0]
            rho = 0.5 * (rho + dag(rho))
            return rho / np.trace(rho).real
    raise IntegrationError(f"steady state not converged after t={t:.3g} ns (last change {change:.2e})")


def cw_transmission_spectrum(
    params: SystemParams,
    drive: float,
    detunings: Sequence[float],
    dim: HilbertDim,
    **kwargs,
) -> SweepResult:
    """Steady-state ``<a+a>`` versus laser-cavity detuning.

    The QD-cavity offset of ``params`` is held fixed while the laser moves.
    """
    values = np.asarray(detunings, dtype=float)
    n_c, qd = np.empty(len(values)), np.empty(len(values))
    a, sm = annihilation(dim), qubit_lowering(dim)
    num, pe = dag(a) @ a, dag(sm) @ sm
    for i, dc in enumerate(values):
        p = params.at_detuning(float(dc))
        rho = steady_state(p, drive, collapse_channels(p, dim), dim, **kwargs)
        n_c[i] = np.trace(rho @ num).real
        qd[i] = np.trace(rho @ pe).real
    if np.any(n_c > 0.1):
        warnings.warn(f"drive is not weak: max <a+a> = {n_c.max():.3f}", stacklevel=2)
    return SweepResult("delta_c", values, {"n_c": n_c, "qd_population": qd})


def spectrum_peaks(values: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Positions of interior local maxima, refined by a parabola through three points."""
    peaks = []
    for i in range(1, len(signal) - 1):
        if signal[i] > signal[i - 1] and signal[i] >= signal[i + 1]:
            y0, y1, y2 = signal[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            peaks.append(values[i] + shift * (values[i + 1] - values[i]))
    return np.array(peaks)
