"""Driven Jaynes-Cummings Hamiltonian in the frame rotating at the laser frequency.

    H = delta_a s+ s- + delta_c a+ a + g (a+ s- + a s+) + E(t) (a + a+)

Rates and detunings are angular frequencies in rad/ns; times are in ns. Use
:func:`ghz` to convert a quoted ``f/2pi`` in GHz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import constants

from .hilbert import EXCITED, GROUND, HilbertDim, annihilation, basis, dag, qubit_lowering

TWO_PI = 2.0 * math.pi
DEFAULT_WAVELENGTH_NM = 927.0


def ghz(f_ghz: float) -> float:
    """Angular frequency in rad/ns for a frequency ``f/2pi`` quoted in GHz."""
    return TWO_PI * f_ghz


def to_ghz(omega: float) -> float:
    return omega / TWO_PI


def omega_from_wavelength(wavelength_nm: float) -> float:
    """Optical angular frequency in rad/ns."""
    return TWO_PI * constants.c / (wavelength_nm * 1e-9) * 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of the QD-cavity system, all in rad/ns.

    ``kappa`` and ``gamma`` are field (amplitude) decay rates: the cavity
    intensity decays at ``2 * kappa``. ``omega_c`` is the absolute optical
    frequency and only enters power conversions.
    """

    g: float
    kappa: float
    gamma: float = 0.0
    gamma_d: float = 0.0
    delta_a: float = 0.0
    delta_c: float = 0.0
    omega_c: float = field(default_factory=lambda: omega_from_wavelength(DEFAULT_WAVELENGTH_NM))

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "gamma_d"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if not (math.isfinite(self.delta_a) and math.isfinite(self.delta_c)):
            raise ValueError("detunings must be finite")
        if not self.omega_c > 0:
            raise ValueError("omega_c must be positive")

    @property
    def qd_cavity_offset(self) -> float:
        """``delta_a - delta_c`` (= omega_a - omega_c)."""
        return self.delta_a - self.delta_c

    def is_strong_coupling(self) -> bool:
        return self.g > self.kappa / 2 and self.g > self.gamma

    def at_detuning(self, delta_c: float) -> "SystemParams":
        """Move the laser while keeping the QD-cavity offset fixed."""
        return replace(self, delta_c=delta_c, delta_a=delta_c + self.qd_cavity_offset)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PulseParams:
    """Gaussian drive pulse centred at ``t = 0``.

    ``t_window`` of ``None`` means "choose with :func:`default_window`".
    """

    e_peak: float
    tau_p: float
    t_window: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ValueError("tau_p must be positive")
        if not (math.isfinite(self.e_peak) and self.e_peak >= 0):
            raise ValueError("e_peak must be finite and non-negative")
        if self.t_window is not None:
            t0, t1 = self.t_window
            if t0 > -5 * self.tau_p * (1 - 1e-12) or t1 < 5 * self.tau_p * (1 - 1e-12):
                raise ValueError("t_window must span at least +-5 tau_p around the pulse centre")

    def envelope(self, t):
        return pulse_envelope(t, self)


@dataclass(frozen=True)
class ExperimentOptics:
    """Incident-power conversion inputs (SI: W, 1/s ... except f_rep in 1/ns)."""

    eta: float
    q_factor: float
    f_rep: float
    p_avg: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not self.q_factor > 0 or not self.f_rep > 0:
            raise ValueError("q_factor and f_rep must be positive")
        if not self.p_avg >= 0:
            raise ValueError("p_avg must be non-negative")


def default_window(pulse: PulseParams, params: SystemParams, tail_factor: float = 10.0) -> tuple[float, float]:
    """``(-5 tau_p, 5 tau_p + tail_factor / (2 kappa))``: pulse plus cavity ring-down."""
    if pulse.t_window is not None:
        return pulse.t_window
    tail = tail_factor / (2.0 * params.kappa) if params.kappa > 0 else 0.0
    return (-5.0 * pulse.tau_p, 5.0 * pulse.tau_p + tail)


def hamiltonian_terms(params: SystemParams, dim: HilbertDim) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(H0, X)`` so that ``H(t) = H0 + E(t) X``."""
    a = annihilation(dim)
    sm = qubit_lowering(dim)
    ad, sp = dag(a), dag(sm)
    h0 = params.delta_a * (sp @ sm) + params.delta_c * (ad @ a) + params.g * (ad @ sm + a @ sp)
    return h0, a + ad


def hamiltonian(params: SystemParams, drive: float, dim: HilbertDim) -> np.ndarray:
    h0, x = hamiltonian_terms(params, dim)
    return h0 + drive * x


def dressed_energies(n: int, params: SystemParams) -> tuple[float, float]:
    """Energies ``n delta_c +- g sqrt(n)`` of the n-th manifold (resonant QD)."""
    if n < 0:
        raise ValueError("manifold index must be non-negative")
    if n == 0:
        return (0.0, 0.0)
    split = params.g * math.sqrt(n)
    return (n * params.delta_c + split, n * params.delta_c - split)


def dressed_states(n: int, dim: HilbertDim) -> tuple[np.ndarray, np.ndarray]:
    """``|n,+->  = (|g,n> +- |e,n-1>) / sqrt(2)``."""
    if not 1 <= n <= dim.n_max:
        raise ValueError(f"manifold {n} outside 1..{dim.n_max}")
    lower = basis(dim, n, GROUND)
    upper = basis(dim, n - 1, EXCITED)
    return (lower + upper) / math.sqrt(2.0), (lower - upper) / math.sqrt(2.0)


def pulse_envelope(t, pulse: PulseParams):
    t = np.asarray(t, dtype=float)
    out = pulse.e_peak * np.exp(-(t**2) / (2.0 * pulse.tau_p**2))
    return float(out) if out.ndim == 0 else out


def gaussian_fwhm(tau_p: float, intensity: bool = False) -> float:
    """FWHM of ``exp(-t^2 / 2 tau^2)`` (amplitude) or of its square (intensity)."""
    width = 2.0 * math.sqrt(2.0 * math.log(2.0)) * tau_p
    return width / math.sqrt(2.0) if intensity else width


def drive_from_cw_power(p: float, params: SystemParams) -> float:
    """Drive amplitude ``sqrt(kappa P / (2 hbar omega_c))`` in rad/ns for power ``p`` in W."""
    if p < 0:
        raise ValueError("power must be non-negative")
    kappa_si = params.kappa * 1e9
    omega_si = params.omega_c * 1e9
    return math.sqrt(kappa_si * p / (2.0 * constants.hbar * omega_si)) * 1e-9


def peak_drive_from_avg_power(
    optics: ExperimentOptics, pulse: PulseParams, params: SystemParams | None = None
) -> float:
    """Peak pulse amplitude ``sqrt(eta P_avg / (4 sqrt(pi) Q tau_p f_rep hbar))`` in rad/ns.

    With ``params`` given, warns if ``Q`` disagrees with ``omega_c / 2 kappa`` by
    more than 5 %.
    """
    tau_si = pulse.tau_p * 1e-9
    f_rep_si = optics.f_rep * 1e9
    e0 = math.sqrt(
        optics.eta * optics.p_avg
        / (4.0 * math.sqrt(math.pi) * optics.q_factor * tau_si * f_rep_si * constants.hbar)
    )
    if params is not None and params.kappa > 0:
        q_implied = params.omega_c / (2.0 * params.kappa)
        if abs(q_implied - optics.q_factor) > 0.05 * optics.q_factor:
            warnings.warn(
                f"Q={optics.q_factor:g} differs from omega_c/2kappa={q_implied:.0f}",
                stacklevel=2,
            )
    return e0 * 1e-9


Envelope = Callable[[float], float]
