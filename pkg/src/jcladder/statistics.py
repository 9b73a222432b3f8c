"""Photon statistics of per-pulse count distributions.

For a count distribution ``P(n)`` with factorial moments ``m1 = sum n P(n)``
and ``m2 = sum n (n-1) P(n)``::

    g2 = m2 / m1**2          c2 = m2 - m1**2 = (g2 - 1) m1**2

Errors are first-order (delta method) propagations of the multinomial
covariance of the sampled ``P(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binom

from .trajectories import CountHistogram

BLOCKADE, TUNNELING, COHERENT = "blockade", "tunneling", "coherent-like"


@dataclass(frozen=True)
class PhotonStats:
    """Moments and normalized correlations of one count distribution.

    ``g2`` is ``None`` when no photons were counted (``m1 == 0``).
    """

    m1: float
    m2: float
    g2: float | None
    c2: float
    m1_err: float = 0.0
    m2_err: float = 0.0
    g2_err: float = 0.0
    c2_err: float = 0.0

    @property
    def n_c(self) -> float:
        return self.m1

    @property
    def n_c_err(self) -> float:
        return self.m1_err


@dataclass(frozen=True)
class BlinkingModel:
    """QD optically active for a fraction ``r`` of the time."""

    r: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")


def factorial_moments(p: np.ndarray) -> tuple[float, float]:
    n = np.arange(len(p), dtype=float)
    return float(np.dot(n, p)), float(np.dot(n * (n - 1.0), p))


def moment_covariance(p: np.ndarray, n_traj: int) -> np.ndarray:
    """Covariance of the sampled ``(m1, m2)`` for ``n_traj`` multinomial draws."""
    n = np.arange(len(p), dtype=float)
    f = np.vstack([n, n * (n - 1.0)])
    mean = f @ p
    second = (f * p) @ f.T
    return (second - np.outer(mean, mean)) / n_traj


def stats_from_moments(m1: float, m2: float, cov: np.ndarray | None = None) -> PhotonStats:
    cov = np.zeros((2, 2)) if cov is None else np.asarray(cov)
    m1_err, m2_err = math.sqrt(max(cov[0, 0], 0.0)), math.sqrt(max(cov[1, 1], 0.0))
    if m1 <= 0.0 or m1 * m1 < np.finfo(float).tiny:  # also guards underflow
        return PhotonStats(max(m1, 0.0), m2, None, 0.0, m1_err, m2_err, 0.0, 0.0)
    g2 = m2 / m1**2
    c2 = (g2 - 1.0) * m1**2
    jac_g2 = np.array([-2.0 * g2 / m1, 1.0 / m1**2])
    jac_c2 = np.array([-2.0 * m1, 1.0])
    g2_err = math.sqrt(max(jac_g2 @ cov @ jac_g2, 0.0))
    c2_err = math.sqrt(max(jac_c2 @ cov @ jac_c2, 0.0))
    return PhotonStats(m1, m2, g2, c2, m1_err, m2_err, g2_err, c2_err)


def stats_from_distribution(p: Sequence[float], n_traj: int | None = None) -> PhotonStats:
    """Statistics of an exact (``n_traj=None``) or sampled distribution."""
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    m1, m2 = factorial_moments(p)
    cov = moment_covariance(p, n_traj) if n_traj else None
    return stats_from_moments(m1, m2, cov)


def stats_from_pn(hist: CountHistogram) -> PhotonStats:
    return stats_from_distribution(hist.p_n, hist.n_traj)


def mixed_distribution(p_qd: np.ndarray, p_empty: np.ndarray, r: float) -> np.ndarray:
    size = max(len(p_qd), len(p_empty))
    out = np.zeros(size)
    out[: len(p_qd)] += r * np.asarray(p_qd)
    out[: len(p_empty)] += (1.0 - r) * np.asarray(p_empty)
    return out


def blinking_mix(hist_qd: CountHistogram, hist_empty: CountHistogram, model: BlinkingModel) -> PhotonStats:
    """Statistics of ``r P_qd(n) + (1 - r) P_empty(n)``.

    The two histograms are independent ensembles, so their moment covariances
    add with weights ``r**2`` and ``(1 - r)**2``.
    """
    r = model.r
    p = mixed_distribution(hist_qd.p_n, hist_empty.p_n, r)
    m1, m2 = factorial_moments(p)
    cov = r**2 * moment_covariance(hist_qd.p_n, hist_qd.n_traj)
    cov = cov + (1.0 - r) ** 2 * moment_covariance(hist_empty.p_n, hist_empty.n_traj)
    return stats_from_moments(m1, m2, cov)


def classify_regime(stats: PhotonStats, n_sigma: float = 2.0) -> str:
    if stats.g2 is None:
        raise ValueError("g2 is undefined for an empty distribution")
    eps = n_sigma * stats.g2_err
    if stats.g2 < 1.0 - eps:
        return BLOCKADE
    if stats.g2 > 1.0 + eps:
        return TUNNELING
    return COHERENT


def thin(p: Sequence[float], efficiency: float) -> np.ndarray:
    """Count distribution after independent loss of each photon (binomial thinning)."""
    p = np.asarray(p, dtype=float)
    n = np.arange(len(p))
    kernel = binom.pmf(n[None, :], n[:, None], efficiency)  # kernel[n, k] = P(k kept | n)
    return p @ kernel


def thin_samples(samples: np.ndarray, efficiency: float, rng: np.random.Generator) -> np.ndarray:
    return rng.binomial(np.asarray(samples, dtype=np.int64), efficiency)


def stats_columns(hists: Sequence[CountHistogram], n_p: int = 9) -> dict[str, np.ndarray]:
    """Column table (n_c, g2, c2, p0.. with errors) for a list of histograms."""
    rows = [stats_from_pn(h) for h in hists]
    cols: dict[str, np.ndarray] = {
        "n_c": np.array([s.n_c for s in rows]),
        "n_c_err": np.array([s.n_c_err for s in rows]),
        "g2": np.array([np.nan if s.g2 is None else s.g2 for s in rows]),
        "g2_err": np.array([s.g2_err for s in rows]),
        "c2": np.array([s.c2 for s in rows]),
        "c2_err": np.array([s.c2_err for s in rows]),
    }
    for n in range(n_p):
        cols[f"p{n}"] = np.array([h.padded(n_p)[n] for h in hists])
    for n in range(n_p):
        cols[f"p{n}_err"] = np.array([_padded_err(h, n_p)[n] for h in hists])
    cols["n_traj"] = np.array([h.n_traj for h in hists])
    return cols


def _padded_err(hist: CountHistogram, n_p: int) -> np.ndarray:
    out = np.zeros(max(n_p, len(hist.counts)))
    out[: len(hist.counts)] = hist.p_n_err
    return out


def peak_position(x: Sequence[float], y: Sequence[float], half_width: int = 2) -> float:
    """Location of the maximum of ``y``, refined by a least-squares parabola."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    i = int(np.nanargmax(y))
    lo, hi = max(0, i - half_width), min(len(x), i + half_width + 1)
    if hi - lo < 3:
        return float(x[i])
    a, b, _ = np.polyfit(x[lo:hi], y[lo:hi], 2)
    if a >= 0:
        return float(x[i])
    return float(np.clip(-b / (2 * a), x[lo], x[hi - 1]))


def zero_crossings(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Linearly interpolated sign changes of ``y``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = []
    for i in range(len(x) - 1):
        if y[i] == 0.0:
            out.append(x[i])
        elif y[i] * y[i + 1] < 0:
            out.append(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))
    return np.array(out)
