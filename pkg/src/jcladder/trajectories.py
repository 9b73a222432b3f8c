"""Quantum-trajectory (Monte Carlo wavefunction) photon counting for pulsed drive.

Each trajectory starts in ``|g,0>`` and evolves under
``H_eff(t) = H(t) - i/2 sum_k c_k+ c_k``. When the squared norm falls to a
uniform random threshold ``R`` a jump happens: its time is located by
bisection, a channel is picked with probability proportional to
``|c_k psi|^2``, the state is renormalized and a fresh ``R`` is drawn.

Trajectories are advanced together as columns of one array. The no-jump
propagator of every time step is precomputed once (fourth-order
commutator-free Magnus, two matrix exponentials per step) and shared by the
whole batch. Each trajectory owns a Philox generator seeded with its index, so
results do not depend on batching or on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .hilbert import HilbertDim, IntegrationError, annihilation, basis, dag
from .jaynes_cummings import PulseParams, SystemParams, default_window, hamiltonian_terms, pulse_envelope
from .lindblad import CAVITY, CollapseChannel, collapse_channels, dim_of
from .results import SweepResult

_SQRT3 = math.sqrt(3.0)
_C1, _C2 = 0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0
_A1, _A2 = (3.0 - 2.0 * _SQRT3) / 12.0, (3.0 + 2.0 * _SQRT3) / 12.0

DEFAULT_CHUNK = 4096


def trajectory_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox-4x64 stream for one trajectory."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class JumpRecord:
    seed: int
    jumps: tuple[tuple[float, str], ...]
    final_state: np.ndarray

    def count(self, label: str = CAVITY) -> int:
        return sum(1 for _, lab in self.jumps if lab == label)

    def __eq__(self, other):
        if not isinstance(other, JumpRecord):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.jumps == other.jumps
            and np.array_equal(self.final_state, other.final_state)
        )


class CountHistogram:
    """Number of trajectories with ``n`` counted cavity jumps."""

    def __init__(self, counts):
        if isinstance(counts, dict):
            size = max(counts, default=-1) + 1
            arr = np.zeros(max(size, 1), dtype=np.int64)
            for n, c in counts.items():
                arr[int(n)] = c
            counts = arr
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("counts must be a 1-D array of non-negative integers")
        if counts.sum() == 0:
            raise ValueError("histogram is empty")
        self.counts = np.trim_zeros(counts, "b") if counts[-1] == 0 else counts

    @classmethod
    def from_samples(cls, samples) -> "CountHistogram":
        return cls(np.bincount(np.asarray(samples, dtype=np.int64)))

    @property
    def n_traj(self) -> int:
        return int(self.counts.sum())

    @property
    def p_n(self) -> np.ndarray:
        return self.counts / self.n_traj

    @property
    def p_n_err(self) -> np.ndarray:
        p = self.p_n
        return np.sqrt(p * (1.0 - p) / self.n_traj)

    def as_dict(self) -> dict[int, int]:
        return {n: int(c) for n, c in enumerate(self.counts) if c}

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, len(self.counts)))
        out[: len(self.counts)] = self.p_n
        return out

    def __add__(self, other: "CountHistogram") -> "CountHistogram":
        size = max(len(self.counts), len(other.counts))
        total = np.zeros(size, dtype=np.int64)
        total[: len(self.counts)] += self.counts
        total[: len(other.counts)] += other.counts
        return CountHistogram(total)

    def __eq__(self, other):
        return isinstance(other, CountHistogram) and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"CountHistogram({self.as_dict()})"


class PulsePropagator:
    """Time grid and precomputed no-jump step maps through one pulse window."""

    def __init__(
        self,
        params: SystemParams,
        pulse: PulseParams,
        channels: Sequence[CollapseChannel],
        dim: HilbertDim,
        steps_per_tau: int = 20,
        tail_step: float = 4.0,
        checkpoints: Sequence[float] = (),
        bisect_tol: float = 1e-4,
    ):
        self.params, self.pulse, self.dim = params, pulse, dim
        self.channels = list(channels)
        self.h0, self.x = hamiltonian_terms(params, dim)
        decay = np.zeros_like(self.h0)
        for ch in self.channels:
            if ch.operator.shape != self.h0.shape:
                raise ValueError("collapse operator dimension does not match the system")
            decay += dag(ch.operator) @ ch.operator
        self.decay = decay
        self.tol = bisect_tol * pulse.tau_p
        self.jump_ops = np.array([ch.operator for ch in self.channels]) if self.channels else np.zeros((0,) + self.h0.shape)
        self.labels = [ch.label for ch in self.channels]
        self.window = default_window(pulse, params)
        self.times = self._grid(steps_per_tau, tail_step, checkpoints)
        self.maps = self.step_maps(self.times[:-1], np.diff(self.times))

    def _grid(self, steps_per_tau, tail_step, checkpoints):
        t0, t1 = self.window
        tau = self.pulse.tau_p
        h = tau / steps_per_tau
        edges = sorted({t0, t1, *(c for c in (-5 * tau, 5 * tau) if t0 < c < t1)})
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            step = h if (a >= -5 * tau - 1e-15 and b <= 5 * tau + 1e-15) else tail_step * h
            pieces.append(np.linspace(a, b, max(1, math.ceil((b - a) / step - 1e-9)) + 1))
        grid = np.unique(np.concatenate(pieces + [np.asarray(checkpoints, dtype=float)]))
        if grid[0] < t0 or grid[-1] > t1:
            raise ValueError("checkpoints must lie inside the simulation window")
        keep = np.concatenate([[True], np.diff(grid) > 1e-12 * tau])
        return grid[keep]

    def generator(self, t):
        """``-i H_eff`` at each time in ``t`` (stacked)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        e = pulse_envelope(t, self.pulse)
        e = np.atleast_1d(e)
        heff = self.h0[None] + e[:, None, None] * self.x[None] - 0.5j * self.decay[None]
        return -1j * heff

    def step_maps(self, t, h) -> np.ndarray:
        """Propagators from ``t`` to ``t + h`` (arrays of equal length)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        h = np.atleast_1d(np.asarray(h, dtype=float))
        g1 = self.generator(t + _C1 * h)
        g2 = self.generator(t + _C2 * h)
        hh = h[:, None, None]
        first = expm(hh * (_A2 * g1 + _A1 * g2))
        second = expm(hh * (_A1 * g1 + _A2 * g2))
        return second @ first


@dataclass
class BatchOutcome:
    seeds: np.ndarray
    cavity_counts: np.ndarray
    jumps: list[list[tuple[float, str]]]
    final_states: np.ndarray  # (B, d), normalized
    checkpoint_n: np.ndarray  # (B, n_checkpoints), normalized <a+a>
    max_norm_increase: float


def _choose(rng, weights):
    u = rng.random() * weights.sum()
    idx = int(np.searchsorted(np.cumsum(weights), u, side="right"))
    return min(idx, len(weights) - 1)


def run_batch(prop: PulsePropagator, seeds: Sequence[int], checkpoints: Sequence[float] = ()) -> BatchOutcome:
    """Advance one trajectory per seed through the pulse window."""
    seeds = np.asarray(seeds, dtype=np.int64)
    b = len(seeds)
    d = prop.dim.size
    rngs = [trajectory_rng(int(s)) for s in seeds]
    thresholds = np.array([1.0 - r.random() for r in rngs])
    psi = np.zeros((d, b), dtype=complex)
    psi[0] = 1.0
    norms = np.ones(b)
    counts = np.zeros(b, dtype=np.int64)
    jumps: list[list[tuple[float, str]]] = [[] for _ in range(b)]
    cavity = [i for i, lab in enumerate(prop.labels) if lab == CAVITY]
    cav_idx = cavity[0] if cavity else -1

    num = dag(annihilation(prop.dim)) @ annihilation(prop.dim)
    check_idx = {int(np.argmin(np.abs(prop.times - c))): j for j, c in enumerate(checkpoints)}
    check_n = np.zeros((b, len(checkpoints)))
    if 0 in check_idx:
        check_n[:, check_idx[0]] = 0.0
    worst = 0.0

    for k, m in enumerate(prop.maps):
        t_b = prop.times[k + 1]
        new = m @ psi
        new_norms = np.einsum("ij,ij->j", new.conj(), new).real
        if not np.all(np.isfinite(new_norms)):
            bad = int(seeds[~np.isfinite(new_norms)][0])
            raise IntegrationError(f"non-finite state at t={t_b:.6g} ns (seed {bad})")
        worst = max(worst, float(np.max(new_norms - norms)))
        hit = np.nonzero(new_norms <= thresholds)[0]
        if hit.size:
            t_start = np.full(hit.size, prop.times[k])
            _resolve_jumps(prop, psi[:, hit].T.copy(), new[:, hit].T.copy(), t_start, t_b, hit,
                           thresholds, rngs, jumps, counts, cav_idx, new)
            new_norms[hit] = np.einsum("ij,ij->j", new[:, hit].conj(), new[:, hit]).real
        psi, norms = new, new_norms
        if k + 1 in check_idx:
            check_n[:, check_idx[k + 1]] = np.einsum("ij,ik,kj->j", psi.conj(), num, psi).real / norms

    final = (psi / np.sqrt(norms)).T
    return BatchOutcome(seeds, counts, jumps, final, check_n, worst)


def _hermite_crossing(lo, hi, n_lo, n_hi, d_lo, d_hi, target, iters=50):
    """Root of the cubic Hermite interpolant of the squared norm on ``[lo, hi]``."""
    h = hi - lo
    a, b = np.zeros_like(lo), np.ones_like(lo)
    for _ in range(iters):
        u = 0.5 * (a + b)
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        val = h00 * n_lo + h10 * h * d_lo + h01 * n_hi + h11 * h * d_hi
        below = val <= target
        b = np.where(below, u, b)
        a = np.where(below, a, u)
    return lo + b * h


def _locate(prop, start, t_start, hi_off, hi_state, target):
    """Jump offsets (within ``prop.tol``) and states just after the norm threshold.

    The interpolated crossing is certified by exact evaluations at
    ``estimate -+ tol/2``; a failed check shrinks the bracket to the failing side
    and the estimate is redone there, so the loop is a bracketing bisection
    with an interpolated split point.
    """
    m = start.shape[0]
    decay = prop.decay

    def norm_and_slope(states):
        n = np.einsum("mi,mi->m", states.conj(), states).real
        s = -np.einsum("mi,ij,mj->m", states.conj(), decay, states).real
        return n, s

    lo = np.zeros(m)
    hi = hi_off.copy()
    n_lo, d_lo = norm_and_slope(start)
    n_hi, d_hi = norm_and_slope(hi_state)
    result_t = np.empty(m)
    result_state = np.empty_like(start)
    todo = np.arange(m)
    half = 0.5 * prop.tol
    while todo.size:
        narrow = hi[todo] - lo[todo] <= prop.tol
        if np.any(narrow):
            done = todo[narrow]
            result_t[done] = hi[done]
            result_state[done] = hi_state[done]
            todo = todo[~narrow]
            if not todo.size:
                break
        est = _hermite_crossing(lo[todo], hi[todo], n_lo[todo], n_hi[todo], d_lo[todo], d_hi[todo], target[todo])
        est = np.clip(est, lo[todo] + half, hi[todo] - half)
        offs = np.concatenate([est - half, est + half])
        both = np.concatenate([todo, todo])
        maps = prop.step_maps(t_start[both], offs)
        states = np.einsum("mij,mj->mi", maps, start[both])
        norms, slopes = norm_and_slope(states)
        k = todo.size
        left_ok = norms[:k] > target[todo]
        right_ok = norms[k:] <= target[todo]
        ok = left_ok & right_ok
        good = todo[ok]
        result_t[good] = offs[k:][ok]
        result_state[good] = states[k:][ok]
        # crossing lies left of the check window
        go_left = ~left_ok
        sel = todo[go_left]
        hi[sel], n_hi[sel], d_hi[sel] = offs[:k][go_left], norms[:k][go_left], slopes[:k][go_left]
        hi_state[sel] = states[:k][go_left]
        go_right = left_ok & ~right_ok
        sel = todo[go_right]
        lo[sel], n_lo[sel], d_lo[sel] = offs[k:][go_right], norms[k:][go_right], slopes[k:][go_right]
        todo = todo[~ok]
    return result_t, result_state


def _resolve_jumps(prop, start, end, t_start, t_b, cols, thresholds, rngs, jumps, counts, cav_idx, out):
    """Handle every jump inside the step ending at ``t_b`` for trajectories ``cols``.

    ``start``/``end`` are (m, d) states at ``t_start`` and ``t_b``; results are
    written into the columns of ``out``.
    """
    while cols.size:
        offs, hit_state = _locate(prop, start, t_start, t_b - t_start, end, thresholds[cols])
        t_jump = t_start + offs
        post = np.empty_like(hit_state)
        for j, col in enumerate(cols):
            rng = rngs[col]
            branches = np.einsum("kij,j->ki", prop.jump_ops, hit_state[j])
            weights = np.einsum("ki,ki->k", branches.conj(), branches).real
            ch = _choose(rng, weights)
            post[j] = branches[ch] / math.sqrt(weights[ch])
            thresholds[col] = 1.0 - rng.random()
            jumps[col].append((float(t_jump[j]), prop.labels[ch]))
            if ch == cav_idx:
                counts[col] += 1
        remaining = t_b - t_jump
        moving = remaining > 1e-15 * prop.pulse.tau_p
        end = post.copy()
        if np.any(moving):
            maps = prop.step_maps(t_jump[moving], remaining[moving])
            end[moving] = np.einsum("mij,mj->mi", maps, post[moving])
        out[:, cols] = end.T
        norms = np.einsum("mi,mi->m", end.conj(), end).real
        again = norms <= thresholds[cols]
        cols, start, end, t_start = cols[again], post[again], end[again], t_jump[again]


def _chunks(seed0: int, n_traj: int, chunk: int):
    return [np.arange(s, min(s + chunk, seed0 + n_traj)) for s in range(seed0, seed0 + n_traj, chunk)]


def _dim_from_channels(channels, dim):
    if dim is not None:
        return dim
    if not channels:
        raise ValueError("pass dim when there are no collapse channels")
    return dim_of(channels[0].operator)


def run_trajectory(
    params: SystemParams,
    pulse: PulseParams,
    channels: Sequence[CollapseChannel],
    seed: int,
    dim: HilbertDim | None = None,
    **prop_kwargs,
) -> JumpRecord:
    dim = _dim_from_channels(channels, dim)
    prop = PulsePropagator(params, pulse, channels, dim, **prop_kwargs)
    out = run_batch(prop, [seed])
    return JumpRecord(int(seed), tuple(out.jumps[0]), out.final_states[0])


def _count_chunk(args):
    prop, seeds, checkpoints = args
    out = run_batch(prop, seeds, checkpoints)
    return out.cavity_counts, out.checkpoint_n


def simulate_counts(
    params: SystemParams,
    pulse: PulseParams,
    channels: Sequence[CollapseChannel],
    n_traj: int,
    seed0: int = 0,
    dim: HilbertDim | None = None,
    checkpoints: Sequence[float] = (),
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    **prop_kwargs,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trajectory cavity counts and checkpoint ``<a+a>`` for seeds ``seed0 .. seed0 + n_traj - 1``."""
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    dim = _dim_from_channels(channels, dim)
    prop = PulsePropagator(params, pulse, channels, dim, checkpoints=checkpoints, **prop_kwargs)
    tasks = [(prop, seeds, tuple(checkpoints)) for seeds in _chunks(seed0, n_traj, chunk_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_chunk, tasks))
    else:
        parts = [_count_chunk(t) for t in tasks]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def estimate_pn(
    params: SystemParams,
    pulse: PulseParams,
    channels: Sequence[CollapseChannel],
    n_traj: int,
    seed0: int = 0,
    dim: HilbertDim | None = None,
    **kwargs,
) -> CountHistogram:
    """Histogram of counted cavity jumps per pulse.

    QD-emission and dephasing jumps act on the state but are not counted.
    """
    counts, _ = simulate_counts(params, pulse, channels, n_traj, seed0, dim, **kwargs)
    return CountHistogram.from_samples(counts)


def sweep_pn(
    params: SystemParams,
    pulse: PulseParams,
    axis: str,
    grid: Sequence[float],
    n_traj: int,
    dim: HilbertDim,
    seed0: int = 0,
    **kwargs,
) -> SweepResult:
    """P(n) and photon statistics along ``delta_c`` or ``e_peak``.

    Along ``delta_c`` the QD-cavity offset of ``params`` is kept fixed. Every
    grid point reuses the same seeds.
    """
    from .statistics import stats_columns

    hists = []
    for value in grid:
        if axis == "delta_c":
            p, pl = params.at_detuning(float(value)), pulse
        elif axis == "e_peak":
            p, pl = params, PulseParams(float(value), pulse.tau_p, pulse.t_window)
        else:
            raise ValueError(f"unsupported sweep axis {axis!r}")
        hists.append(estimate_pn(p, pl, collapse_channels(p, dim), n_traj, seed0, dim, **kwargs))
    return SweepResult(axis, np.asarray(grid, dtype=float), stats_columns(hists), hists)


def initial_state(dim: HilbertDim) -> np.ndarray:
    return basis(dim, 0)
