"""Truncated Fock space of one cavity mode tensored with a two-level emitter.

Basis ordering is ``|n> (x) |q>`` with ``q = 0`` for the ground state ``g`` and
``q = 1`` for the excited state ``e``; the flat index is ``2 * n + q``.

Operators are plain dense ``complex128`` arrays and states are 1-D arrays (pure)
or square arrays (density matrices). All frequencies are angular, in rad/ns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

Generator = Union[np.ndarray, Callable[[float], np.ndarray]]

GROUND, EXCITED = 0, 1


class IntegrationError(RuntimeError):
    """Raised when a propagation step produces non-finite values."""


@dataclass(frozen=True)
class HilbertDim:
    """Truncation of the cavity ladder at Fock level ``n_max``."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max!r}")

    @property
    def n_fock(self) -> int:
        return self.n_max + 1

    @property
    def size(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, n: int, q: int) -> int:
        if not 0 <= n <= self.n_max or q not in (GROUND, EXCITED):
            raise ValueError(f"basis label out of range: n={n}, q={q}")
        return 2 * n + q


def basis(dim: HilbertDim, n: int, q: int = GROUND) -> np.ndarray:
    """Return the basis ket ``|n, q>``."""
    psi = np.zeros(dim.size, dtype=complex)
    psi[dim.index(n, q)] = 1.0
    return psi


def identity(dim: HilbertDim) -> np.ndarray:
    return np.eye(dim.size, dtype=complex)


def annihilation(dim: HilbertDim) -> np.ndarray:
    """Cavity lowering operator ``a (x) I_2``."""
    a = np.diag(np.sqrt(np.arange(1, dim.n_fock, dtype=float)), k=1)
    return np.kron(a, np.eye(2)).astype(complex)


def qubit_lowering(dim: HilbertDim) -> np.ndarray:
    """Emitter lowering operator ``I_fock (x) |g><e|``; take the adjoint for ``sigma_+``."""
    sm = np.zeros((2, 2))
    sm[GROUND, EXCITED] = 1.0
    return np.kron(np.eye(dim.n_fock), sm).astype(complex)


def number(dim: HilbertDim) -> np.ndarray:
    a = annihilation(dim)
    return a.conj().T @ a


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def is_hermitian(op: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.max(np.abs(op)), 1.0) if op.size else 1.0
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) < rtol * scale)


def _check_square(op: np.ndarray, dim: HilbertDim | None, what: str) -> None:
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{what} must be square, got shape {op.shape}")
    if dim is not None and op.shape[0] != dim.size:
        raise ValueError(f"{what} has side {op.shape[0]}, expected {dim.size}")


def validate_state(psi: np.ndarray, dim: HilbertDim | None = None, atol: float = 1e-9) -> np.ndarray:
    """Check a (possibly sub-normalized) ket and return it as a complex array."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or (dim is not None and psi.shape[0] != dim.size):
        raise ValueError(f"state vector has shape {psi.shape}")
    norm2 = float(np.vdot(psi, psi).real)
    if not 0.0 < norm2 <= 1.0 + atol:
        raise ValueError(f"state norm^2 {norm2} outside (0, 1]")
    return psi


def validate_density_matrix(rho: np.ndarray, dim: HilbertDim | None = None) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    _check_square(rho, dim, "density matrix")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"density matrix trace {tr} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """``<psi|M|psi> / <psi|psi>`` for kets, ``Tr(rho M)`` for density matrices."""
    state = np.asarray(state)
    if state.ndim == 1:
        if op.shape != (state.shape[0], state.shape[0]):
            raise ValueError(f"operator shape {op.shape} does not match state of length {state.shape[0]}")
        return complex(np.vdot(state, op @ state) / np.vdot(state, state))
    if state.ndim == 2:
        if op.shape != state.shape:
            raise ValueError(f"operator shape {op.shape} does not match density matrix {state.shape}")
        # Tr(rho M) without forming the product
        return complex(np.sum(state * op.T))
    raise ValueError(f"state must be 1-D or 2-D, got {state.ndim}-D")


def _generator_at(generator: Generator, t: float) -> np.ndarray:
    return generator(t) if callable(generator) else generator


def evolve_step_rk4(state: np.ndarray, generator: Generator, dt: float, t: float = 0.0) -> np.ndarray:
    """One classic RK4 step of ``d psi/dt = -i G(t) psi``.

    ``generator`` is either a fixed matrix or a callable ``t -> G(t)``. A
    non-Hermitian ``G`` (effective Hamiltonian) lets the norm decay.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g0 = _generator_at(generator, t)
    gm = _generator_at(generator, t + 0.5 * dt)
    g1 = _generator_at(generator, t + dt)
    k1 = -1j * (g0 @ state)
    k2 = -1j * (gm @ (state + 0.5 * dt * k1))
    k3 = -1j * (gm @ (state + 0.5 * dt * k2))
    k4 = -1j * (g1 @ (state + dt * k3))
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError(f"non-finite state after RK4 step at t={t}")
    return out
