import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcladder.hilbert import (
    EXCITED,
    GROUND,
    HilbertDim,
    IntegrationError,
    annihilation,
    basis,
    dag,
    evolve_step_rk4,
    expectation,
    identity,
    is_hermitian,
    number,
    pure_density,
    qubit_lowering,
    validate_density_matrix,
    validate_state,
)

from conftest import random_state


def test_dim_invariants():
    d = HilbertDim(4)
    assert d.size == 10
    assert d.index(3, EXCITED) == 7
    for bad in (1, 0, -3, 2.5):
        with pytest.raises(ValueError):
            HilbertDim(bad)


def test_annihilation_elements():
    d = HilbertDim(2)
    out = annihilation(d) @ basis(d, 1, GROUND)
    assert np.allclose(out, basis(d, 0, GROUND))
    d4 = HilbertDim(4)
    a = annihilation(d4)
    assert a[d4.index(3, GROUND), d4.index(4, GROUND)] == pytest.approx(2.0)
    assert a[d4.index(3, EXCITED), d4.index(4, EXCITED)] == pytest.approx(2.0)
    assert a[d4.index(3, GROUND), d4.index(4, EXCITED)] == 0


def test_number_spectrum_doubly_degenerate():
    ev = np.sort(np.linalg.eigvalsh(number(HilbertDim(8))))
    assert np.allclose(ev, np.repeat(np.arange(9), 2), atol=1e-12)


def test_qubit_lowering():
    d = HilbertDim(3)
    sm = qubit_lowering(d)
    assert np.allclose(sm @ basis(d, 0, EXCITED), basis(d, 0, GROUND))
    for n in range(4):
        assert np.allclose(sm @ basis(d, n, GROUND), 0)
    proj = dag(sm) @ sm
    assert np.array_equal(proj @ proj, proj)


def test_canonical_commutator_below_cutoff():
    d = HilbertDim(10)
    a = annihilation(d)
    comm = a @ dag(a) - dag(a) @ a
    keep = slice(0, 2 * d.n_max)  # drop |n_max> rows/columns
    assert np.max(np.abs(comm[keep, keep] - np.eye(2 * d.n_max))) < 1e-12


def test_tensor_factors_commute():
    d = HilbertDim(6)
    a, sm = annihilation(d), qubit_lowering(d)
    assert np.array_equal(a @ sm, sm @ a)


def test_expectation_truncated_coherent_state():
    d = HilbertDim(10)
    alpha = 0.3
    c = np.array([alpha**n / math.sqrt(math.factorial(n)) for n in range(11)])
    psi = np.zeros(d.size, complex)
    psi[0::2] = c
    oracle = sum(abs(cn) ** 2 * n for n, cn in enumerate(c)) / np.sum(np.abs(c) ** 2)
    value = expectation(psi, number(d))
    assert value.real == pytest.approx(oracle, abs=1e-12)
    assert value.real == pytest.approx(0.09, abs=1e-6)
    # density-matrix form agrees
    assert expectation(pure_density(psi), number(d)).real == pytest.approx(oracle, abs=1e-12)


def test_expectation_fock_two_and_identity():
    d = HilbertDim(4)
    a = annihilation(d)
    assert expectation(basis(d, 2), dag(a) @ dag(a) @ a @ a) == pytest.approx(2.0)
    psi = random_state(np.random.default_rng(0), d.size)
    assert expectation(psi, identity(d)) == pytest.approx(1.0)


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(basis(HilbertDim(3), 0), number(HilbertDim(4)))
    with pytest.raises(ValueError):
        expectation(pure_density(basis(HilbertDim(3), 0)), number(HilbertDim(4)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expectation_of_hermitian_is_real(seed):
    rng = np.random.default_rng(seed)
    d = HilbertDim(4)
    m = rng.normal(size=(d.size, d.size)) + 1j * rng.normal(size=(d.size, d.size))
    herm = m + dag(m)
    psi = random_state(rng, d.size)
    assert abs(expectation(psi, herm).imag) < 1e-10
    assert abs(expectation(pure_density(psi), herm).imag) < 1e-10


def test_validators():
    d = HilbertDim(2)
    with pytest.raises(ValueError):
        validate_state(2 * basis(d, 0), d)
    with pytest.raises(ValueError):
        validate_state(np.zeros(d.size), d)
    validate_state(0.5 * basis(d, 1), d)  # sub-normalized is allowed
    with pytest.raises(ValueError):
        validate_density_matrix(2 * pure_density(basis(d, 0)))
    assert is_hermitian(number(d))
    assert not is_hermitian(annihilation(d))


def test_rk4_zero_generator():
    d = HilbertDim(2)
    psi = random_state(np.random.default_rng(1), d.size)
    assert np.array_equal(evolve_step_rk4(psi, np.zeros((d.size, d.size)), 0.1), psi)


def test_rk4_hermitian_preserves_norm():
    rng = np.random.default_rng(2)
    d = HilbertDim(4)
    m = rng.normal(size=(d.size, d.size)) + 1j * rng.normal(size=(d.size, d.size))
    h = m + dag(m)
    dt = 0.02 / np.linalg.norm(h, 2)
    psi = random_state(rng, d.size)
    for _ in range(50):
        new = evolve_step_rk4(psi, h, dt)
        assert abs(np.linalg.norm(new) - np.linalg.norm(psi)) < 1e-10
        psi = new


def test_rk4_rabi_returns_to_ground():
    # H = Omega (s+ + s-), Omega = 2pi * 1 GHz: P_g(t) = cos^2(Omega t), back to 1 at t = 0.5 ns
    d = HilbertDim(2)
    sm = qubit_lowering(d)
    omega = 2 * np.pi
    h = omega * (sm + dag(sm))
    psi = basis(d, 0)
    n = 2000
    for _ in range(n):
        psi = evolve_step_rk4(psi, h, 0.5 / n)
    assert abs(psi[0]) ** 2 == pytest.approx(np.cos(omega * 0.5) ** 2, abs=1e-6)
    assert abs(psi[0]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_rk4_fourth_order_convergence():
    # time-dependent drive on a small JC system; reference from a much finer step
    d = HilbertDim(3)
    a, sm = annihilation(d), qubit_lowering(d)
    h0 = 1.0 * (dag(a) @ sm + a @ dag(sm))

    def gen(t):
        return h0 + 0.7 * np.exp(-((t - 1.0) ** 2)) * (a + dag(a))

    def run(n):
        psi, t, dt = basis(d, 0), 0.0, 2.0 / n
        for _ in range(n):
            psi = evolve_step_rk4(psi, gen, dt, t)
            t += dt
        return psi

    ref = run(4096)
    e1 = np.linalg.norm(run(32) - ref)
    e2 = np.linalg.norm(run(64) - ref)
    assert e1 / e2 >= 8.0


def test_rk4_reports_non_finite():
    d = HilbertDim(2)
    with pytest.raises(IntegrationError):
        evolve_step_rk4(basis(d, 0), np.full((d.size, d.size), np.nan), 0.1)
    with pytest.raises(ValueError):
        evolve_step_rk4(basis(d, 0), np.eye(d.size), 0.0)
