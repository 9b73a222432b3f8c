import math

import numpy as np
import pytest
import sympy as sp
from scipy.stats import poisson

from jcladder.hilbert import EXCITED, GROUND, HilbertDim, IntegrationError, basis, pure_density
from jcladder.jaynes_cummings import PulseParams, SystemParams, default_window, ghz
from jcladder.lindblad import (
    CollapseChannel,
    collapse_channels,
    cw_transmission_spectrum,
    evolve,
    ground_state,
    photon_count_distribution,
    pulse_emission,
    spectrum_peaks,
    steady_state,
)


def weak_drive_occupation(e_val, kappa_val, delta_val):
    """<a+a> of an empty driven cavity (coherent steady state), derived symbolically.

    Heisenberg-Langevin: d alpha/dt = -(i Delta + kappa) alpha - i E = 0.
    """
    alpha, e, k, dl = sp.symbols("alpha E kappa Delta")
    sol = sp.solve(sp.Eq(-(sp.I * dl + k) * alpha - sp.I * e, 0), alpha)[0]
    occ = sp.simplify(sp.expand(sol * sp.conjugate(sol)).subs({e: e_val, k: kappa_val, dl: delta_val}))
    return float(occ)


def test_channel_validation():
    with pytest.raises(ValueError):
        CollapseChannel(np.eye(4), "leak")
    d = HilbertDim(3)
    p = SystemParams(g=ghz(21), kappa=ghz(27))
    assert [c.label for c in collapse_channels(p, d)] == ["cavity"]
    assert len(collapse_channels(p, d, keep_zero=True)) == 3


def test_dark_state_is_stationary():
    d = HilbertDim(4)
    p = SystemParams(g=ghz(40), kappa=ghz(4), gamma=ghz(0.16), gamma_d=ghz(1))
    res = evolve(ground_state(d), p, 0.0, collapse_channels(p, d), np.linspace(0, 0.5, 11))
    assert np.max(np.abs(res.states - ground_state(d))) < 1e-10


def test_empty_cavity_decay():
    # one cavity photon decays as exp(-2 kappa t): kappa is a field rate
    d = HilbertDim(3)
    p = SystemParams(g=0.0, kappa=ghz(4))
    times = np.linspace(0, 0.1, 21)
    res = evolve(pure_density(basis(d, 1)), p, 0.0, collapse_channels(p, d), times)
    assert np.allclose(res.observables["n"], np.exp(-2 * p.kappa * times), rtol=1e-6)
    assert res.emitted[-1] == pytest.approx(1 - math.exp(-2 * p.kappa * 0.1), rel=1e-6)


def test_trace_and_hermiticity_through_pulse(fig2_params, fig2_pulse):
    d = HilbertDim(8)
    res = pulse_emission(fig2_params.at_detuning(0.6 * fig2_params.g), fig2_pulse, d, n_points=41)
    traces = np.einsum("tii->t", res.states).real
    assert np.max(np.abs(traces - 1)) < 1e-8
    herm = np.max(np.abs(res.states - np.conj(np.transpose(res.states, (0, 2, 1)))))
    assert herm < 1e-10
    assert np.all(np.linalg.eigvalsh(res.states).min(axis=1) > -1e-8)


def test_unitary_limit_keeps_purity(fig2_params, fig2_pulse):
    d = HilbertDim(6)
    res = evolve(ground_state(d), fig2_params, fig2_pulse, [], np.linspace(-0.1, 0.1, 21))
    purity = np.einsum("tij,tji->t", res.states, res.states).real
    assert np.max(np.abs(purity - 1)) < 1e-8


def test_dephasing_only_keeps_populations():
    d = HilbertDim(3)
    p = SystemParams(g=0.0, kappa=0.0, gamma_d=ghz(1), delta_a=ghz(2), delta_c=ghz(-3))
    psi = (basis(d, 1, GROUND) + basis(d, 0, EXCITED)) / math.sqrt(2)
    rho0 = pure_density(psi)
    ch = [c for c in collapse_channels(p, d) if c.label == "dephasing"]
    res = evolve(rho0, p, 0.0, ch, np.linspace(0, 1.0, 11))
    diag = np.einsum("tii->ti", res.states).real
    assert np.max(np.abs(diag - np.diag(rho0).real)) < 1e-8
    i, j = d.index(1, GROUND), d.index(0, EXCITED)
    # the coherence decays at gamma_d for this sqrt(2 gamma_d) s+s- convention
    assert abs(res.states[-1, i, j]) == pytest.approx(0.5 * math.exp(-p.gamma_d * 1.0), rel=1e-6)


def test_steady_state_zero_drive_is_ground():
    d = HilbertDim(4)
    p = SystemParams(g=ghz(21), kappa=ghz(27), gamma=ghz(0.16))
    rho = steady_state(p, 0.0, collapse_channels(p, d), d)
    assert np.max(np.abs(rho - ground_state(d))) < 1e-9


def test_weak_drive_lorentzian():
    d = HilbertDim(4)
    k, e = ghz(27), ghz(0.5)
    detunings = np.array([-2 * k, -k, 0.0, 0.5 * k, k, 3 * k])
    p = SystemParams(g=0.0, kappa=k)
    spec = cw_transmission_spectrum(p, e, detunings, d)
    oracle = np.array([weak_drive_occupation(e, k, dl) for dl in detunings])
    assert np.allclose(spec["n_c"], oracle, rtol=0.02)
    # half width at half maximum equals kappa
    assert spec["n_c"][4] / spec["n_c"][2] == pytest.approx(0.5, rel=0.05)


def test_spectrum_symmetry_on_resonance(exp_params):
    d = HilbertDim(3)
    dets = np.linspace(-ghz(60), ghz(60), 9)
    spec = cw_transmission_spectrum(exp_params, ghz(0.5), dets, d)
    assert np.allclose(spec["n_c"], spec["n_c"][::-1], rtol=1e-6, atol=0)


def test_vacuum_rabi_doublet(exp_params):
    d = HilbertDim(3)
    dets = np.linspace(-ghz(60), ghz(60), 121)
    spec = cw_transmission_spectrum(exp_params, ghz(0.5), dets, d)
    peaks = spectrum_peaks(dets, spec["n_c"])
    assert len(peaks) == 2
    sep = (peaks[1] - peaks[0]) / exp_params.g
    assert 1.2 <= sep <= 2.2


def test_strong_cw_drive_warns():
    d = HilbertDim(6)
    with pytest.warns(UserWarning):
        cw_transmission_spectrum(SystemParams(g=0.0, kappa=ghz(27)), ghz(20), [0.0], d)


def test_count_distribution_empty_cavity_is_poisson():
    # with g = 0 the cavity holds a coherent state: counts are Poisson with mean = emission
    d = HilbertDim(10)
    p = SystemParams(g=0.0, kappa=ghz(4))
    pulse = PulseParams(ghz(3), 0.0244)
    pn = photon_count_distribution(p, pulse, d, n_counts=12)
    mu = pulse_emission(p, pulse, d).emitted[-1]
    assert np.allclose(pn[:10], poisson.pmf(np.arange(10), mu), atol=1e-6)


def test_count_distribution_matches_plain_emission(fig2_params, fig2_pulse):
    d = HilbertDim(10)
    p = fig2_params.at_detuning(1.1 * fig2_params.g)
    pn = photon_count_distribution(p, fig2_pulse, d, n_counts=14)
    mean = float(np.dot(np.arange(len(pn)), pn))
    assert pn.sum() == pytest.approx(1.0)
    assert mean == pytest.approx(pulse_emission(p, fig2_pulse, d).emitted[-1], rel=1e-4)


def test_count_distribution_symmetric_in_detuning(fig2_params, fig2_pulse):
    d = HilbertDim(8)
    a = photon_count_distribution(fig2_params.at_detuning(0.7 * fig2_params.g), fig2_pulse, d)
    b = photon_count_distribution(fig2_params.at_detuning(-0.7 * fig2_params.g), fig2_pulse, d)
    assert np.allclose(a, b, atol=1e-7)


def test_rk4_and_adaptive_agree(fig2_params, fig2_pulse):
    d = HilbertDim(6)
    p = fig2_params.at_detuning(0.9 * fig2_params.g)
    r1 = pulse_emission(p, fig2_pulse, d, n_points=5)
    r2 = pulse_emission(p, fig2_pulse, d, n_points=5, method="dop853")
    assert np.max(np.abs(r1.states - r2.states)) < 1e-6
    assert r1.emitted[-1] == pytest.approx(r2.emitted[-1], rel=1e-6)


def test_unstable_step_is_reported(fig2_params, fig2_pulse):
    d = HilbertDim(6)
    with pytest.raises(IntegrationError):
        pulse_emission(fig2_params, fig2_pulse, d, n_points=3, max_phase_step=10.0)


def test_bad_grid_and_dims():
    d = HilbertDim(3)
    p = SystemParams(g=0.0, kappa=1.0)
    with pytest.raises(ValueError):
        evolve(ground_state(d), p, 0.0, [], [0.0, 0.0])
    with pytest.raises(ValueError):
        evolve(ground_state(d), p, 0.0, collapse_channels(p, HilbertDim(4)), [0.0, 1.0])


def test_default_window(fig2_params, fig2_pulse):
    t0, t1 = default_window(fig2_pulse, fig2_params)
    tau = fig2_pulse.tau_p
    assert t0 == pytest.approx(-5 * tau)
    assert t1 == pytest.approx(5 * tau + 10 / (2 * fig2_params.kappa))
