import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from jcladder.statistics import (
    BLOCKADE,
    COHERENT,
    TUNNELING,
    BlinkingModel,
    PhotonStats,
    blinking_mix,
    classify_regime,
    factorial_moments,
    mixed_distribution,
    peak_position,
    stats_columns,
    stats_from_distribution,
    stats_from_pn,
    thin,
    thin_samples,
    zero_crossings,
)
from jcladder.trajectories import CountHistogram

distributions = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12).filter(lambda w: sum(w) > 1e-3).map(
    lambda w: np.array(w) / sum(w)
)


def test_poisson_is_coherent():
    p = poisson.pmf(np.arange(60), 0.5)
    p /= p.sum()
    s = stats_from_distribution(p)
    assert s.g2 == pytest.approx(1.0, abs=1e-9)
    assert s.c2 == pytest.approx(0.0, abs=1e-9)


def test_single_photon():
    s = stats_from_distribution([0.0, 1.0])
    assert s.g2 == 0.0
    assert s.c2 == -1.0


def test_two_photon_admixture():
    s = stats_from_distribution([0.9, 0.0, 0.1])
    assert (s.m1, s.m2) == pytest.approx((0.2, 0.2))
    assert s.g2 == pytest.approx(5.0)
    assert s.c2 == pytest.approx(0.16)


def test_no_photons():
    s = stats_from_distribution([1.0])
    assert s.g2 is None
    assert s.c2 == 0.0
    with pytest.raises(ValueError):
        classify_regime(s)


def test_unnormalized_rejected():
    with pytest.raises(ValueError):
        stats_from_distribution([0.5, 0.4])


@settings(max_examples=200, deadline=None)
@given(distributions)
def test_c2_identity(p):
    s = stats_from_distribution(p)
    m1, m2 = factorial_moments(p)
    assert s.c2 == pytest.approx(m2 - m1**2, abs=1e-12)
    if s.g2 is not None:
        assert s.c2 == pytest.approx((s.g2 - 1) * s.n_c**2, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(distributions)
def test_support_on_zero_and_one_is_antibunched(p):
    q = np.zeros(2)
    q[0], q[1] = p[0], 1 - p[0]
    s = stats_from_distribution(q)
    if s.g2 is not None:
        assert s.g2 == 0.0


@settings(max_examples=100, deadline=None)
@given(distributions, distributions, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_mixture_moments_affine(p, q, r1, r2):
    lam = 0.37
    mix = lambda r: factorial_moments(mixed_distribution(p, q, r))
    lhs = mix(lam * r1 + (1 - lam) * r2)
    a, b = mix(r1), mix(r2)
    assert lhs == pytest.approx(tuple(lam * x + (1 - lam) * y for x, y in zip(a, b)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(distributions, st.floats(0.01, 1.0))
def test_g2_invariant_under_thinning(p, eff):
    s0, s1 = stats_from_distribution(p), stats_from_distribution(thin(p, eff))
    assert s1.n_c == pytest.approx(eff * s0.n_c, abs=1e-12)
    if s0.g2 is not None and s0.n_c > 1e-6:
        assert s1.g2 == pytest.approx(s0.g2, rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("eff", [0.5, 0.1])
def test_sampled_thinning_within_error(eff):
    rng = np.random.default_rng(11)
    samples = rng.choice(4, size=200_000, p=[0.5, 0.2, 0.2, 0.1])
    s0 = stats_from_pn(CountHistogram.from_samples(samples))
    s1 = stats_from_pn(CountHistogram.from_samples(thin_samples(samples, eff, rng)))
    assert abs(s1.g2 - s0.g2) < 3 * np.hypot(s0.g2_err, s1.g2_err)


def test_histogram_mix_limits():
    rng = np.random.default_rng(3)
    qd = CountHistogram.from_samples(rng.choice(3, size=5000, p=[0.6, 0.3, 0.1]))
    empty = CountHistogram.from_samples(rng.poisson(0.8, size=50_000))
    same = blinking_mix(qd, empty, BlinkingModel(1.0))
    assert same.g2 == pytest.approx(stats_from_pn(qd).g2, rel=1e-12)
    assert same.g2_err == pytest.approx(stats_from_pn(qd).g2_err, rel=1e-12)
    pois = blinking_mix(qd, empty, BlinkingModel(0.0))
    assert abs(pois.g2 - 1) < 3 * pois.g2_err
    with pytest.raises(ValueError):
        BlinkingModel(1.5)


def test_error_propagation_matches_bootstrap():
    rng = np.random.default_rng(5)
    p = np.array([0.55, 0.3, 0.1, 0.05])
    n = 4000
    hist = CountHistogram.from_samples(rng.choice(4, size=n, p=p))
    s = stats_from_pn(hist)
    boot = [stats_from_pn(CountHistogram(rng.multinomial(n, hist.p_n))) for _ in range(400)]
    assert s.g2_err == pytest.approx(np.std([b.g2 for b in boot]), rel=0.2)
    assert s.c2_err == pytest.approx(np.std([b.c2 for b in boot]), rel=0.2)
    assert s.n_c_err == pytest.approx(np.std([b.n_c for b in boot]), rel=0.2)


def test_classify_regime():
    assert classify_regime(PhotonStats(0.1, 0.001, 0.1, -0.009, g2_err=0.05)) == BLOCKADE
    assert classify_regime(PhotonStats(0.1, 0.03, 3.0, 0.02, g2_err=0.5)) == TUNNELING
    assert classify_regime(PhotonStats(0.1, 0.01, 1.05, 0.0005, g2_err=0.05)) == COHERENT


def test_stats_columns_layout():
    hists = [CountHistogram([5, 3, 2]), CountHistogram([10])]
    cols = stats_columns(hists)
    assert list(cols)[:6] == ["n_c", "n_c_err", "g2", "g2_err", "c2", "c2_err"]
    assert np.isnan(cols["g2"][1])
    assert cols["p2"][0] == pytest.approx(0.2)
    assert cols["p8"][0] == 0.0
    assert list(cols["n_traj"]) == [10, 10]


def test_peak_and_zero_crossing_helpers():
    x = np.linspace(0, 2, 41)
    y = -((x - 0.73) ** 2)
    assert peak_position(x, y) == pytest.approx(0.73, abs=1e-10)
    z = zero_crossings(x, x - 0.93)
    assert z == pytest.approx([0.93])
