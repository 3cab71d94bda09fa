"""Per-slot Gaussian statistics of the received counts."""

import math
from fractions import Fraction

import numpy as np
import pytest

from mosk_lab import (
    ChannelModel,
    LinkParams,
    NoiseSpec,
    ReservoirPair,
    closed_form_slot_stats,
    counting_noise_var,
    purify,
    slot_stats,
    taps,
)
from mosk_lab.stats import _mixture_var

KT = 1.3807e-23 * 298.15
Q1 = 0.23516093535946328  # mpmath oracle, default geometry, t_s = 1
Q2 = 0.014658224972791528


def five_term_mixture_var(n_tx, f0, f1, eps, q):
    """Brute-force expansion: moments of the two-point mixture summed term
    by term (the independent oracle for the compact identity).

    Evaluated in exact rational arithmetic: the squared-mean terms cancel
    almost completely, so a float64 evaluation of this form would drown
    the comparison in rounding noise.
    """
    n_tx, f0, f1, eps, q = (Fraction(x) for x in (n_tx, f0, f1, eps, q))
    mu0 = n_tx * f0 * q
    mu1 = n_tx * f1 * q
    total = (
        eps * (1 - eps) * mu0 ** 2
        + eps * (1 - eps) * mu1 ** 2
        + eps * n_tx * f0 * q * (1 - q)
        + (1 - eps) * n_tx * f1 * q * (1 - q)
        - 2 * eps * (1 - eps) * mu0 * mu1
    )
    return float(total)


def enumerated_mixture_var(n_tx, f0, f1, eps, q, rng, n_draws=200000):
    """Monte Carlo mixture variance, a second independent check."""
    which = rng.random(n_draws) < eps
    lam = np.where(which, n_tx * f0, n_tx * f1)
    x = rng.binomial(np.round(lam).astype(int), q)
    return x.var()


def test_mixture_identity_matches_five_term_expansion():
    rng = np.random.default_rng(31)
    for _ in range(2000):
        n_tx = rng.uniform(1, 1e5)
        f0 = rng.uniform(0.0, 1.0)
        f1 = rng.uniform(0.0, 1.0)
        eps = rng.uniform(0.0, 1.0)
        q = rng.uniform(1e-6, 0.5)
        a = _mixture_var(n_tx, f0, f1, eps, q)
        b = five_term_mixture_var(n_tx, f0, f1, eps, q)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_mixture_identity_against_monte_carlo():
    rng = np.random.default_rng(5)
    n_tx, f0, f1, eps, q = 1000, 0.8, 0.2, 0.35, 0.2
    analytic = _mixture_var(n_tx, f0, f1, eps, q)
    empirical = enumerated_mixture_var(n_tx, f0, f1, eps, q, rng)
    assert empirical == pytest.approx(analytic, rel=0.02)


def _link(pair, noise_mode="off", n_tx=1000.0, eps=0.5, channel=None, **noise_kw):
    return LinkParams(
        reservoirs=pair,
        channel=channel or ChannelModel(),
        n_tx=n_tx,
        eps=eps,
        noise=NoiseSpec(mode=noise_mode, **noise_kw),
    )


def test_first_slot_perfect_transmitter():
    link = _link(ReservoirPair.ideal())
    st = slot_stats(link, 1)
    assert st.mu_a_h0 == pytest.approx(1000 * Q1, rel=1e-12)
    assert st.mu_a_h0 == pytest.approx(235.16, abs=5e-3)
    assert st.mu_b_h0 == 0.0
    assert st.var_a_h0 == pytest.approx(1000 * Q1 * (1 - Q1), rel=1e-12)
    assert st.var_a_h0 == pytest.approx(179.86, abs=5e-2)
    assert st.var_b_h0 == 0.0
    # mirrored under the other hypothesis
    assert st.mu_a_h1 == 0.0
    assert st.mu_b_h1 == pytest.approx(1000 * Q1, rel=1e-12)


def test_forced_prior_collapses_interference_mixture():
    pair = ReservoirPair.from_fractions(0.5, 5e8, 5e8, 0.2, 0.8)
    link = _link(pair, eps=1.0)
    st1 = slot_stats(link, 1)
    st2 = slot_stats(link, 2)
    # single-component mixture: plain binomial interference term
    extra_var = st2.var_a_h0 - st1.var_a_h0
    assert extra_var == pytest.approx(1000 * 0.8 * Q2 * (1 - Q2), rel=1e-12)
    extra_mu = st2.mu_a_h0 - st1.mu_a_h0
    assert extra_mu == pytest.approx(1000 * 0.8 * Q2, rel=1e-12)


def test_single_tap_interference_example():
    # one interference tap, eps = 1/2, fractions 0.2 / 0.8
    val = _mixture_var(1000, 0.8, 0.2, 0.5, Q2)
    assert val == pytest.approx(26.5594, abs=2e-3)
    assert val == pytest.approx(26.57, abs=0.02)  # value quoted at coarser q
    assert val == pytest.approx(five_term_mixture_var(1000, 0.8, 0.2, 0.5, Q2), rel=1e-12)
    pair = ReservoirPair.from_fractions(0.5, 5e8, 5e8, 0.2, 0.8)
    link = _link(pair)
    isi_var = slot_stats(link, 2).var_a_h0 - slot_stats(link, 1).var_a_h0
    assert isi_var == pytest.approx(val, rel=1e-12)


def test_slot_stats_interference_window_is_capped():
    pair = ReservoirPair.from_fractions(0.5, 5e8, 5e8, 0.2, 0.8)
    link = _link(pair, channel=ChannelModel(L=4))
    # beyond k = L the statistics are stationary
    a, b = slot_stats(link, 4), slot_stats(link, 9)
    assert a.mu_a_h0 == pytest.approx(b.mu_a_h0, rel=1e-14)
    assert a.var_a_h0 == pytest.approx(b.var_a_h0, rel=1e-14)


def test_mean_ordering_and_variance_positivity():
    rng = np.random.default_rng(77)
    for _ in range(100):
        c = rng.uniform(0.2, 0.8)
        c_low = rng.uniform(0.02, c - 0.01)
        c_high = rng.uniform(c + 0.01, 0.98)
        pair = ReservoirPair.from_fractions(c, 1e8, 1e8, c_low, c_high)
        link = _link(
            pair,
            noise_mode=rng.choice(["off", "snr", "volume"]),
            n_tx=rng.uniform(10, 5000),
            eps=rng.uniform(0.0, 1.0),
            snr_db=rng.uniform(5, 25),
        )
        st = slot_stats(link, int(rng.integers(1, 12)))
        assert st.mu_a_h0 >= st.mu_a_h1
        assert st.mu_b_h0 <= st.mu_b_h1
        for hyp in (0, 1):
            for sp in ("a", "b"):
                assert st.mu(hyp, sp) >= 0.0
                assert st.var(hyp, sp) >= 0.0


def test_hypothesis_gap_grows_with_energy():
    gaps = []
    for e in (1e-15, 1e-14, 1e-13):
        link = _link(purify(0.5, 5e8, 5e8, e))
        st = slot_stats(link, 1)
        gaps.append(st.mu_a_h0 - st.mu_a_h1)
    assert gaps[0] < gaps[1] < gaps[2]


def test_counting_noise_modes():
    pair = ReservoirPair.ideal()
    off = _link(pair, "off")
    assert counting_noise_var(off, 123.4) == 0.0
    snr = _link(pair, "snr", snr_db=15.0)
    assert counting_noise_var(snr, 235.16) == pytest.approx(
        235.16 ** 2 / 10 ** 1.5, rel=1e-12
    )
    assert counting_noise_var(snr, 235.16) == pytest.approx(1748.8, abs=0.1)
    vol = _link(pair, "volume")
    v_rx = 4.0 / 3.0 * math.pi * (4e-6) ** 3
    assert v_rx == pytest.approx(2.6808e-16, rel=1e-4)
    assert counting_noise_var(vol, 235.16) == pytest.approx(235.16 / v_rx, rel=1e-12)
    vol2 = _link(pair, "volume", v_rx=1e-15)
    assert counting_noise_var(vol2, 10.0) == pytest.approx(1e16, rel=1e-12)
    with pytest.raises(ValueError):
        counting_noise_var(off, -1.0)
    with pytest.raises(ValueError):
        NoiseSpec(mode="loud")


def test_noise_enters_all_four_variances_equally():
    pair = ReservoirPair.from_fractions(0.5, 5e8, 5e8, 0.2, 0.8)
    quiet = slot_stats(_link(pair, "off"), 3)
    noisy = slot_stats(_link(pair, "snr"), 3)
    da0 = noisy.var_a_h0 - quiet.var_a_h0
    da1 = noisy.var_a_h1 - quiet.var_a_h1
    assert da0 == pytest.approx(da1, rel=1e-12)
    assert noisy.mu_a_h0 == quiet.mu_a_h0  # noise is zero-mean


def _random_closed_form_case(rng):
    c = rng.uniform(0.2, 0.8)
    shift = rng.uniform(0.05, 0.9) * min(c, 1.0 - c)
    energy = shift * shift * KT / c
    n_side = 10 ** rng.uniform(7, 10)
    pair = purify(c, n_side, n_side, energy, mode="closed-form")
    channel = ChannelModel(
        D=10 ** rng.uniform(-10, -8),
        d=rng.uniform(5e-6, 3e-5),
        r=rng.uniform(1e-6, 8e-6),
        t_s=rng.uniform(0.2, 2.0),
        L=int(rng.integers(1, 11)),
    )
    noise = NoiseSpec(
        mode=rng.choice(["off", "snr", "volume"]),
        snr_db=rng.uniform(5.0, 25.0),
    )
    link = LinkParams(
        reservoirs=pair, channel=channel,
        n_tx=rng.uniform(50, 5000), eps=0.5, noise=noise,
    )
    return link, energy


def test_closed_form_matches_general_stats():
    rng = np.random.default_rng(99)
    fields = ["mu_a_h0", "mu_b_h0", "mu_a_h1", "mu_b_h1",
              "var_a_h0", "var_b_h0", "var_a_h1", "var_b_h1"]
    for _ in range(40):
        link, energy = _random_closed_form_case(rng)
        for k in (1, 2, 5, 9):
            general = slot_stats(link, k)
            closed = closed_form_slot_stats(link, k, energy)
            for name in fields:
                assert getattr(closed, name) == pytest.approx(
                    getattr(general, name), rel=1e-10, abs=1e-12
                ), (name, k)


def test_closed_form_zero_energy_interference():
    c = 0.4
    pair = purify(c, 5e8, 5e8, 0.0, mode="closed-form")
    link = _link(pair, n_tx=1000.0)
    st = closed_form_slot_stats(link, 2, 0.0)
    q = taps(link.channel)
    expected = 1000 * c * q[1] * (1 - q[1])
    isi_var = st.var_b_h0 - 1000 * c * q[0] * (1 - q[0])
    assert isi_var == pytest.approx(expected, rel=1e-12)


def test_closed_form_interference_variance_formula():
    c = 0.5
    shift = 0.17
    energy = shift * shift * KT / c
    pair = purify(c, 5e8, 5e8, energy, mode="closed-form")
    link = _link(pair, n_tx=800.0)
    q = taps(link.channel)
    st1 = closed_form_slot_stats(link, 1, energy)
    st2 = closed_form_slot_stats(link, 2, energy)
    isi_a = st2.var_a_h0 - st1.var_a_h0
    expected = 800 ** 2 * (c / KT) * energy * q[1] ** 2 + 800 * (1 - c) * q[1] * (1 - q[1])
    assert isi_a == pytest.approx(expected, rel=1e-12)


def test_closed_form_preconditions():
    pair = purify(0.5, 5e8, 5e8, 1e-22, mode="closed-form")
    link = LinkParams(reservoirs=pair, channel=ChannelModel(), n_tx=100, eps=0.4)
    with pytest.raises(ValueError, match="equal priors"):
        closed_form_slot_stats(link, 1, 1e-22)
    uneven = purify(0.5, 4e8, 6e8, 1e-22, mode="closed-form")
    link2 = LinkParams(reservoirs=uneven, channel=ChannelModel(), n_tx=100, eps=0.5)
    with pytest.raises(ValueError, match="equal reservoir"):
        closed_form_slot_stats(link2, 1, 1e-22)
    mb = purify(0.5, 5e8, 5e8, 1e-22)
    link3 = LinkParams(reservoirs=mb, channel=ChannelModel(), n_tx=100, eps=0.5)
    with pytest.raises(ValueError, match="closed-form purify mode"):
        closed_form_slot_stats(link3, 1, 1e-22)


def test_link_params_validation():
    pair = ReservoirPair.ideal()
    with pytest.raises(ValueError):
        LinkParams(reservoirs=pair, channel=ChannelModel(), n_tx=-1.0)
    with pytest.raises(ValueError):
        LinkParams(reservoirs=pair, channel=ChannelModel(), n_tx=10.0, eps=1.5)
