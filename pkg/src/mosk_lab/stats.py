"""Gaussian slot statistics of the received molecule counts.

For every slot the receiver counts molecules of species A and B.  Each
count is the sum of three independent pieces: the binomially absorbed part
of the current emission, interference from the previous emissions still in
flight (one term per channel tap), and zero-mean Gaussian counting noise.
Because past bits are unknown, each interference term is a two-component
mixture over the emitting reservoir; its exact variance

    eps*(1-eps)*(mu0 - mu1)^2 + eps*v0 + (1-eps)*v1

is used directly (mu_j, v_j are the per-reservoir binomial mean/variance;
expanding the square reproduces the five-term form obtained by summing the
component moments).

:func:`slot_stats` evaluates the general model.  For equal priors and
equal reservoir sizes, :func:`closed_form_slot_stats` evaluates the
energy-parameterised closed forms (fractions ``c -/+ sqrt(c*E/(k_B*T_e))``,
interference variance ``N^2*(c/kT)*E*q^2 + N*f*q*(1-q)``); the two must
agree to rounding when the reservoirs are built with the ``closed-form``
purify mode, which makes the pair a useful cross-check of both paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, species_taps
from .thermo import DEFAULT_CONSTANTS, PhysicalConstants, ReservoirPair

__all__ = [
    "NoiseSpec",
    "LinkParams",
    "SlotStats",
    "slot_stats",
    "counting_noise_var",
    "closed_form_slot_stats",
]

NOISE_MODES = ("snr", "volume", "off")


@dataclass(frozen=True)
class NoiseSpec:
    """Counting-noise model: SNR-referenced, receiver-volume, or disabled.

    ``snr`` mode sets the noise power so that the average squared observed
    count over the noise power equals the configured SNR.  ``volume`` mode
    uses mean_count / V_rx (receiver volume, m^3); V_rx defaults to the
    receiver sphere volume.  The two conventions carry different units and
    are both kept; neither is claimed correct.
    """

    mode: str = "snr"
    snr_db: float = 15.0
    v_rx: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in NOISE_MODES:
            raise ValueError(f"unknown noise mode {self.mode!r}; expected one of {NOISE_MODES}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.v_rx is not None and self.v_rx <= 0:
            raise ValueError("receiver volume must be positive when set")


@dataclass(frozen=True)
class LinkParams:
    """Everything the analytic receiver model needs for one configuration."""

    reservoirs: ReservoirPair
    channel: ChannelModel = field(default_factory=ChannelModel)
    n_tx: float = 1000.0
    eps: float = 0.5
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self) -> None:
        if self.n_tx < 0:
            raise ValueError("per-symbol release size n_tx must be non-negative")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("prior of bit 0 must lie in [0, 1]")

    def receiver_volume(self) -> float:
        if self.noise.v_rx is not None:
            return self.noise.v_rx
        return 4.0 / 3.0 * math.pi * self.channel.r ** 3


@dataclass(frozen=True)
class SlotStats:
    """Per-slot Gaussian parameters, one (mean, variance) pair per
    hypothesis (h0: bit 0 sent, h1: bit 1 sent) and species."""

    k: int
    eps: float
    mu_a_h0: float
    mu_b_h0: float
    mu_a_h1: float
    mu_b_h1: float
    var_a_h0: float
    var_b_h0: float
    var_a_h1: float
    var_b_h1: float

    def mu(self, hyp: int, species: str) -> float:
        return getattr(self, f"mu_{species}_h{hyp}")

    def var(self, hyp: int, species: str) -> float:
        return getattr(self, f"var_{species}_h{hyp}")


def counting_noise_var(params: LinkParams, mean_count: float) -> float:
    """Noise variance attached to a count with the given average value."""
    if mean_count < 0:
        raise ValueError("mean count must be non-negative")
    mode = params.noise.mode
    if mode == "off":
        return 0.0
    if mode == "snr":
        return mean_count ** 2 / 10.0 ** (params.noise.snr_db / 10.0)
    return mean_count / params.receiver_volume()


def _mixture_var(n_tx: float, f0: float, f1: float, eps: float, q: float) -> float:
    """Exact variance of one interference term when the past bit is unknown."""
    mu0 = n_tx * f0 * q
    mu1 = n_tx * f1 * q
    return eps * (1.0 - eps) * (mu0 - mu1) ** 2 + (1.0 - q) * (eps * mu0 + (1.0 - eps) * mu1)


def _isi_taps(channel: ChannelModel, q: np.ndarray, k: int) -> np.ndarray:
    """Taps feeding interference into slot k: q_2..q_min(k, L).

    The channel keeps L taps in total, and the particle simulator retires
    molecules after L slots, so interference reaches at most L-1 slots back
    on both the analytic and the simulated side.
    """
    return q[1:min(k, channel.L)]


def slot_stats(params: LinkParams, k: int) -> SlotStats:
    """Means and variances of both species' counts in slot ``k`` (1-based)."""
    if k < 1:
        raise ValueError("slot index is 1-based")
    res = params.reservoirs
    n_tx = params.n_tx
    eps = params.eps
    q_a, q_b = species_taps(params.channel)

    # per-species fraction drawn from the emitting reservoir, by sent bit
    frac = {
        "a": (1.0 - res.c_low, 1.0 - res.c_high),
        "b": (res.c_low, res.c_high),
    }

    mu = {}
    var_base = {}
    for species, q in (("a", q_a), ("b", q_b)):
        f0, f1 = frac[species]
        isi = _isi_taps(params.channel, q, k)
        isi_mean = n_tx * (eps * f0 + (1.0 - eps) * f1) * float(np.sum(isi))
        isi_var = float(sum(_mixture_var(n_tx, f0, f1, eps, float(qj)) for qj in isi))
        q1 = float(q[0])
        for hyp, f in ((0, f0), (1, f1)):
            mu[species, hyp] = n_tx * f * q1 + isi_mean
            var_base[species, hyp] = n_tx * f * q1 * (1.0 - q1) + isi_var

    noise_var = {
        species: counting_noise_var(
            params, eps * mu[species, 0] + (1.0 - eps) * mu[species, 1]
        )
        for species in ("a", "b")
    }

    return SlotStats(
        k=k,
        eps=eps,
        mu_a_h0=mu["a", 0],
        mu_b_h0=mu["b", 0],
        mu_a_h1=mu["a", 1],
        mu_b_h1=mu["b", 1],
        var_a_h0=var_base["a", 0] + noise_var["a"],
        var_b_h0=var_base["b", 0] + noise_var["b"],
        var_a_h1=var_base["a", 1] + noise_var["a"],
        var_b_h1=var_base["b", 1] + noise_var["b"],
    )


def closed_form_slot_stats(
    params: LinkParams, k: int, energy: float,
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> SlotStats:
    """Energy-parameterised slot statistics for the symmetric special case.

    Requires equal priors (eps = 1/2), equal reservoir sizes, and a
    reservoir pair built with the ``closed-form`` purify mode at ``energy``;
    the fractions are re-derived here as c -/+ sqrt(c*E/(k_B*T_e)) rather
    than read from the pair, so this is an independent evaluation path.
    """
    if k < 1:
        raise ValueError("slot index is 1-based")
    res = params.reservoirs
    if params.eps != 0.5:
        raise ValueError("closed forms assume equal priors (eps = 1/2)")
    if not math.isclose(res.n_low, res.n_high, rel_tol=1e-12):
        raise ValueError("closed forms assume equal reservoir sizes")
    if energy < 0:
        raise ValueError("energy must be non-negative")
    c = res.c
    shift = math.sqrt(c * energy / consts.kT)
    if not math.isclose(res.c_low, c - shift, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(
            "reservoir pair was not built with the closed-form purify mode "
            f"at this energy (expected c_low = {c - shift:.12g}, got {res.c_low:.12g})"
        )
    n_tx = params.n_tx
    q_a, q_b = species_taps(params.channel)

    mu = {}
    var_base = {}
    energy_term = n_tx * n_tx * (c / consts.kT) * energy
    for species, q, f_env in (("a", q_a, 1.0 - c), ("b", q_b, c)):
        isi = _isi_taps(params.channel, q, k)
        isi_mean = n_tx * f_env * float(np.sum(isi))
        isi_var = float(sum(
            energy_term * qj * qj + n_tx * f_env * qj * (1.0 - qj)
            for qj in (float(x) for x in isi)
        ))
        q1 = float(q[0])
        sign = -1.0 if species == "a" else 1.0
        f_h0 = f_env - sign * shift
        f_h1 = f_env + sign * shift
        for hyp, f in ((0, f_h0), (1, f_h1)):
            mu[species, hyp] = n_tx * f * q1 + isi_mean
            var_base[species, hyp] = n_tx * f * q1 * (1.0 - q1) + isi_var

    noise_var = {
        species: counting_noise_var(params, 0.5 * (mu[species, 0] + mu[species, 1]))
        for species in ("a", "b")
    }

    return SlotStats(
        k=k,
        eps=0.5,
        mu_a_h0=mu["a", 0],
        mu_b_h0=mu["b", 0],
        mu_a_h1=mu["a", 1],
        mu_b_h1=mu["b", 1],
        var_a_h0=var_base["a", 0] + noise_var["a"],
        var_b_h0=var_base["b", 0] + noise_var["b"],
        var_a_h1=var_base["a", 1] + noise_var["a"],
        var_b_h1=var_base["b", 1] + noise_var["b"],
    )
