"""Particle-based Monte Carlo simulator of the link.

Every released molecule performs an independent Gaussian random walk
(per-axis steps N(0, 2*D*dt)) from the point source toward the absorbing
sphere, whose centre sits at distance d + r.  A molecule is absorbed the
first time the walk reaches the sphere; arrivals are tallied into the slot
in which they happen, so inter-symbol interference emerges naturally.
Counting noise is then added per slot and species, and a detector turns
the noisy counts back into bits.

Absorption handling comes in two flavours (``PbsConfig.absorption``):

* ``bridge`` (default): after each step the molecule is also absorbed with
  the Brownian-bridge crossing probability exp(-gap_prev*gap_now/(D*dt)),
  which accounts for within-step surface crossings.  Without it the walk
  systematically undercounts arrivals (about 7% on the first slot at the
  default dt = 100 us, far outside the Monte Carlo error of the runs this
  package performs), because an excursion that touches the sphere and
  returns between two checks is invisible to an endpoint test.
* ``endpoint``: pure endpoint checks, kept for protocol comparisons.

Reproducibility: every trial derives its own stream from the master seed
via ``SeedSequence`` spawning, and the walk kernel splits each stream into
fixed-size molecule chunks with independent counter-derived substreams, so
results do not depend on thread count or execution order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from numba import njit, prange  # noqa: E402

from .channel import ChannelModel
from .detection import DetectorSpec
from .stats import LinkParams, counting_noise_var, slot_stats
from .thermo import ReservoirPair

__all__ = [
    "PbsConfig",
    "SlotObservation",
    "BerEstimate",
    "sample_emission",
    "absorption_steps",
    "propagate",
    "simulate_sequence",
    "forced_moment_samples",
    "estimate_ber",
]

COMPOSITION_MODES = ("deterministic", "binomial")
ABSORPTION_MODES = ("bridge", "endpoint")

# Molecules per kernel chunk.  Fixed so that the chunk -> substream mapping,
# and therefore every simulated trajectory, is independent of threading.
_CHUNK = 2048


def _steps_per_slot(t_s: float, dt: float) -> int:
    ratio = t_s / dt
    steps = round(ratio)
    if steps < 1 or abs(steps - ratio) > 1e-9 * max(ratio, 1.0):
        raise ValueError("slot length t_s must be an integer multiple of dt")
    return steps


@dataclass(frozen=True)
class PbsConfig:
    """Configuration of one Monte Carlo run."""

    link: LinkParams
    dt: float = 1e-4
    n_bits: int = 1000
    composition: str = "deterministic"
    seed: int = 0
    trials: int = 1
    horizon_slots: int | None = None
    absorption: str = "bridge"

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.dt > self.link.channel.t_s:
            raise ValueError("need 0 < dt <= t_s")
        if self.n_bits < 1:
            raise ValueError("need at least one bit")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.composition not in COMPOSITION_MODES:
            raise ValueError(
                f"unknown composition {self.composition!r}; expected one of {COMPOSITION_MODES}"
            )
        if self.absorption not in ABSORPTION_MODES:
            raise ValueError(
                f"unknown absorption handling {self.absorption!r}; expected one of {ABSORPTION_MODES}"
            )
        if self.horizon_slots is not None and self.horizon_slots < 1:
            raise ValueError("horizon must span at least one slot")

    @property
    def horizon(self) -> int:
        """Slots a molecule is tracked before being retired."""
        return self.horizon_slots if self.horizon_slots is not None else self.link.channel.L

    def steps_per_slot(self) -> int:
        return _steps_per_slot(self.link.channel.t_s, self.dt)


@dataclass(frozen=True)
class SlotObservation:
    """One decoded-side observation: noisy per-species counts plus truth."""

    k: int
    n_a: float
    n_b: float
    truth: int


@dataclass(frozen=True)
class BerEstimate:
    """Aggregated error statistics of a Monte Carlo run."""

    errors: int
    bits: int
    ber: float
    ci95: float
    retired_fraction: float = float("nan")


def sample_emission(
    bit: int, reservoirs: ReservoirPair, n_tx: float, composition: str,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Split one release of ``n_tx`` molecules into (n_a, n_b).

    The source fraction of B is c_low for bit 0 and c_high for bit 1;
    ``deterministic`` rounds to the mean split, ``binomial`` draws the B
    count.  Always returns counts summing to round(n_tx).
    """
    if composition not in COMPOSITION_MODES:
        raise ValueError(f"unknown composition {composition!r}")
    n_total = int(round(n_tx))
    c_src = reservoirs.c_low if bit == 0 else reservoirs.c_high
    if composition == "deterministic":
        n_b = int(round(n_total * c_src))
    else:
        n_b = int(rng.binomial(n_total, c_src))
    return n_total - n_b, n_b


@njit(inline="always")
def _splitmix64(x):
    x = np.uint64(x + np.uint64(0x9E3779B97F4A7C15))
    z = x
    z = np.uint64((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9))
    z = np.uint64((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB))
    return x, np.uint64(z ^ (z >> np.uint64(31)))


@njit(inline="always")
def _rotl(x, k):
    return np.uint64((x << np.uint64(k)) | (x >> np.uint64(64 - k)))


@njit(inline="always")
def _next_u64(s):
    # xoshiro256++
    result = np.uint64(_rotl(np.uint64(s[0] + s[3]), 23) + s[0])
    t = np.uint64(s[1] << np.uint64(17))
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(inline="always")
def _u01(s):
    return np.float64(_next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def _build_ziggurat(n: int = 256) -> tuple[np.ndarray, np.ndarray, float]:
    """Equal-area ziggurat layers for the standard normal.

    The base-layer abscissa ``r`` is solved so the layer recursion closes
    exactly at the distribution's mode, which also makes the tail weight
    consistent; hard-coded constants from the literature are only
    approximate for that closure.
    """
    sqrt_half_pi = math.sqrt(math.pi / 2.0)

    def tables(r: float):
        v = r * math.exp(-0.5 * r * r) + sqrt_half_pi * math.erfc(r / math.sqrt(2.0))
        x = np.zeros(n + 1)
        x[n] = v / math.exp(-0.5 * r * r)
        x[n - 1] = r
        for i in range(n - 2, 0, -1):
            arg = v / x[i + 1] + math.exp(-0.5 * x[i + 1] ** 2)
            if arg >= 1.0:
                return None, v
            x[i] = math.sqrt(-2.0 * math.log(arg))
        return x, v

    def closure_gap(r: float) -> float:
        x, v = tables(r)
        if x is None:
            return -1.0  # layers collapse before reaching the mode: r too small
        return x[1] * (1.0 - math.exp(-0.5 * x[1] ** 2)) - v

    lo, hi = 3.0, 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if closure_gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    x, _ = tables(r)
    return x, np.exp(-0.5 * x * x), r


_ZIG_X, _ZIG_F, _ZIG_R = _build_ziggurat()
_ZIG_MASK = np.uint64(_ZIG_X.size - 2)
_ZIG_TAIL = np.int64(_ZIG_X.size - 2)
_TWO52 = np.int64(1) << np.int64(52)


@njit(inline="always")
def _normal(s, xtab, ftab, r):
    """One standard normal draw (ziggurat with exact tail sampling)."""
    while True:
        u = _next_u64(s)
        i = np.int64(u & _ZIG_MASK)
        frac = np.float64(np.int64(u >> np.uint64(11)) - _TWO52) * (1.0 / 4503599627370496.0)
        x = frac * xtab[i + 1]
        if abs(x) < xtab[i]:
            return x
        if i == _ZIG_TAIL:
            while True:
                xx = -math.log(_u01(s)) / r
                yy = -math.log(_u01(s))
                if 2.0 * yy > xx * xx:
                    return (r + xx) if x > 0.0 else -(r + xx)
        else:
            if ftab[i + 1] + _u01(s) * (ftab[i] - ftab[i + 1]) < math.exp(-0.5 * x * x):
                return x


@njit(cache=True, parallel=True, fastmath=True)
def _walk_kernel(n_mol, sigma, center_z, radius, n_steps, chunk_seeds, chunk,
                 bridge, inv_ddt, xtab, ftab, zig_r):
    """Absorption step index for each molecule, -1 if it survives.

    Molecules start at the origin; the absorbing sphere is centred on the
    z axis.  Each chunk of ``chunk`` molecules consumes its own xoshiro
    substream, seeded from ``chunk_seeds``, so the trajectories are
    invariant under the parallel schedule.
    """
    out = np.full(n_mol, -1, np.int32)
    r2 = radius * radius
    n_chunks = (n_mol + chunk - 1) // chunk
    for ci in prange(n_chunks):
        st = np.empty(4, np.uint64)
        x0 = chunk_seeds[ci]
        for j in range(4):
            x0, w = _splitmix64(x0)
            st[j] = w
        lo = ci * chunk
        hi = min(n_mol, lo + chunk)
        for i in range(lo, hi):
            x = 0.0
            y = 0.0
            z = 0.0
            gap_prev = center_z - radius
            for t in range(n_steps):
                x += sigma * _normal(st, xtab, ftab, zig_r)
                y += sigma * _normal(st, xtab, ftab, zig_r)
                z += sigma * _normal(st, xtab, ftab, zig_r)
                dz = z - center_z
                d2 = x * x + y * y + dz * dz
                if d2 <= r2:
                    out[i] = t
                    break
                if bridge:
                    gap = math.sqrt(d2) - radius
                    e = gap * gap_prev * inv_ddt
                    if e < 20.0 and _u01(st) < math.exp(-e):
                        out[i] = t
                        break
                    gap_prev = gap
    return out


def absorption_steps(
    n_molecules: int, model: ChannelModel, dt: float, n_steps: int,
    rng: np.random.Generator, absorption: str = "bridge", D: float | None = None,
) -> np.ndarray:
    """Walk ``n_molecules`` for ``n_steps`` and return each one's absorption
    step index (0-based), or -1 if it is still free at the end."""
    if absorption not in ABSORPTION_MODES:
        raise ValueError(f"unknown absorption handling {absorption!r}")
    if n_molecules < 0:
        raise ValueError("molecule count must be non-negative")
    if D is None:
        D = model.D
    if n_molecules == 0 or n_steps == 0:
        return np.full(n_molecules, -1, np.int32)
    if D == 0.0:
        return np.full(n_molecules, -1, np.int32)  # frozen molecules never arrive
    n_chunks = (n_molecules + _CHUNK - 1) // _CHUNK
    chunk_seeds = rng.integers(0, 2 ** 63 - 1, size=n_chunks, dtype=np.int64).astype(np.uint64)
    return _walk_kernel(
        n_molecules,
        math.sqrt(2.0 * D * dt),
        model.d + model.r,
        model.r,
        n_steps,
        chunk_seeds,
        _CHUNK,
        absorption == "bridge",
        1.0 / (D * dt),
        _ZIG_X,
        _ZIG_F,
        _ZIG_R,
    )


def propagate(
    n_molecules: int, model: ChannelModel, dt: float, horizon_slots: int,
    rng: np.random.Generator, absorption: str = "bridge", D: float | None = None,
) -> np.ndarray:
    """Per-slot absorbed counts for one release tracked over ``horizon_slots``."""
    if horizon_slots < 1:
        raise ValueError("horizon must span at least one slot")
    steps_per_slot = _steps_per_slot(model.t_s, dt)
    steps = absorption_steps(
        n_molecules, model, dt, horizon_slots * steps_per_slot, rng, absorption, D
    )
    hit = steps[steps >= 0] // steps_per_slot
    return np.bincount(hit, minlength=horizon_slots).astype(np.int64)


def _draw_bits(n_bits: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(n_bits) >= eps).astype(np.int8)  # P(bit 0) = eps


def _emission_table(
    bits: np.ndarray, reservoirs: ReservoirPair, n_tx: float, composition: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-slot (n_a, n_b) release sizes, drawn in slot order."""
    n_total = int(round(n_tx))
    c_src = np.where(bits == 0, reservoirs.c_low, reservoirs.c_high)
    if composition == "deterministic":
        n_b = np.rint(n_total * c_src).astype(np.int64)
    else:
        n_b = rng.binomial(n_total, c_src).astype(np.int64)
    out = np.empty((bits.size, 2), np.int64)
    out[:, 0] = n_total - n_b
    out[:, 1] = n_b
    return out


def _noise_sigmas(link: LinkParams, n_bits: int) -> np.ndarray:
    """Per-slot counting-noise std devs, shape (n_bits, 2).

    Built from the analytic unconditional mean counts, which become
    stationary once the interference window is full, so only the first L
    slots need individual evaluation.
    """
    sig = np.zeros((n_bits, 2))
    if link.noise.mode == "off":
        return sig
    k_max = min(n_bits, link.channel.L)
    for k in range(1, k_max + 1):
        st = slot_stats(link, k)
        mean_a = link.eps * st.mu_a_h0 + (1.0 - link.eps) * st.mu_a_h1
        mean_b = link.eps * st.mu_b_h0 + (1.0 - link.eps) * st.mu_b_h1
        sig[k - 1, 0] = math.sqrt(counting_noise_var(link, mean_a))
        sig[k - 1, 1] = math.sqrt(counting_noise_var(link, mean_b))
    sig[k_max:] = sig[k_max - 1]
    return sig


def _sequence_counts(
    config: PbsConfig, bits: np.ndarray, rng: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """Noise-free per-slot arrival counts, shape (n_bits, 2), plus total emitted.

    Walks are grouped by (species, remaining observation window): the walk
    statistics of a molecule depend only on the time since its release, so
    cohorts from different slots can share one kernel launch without
    changing the simulated process.
    """
    link = config.link
    model = link.channel
    n_bits = bits.size
    spslot = config.steps_per_slot()
    emissions = _emission_table(bits, link.reservoirs, link.n_tx, config.composition, rng)
    counts = np.zeros((n_bits, 2), np.int64)
    for sp_idx, species in ((0, "a"), (1, "b")):
        D = model.diffusion_for(species)
        # lifetime in slots, capped by the end of the observation window
        lifetimes = np.minimum(config.horizon, n_bits - np.arange(n_bits))
        for life in np.unique(lifetimes)[::-1]:
            slots = np.nonzero(lifetimes == life)[0]
            per_slot = emissions[slots, sp_idx]
            total = int(per_slot.sum())
            if total == 0:
                continue
            steps = absorption_steps(
                total, model, config.dt, int(life) * spslot, rng,
                config.absorption, D,
            )
            emit_slot = np.repeat(slots, per_slot)
            hit = steps >= 0
            target = emit_slot[hit] + steps[hit] // spslot
            counts[:, sp_idx] += np.bincount(target, minlength=n_bits)
    return counts, int(emissions.sum())


def simulate_sequence(
    config: PbsConfig, rng: np.random.Generator, bits: np.ndarray | None = None,
) -> list[SlotObservation]:
    """Simulate one bit sequence end to end and return per-slot observations.

    Bits are drawn i.i.d. with P(0) = eps unless ``bits`` pins the
    sequence (used for forced-pattern validation).  Counting noise follows
    the link's noise model and noisy counts are clamped at zero, since the
    receiver cannot observe negative molecule counts.
    """
    link = config.link
    if bits is None:
        bits = _draw_bits(config.n_bits, link.eps, rng)
    else:
        bits = np.asarray(bits, np.int8)
        if bits.size != config.n_bits:
            raise ValueError("forced bit sequence length must equal n_bits")
    counts, _ = _sequence_counts(config, bits, rng)
    observed = counts.astype(float)
    if link.noise.mode != "off":
        sig = _noise_sigmas(link, config.n_bits)
        observed = np.maximum(observed + rng.standard_normal(observed.shape) * sig, 0.0)
    return [
        SlotObservation(k=i + 1, n_a=float(observed[i, 0]), n_b=float(observed[i, 1]),
                        truth=int(bits[i]))
        for i in range(config.n_bits)
    ]


def forced_moment_samples(
    config: PbsConfig, pattern_bit: int, n_restarts: int, rng: np.random.Generator,
) -> np.ndarray:
    """Observed counts of many restarted forced sequences, for moment checks.

    Runs ``n_restarts`` independent sequences of ``config.n_bits`` slots
    whose bits are all ``pattern_bit`` and returns an array of shape
    (n_restarts, n_bits, 2).  Restarts are batched into shared kernel
    launches (molecules are independent, so this equals running the
    sequences one by one) to keep large validation runs affordable.
    """
    if pattern_bit not in (0, 1):
        raise ValueError("pattern bit must be 0 or 1")
    if n_restarts < 1:
        raise ValueError("need at least one restart")
    link = config.link
    model = link.channel
    n_bits = config.n_bits
    spslot = config.steps_per_slot()
    bits = np.full(n_bits, pattern_bit, np.int8)
    counts = np.zeros((n_restarts, n_bits, 2), np.int64)
    for sp_idx, species in ((0, "a"), (1, "b")):
        D = model.diffusion_for(species)
        for i in range(n_bits):  # emission slot, 0-based
            life = min(config.horizon, n_bits - i)
            if config.composition == "deterministic":
                per_restart = np.full(
                    n_restarts,
                    sample_emission(pattern_bit, link.reservoirs, link.n_tx,
                                    "deterministic", rng)[sp_idx],
                    np.int64,
                )
            else:
                table = _emission_table(
                    np.full(n_restarts, pattern_bit, np.int8),
                    link.reservoirs, link.n_tx, "binomial", rng,
                )
                per_restart = table[:, sp_idx]
            total = int(per_restart.sum())
            if total == 0:
                continue
            steps = absorption_steps(
                total, model, config.dt, life * spslot, rng, config.absorption, D
            )
            restart_of = np.repeat(np.arange(n_restarts), per_restart)
            hit = steps >= 0
            rel = steps[hit] // spslot
            flat = restart_of[hit] * n_bits + (i + rel)
            counts[:, :, sp_idx] += np.bincount(
                flat, minlength=n_restarts * n_bits
            ).reshape(n_restarts, n_bits)
    observed = counts.astype(float)
    if link.noise.mode != "off":
        forced_link = LinkParams(
            reservoirs=link.reservoirs, channel=link.channel, n_tx=link.n_tx,
            eps=1.0 - float(pattern_bit), noise=link.noise,
        )
        sig = _noise_sigmas(forced_link, n_bits)
        observed = np.maximum(observed + rng.standard_normal(observed.shape) * sig, 0.0)
    return observed


def estimate_ber(config: PbsConfig, spec: DetectorSpec) -> BerEstimate:
    """Monte Carlo bit error rate over ``config.trials`` independent trials.

    Trial streams are spawned from the master seed, so the estimate is
    reproducible and independent of the order in which trials run.  The
    95% interval half-width uses the normal approximation of the binomial.
    """
    if config.n_bits * config.trials < 100:
        raise ValueError("need at least 100 simulated bits for a BER estimate")
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    errors = 0
    emitted = 0
    absorbed = 0
    for child in children:
        rng = np.random.default_rng(child)
        bits = _draw_bits(config.n_bits, config.link.eps, rng)
        counts, n_emitted = _sequence_counts(config, bits, rng)
        observed = counts.astype(float)
        if config.link.noise.mode != "off":
            sig = _noise_sigmas(config.link, config.n_bits)
            observed = np.maximum(observed + rng.standard_normal(observed.shape) * sig, 0.0)
        # vectorised decide(): bit 0 iff n_a - gamma*n_b > 0, ties to bit 1
        geff = spec.effective_gamma
        decisions = np.where(observed[:, 0] - geff * observed[:, 1] > 0.0, 0, 1)
        errors += int(np.sum(decisions != bits))
        emitted += n_emitted
        absorbed += int(counts.sum())
    bits_total = config.n_bits * config.trials
    ber = errors / bits_total
    ci95 = 1.96 * math.sqrt(max(ber * (1.0 - ber), 0.0) / bits_total)
    retired = 1.0 - absorbed / emitted if emitted else float("nan")
    return BerEstimate(errors=errors, bits=bits_total, ber=ber, ci95=ci95,
                       retired_fraction=retired)
