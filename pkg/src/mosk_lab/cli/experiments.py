"""Named experiments behind the ``mosk-lab run`` command.

Each experiment sweeps one parameter and tabulates the resulting error
probabilities (or, for the energy sweep, the purification quantities).
Analytic experiments emit both error conventions and, where the reservoir
pair is energy-derived, both purification conventions, so no modelling
choice is a silent default.  ``pbs-validate`` compares the particle
simulator against the analytic taps and slot moments with explicit
pass/fail bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..channel import tap_residual, taps
from ..detection import DetectorSpec, optimize_threshold, pe_average
from ..stats import LinkParams, slot_stats
from ..thermo import InfeasibleEnergyError, ReservoirPair, molecules_for_energy
from .config import ConfigError, RunConfig
from .table import ResultTable

__all__ = ["ExperimentSpec", "EXPERIMENTS", "run"]

_ALT_MODE = {"mass-balance": "closed-form", "closed-form": "mass-balance"}


@dataclass
class ExperimentSpec:
    """One requested run: experiment name, overrides, output destination."""

    name: str
    config_path: str | None = None
    overrides: list[str] = field(default_factory=list)
    out: str | None = None
    fmt: str = "csv"
    seed: int | None = None


def _metadata(config: RunConfig, experiment: str, **extra) -> dict:
    meta = {"tool_version": __version__, "experiment": experiment}
    meta.update(config.metadata())
    channel = config.channel()
    meta["tap_truncation_residual_a"] = repr(
        tap_residual(channel, D=channel.diffusion_for("a"))
    )
    meta["tap_truncation_residual_b"] = repr(
        tap_residual(channel, D=channel.diffusion_for("b"))
    )
    meta["species_diffusion_override"] = str(channel.species_override).lower()
    for key, value in extra.items():
        meta[key] = str(value)
    return meta


def _alt_reservoirs(config: RunConfig, energy: float) -> tuple[ReservoirPair | None, str]:
    """Companion-convention pair at ``energy``, or None when infeasible."""
    mode = _ALT_MODE[config["energy.mode"]]
    try:
        return config.reservoirs(energy=energy, mode=mode), mode
    except InfeasibleEnergyError as exc:
        return None, f"{mode} infeasible at {energy:.6g} J ({exc})"


def _pe_pair(config: RunConfig, link: LinkParams, gamma: float) -> tuple[float, float]:
    """(paper, consistent) average error at the given threshold."""
    n_slots = config["run.K"]
    pe_paper = pe_average(link, DetectorSpec(gamma=gamma, pe_mode="paper"), n_slots)
    pe_cons = pe_average(link, DetectorSpec(gamma=gamma, pe_mode="consistent"), n_slots)
    return pe_paper, pe_cons


def energy_sweep(config: RunConfig, seed: int | None) -> ResultTable:
    """Moved molecules and reservoir fractions across an energy grid."""
    grid = config.sweep_grid(0.0, 2e-16)
    c = config["env.c"]
    n_total = config["reservoir.n_low"] + config["reservoir.n_high"]
    rows = []
    notes = {}
    for energy in grid:
        moved = molecules_for_energy(c, n_total, energy)
        main = config.reservoirs(energy=energy)
        alt, alt_note = _alt_reservoirs(config, energy)
        if alt is None:
            notes["companion_mode"] = alt_note
            alt_low = alt_high = float("nan")
        else:
            alt_low, alt_high = alt.c_low, alt.c_high
        main_is_mb = config["energy.mode"] == "mass-balance"
        rows.append((
            energy, moved,
            main.c_low if main_is_mb else alt_low,
            main.c_high if main_is_mb else alt_high,
            alt_low if main_is_mb else main.c_low,
            alt_high if main_is_mb else main.c_high,
        ))
    return ResultTable(
        columns=("energy_J", "moved_molecules",
                 "c_low_mass_balance", "c_high_mass_balance",
                 "c_low_closed_form", "c_high_closed_form"),
        rows=rows,
        metadata=_metadata(config, "energy-sweep", **notes),
    )


def ber_vs_threshold(config: RunConfig, seed: int | None) -> ResultTable:
    """Average error against the detection threshold."""
    grid = config.gamma_grid()
    energy = config["energy.joules"]
    link = config.link()
    alt, alt_note = _alt_reservoirs(config, energy)
    perfect = config.link(reservoirs=ReservoirPair.ideal(
        config["reservoir.n_low"], config["reservoir.n_high"]))
    notes = {} if alt is not None else {"companion_mode": alt_note}
    alt_link = config.link(reservoirs=alt) if alt is not None else None
    rows = []
    for gamma in grid:
        pe_p, pe_c = _pe_pair(config, link, gamma)
        if alt_link is not None:
            pe_p_alt, pe_c_alt = _pe_pair(config, alt_link, gamma)
        else:
            pe_p_alt = pe_c_alt = float("nan")
        pe_p_ideal, pe_c_ideal = _pe_pair(config, perfect, gamma)
        rows.append((gamma, pe_p, pe_c, pe_p_alt, pe_c_alt, pe_p_ideal, pe_c_ideal))
    return ResultTable(
        columns=("gamma", "pe_paper", "pe_consistent",
                 "pe_paper_companion_mode", "pe_consistent_companion_mode",
                 "pe_paper_perfect_tx", "pe_consistent_perfect_tx"),
        rows=rows,
        metadata=_metadata(config, "ber-vs-threshold", **notes),
    )


def ber_vs_cl(config: RunConfig, seed: int | None) -> ResultTable:
    """Average error against the low reservoir's B fraction.

    The high fraction moves symmetrically about the environment fraction,
    c_high = c + (c - c_low) * n_low / n_high, i.e. the pair one gets by
    moving the corresponding number of molecules.
    """
    c = config["env.c"]
    n_low = config["reservoir.n_low"]
    n_high = config["reservoir.n_high"]
    grid = config.sweep_grid(0.05, max(c - 0.02, 0.05))
    gamma = config["detector.gamma"]
    rows = []
    for c_low in grid:
        if not 0.0 < c_low <= c:
            raise ConfigError(f"c_low sweep value {c_low:.6g} outside (0, c]")
        c_high = c + (c - c_low) * n_low / n_high
        if c_high >= 1.0:
            raise ConfigError(
                f"c_low = {c_low:.6g} implies c_high = {c_high:.6g} >= 1; shrink the sweep"
            )
        pair = ReservoirPair.from_fractions(c, n_low, n_high, c_low, c_high)
        link = config.link(reservoirs=pair)
        pe_p, pe_c = _pe_pair(config, link, gamma)
        g_opt, pe_opt = optimize_threshold(link, config["run.K"], config.gamma_grid())
        rows.append((c_low, c_high, pe_p, pe_c, g_opt, pe_opt))
    return ResultTable(
        columns=("c_low", "c_high", "pe_paper", "pe_consistent",
                 "gamma_opt", "pe_consistent_opt"),
        rows=rows,
        metadata=_metadata(config, "ber-vs-cl"),
    )


def ber_vs_nm(config: RunConfig, seed: int | None) -> ResultTable:
    """Average error against the per-symbol release size, with the
    configured noise model and with noise disabled."""
    grid = config.sweep_grid(100.0, 3000.0)
    gamma = config["detector.gamma"]
    reservoirs = config.reservoirs()
    rows = []
    for n_tx in grid:
        if n_tx < 1:
            raise ConfigError("release sizes must be >= 1")
        link = config.link(reservoirs=reservoirs, n_tx=float(n_tx))
        quiet = LinkParams(
            reservoirs=link.reservoirs, channel=link.channel, n_tx=link.n_tx,
            eps=link.eps, noise=type(link.noise)(mode="off"),
        )
        pe_p_off, pe_c_off = _pe_pair(config, quiet, gamma)
        pe_p_on, pe_c_on = _pe_pair(config, link, gamma)
        rows.append((n_tx, pe_p_off, pe_c_off, pe_p_on, pe_c_on))
    return ResultTable(
        columns=("n_tx", "pe_paper_noise_off", "pe_consistent_noise_off",
                 "pe_paper_noise_on", "pe_consistent_noise_on"),
        rows=rows,
        metadata=_metadata(config, "ber-vs-nm"),
    )


def ber_vs_energy(config: RunConfig, seed: int | None) -> ResultTable:
    """Average error against the purification energy budget.

    The threshold is re-optimised (consistent convention) at every grid
    point; both purification conventions are swept where feasible.
    """
    grid = config.sweep_grid(1e-15, 1e-12, default_scale="log")
    notes = {}
    rows = []
    for energy in grid:
        main = config.reservoirs(energy=energy)
        link = config.link(reservoirs=main)
        g_opt, pe_c = optimize_threshold(link, config["run.K"], config.gamma_grid())
        pe_p = pe_average(link, DetectorSpec(gamma=g_opt, pe_mode="paper"), config["run.K"])
        alt, alt_note = _alt_reservoirs(config, energy)
        if alt is None:
            notes["companion_mode"] = alt_note
            g_alt = pe_p_alt = pe_c_alt = float("nan")
        else:
            alt_link = config.link(reservoirs=alt)
            g_alt, pe_c_alt = optimize_threshold(alt_link, config["run.K"], config.gamma_grid())
            pe_p_alt = pe_average(
                alt_link, DetectorSpec(gamma=g_alt, pe_mode="paper"), config["run.K"]
            )
        rows.append((energy, g_opt, pe_p, pe_c, g_alt, pe_p_alt, pe_c_alt))
    return ResultTable(
        columns=("energy_J", "gamma_opt", "pe_paper_opt", "pe_consistent_opt",
                 "gamma_opt_companion_mode", "pe_paper_opt_companion_mode",
                 "pe_consistent_opt_companion_mode"),
        rows=rows,
        metadata=_metadata(config, "ber-vs-energy", **notes),
    )


def compare_decoders(config: RunConfig, seed: int | None) -> ResultTable:
    """Ratio detector (optimised threshold) against the direct count
    comparison across an energy grid."""
    grid = config.sweep_grid(1e-15, 1e-12, default_scale="log")
    n_slots = config["run.K"]
    rows = []
    for energy in grid:
        link = config.link(reservoirs=config.reservoirs(energy=energy))
        g_opt, pe_ratio_c = optimize_threshold(link, n_slots, config.gamma_grid())
        pe_ratio_p = pe_average(link, DetectorSpec(gamma=g_opt, pe_mode="paper"), n_slots)
        pe_conv_p = pe_average(
            link, DetectorSpec(rule="conventional", pe_mode="paper"), n_slots)
        pe_conv_c = pe_average(
            link, DetectorSpec(rule="conventional", pe_mode="consistent"), n_slots)
        rows.append((energy, g_opt, pe_ratio_p, pe_ratio_c, pe_conv_p, pe_conv_c))
    return ResultTable(
        columns=("energy_J", "gamma_opt", "pe_ratio_paper", "pe_ratio_consistent",
                 "pe_conventional_paper", "pe_conventional_consistent"),
        rows=rows,
        metadata=_metadata(config, "compare-decoders"),
    )


def pbs_validate(config: RunConfig, seed: int | None) -> ResultTable:
    """Particle simulator against analytic taps and slot moments.

    Tap rows compare the per-slot absorbed fractions of a single release
    of ``tx.N_tx`` molecules with the analytic taps inside three-sigma
    binomial bands (the first tap's band is widened by a one percent
    discretisation allowance).  Moment rows compare empirical means and
    variances of forced all-zeros / all-ones runs (restarted two-slot
    sequences, ``pbs.n_bits`` bits per trial across ``pbs.trials`` trials)
    with the analytic slot statistics inside three-sigma Monte Carlo
    bands.
    """
    from .. import pbs

    if seed is None:
        seed = config["pbs.seed"]
    if seed is None:
        raise ConfigError("pbs-validate needs a seed (--seed or pbs.seed)")
    link = config.link()
    model = link.channel
    rows: list[tuple] = []

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n_mol = int(config["tx.N_tx"])
    horizon = config["pbs.horizon_slots"] or model.L
    counts = pbs.propagate(
        n_mol, model, config["pbs.dt"], horizon, rng, config["pbs.absorption"]
    )
    q = taps(model, length=horizon)
    for k in range(horizon):
        band = 3.0 * math.sqrt(q[k] * (1.0 - q[k]) / n_mol)
        if k == 0:
            band += 0.01 * q[0]
        emp = counts[k] / n_mol
        rows.append((f"tap_{k + 1}", float(q[k]), float(emp), band,
                     int(abs(emp - q[k]) <= band)))

    n_restarts_per_trial = max(config["pbs.n_bits"] // 2, 1)
    pbs_cfg = pbs.PbsConfig(
        link=link, dt=config["pbs.dt"], n_bits=2,
        composition=config["pbs.composition"], seed=seed,
        trials=config["pbs.trials"], horizon_slots=config["pbs.horizon_slots"],
        absorption=config["pbs.absorption"],
    )
    children = np.random.SeedSequence(seed).spawn(config["pbs.trials"])
    for pattern in (0, 1):
        samples = np.concatenate([
            pbs.forced_moment_samples(
                pbs_cfg, pattern, n_restarts_per_trial, np.random.default_rng(child)
            )
            for child in children
        ])
        n = samples.shape[0]
        forced = LinkParams(
            reservoirs=link.reservoirs, channel=link.channel, n_tx=link.n_tx,
            eps=1.0 - pattern, noise=link.noise,
        )
        for slot in (1, 2):
            st = slot_stats(forced, slot)
            for sp_idx, species in ((0, "a"), (1, "b")):
                mu_ref = st.mu(pattern, species)
                var_ref = st.var(pattern, species)
                data = samples[:, slot - 1, sp_idx]
                mu_emp = float(np.mean(data))
                var_emp = float(np.var(data, ddof=1))
                mu_band = 3.0 * math.sqrt(var_ref / n)
                var_band = 3.0 * var_ref * math.sqrt(2.0 / (n - 1))
                rows.append((f"mean_{species}_slot{slot}_pattern{pattern}",
                             mu_ref, mu_emp, mu_band,
                             int(abs(mu_emp - mu_ref) <= mu_band)))
                rows.append((f"var_{species}_slot{slot}_pattern{pattern}",
                             var_ref, var_emp, var_band,
                             int(abs(var_emp - var_ref) <= var_band)))
    return ResultTable(
        columns=("quantity", "analytic", "empirical", "band", "pass"),
        rows=rows,
        metadata=_metadata(
            config, "pbs-validate", seed=seed,
            moment_protocol=f"2-slot restarts, {n_restarts_per_trial} per trial",
        ),
    )


EXPERIMENTS = {
    "energy-sweep": energy_sweep,
    "ber-vs-threshold": ber_vs_threshold,
    "ber-vs-cl": ber_vs_cl,
    "ber-vs-nm": ber_vs_nm,
    "ber-vs-energy": ber_vs_energy,
    "compare-decoders": compare_decoders,
    "pbs-validate": pbs_validate,
}


def run(spec: ExperimentSpec) -> ResultTable:
    """Execute one named experiment and return its result table."""
    if spec.name not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {spec.name!r}; expected one of {sorted(EXPERIMENTS)}"
        )
    config = RunConfig.load(spec.config_path, spec.overrides)
    if spec.seed is not None:
        config.set("pbs.seed", spec.seed)
    return EXPERIMENTS[spec.name](config, spec.seed)
