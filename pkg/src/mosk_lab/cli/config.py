"""Flat ``section.key = value`` configuration with a closed key schema.

A config file is plain text: one assignment per line, ``#`` starts a
comment, and every key must be declared in :data:`SCHEMA` (unknown keys
are rejected with a diagnostic naming the key).  Command-line ``--set``
overrides use the same syntax and take precedence over the file.  Units
are SI base units throughout (m, s, J, K).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..channel import ChannelModel
from ..detection import DetectorSpec
from ..stats import LinkParams, NoiseSpec
from ..thermo import ReservoirPair, purify

__all__ = ["ConfigError", "RunConfig", "SCHEMA"]


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, missing requirement."""


def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _opt(parser):
    def parse(text: str):
        if text.lower() in ("none", ""):
            return None
        return parser(text)
    return parse


def _choice(*options: str):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text
    return parse


# key -> (parser, default); defaults follow the reference link
# configuration used throughout the package documentation.
SCHEMA: dict[str, tuple] = {
    "env.c": (_float, 0.5),
    "reservoir.n_low": (_float, 5e8),
    "reservoir.n_high": (_float, 5e8),
    "energy.joules": (_float, 0.0),
    "energy.mode": (_choice("mass-balance", "closed-form"), "mass-balance"),
    "channel.D_m": (_float, 1e-9),
    "channel.D_A": (_opt(_float), None),
    "channel.D_B": (_opt(_float), None),
    "channel.d": (_float, 1e-5),
    "channel.r": (_float, 4e-6),
    "channel.t_s": (_float, 1.0),
    "channel.L": (_int, 10),
    "tx.N_tx": (_float, 1000.0),
    "tx.epsilon": (_float, 0.5),
    "noise.mode": (_choice("snr", "volume", "off"), "snr"),
    "noise.snr_db": (_float, 15.0),
    "noise.V_rx": (_opt(_float), None),
    "detector.gamma": (_float, 1.0),
    "detector.rule": (_choice("ratio", "conventional"), "ratio"),
    "detector.pe_mode": (_choice("paper", "consistent"), "paper"),
    "detector.grid_min": (_float, 0.2),
    "detector.grid_max": (_float, 5.0),
    "detector.grid_points": (_int, 25),  # step 0.2: the grid contains 1.0
    "run.K": (_int, 10),
    "pbs.dt": (_float, 1e-4),
    "pbs.n_bits": (_int, 1000),
    "pbs.trials": (_int, 10),
    "pbs.composition": (_choice("deterministic", "binomial"), "deterministic"),
    "pbs.seed": (_opt(_int), None),
    "pbs.horizon_slots": (_opt(_int), None),
    "pbs.absorption": (_choice("bridge", "endpoint"), "bridge"),
    "sweep.min": (_opt(_float), None),
    "sweep.max": (_opt(_float), None),
    "sweep.points": (_int, 21),
    "sweep.scale": (_choice("linear", "log"), "linear"),
}


@dataclass
class RunConfig:
    """Validated configuration plus builders for the model objects."""

    values: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.provided = set(self.values)
        merged = {key: default for key, (_, default) in SCHEMA.items()}
        for key, value in self.values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = value
        self.values = merged

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: list[str] | None = None) -> "RunConfig":
        """Read ``path`` (optional) and apply ``key=value`` override strings."""
        values: dict = {}

        def assign(text: str, origin: str) -> None:
            body = text.split("#", 1)[0].strip()
            if not body:
                return
            if "=" not in body:
                raise ConfigError(f"{origin}: expected 'section.key = value', got {text!r}")
            key, raw = (part.strip() for part in body.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"{origin}: unknown configuration key {key!r}")
            parser = SCHEMA[key][0]
            try:
                values[key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from exc

        if path is not None:
            text = Path(path).read_text()
            for lineno, line in enumerate(text.splitlines(), start=1):
                assign(line, f"{path}:{lineno}")
        for item in overrides or []:
            assign(item, "--set")
        return cls(values)

    def __getitem__(self, key: str):
        return self.values[key]

    def set(self, key: str, value) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        self.values[key] = value
        self.provided.add(key)

    # -- model builders ----------------------------------------------------

    def channel(self) -> ChannelModel:
        return ChannelModel(
            D=self["channel.D_m"],
            d=self["channel.d"],
            r=self["channel.r"],
            t_s=self["channel.t_s"],
            L=self["channel.L"],
            D_a=self["channel.D_A"],
            D_b=self["channel.D_B"],
        )

    def noise(self) -> NoiseSpec:
        return NoiseSpec(
            mode=self["noise.mode"],
            snr_db=self["noise.snr_db"],
            v_rx=self["noise.V_rx"],
        )

    def reservoirs(self, energy: float | None = None, mode: str | None = None) -> ReservoirPair:
        """Purified pair at the configured (or given) energy and mode."""
        return purify(
            self["env.c"],
            self["reservoir.n_low"],
            self["reservoir.n_high"],
            self["energy.joules"] if energy is None else energy,
            self["energy.mode"] if mode is None else mode,
        )

    def link(self, reservoirs: ReservoirPair | None = None, n_tx: float | None = None) -> LinkParams:
        return LinkParams(
            reservoirs=self.reservoirs() if reservoirs is None else reservoirs,
            channel=self.channel(),
            n_tx=self["tx.N_tx"] if n_tx is None else n_tx,
            eps=self["tx.epsilon"],
            noise=self.noise(),
        )

    def detector(self) -> DetectorSpec:
        return DetectorSpec(
            gamma=self["detector.gamma"],
            rule=self["detector.rule"],
            pe_mode=self["detector.pe_mode"],
        )

    def gamma_grid(self) -> list[float]:
        import numpy as np

        lo = self["detector.grid_min"]
        hi = self["detector.grid_max"]
        n = self["detector.grid_points"]
        if lo <= 0 or hi < lo or n < 1:
            raise ConfigError("detector grid needs 0 < grid_min <= grid_max and grid_points >= 1")
        return [float(g) for g in np.linspace(lo, hi, n)]

    def sweep_grid(self, default_min: float, default_max: float, default_scale: str = "linear") -> list[float]:
        import numpy as np

        lo = self["sweep.min"] if self["sweep.min"] is not None else default_min
        hi = self["sweep.max"] if self["sweep.max"] is not None else default_max
        n = self["sweep.points"]
        scale = self["sweep.scale"] if "sweep.scale" in self.provided else default_scale
        if hi < lo or n < 1:
            raise ConfigError("sweep needs min <= max and points >= 1")
        if scale == "log":
            if lo <= 0:
                raise ConfigError("log sweeps need a positive minimum")
            return [float(g) for g in np.geomspace(lo, hi, n)]
        return [float(g) for g in np.linspace(lo, hi, n)]

    def metadata(self) -> dict:
        """Every effective parameter, stringified for output provenance."""
        return {key: str(self.values[key]) for key in sorted(self.values)}
