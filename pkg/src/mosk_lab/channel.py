"""Diffusion channel to a spherical fully-absorbing receiver.

A point source releases molecules at a slot boundary; free 3-D diffusion
carries a fraction of them onto an absorbing sphere of radius ``r`` whose
surface sits ``d`` away from the source.  The cumulative hitting fraction

    F_hit(t) = r/(d+r) * erfc(d / sqrt(4*D*t))

saturates at r/(d+r), so the channel has memory: molecules released for
one symbol keep arriving during later slots.  Slot-level behaviour is
summarised by the tap vector q_k = F_hit(k*t_s) - F_hit((k-1)*t_s),
truncated at ``L`` slots; the (reported) truncation residual is the
arrival mass beyond the last tap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = ["ChannelModel", "f_hit", "taps", "species_taps", "tap_residual"]


@dataclass(frozen=True)
class ChannelModel:
    """Geometry and timing of the diffusion link.

    D is the shared diffusion coefficient (m^2/s), d the source-to-surface
    distance (m), r the receiver radius (m), t_s the slot length (s) and L
    the tap-vector length (slots).  ``D_a``/``D_b`` optionally give the two
    molecule species different coefficients; everything that consumes taps
    then uses a per-species vector.
    """

    D: float = 1e-9
    d: float = 1e-5
    r: float = 4e-6
    t_s: float = 1.0
    L: int = 10
    D_a: float | None = None
    D_b: float | None = None

    def __post_init__(self) -> None:
        if min(self.D, self.d, self.r, self.t_s) <= 0:
            raise ValueError("D, d, r and t_s must all be positive")
        if self.L < 1:
            raise ValueError(f"tap-vector length L must be >= 1, got {self.L}")
        for name in ("D_a", "D_b"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive when set")

    @property
    def capture_fraction(self) -> float:
        """All-time absorbed fraction r/(d+r)."""
        return self.r / (self.d + self.r)

    @property
    def species_override(self) -> bool:
        return self.D_a is not None or self.D_b is not None

    def diffusion_for(self, species: str) -> float:
        """Effective coefficient for species 'a' or 'b'."""
        if species == "a":
            return self.D_a if self.D_a is not None else self.D
        if species == "b":
            return self.D_b if self.D_b is not None else self.D
        raise ValueError(f"unknown species {species!r}")


def f_hit(model: ChannelModel, t: float, D: float | None = None) -> float:
    """Fraction of released molecules absorbed by time ``t`` (t >= 0)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0.0:
        return 0.0
    if D is None:
        D = model.D
    return model.capture_fraction * float(erfc(model.d / np.sqrt(4.0 * D * t)))


def taps(model: ChannelModel, length: int | None = None, D: float | None = None) -> np.ndarray:
    """Per-slot arrival probabilities q_1..q_length (default length = L)."""
    if length is None:
        length = model.L
    if length < 1:
        raise ValueError("tap vector needs at least one entry")
    edges = np.array([f_hit(model, k * model.t_s, D=D) for k in range(length + 1)])
    return np.diff(edges)


def species_taps(model: ChannelModel, length: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Tap vectors for species A and B, honouring per-species overrides."""
    q_a = taps(model, length, D=model.diffusion_for("a"))
    if model.species_override:
        q_b = taps(model, length, D=model.diffusion_for("b"))
    else:
        q_b = q_a
    return q_a, q_b


def tap_residual(model: ChannelModel, D: float | None = None) -> float:
    """Arrival mass beyond the truncated tap vector, r/(d+r) - sum(q)."""
    return model.capture_fraction - float(np.sum(taps(model, D=D)))
