"""Free-energy cost of purifying a pair of molecule reservoirs.

A transmitter harvests a binary molecule mixture (species A and B, with B
at molar fraction ``c``) into two reservoirs and then moves B molecules
from the "low" reservoir to the "high" one.  Separating the mixture raises
the chemical potential, so the move costs free energy; for any affordable
energy budget the reservoirs stay impure.  This module maps energy to the
number of moved molecules and to the resulting reservoir compositions.

Two composition conventions are provided by :func:`purify`:

* ``mass-balance`` (default): the moved count ``m`` follows from the
  quadratic energy relation and the fractions are ``c -/+ m/n_side``.
* ``closed-form``: the fraction shift is ``sqrt(c*n*E / (2*k_B*T_e*n_side))``
  as used by the matching closed-form link statistics
  (:func:`mosk_lab.stats.closed_form_slot_stats`).  For equal reservoirs it
  reduces to ``c -/+ sqrt(c*E/(k_B*T_e))``.  The two conventions disagree by
  a factor ``sqrt(n_side)`` inside the root; only ``mass-balance`` keeps the
  molecule bookkeeping consistent, so it is the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PhysicalConstants",
    "ReservoirPair",
    "InfeasibleEnergyError",
    "energy_exact",
    "energy_quadratic",
    "molecules_for_energy",
    "max_feasible_energy",
    "purify",
]

PURIFY_MODES = ("mass-balance", "closed-form")


@dataclass(frozen=True)
class PhysicalConstants:
    """Boltzmann constant (J/K) and absolute temperature (K)."""

    k_B: float = 1.3807e-23
    T_e: float = 298.15

    def __post_init__(self) -> None:
        if self.k_B <= 0 or self.T_e <= 0:
            raise ValueError("k_B and T_e must be positive")

    @property
    def kT(self) -> float:
        return self.k_B * self.T_e


DEFAULT_CONSTANTS = PhysicalConstants()


class InfeasibleEnergyError(ValueError):
    """Requested energy would exhaust a reservoir (c_low <= 0 or c_high >= 1).

    Carries the largest energy that keeps both fractions inside (0, 1).
    """

    def __init__(self, message: str, max_energy: float):
        super().__init__(f"{message}; maximum feasible energy is {max_energy:.6g} J")
        self.max_energy = max_energy


@dataclass(frozen=True)
class ReservoirPair:
    """Composition of the two transmitter reservoirs after purification.

    ``c`` is the environment's B fraction, ``moved`` the number of B
    molecules transferred low -> high, ``c_low``/``c_high`` the resulting B
    fractions and ``low_a`` .. ``high_b`` the per-species molecule counts.
    """

    c: float
    n_low: float
    n_high: float
    moved: float
    c_low: float
    c_high: float
    low_a: float
    low_b: float
    high_a: float
    high_b: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.c_low <= self.c_high <= 1.0:
            raise ValueError(
                f"need 0 <= c_low <= c_high <= 1, got {self.c_low}, {self.c_high}"
            )

    @classmethod
    def from_fractions(
        cls, c: float, n_low: float, n_high: float, c_low: float, c_high: float,
        moved: float | None = None,
    ) -> "ReservoirPair":
        """Build a pair directly from target fractions.

        ``moved`` defaults to the mass-balance value ``(c - c_low) * n_low``.
        """
        if moved is None:
            moved = (c - c_low) * n_low
        return cls(
            c=c, n_low=n_low, n_high=n_high, moved=moved,
            c_low=c_low, c_high=c_high,
            low_a=(n_low - moved) * (1.0 - c_low),
            low_b=(n_low - moved) * c_low,
            high_a=(n_high + moved) * (1.0 - c_high),
            high_b=(n_high + moved) * c_high,
        )

    @classmethod
    def ideal(cls, n_low: float = 5e8, n_high: float = 5e8) -> "ReservoirPair":
        """Perfectly separated reservoirs: only A in low, only B in high.

        The zero-interference reference transmitter; unreachable at finite
        energy, so it is built directly rather than through purification.
        """
        return cls.from_fractions(0.5, n_low, n_high, 0.0, 1.0)

    @property
    def gap(self) -> float:
        """Fraction separation c_high - c_low achieved by the purification."""
        return self.c_high - self.c_low


def _validate_mix(c: float, n_low: float, n_high: float) -> None:
    if not 0.0 < c < 1.0:
        raise ValueError(f"environment fraction c must lie in (0, 1), got {c}")
    if n_low <= 0 or n_high <= 0:
        raise ValueError("reservoir sizes must be positive")


def energy_exact(
    c: float, n_low: float, n_high: float, moved: float,
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Exact free-energy cost of moving ``moved`` B molecules low -> high.

    Full entropy-of-mixing expression with natural logarithms; zero iff
    ``moved`` is zero, strictly increasing and convex in ``moved``.  Raises
    ValueError when the move would empty the low reservoir of B
    (c_low <= 0) or flood the high one (c_high >= 1).
    """
    _validate_mix(c, n_low, n_high)
    if moved < 0:
        raise ValueError("moved molecule count must be non-negative")
    c_low = c - moved / n_low
    c_high = c + moved / n_high
    if c_low <= 0.0:
        raise ValueError(
            f"move of {moved:.6g} exhausts B in the low reservoir (c_low = {c_low:.6g})"
        )
    if c_high >= 1.0:
        raise ValueError(
            f"move of {moved:.6g} saturates the high reservoir (c_high = {c_high:.6g})"
        )
    # Evaluated via c_high = c*(1+bh), c_low = c*(1-bl): the c*log(c) terms
    # of the entropy bracket cancel exactly in algebra, and only then do the
    # O(b) remainders cancel in floating point; the naive three-log form
    # loses all accuracy for small moves.
    bh = moved / (n_high * c)
    bl = moved / (n_low * c)
    ratio = n_low / n_high
    bracket = (1.0 + bh) * math.log1p(bh) + ratio * (1.0 - bl) * math.log1p(-bl)
    return max(n_high * consts.kT * c * bracket, 0.0)


def energy_quadratic(
    c: float, n_total: float, moved: float,
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Small-move approximation 2*k_B*T_e*m^2 / (c*n) for equal reservoirs.

    ``n_total`` is the combined size of both (equal) reservoirs.  Accurate
    to a relative error of about beta^2/6 where beta = 2*m/(c*n).
    """
    _validate_mix(c, n_total / 2.0, n_total / 2.0)
    if moved < 0:
        raise ValueError("moved molecule count must be non-negative")
    return 2.0 * consts.kT * moved * moved / (c * n_total)


def molecules_for_energy(
    c: float, n_total: float, energy: float,
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Moved-molecule count that the quadratic energy law assigns to ``energy``.

    Exact inverse of :func:`energy_quadratic`; returned as a real number
    (callers that need integer molecules round at the point of use).
    """
    _validate_mix(c, n_total / 2.0, n_total / 2.0)
    if energy < 0:
        raise ValueError("energy must be non-negative")
    return math.sqrt(c * n_total * energy / (2.0 * consts.kT))


def max_feasible_energy(
    c: float, n_low: float, n_high: float, mode: str = "mass-balance",
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> float:
    """Supremum of energies keeping 0 < c_low and c_high < 1 under ``mode``."""
    _validate_mix(c, n_low, n_high)
    n_total = n_low + n_high
    kT2 = 2.0 * consts.kT
    if mode == "mass-balance":
        # m < c*n_low and m < (1-c)*n_high, with m = sqrt(c*n*E/(2kT))
        m_max = min(c * n_low, (1.0 - c) * n_high)
        return kT2 * m_max * m_max / (c * n_total)
    if mode == "closed-form":
        # shift_low = sqrt(c*n*E/(2kT*n_low)) < c, shift_high < 1-c
        e_low = c * c * kT2 * n_low / (c * n_total)
        e_high = (1.0 - c) ** 2 * kT2 * n_high / (c * n_total)
        return min(e_low, e_high)
    raise ValueError(f"unknown purify mode {mode!r}; expected one of {PURIFY_MODES}")


def purify(
    c: float, n_low: float, n_high: float, energy: float,
    mode: str = "mass-balance",
    consts: PhysicalConstants = DEFAULT_CONSTANTS,
) -> ReservoirPair:
    """Spend ``energy`` joules separating the two reservoirs.

    Both modes obtain the moved count from :func:`molecules_for_energy`;
    they differ in how the fractions shift (see the module docstring).
    Raises :class:`InfeasibleEnergyError` when the energy would drive
    c_low <= 0 or c_high >= 1.
    """
    _validate_mix(c, n_low, n_high)
    if mode not in PURIFY_MODES:
        raise ValueError(f"unknown purify mode {mode!r}; expected one of {PURIFY_MODES}")
    if energy < 0:
        raise ValueError("energy must be non-negative")
    n_total = n_low + n_high
    moved = math.sqrt(c * n_total * energy / (2.0 * consts.kT))
    if mode == "mass-balance":
        c_low = c - moved / n_low
        c_high = c + moved / n_high
    else:
        root = c * n_total * energy / (2.0 * consts.kT)
        c_low = c - math.sqrt(root / n_low)
        c_high = c + math.sqrt(root / n_high)
    if c_low <= 0.0 or c_high >= 1.0:
        raise InfeasibleEnergyError(
            f"energy {energy:.6g} J drives the reservoir fractions to "
            f"c_low = {c_low:.6g}, c_high = {c_high:.6g}",
            max_feasible_energy(c, n_low, n_high, mode, consts),
        )
    return ReservoirPair.from_fractions(c, n_low, n_high, c_low, c_high, moved=moved)
