"""Analysis toolkit for a two-species molecule-shift-keying link whose
transmitter purifies its reservoirs at a free-energy cost.

The analytic layer (``thermo``, ``channel``, ``stats``, ``detection``)
maps an energy budget to reservoir impurity, channel taps, per-slot count
statistics and closed-form error rates.  The ``pbs`` module validates the
chain with a particle-based Monte Carlo simulator, and ``cli`` packages
the named experiments behind the ``mosk-lab`` command.
"""

from .channel import ChannelModel, f_hit, species_taps, tap_residual, taps
from .detection import (
    DetectorSpec,
    ErrorCurve,
    decide,
    optimize_threshold,
    pe_average,
    pe_slot,
    q_function,
    threshold_curve,
)
from .stats import (
    LinkParams,
    NoiseSpec,
    SlotStats,
    closed_form_slot_stats,
    counting_noise_var,
    slot_stats,
)
from .thermo import (
    DEFAULT_CONSTANTS,
    InfeasibleEnergyError,
    PhysicalConstants,
    ReservoirPair,
    energy_exact,
    energy_quadratic,
    max_feasible_energy,
    molecules_for_energy,
    purify,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelModel", "f_hit", "taps", "species_taps", "tap_residual",
    "DetectorSpec", "ErrorCurve", "decide", "pe_slot", "pe_average",
    "optimize_threshold", "threshold_curve", "q_function",
    "LinkParams", "NoiseSpec", "SlotStats", "slot_stats",
    "closed_form_slot_stats", "counting_noise_var",
    "PhysicalConstants", "DEFAULT_CONSTANTS", "ReservoirPair",
    "InfeasibleEnergyError", "energy_exact", "energy_quadratic",
    "molecules_for_energy", "max_feasible_energy", "purify",
    "__version__",
]
