#!/usr/bin/env python3
"""The energy / error-rate tradeoff and the ratio detector.

An impure transmitter leaks the other species into every symbol, and the
channel smears symbols across slots.  This demo sweeps the detection
threshold, compares the ratio detector with a plain count comparison,
and maps the error rate against the purification budget -- the central
link-design tradeoff.  The same sweeps are available from the command
line (`mosk-lab run ber-vs-threshold ...`), which also writes CSV/SVG.
"""

import numpy as np

from mosk_lab import (
    ChannelModel,
    DetectorSpec,
    LinkParams,
    NoiseSpec,
    ReservoirPair,
    optimize_threshold,
    pe_average,
    purify,
    threshold_curve,
)

channel = ChannelModel()
noise = NoiseSpec(mode="snr", snr_db=15.0)
N_SLOTS = 10

print(__doc__)


def link_for(pair, n_tx=1000.0):
    return LinkParams(reservoirs=pair, channel=channel, n_tx=n_tx, eps=0.5, noise=noise)


print("1. Threshold sweep (c = 0.5, fractions 0.2 / 0.8, counting noise on)")
pair = ReservoirPair.from_fractions(0.5, 5e8, 5e8, 0.2, 0.8)
curve = threshold_curve(link_for(pair), DetectorSpec(pe_mode="consistent"),
                        N_SLOTS, np.linspace(0.2, 3.0, 15))
for gamma, pe in zip(curve.values, curve.pe):
    bar = "#" * max(1, int(round(-10 * np.log10(max(pe, 1e-12)))))
    print(f"  gamma = {gamma:5.2f}  P_e = {pe:.3e} {bar}")
best = int(np.argmin(curve.pe))
print(f"  interior optimum near gamma = {curve.values[best]:.2f}; too small and")
print("  the leaked B molecules masquerade as A, too large and real A is vetoed.\n")

print("2. Perfect transmitter reference at the same settings")
ideal = link_for(ReservoirPair.ideal())
spec = DetectorSpec(gamma=1.0, pe_mode="consistent")
print(f"  impure pair: P_e = {pe_average(link_for(pair), spec, N_SLOTS):.3e}")
print(f"  ideal pair : P_e = {pe_average(ideal, spec, N_SLOTS):.3e} "
      "(all residual error comes from impurity)\n")

print("3. Error rate against the purification budget (optimised threshold)")
print(f"{'E [J]':>12} {'gamma*':>8} {'P_e':>12}")
for energy in np.geomspace(2e-14, 6e-13, 7):
    link = link_for(purify(0.5, 5e8, 5e8, energy))
    gamma_opt, pe_opt = optimize_threshold(link, N_SLOTS, np.linspace(0.2, 5.0, 25))
    print(f"{energy:12.2e} {gamma_opt:8.3f} {pe_opt:12.3e}")
print("  More joules, fewer errors -- with visibly diminishing returns.\n")

print("4. Ratio detector vs direct count comparison at a skewed mixture")
for c_env in (0.5, 0.6):
    link = link_for(purify(c_env, 5e8, 5e8, 1.88e-13))
    gamma_opt, pe_ratio = optimize_threshold(link, N_SLOTS, np.linspace(0.2, 5.0, 25))
    pe_conv = pe_average(link, DetectorSpec(rule="conventional", pe_mode="consistent"),
                         N_SLOTS)
    verdict = "identical" if abs(pe_ratio - pe_conv) < 1e-6 * pe_conv else (
        f"{pe_conv / pe_ratio:.0f}x better")
    print(f"  c = {c_env}: ratio (gamma* = {gamma_opt:.2f}) P_e = {pe_ratio:.3e}, "
          f"count comparison P_e = {pe_conv:.3e} -> ratio {verdict}")
print("\nAt c = 0.5 the optimum threshold is 1, so the two rules coincide; at")
print("c = 0.6 the low reservoir is still B-heavy and only the tuned ratio")
print("rule copes.")
