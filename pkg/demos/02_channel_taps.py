#!/usr/bin/env python3
"""What the diffusion channel does to a puff of molecules.

A point release diffuses toward a fully absorbing sphere.  Only
r/(d+r) = 2/7 of the molecules ever arrive with the reference geometry,
and the arrivals straggle across many slots, which is where the
inter-symbol interference comes from.  This demo prints the hitting
fraction over time and the per-slot tap vector with its truncation
residual.
"""

from mosk_lab import ChannelModel, f_hit, species_taps, tap_residual, taps

model = ChannelModel()  # D = 1e-9 m^2/s, d = 10 um, r = 4 um, t_s = 1 s, L = 10

print(__doc__)
print(f"Geometry: d = {model.d * 1e6:.0f} um to the surface, radius = "
      f"{model.r * 1e6:.0f} um, capture fraction = {model.capture_fraction:.6f}\n")

print("Cumulative hitting fraction:")
for t in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0):
    print(f"  t = {t:7.2f} s : F = {f_hit(model, t):.5f}")

q = taps(model)
print(f"\nPer-slot taps (t_s = {model.t_s} s, {model.L} slots):")
for k, value in enumerate(q, start=1):
    bar = "#" * max(1, int(round(300 * value)))
    print(f"  q_{k:<2d} = {value:.5f} {bar}")
residual = tap_residual(model)
print(f"Truncation residual beyond tap {model.L}: {residual:.5f} "
      f"({100 * residual / model.capture_fraction:.1f}% of all eventual arrivals)")

print("\nFirst tap dominates, but the tail is fat: a symbol keeps leaking")
print("molecules into later slots for a long time.")

print("\nPer-species coefficients (a faster interferer clears out sooner):")
split = ChannelModel(D_a=1e-9, D_b=1e-8)
q_a, q_b = species_taps(split)
print(f"  D_a = {split.D_a:.0e}: q1 = {q_a[0]:.4f}, tail fraction = "
      f"{1 - q_a[0] / q_a.sum():.3f}")
print(f"  D_b = {split.D_b:.0e}: q1 = {q_b[0]:.4f}, tail fraction = "
      f"{1 - q_b[0] / q_b.sum():.3f}")
