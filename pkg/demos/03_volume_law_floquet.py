#!/usr/bin/env python3
"""Volume-law entanglement from a chi=2 tensor network function.

Kicked-Ising dynamics at the maximally chaotic point grows half-chain
entanglement linearly until saturation. A conventional MPS compressed to
chi=2 caps at ln 2; the fixed column-schedule contraction with the same
chi=2 tracks the volume-law growth because its isometry entries react to
each configuration even though their positions never move.
"""
import math

from tnflab import FloquetParams, PRESETS, entanglement_dynamics

L, T = 10, 12
params = FloquetParams(L, **PRESETS["maximally_chaotic"], t_max=T)

print(f"L={L} kicked Ising, (J, g, h) = (pi/4, pi/4, 0.5), half-chain entropy\n")
exact = entanglement_dynamics(params, "exact")
mps = entanglement_dynamics(params, "mps", chi=2)
tnf = entanglement_dynamics(params, "tnf_transverse", chi=2)

print(f"{'t':>3} {'exact':>8} {'mps chi2':>9} {'tnf chi2':>9}")
for t in exact.times:
    print(f"{t:>3} {exact.entropies[t]:>8.4f} {mps.entropies[t]:>9.4f} {tnf.entropies[t]:>9.4f}")

print(f"\nln 2 = {math.log(2):.4f}: the MPS is pinned at a single bond's worth")
print("of entanglement, while the tensor network function keeps most of the")
print(f"exact saturation value ({tnf.entropies[-1] / exact.entropies[-1]:.0%} here).")
print("\nspectrum tails at t=12 (top 8 eigenvalues):")
print("  exact:", " ".join(f"{x:.1e}" for x in exact.spectra[-1][:8].real))
print("  mps:  ", " ".join(f"{x:.1e}" for x in mps.spectra[-1][:8].real))
print("  tnf:  ", " ".join(f"{x:.1e}" for x in tnf.spectra[-1][:8].real))
