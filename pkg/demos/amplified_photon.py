"""What an ideal phase-insensitive amplifier does to a single photon.

Run: python demos/amplified_photon.py

The photon's odd parity never disappears: the parity test stays negative
at every gain, while the sub-Poissonian statistics (order-2 moment
determinant) are lost at G = 1 + 1/sqrt(2) and higher-order
determinants follow at larger gains.
"""
import numpy as np

from pila import apply_pila, critical_gain_scan, gaussian_test, make_fock, mean_photon, nonclassical_depth, parity
from pila.witnesses import amplified_det

photon = make_fock(1, 1)

print("gain  mean photons  parity      Det M(2)")
for G in (1.0, 1.5, 2.0, 3.0, 5.0):
    out = apply_pila(photon, G, deficit_bound=1e-12)
    print(f"{G:4.1f}  {mean_photon(out):12.6f}  {parity(out):+.6f}  {amplified_det(photon, 2, G):+.6f}")

print()
print("The parity is -1/(2G-1)^2, so it shrinks but keeps its sign.")
print("Gaussian test operators narrower than the vacuum also stay negative:")
out = apply_pila(photon, 5.0, deficit_bound=1e-12)
for sigma in (0.2, 0.5, 0.8):
    print(f"  sigma={sigma}: <:T:> = {gaussian_test(out, sigma):+.3e}")

print()
print("Gains where the moment determinants turn non-negative:")
for n in range(2, 7):
    r = critical_gain_scan(photon, n)
    print(f"  order {n}: G_c = {r.G_c:.6f}")

est = nonclassical_depth(photon)
print()
print(f"Nonclassical depth of the photon: tau in [{est.tau_lower:.5f}, {est.tau_upper:.5f}]")
print("A depth of one means no finite gain makes the P-function positive.")
