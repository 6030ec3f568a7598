"""Cloning by amplification and splitting, and which states survive it.

Run: python demos/cloning_limit.py

Amplifying at gain G and splitting over G ports makes G clones.  The
clone's P-function is the input's distribution at ordering s = 2/G - 1,
so a state with nonclassical depth tau keeps nonclassical clones while
G < 1/(1 - tau).  Gaussian states have tau < 1/2 and never survive the
two-clone limit; a single photon has tau = 1 and always does.
"""
import warnings

from pila import (
    GridTooSmallWarning,
    clone_fidelity_curve,
    clone_nonclassicality_report,
    make_cat,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    nonclassical_depth,
)
from pila.cloning import classical_baseline_fidelity

warnings.simplefilter("ignore", GridTooSmallWarning)

inputs = {
    "coherent 1.0": make_coherent(1.0, 40),
    "single photon": make_fock(1, 1),
    "odd cat 1.0": make_cat(1.0, -1, 30),
}
print("clone fidelity Tr(rho_in rho_clone)")
print(f"{'input':15s} " + " ".join(f"G={G}".rjust(7) for G in range(2, 6)) + "  measure+prepare")
for name, s in inputs.items():
    fids = [f for _, f in clone_fidelity_curve(s, range(2, 6))]
    print(f"{name:15s} " + " ".join(f"{f:7.4f}" for f in fids) + f"  {classical_baseline_fidelity(s):7.4f}")

print()
for name, s in (("squeezed r=0.5", make_squeezed_vacuum(0.5, 100)), ("single photon", make_fock(1, 1))):
    depth = nonclassical_depth(s, tol=1e-6)
    for G in (2, 5):
        v = clone_nonclassicality_report(s, G, depth)
        print(f"{name:15s} G={G}: {v.verdict:12s} (critical clone number in [{v.G_c_lower:.3f}, {v.G_c_upper:.3f}], P min {v.p_min:+.2e})")
