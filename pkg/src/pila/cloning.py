"""Symmetric cloning by amplification followed by a beam-splitter cascade.

Amplifying at integer gain G and splitting the output over G ports with
transmissivities ``1/sqrt(G+1-i)`` gives G clones with the input's mean
amplitude.  Each clone's P-function is the s = 2/G - 1 distribution of the
input, so clones of a state with depth tau stay nonclassical while
``G < 1/(1 - tau)``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .channels import additive_noise, apply_loss, apply_pila
from .errors import InvalidArgument
from .fock import DEFAULT_DEFICIT_BOUND, FockState, fidelity
from .phase_space import DepthEstimate, critical_gain_from_depth, default_grid, quasi_prob


def _check_clones(G):
    if int(G) != G or G < 2:
        raise InvalidArgument(f"clone number must be an integer >= 2, got {G!r}")
    return int(G)


def cascade_transmissivities(G: int) -> np.ndarray:
    """Amplitude transmissivities ``[1/sqrt(G), 1/sqrt(G-1), ..., 1/sqrt(2)]``."""
    G = _check_clones(G)
    return 1.0 / np.sqrt(G + 1.0 - np.arange(1, G))


def clone_channel(s: FockState, G: int, method: str = "noise", deficit_bound: float = DEFAULT_DEFICIT_BOUND) -> FockState:
    """Reduced state of one clone.

    ``method="amplify-loss"`` applies amplification at gain G and then loss
    with transmissivity 1/G.  ``method="noise"`` applies the same channel in
    its equivalent form (unit gain, ``1 - 1/G`` added noise photons), whose
    cutoff does not grow with G.
    """
    G = _check_clones(G)
    if method == "amplify-loss":
        return apply_loss(apply_pila(s, G, deficit_bound=deficit_bound), 1.0 / G)
    if method == "noise":
        return additive_noise(s, 1.0 - 1.0 / G, deficit_bound=deficit_bound)
    raise InvalidArgument(f"unknown clone method {method!r}")


def _flip_phase(s: FockState) -> FockState:
    sign = (-1.0) ** np.arange(s.cutoff + 1)
    return FockState(sign[:, None] * s.rho * sign[None, :], s.regular_order)


def _vacuum_columns(theta: float, cutoff: int) -> np.ndarray:
    """``A[n, k] = <n-k, k| U |n, 0>`` from the beam-splitter blocks of fixed photon number."""
    A = np.zeros((cutoff + 1, cutoff + 1))
    for T in range(cutoff + 1):
        j = np.arange(T)
        off = np.sqrt((j + 1.0) * (T - j))
        UT = expm(theta * (np.diag(off, -1) - np.diag(off, 1)))
        # block basis index a is |a, T - a>, the input |T, 0> is index T
        A[T, : T + 1] = UT[::-1, T]
    return A


def _split_with_vacuum(s: FockState, theta: float) -> tuple:
    """Both output marginals of ``U (rho x |0><0|) U^dag`` without forming the two-mode matrix."""
    c = s.cutoff
    A = _vacuum_columns(theta, c)
    rho = s.rho
    out1 = np.zeros_like(rho)
    out2 = np.zeros_like(rho)
    for k in range(c + 1):
        # mode 2 holds k photons: mode 1 holds n - k
        a = A[k:, k]
        out1[: c + 1 - k, : c + 1 - k] += a[:, None] * rho[k:, k:] * a[None, :]
    for l in range(c + 1):
        # mode 1 holds l photons: mode 2 holds n - l
        a = A[l:, : c + 1 - l].diagonal()
        out2[: c + 1 - l, : c + 1 - l] += a[:, None] * rho[l:, l:] * a[None, :]
    t2 = np.cos(theta) ** 2
    o = s.regular_order
    return FockState(out1, 1.0 - t2 * (1.0 - o)), FockState(out2, 1.0 - (1.0 - t2) * (1.0 - o))


def explicit_clones(s: FockState, G: int, deficit_bound: float = DEFAULT_DEFICIT_BOUND) -> list:
    """All G clone marginals from amplification and an explicit beam-splitter cascade.

    Each splitter mixes the remaining beam with vacuum; clone i leaves the
    transmitted port and the reflected port feeds the next splitter, whose
    last reflected port is clone G.  Reflected beams pick up a sign under the
    beam-splitter convention, which is undone by a pi phase shift.  Only
    marginals are kept between stages, which is exact for single-clone
    statistics.
    """
    G = _check_clones(G)
    beam = apply_pila(s, G, deficit_bound=deficit_bound)
    clones = []
    for t in cascade_transmissivities(G):
        clone, rest = _split_with_vacuum(beam, float(np.arccos(t)))
        clones.append(clone)
        beam = _flip_phase(rest)
    clones.append(beam)
    return clones


def classical_baseline_fidelity(s: FockState) -> float:
    """Overlap of the input with its measure-and-prepare copy (one added noise photon)."""
    return fidelity(s, additive_noise(s, 1.0))


@dataclass(frozen=True, eq=False)
class CloneReport:
    clones: int
    clone_state: FockState
    fidelity_vs_input: float
    classical_fidelity: float
    s_effective: float

    def csv_row(self) -> str:
        return f"{self.clones},{self.fidelity_vs_input:.17g},{self.classical_fidelity:.17g},{self.s_effective:.17g}"


CLONE_HEADER = "G,fidelity,classical_fidelity,s_effective"


def clone_report(s: FockState, G: int, classical: float | None = None) -> CloneReport:
    G = _check_clones(G)
    clone = clone_channel(s, G)
    if classical is None:
        classical = classical_baseline_fidelity(s)
    return CloneReport(G, clone, fidelity(s, clone), classical, 2.0 / G - 1.0)


def clone_csv(reports, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(CLONE_HEADER + "\n")
    for r in reports:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def clone_fidelity_curve(s: FockState, G_list) -> list:
    """``[(G, F)]`` with ``F = Tr(rho_in rho_clone)``; ``G = 1`` is reported as 1."""
    out = []
    for G in G_list:
        if G == 1:
            out.append((1, 1.0))
            continue
        out.append((int(G), fidelity(s, clone_channel(s, G))))
    return out


@dataclass(frozen=True)
class NonclassicalityVerdict:
    """Comparison of a clone count with the critical clone number of the input.

    ``p_min`` is the smallest sample of the clone's P-function grid (None when
    not evaluated) and ``consistent`` whether its sign agrees with the verdict.
    """

    verdict: str
    G: int
    G_c_lower: float
    G_c_upper: float
    p_min: float | None
    p_min_location: complex | None
    consistent: bool | None


def clone_nonclassicality_report(s: FockState, G: int, depth: DepthEstimate, check_grid: bool = True, threshold: float = 1e-9) -> NonclassicalityVerdict:
    """Verdict ``nonclassical``, ``classical`` or ``boundary`` for the G clones of ``s``.

    The depth bracket gives a bracket on the critical clone number
    ``1/(1 - tau)``.  The verdict is corroborated by the sign of the clone's
    P-function sampled on a grid.
    """
    G = _check_clones(G)
    gc_lo = critical_gain_from_depth(depth.tau_lower)
    gc_hi = critical_gain_from_depth(depth.tau_upper)
    if G < gc_lo:
        verdict = "nonclassical"
    elif G > gc_hi or (G >= gc_hi and depth.tau_upper < 1.0):
        verdict = "classical"
    else:
        verdict = "boundary"
    p_min = loc = consistent = None
    if check_grid:
        clone = clone_channel(s, G, deficit_bound=1e-12)
        grid = quasi_prob(clone, default_grid(clone, 1.0, 121), 1.0)
        p_min, loc = grid.minimum()
        negative = p_min < -threshold * grid.maximum()
        if verdict == "boundary":
            consistent = True
        else:
            consistent = negative == (verdict == "nonclassical")
    return NonclassicalityVerdict(verdict, G, gc_lo, gc_hi, p_min, loc, consistent)
