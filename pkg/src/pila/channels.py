"""Completely positive maps on truncated Fock space.

Every map here is applied through its exact number-basis action, so the
retained block of an output is a principal submatrix of the untruncated
result.  Weight that leaves the retained block shows up as trace deficit and
is checked against ``deficit_bound``.

Regularity bookkeeping: each output carries the largest ordering s for which
its s-parametrized quasiprobability is guaranteed regular.  The rules follow
from the characteristic-function action of each map.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import nbinom

from .errors import CutoffTooSmall, InvalidArgument
from .fock import (
    DEFAULT_DEFICIT_BOUND,
    FockState,
    TwoModeState,
    displacement_matrix,
    partial_trace,
    two_mode_from_entries,
)

MAX_AUTO_CUTOFF = 4000


def _exceeds(deficit, bound, dim):
    """Deficit above the bound by more than the rounding of a ``dim``-term trace."""
    return deficit > bound + dim * np.finfo(float).eps


def gain_from_interaction(kappa_t: float) -> float:
    """Gain ``cosh^2(kappa t)`` of a parametric amplifier run for time t."""
    return float(np.cosh(kappa_t) ** 2)


def _check_gain(G):
    G = float(G)
    if not np.isfinite(G) or G < 1.0:
        raise InvalidArgument(f"gain must be >= 1, got {G!r}")
    return G


def _check_eta(eta):
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"transmissivity must lie in [0, 1], got {eta!r}")
    return eta


def _check_input(state, bound):
    if _exceeds(state.trace_deficit, bound, state.rho.shape[0]):
        raise CutoffTooSmall(
            f"input already has trace deficit {state.trace_deficit:.3e} above the bound {bound:.1e}",
            required=None,
        )


def _finish(rho, order, bound, required, what):
    out = FockState(rho, order)
    if _exceeds(out.trace_deficit, bound, out.cutoff + 1):
        raise CutoffTooSmall(
            f"{what} at cutoff {out.cutoff} loses {out.trace_deficit:.3e} > {bound:.1e}; "
            f"cutoff {required} is estimated to suffice",
            required=required,
        )
    return out


# Quantum-limited amplifier -----------------------------------------------


def pila_log_amplitudes(G: float, k: int, n) -> np.ndarray:
    """``log <n+k|A_k|n>`` for the amplifier Kraus operator ``A_k``.

    ``A_k = (G-1)^{k/2} G^{-(a a^dag)/2} (a^dag)^k / sqrt(k!)``.
    """
    n = np.asarray(n, dtype=float)
    if G == 1.0:
        return np.where(k == 0, 0.0, -np.inf) * np.ones_like(n)
    return (
        0.5 * (gammaln(n + k + 1) - gammaln(n + 1) - gammaln(k + 1))
        + 0.5 * k * np.log(G - 1.0)
        - 0.5 * (n + k + 1) * np.log(G)
    )


def pila_kraus(G: float, k: int, cutoff: int) -> np.ndarray:
    """Kraus operator ``A_k`` restricted to occupations ``<= cutoff``."""
    G = _check_gain(G)
    A = np.zeros((cutoff + 1, cutoff + 1))
    n = np.arange(max(cutoff + 1 - k, 0))
    A[n + k, n] = np.exp(pila_log_amplitudes(G, k, n))
    return A


def pila_output_deficit(populations, G: float, cutoff: int, input_deficit: float = 0.0) -> float:
    """Exact trace deficit of the amplified state truncated at ``cutoff``.

    Input ``|n>`` is spread by the amplifier over ``|n+k>`` with negative
    binomial weights, so the lost weight is a sum of survival functions.
    """
    p = np.asarray(populations, dtype=float)
    n = np.arange(p.size)
    if G == 1.0:
        lost = p[n > cutoff].sum()
    else:
        lost = np.dot(p, nbinom.sf(cutoff - n, n + 1, 1.0 / G))
    return float(input_deficit + lost)


def pila_required_cutoff(populations, G: float, bound: float, input_deficit: float = 0.0) -> int | None:
    """Smallest cutoff whose amplified deficit is within ``bound``."""
    p = np.asarray(populations, dtype=float)
    lo = p.size - 1
    if input_deficit >= bound:
        return None
    if pila_output_deficit(p, G, lo, input_deficit) <= bound:
        return lo
    hi = max(lo + 1, 2 * lo)
    while pila_output_deficit(p, G, hi, input_deficit) > bound:
        if hi > MAX_AUTO_CUTOFF:
            return None
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pila_output_deficit(p, G, mid, input_deficit) <= bound:
            hi = mid
        else:
            lo = mid
    return hi


def pila_populations(populations, G: float, cutoff: int) -> np.ndarray:
    """Photon-number distribution of the amplified state up to ``cutoff``.

    Only the diagonal is needed for photon-counting statistics, and it is
    a mixture of negative binomials: ``|n>`` feeds ``|n + k>`` with weight
    ``C(n+k, k) (1 - 1/G)^k G^-(n+1)``.
    """
    G = _check_gain(G)
    p = np.asarray(populations, dtype=float)
    out = np.zeros(cutoff + 1)
    m = np.arange(cutoff + 1)
    for n, pn in enumerate(p[: cutoff + 1]):
        if pn == 0.0:
            continue
        if G == 1.0:
            out[n] += pn
        else:
            out[n:] += pn * nbinom.pmf(m[n:] - n, n + 1, 1.0 / G)
    return out


def _pila_axis(r, G, out_cutoff):
    """Amplify axes (0, 1) of an array ``r[n, m, ...]``."""
    n_in = r.shape[0] - 1
    out = np.zeros((out_cutoff + 1, out_cutoff + 1) + r.shape[2:], dtype=complex)
    if G == 1.0:
        L = min(n_in, out_cutoff)
        out[: L + 1, : L + 1] = r[: L + 1, : L + 1]
        return out
    extra = (None,) * (r.ndim - 2)
    for k in range(out_cutoff + 1):
        L = min(n_in, out_cutoff - k)
        w = np.exp(pila_log_amplitudes(G, k, np.arange(L + 1)))
        ww = np.outer(w, w)[(...,) + extra]
        out[k : k + L + 1, k : k + L + 1] += ww * r[: L + 1, : L + 1]
    return out


def pila_regular_order(order: float, G: float) -> float:
    return float(G - 1.0 + G * order)


def apply_pila(s: FockState, G: float, out_cutoff: int | None = None, deficit_bound: float = DEFAULT_DEFICIT_BOUND) -> FockState:
    """Quantum-limited phase-insensitive amplification at gain ``G``.

    ``rho -> sum_k A_k rho A_k^dag``.  Every Kraus term that touches the
    retained block is summed, so output elements are exact.  With
    ``out_cutoff=None`` the smallest cutoff meeting ``deficit_bound`` is used.
    """
    G = _check_gain(G)
    _check_input(s, deficit_bound)
    pops = s.populations
    required = pila_required_cutoff(pops, G, deficit_bound, s.trace_deficit)
    if out_cutoff is None:
        if required is None:
            raise CutoffTooSmall(f"no cutoff up to {MAX_AUTO_CUTOFF} meets the deficit bound", required=None)
        out_cutoff = required
    if out_cutoff < s.cutoff:
        raise InvalidArgument(f"output cutoff {out_cutoff} is below the input cutoff {s.cutoff}")
    rho = _pila_axis(s.rho, G, int(out_cutoff))
    return _finish(rho, pila_regular_order(s.regular_order, G), deficit_bound, required, "amplified state")


# Pure loss --------------------------------------------------------------


def _loss_axis(r, eta):
    n = r.shape[0] - 1
    if eta == 1.0:
        return r.astype(complex, copy=True)
    out = np.zeros_like(r, dtype=complex)
    extra = (None,) * (r.ndim - 2)
    idx = np.arange(n + 1)
    for k in range(n + 1):
        # b_k(m) = sqrt(C(m, k)) eta^{(m-k)/2} (1-eta)^{k/2}, m = p + k
        m = idx[k:]
        with np.errstate(divide="ignore"):
            logb = 0.5 * (gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1))
            logb = logb + 0.5 * (m - k) * np.log(eta) + 0.5 * k * np.log1p(-eta)
        b = np.exp(logb)
        if eta == 0.0:
            b = (m == k).astype(float)
        bb = np.outer(b, b)[(...,) + extra]
        out[: n + 1 - k, : n + 1 - k] += bb * r[k:, k:]
    return out


def loss_regular_order(order: float, eta: float) -> float:
    return float(1.0 - eta * (1.0 - order))


def apply_loss(s: FockState, eta: float) -> FockState:
    """Pure loss with transmissivity ``eta``; photon number never increases."""
    eta = _check_eta(eta)
    return FockState(_loss_axis(s.rho, eta), loss_regular_order(s.regular_order, eta))


# Displacement and photon addition ----------------------------------------


def _auto_displace_cutoff(s, beta, bound):
    guess = s.cutoff + int(np.ceil(abs(beta) ** 2 + 8 * abs(beta) + 8))
    while True:
        D = displacement_matrix(beta, guess, s.cutoff)
        pops = np.einsum("ij,jk,ik->i", D, s.rho, D.conj()).real
        deficit = 1.0 - np.cumsum(pops)
        ok = np.nonzero(deficit <= bound)[0]
        if ok.size:
            return int(max(ok[0], s.cutoff))
        if guess > MAX_AUTO_CUTOFF:
            raise CutoffTooSmall(f"no cutoff up to {MAX_AUTO_CUTOFF} meets the deficit bound", required=None)
        guess *= 2


def displace(s: FockState, beta: complex, out_cutoff: int | None = None, deficit_bound: float = DEFAULT_DEFICIT_BOUND) -> FockState:
    """``D(beta) rho D(beta)^dag`` with exact displacement matrix elements."""
    beta = complex(beta)
    _check_input(s, deficit_bound)
    required = _auto_displace_cutoff(s, beta, deficit_bound)
    if out_cutoff is None:
        out_cutoff = required
    D = displacement_matrix(beta, int(out_cutoff), s.cutoff)
    return _finish(D @ s.rho @ D.conj().T, s.regular_order, deficit_bound, required, "displaced state")


def photon_add(s: FockState) -> FockState:
    """Normalized ``a^dag rho a``; the cutoff grows by one."""
    n = s.cutoff
    ad = np.diag(np.sqrt(np.arange(1, n + 2, dtype=float)), -1)[:, : n + 1]
    rho = ad @ s.rho @ ad.T
    # keep the trace of the input so recorded deficit carries over
    rho *= s.trace / np.trace(rho).real
    return FockState(rho, s.regular_order)


# Additive Gaussian noise --------------------------------------------------


def additive_noise(s: FockState, nbar_add: float, method: str = "exact", out_cutoff: int | None = None, deficit_bound: float = DEFAULT_DEFICIT_BOUND, nodes: int = 40) -> FockState:
    """Random-displacement channel adding ``nbar_add`` thermal photons at unit gain.

    ``method="exact"`` uses the identity loss(1/(1+n)) followed by
    amplification at gain 1+n.  ``method="average"`` integrates
    ``D(b) rho D(b)^dag`` against the Gaussian weight by Gauss-Hermite
    quadrature with ``nodes`` points per axis.
    """
    nbar_add = float(nbar_add)
    if nbar_add < 0 or not np.isfinite(nbar_add):
        raise InvalidArgument(f"added noise must be >= 0, got {nbar_add!r}")
    if nbar_add == 0.0:
        return s
    order = float(s.regular_order + 2.0 * nbar_add)
    G = 1.0 + nbar_add
    lossy = apply_loss(s, 1.0 / G)
    if method == "exact":
        out = apply_pila(lossy, G, out_cutoff, deficit_bound)
        return FockState(out.rho, order)
    if method != "average":
        raise InvalidArgument(f"unknown noise method {method!r}")
    _check_input(s, deficit_bound)
    # the deficit of the exact route also sizes the quadrature output
    required = pila_required_cutoff(lossy.populations, G, deficit_bound, lossy.trace_deficit)
    if out_cutoff is None:
        if required is None:
            raise CutoffTooSmall("no cutoff meets the deficit bound", required=None)
        out_cutoff = max(required, s.cutoff)
    u, w = np.polynomial.hermite.hermgauss(nodes)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(w, w) / np.pi
    keep = ww > 1e-16 * ww.max()
    betas = np.sqrt(nbar_add) * (uu[keep] + 1j * vv[keep])
    weights = ww[keep]
    rho = np.zeros((out_cutoff + 1, out_cutoff + 1), dtype=complex)
    for chunk in range(0, betas.size, 256):
        D = displacement_matrix(betas[chunk : chunk + 256], out_cutoff, s.cutoff)
        tmp = D @ s.rho
        rho += np.einsum("b,bij,bkj->ik", weights[chunk : chunk + 256], tmp, D.conj())
    return _finish(rho, order, deficit_bound, required, "noisy state")


# Two-mode maps -------------------------------------------------------------


@lru_cache(maxsize=16)
def beam_splitter_unitary(theta: float, cutoffs: tuple) -> sp.csr_matrix:
    """Sparse beam-splitter unitary on the truncated two-mode box.

    Convention ``U^dag a1 U = a1 cos(theta) + a2 sin(theta)`` and
    ``U^dag a2 U = -a1 sin(theta) + a2 cos(theta)``.  Built per total-photon
    block, where it is exact, then restricted to the box.
    """
    n1, n2 = cutoffs
    d2 = n2 + 1
    rows, cols, vals = [], [], []
    for T in range(n1 + n2 + 1):
        j = np.arange(T)
        off = np.sqrt((j + 1.0) * (T - j))
        K = np.diag(off, -1) - np.diag(off, 1)
        UT = expm(theta * K)
        # block basis state j is |j, T - j>
        occ = [(a, T - a) for a in range(T + 1) if a <= n1 and T - a <= n2]
        for a, b in occ:
            for c, d in occ:
                v = UT[a, c]
                if v != 0.0:
                    rows.append(a * d2 + b)
                    cols.append(c * d2 + d)
                    vals.append(v)
    dim = (n1 + 1) * d2
    U = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return U


def _check_theta(theta):
    theta = float(theta)
    if not -1e-15 <= theta <= np.pi / 2 + 1e-15:
        raise InvalidArgument(f"beam-splitter angle must lie in [0, pi/2], got {theta!r}")
    return theta


def apply_beam_splitter(s: TwoModeState, theta: float) -> TwoModeState:
    theta = _check_theta(theta)
    U = beam_splitter_unitary(theta, s.cutoffs)
    if s.is_sparse:
        rho = U @ s.rho @ U.conj().T
    else:
        rho = (U @ (U @ s.rho).conj().T).conj().T
    o1, o2 = s.regular_orders
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    orders = (o1 * c2 + o2 * s2, o1 * s2 + o2 * c2)
    return TwoModeState(rho, s.cutoffs, orders)


def _apply_axis(s: TwoModeState, mode, fn, out_cutoff):
    r = s.tensor4()
    if mode == 1:
        r = np.moveaxis(r, (0, 2), (0, 1))
    else:
        r = np.moveaxis(r, (1, 3), (0, 1))
    r = fn(r)
    if mode == 1:
        r = np.moveaxis(r, (0, 1), (0, 2))
        cut = (out_cutoff, s.cutoffs[1])
    else:
        r = np.moveaxis(r, (0, 1), (1, 3))
        cut = (s.cutoffs[0], out_cutoff)
    d = (cut[0] + 1) * (cut[1] + 1)
    return np.ascontiguousarray(r).reshape(d, d), cut


def _marginal_pops(s: TwoModeState, mode):
    return partial_trace(s, mode).populations


def _pila_table(G, cutoff):
    """``w[k, n] = <n+k|A_k|n>`` for ``n + k <= cutoff``."""
    n = np.arange(cutoff + 1)
    w = np.zeros((cutoff + 1, cutoff + 1))
    for k in range(cutoff + 1):
        w[k, : cutoff + 1 - k] = np.exp(pila_log_amplitudes(G, k, n[: cutoff + 1 - k]))
    return w


def _sparse_axis_map(s: TwoModeState, mode, out_cutoff, shifts):
    """Apply a map acting on one mode's index pair through coordinate entries.

    ``shifts(n, m)`` yields ``(dn, weight)`` pairs: entry ``(n, m)`` of the
    chosen mode moves to ``(n + dn, m + dn)`` with the given weight array.
    """
    n1, n2, m1, m2, v = s.entries()
    n, m = (n1, m1) if mode == 1 else (n2, m2)
    parts = []
    for dn, w in shifts(n, m):
        nn, mm = n + dn, m + dn
        ok = (nn >= 0) & (mm >= 0) & (nn <= out_cutoff) & (mm <= out_cutoff) & (w != 0)
        if not np.any(ok):
            continue
        if mode == 1:
            parts.append((nn[ok], n2[ok], mm[ok], m2[ok], v[ok] * w[ok]))
        else:
            parts.append((n1[ok], nn[ok], m1[ok], mm[ok], v[ok] * w[ok]))
    cut = (out_cutoff, s.cutoffs[1]) if mode == 1 else (s.cutoffs[0], out_cutoff)
    if not parts:
        return two_mode_from_entries([], [], [], [], [], cut)
    cols = [np.concatenate(c) for c in zip(*parts)]
    return two_mode_from_entries(*cols, cut, s.regular_orders)


def _sparse_pila(s, mode, G, out_cutoff):
    if G == 1.0:
        return _sparse_axis_map(s, mode, out_cutoff, lambda n, m: [(0, np.ones(n.shape))])
    w = _pila_table(G, out_cutoff)

    def shifts(n, m):
        ok = (n <= out_cutoff) & (m <= out_cutoff)
        nc, mc = np.minimum(n, out_cutoff), np.minimum(m, out_cutoff)
        for k in range(out_cutoff + 1):
            yield k, np.where(ok, w[k, nc] * w[k, mc], 0.0)

    return _sparse_axis_map(s, mode, out_cutoff, shifts)


def _sparse_loss(s, mode, eta):
    cut = s.cutoffs[mode - 1]

    def shifts(n, m):
        for k in range(cut + 1):
            ok = (n >= k) & (m >= k)
            if not np.any(ok):
                break
            yield -k, np.where(ok, _loss_weight(n, k, eta) * _loss_weight(m, k, eta), 0.0)

    return _sparse_axis_map(s, mode, cut, shifts)


def _loss_weight(m, k, eta):
    """``sqrt(C(m, k)) eta^((m-k)/2) (1-eta)^(k/2)``, zero for ``m < k``."""
    m = np.asarray(m, dtype=float)
    out = np.zeros(m.shape)
    ok = m >= k
    if eta == 0.0:
        out[ok] = (m[ok] == k).astype(float)
        return out
    if eta == 1.0:
        out[ok] = 1.0 if k == 0 else 0.0
        return out
    mo = m[ok]
    out[ok] = np.exp(
        0.5 * (gammaln(mo + 1) - gammaln(k + 1) - gammaln(mo - k + 1))
        + 0.5 * (mo - k) * np.log(eta)
        + 0.5 * k * np.log1p(-eta)
    )
    return out


def apply_pila_two_mode(s: TwoModeState, G1: float, G2: float, cutoffs: tuple | None = None, deficit_bound: float = DEFAULT_DEFICIT_BOUND) -> TwoModeState:
    """Independent amplification of both modes (Kraus products ``A_j x A_k``).

    Applied as two single-mode sweeps.  With ``cutoffs=None`` each mode gets
    the smallest cutoff keeping its marginal deficit within half the bound,
    which bounds the joint deficit by the union bound.
    """
    G1, G2 = _check_gain(G1), _check_gain(G2)
    _check_input(s, deficit_bound)
    required = []
    for mode, G in ((1, G1), (2, G2)):
        req = pila_required_cutoff(_marginal_pops(s, mode), G, deficit_bound / 2, s.trace_deficit / 2)
        required.append(req)
    if cutoffs is None:
        if None in required:
            raise CutoffTooSmall("no cutoff meets the deficit bound", required=None)
        cutoffs = tuple(required)
    c1, c2 = int(cutoffs[0]), int(cutoffs[1])
    if c1 < s.cutoffs[0] or c2 < s.cutoffs[1]:
        raise InvalidArgument(f"output cutoffs {cutoffs} are below the input cutoffs {s.cutoffs}")
    if s.is_sparse:
        mid = _sparse_pila(s, 1, G1, c1)
        out = _sparse_pila(mid, 2, G2, c2)
        o1, o2 = s.regular_orders
        out = TwoModeState(out.rho, (c1, c2), (pila_regular_order(o1, G1), pila_regular_order(o2, G2)))
        if _exceeds(out.trace_deficit, deficit_bound, (c1 + 1) * (c2 + 1)):
            raise CutoffTooSmall(
                f"two-mode amplified state at cutoffs {(c1, c2)} loses {out.trace_deficit:.3e} > {deficit_bound:.1e}",
                required=tuple(required),
            )
        return out
    r = np.moveaxis(s.tensor4(), (0, 2), (0, 1))
    r = np.moveaxis(_pila_axis(r, G1, c1), (0, 1), (0, 2))
    r = np.moveaxis(r, (1, 3), (0, 1))
    r = np.moveaxis(_pila_axis(r, G2, c2), (0, 1), (1, 3))
    d = (c1 + 1) * (c2 + 1)
    rho = np.ascontiguousarray(r).reshape(d, d)
    o1, o2 = s.regular_orders
    out = TwoModeState(rho, (c1, c2), (pila_regular_order(o1, G1), pila_regular_order(o2, G2)))
    if _exceeds(out.trace_deficit, deficit_bound, d):
        raise CutoffTooSmall(
            f"two-mode amplified state at cutoffs {(c1, c2)} loses {out.trace_deficit:.3e} > {deficit_bound:.1e}",
            required=tuple(required),
        )
    return out


def apply_loss_two_mode(s: TwoModeState, eta: float, mode: int) -> TwoModeState:
    eta = _check_eta(eta)
    if mode not in (1, 2):
        raise InvalidArgument(f"mode index must be 1 or 2, got {mode!r}")
    if s.is_sparse:
        out = _sparse_loss(s, mode, eta)
        rho, cut = out.rho, out.cutoffs
    else:
        rho, cut = _apply_axis(s, mode, lambda r: _loss_axis(r, eta), s.cutoffs[mode - 1])
    orders = list(s.regular_orders)
    orders[mode - 1] = loss_regular_order(orders[mode - 1], eta)
    return TwoModeState(rho, cut, tuple(orders))


def displace_mode(s: TwoModeState, beta: complex, mode: int) -> TwoModeState:
    """Local displacement of one mode, keeping the cutoffs (exact block elements)."""
    if mode not in (1, 2):
        raise InvalidArgument(f"mode index must be 1 or 2, got {mode!r}")
    if s.is_sparse:
        return displace_mode(s.to_dense(), beta, mode).to_sparse()
    n = s.cutoffs[mode - 1]
    D = displacement_matrix(complex(beta), n, n)

    def fn(r):
        return np.einsum("ia,ab...,jb->ij...", D, r, D.conj())

    rho, cut = _apply_axis(s, mode, fn, n)
    return TwoModeState(rho, cut, s.regular_orders)


# Channel specifications -----------------------------------------------------

CHANNEL_KINDS = ("pila", "loss", "displace", "photon_add", "additive_noise", "beam_splitter")
CUTOFF_POLICIES = ("auto", "keep", "grow_to")


@dataclass(frozen=True)
class ChannelSpec:
    """One channel application, serializable for command-line pipelines.

    ``cutoff_policy`` is ``"auto"`` (smallest cutoff meeting the deficit
    bound), ``"keep"`` (the input cutoff) or ``"grow_to"`` (``out_cutoff``).
    """

    kind: str
    G: float | None = None
    eta: float | None = None
    beta: complex | None = None
    nbar_add: float | None = None
    theta: float | None = None
    cutoff_policy: str = "auto"
    out_cutoff: int | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise InvalidArgument(f"unknown channel kind {self.kind!r}")
        if self.cutoff_policy not in CUTOFF_POLICIES:
            raise InvalidArgument(f"unknown cutoff policy {self.cutoff_policy!r}")
        if self.cutoff_policy == "grow_to" and self.out_cutoff is None:
            raise InvalidArgument("cutoff policy grow_to needs out_cutoff")
        need = {"pila": "G", "loss": "eta", "displace": "beta", "additive_noise": "nbar_add", "beam_splitter": "theta"}
        key = need.get(self.kind)
        if key is not None and getattr(self, key) is None:
            raise InvalidArgument(f"channel {self.kind!r} needs parameter {key!r}")
        if self.G is not None:
            _check_gain(self.G)
        if self.eta is not None:
            _check_eta(self.eta)
        if self.theta is not None:
            _check_theta(self.theta)
        if self.nbar_add is not None and self.nbar_add < 0:
            raise InvalidArgument(f"added noise must be >= 0, got {self.nbar_add!r}")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if "beta" in d:
            d["beta"] = [d["beta"].real, d["beta"].imag]
        if d.get("cutoff_policy") == "auto":
            del d["cutoff_policy"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSpec":
        d = dict(d)
        if "beta" in d:
            b = d["beta"]
            d["beta"] = complex(b[0], b[1]) if isinstance(b, (list, tuple)) else complex(b)
        if "out_cutoff" in d and "cutoff_policy" not in d:
            d["cutoff_policy"] = "grow_to"
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgument(f"unknown channel fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ChannelSpec":
        return cls.from_dict(json.loads(text))

    def resolve_cutoff(self, current: int) -> int | None:
        if self.cutoff_policy == "keep":
            return current
        if self.cutoff_policy == "grow_to":
            return int(self.out_cutoff)
        return None


def apply_channel(s, spec: ChannelSpec, deficit_bound: float = DEFAULT_DEFICIT_BOUND):
    """Apply a :class:`ChannelSpec` to a single- or two-mode state."""
    if spec.kind == "beam_splitter":
        if not isinstance(s, TwoModeState):
            raise InvalidArgument("beam splitter needs a two-mode state")
        return apply_beam_splitter(s, spec.theta)
    if not isinstance(s, FockState):
        raise InvalidArgument(f"channel {spec.kind!r} acts on single-mode states")
    cut = spec.resolve_cutoff(s.cutoff)
    if spec.kind == "pila":
        return apply_pila(s, spec.G, cut, deficit_bound)
    if spec.kind == "loss":
        return apply_loss(s, spec.eta)
    if spec.kind == "displace":
        return displace(s, spec.beta, cut, deficit_bound)
    if spec.kind == "photon_add":
        return photon_add(s)
    return additive_noise(s, spec.nbar_add, out_cutoff=cut, deficit_bound=deficit_bound)
