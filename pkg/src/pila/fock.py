"""Truncated Fock-space states for one and two bosonic modes.

States are density matrices in the number basis.  Every state records its
truncation deficit ``1 - trace(rho)`` so downstream channels can refuse
inputs that have already lost too much weight to the cutoff.

Two-mode matrices use the n1-major index ``n1 * (N2 + 1) + n2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import InvalidArgument, TruncationWarning
from .linalg import block_eigvalsh

DEFAULT_DEFICIT_BOUND = 1e-8
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
CONSTRUCTOR_TAIL_TOL = 1e-10

# s-ordering up to which the quasiprobability of a state is a regular function.
# Finite superpositions of number or coherent states are regular for every s < 1
# but their P-function (s = 1) is singular.
GENERIC_ORDER = 0.0
BELOW_P_ORDER = float(np.nextafter(1.0, 0.0))


def _as_matrix(rho):
    rho = np.array(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgument(f"density matrix must be square, got shape {rho.shape}")
    return rho


def _check_density(rho):
    dev = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if dev > HERMITIAN_TOL:
        raise InvalidArgument(f"density matrix is not self-adjoint (max deviation {dev:.3e})")
    tr = np.trace(rho).real
    if tr > 1.0 + TRACE_TOL:
        raise InvalidArgument(f"trace {tr!r} exceeds 1")
    if tr < 0.0:
        raise InvalidArgument(f"trace {tr!r} is negative")
    return max(0.0, 1.0 - tr)


@dataclass(frozen=True, eq=False)
class FockState:
    """Single-mode density matrix truncated at ``cutoff`` photons.

    ``regular_order`` is the largest ordering parameter s for which the
    s-parametrized quasiprobability is known to be a regular function.  It is
    propagated by the channels and consulted by the phase-space routines.
    """

    rho: np.ndarray
    regular_order: float = GENERIC_ORDER
    trace_deficit: float = field(init=False)

    def __post_init__(self):
        rho = _as_matrix(self.rho)
        rho = 0.5 * (rho + rho.conj().T) if _near_hermitian(rho) else rho
        deficit = _check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "trace_deficit", deficit)

    @property
    def cutoff(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def populations(self) -> np.ndarray:
        return np.clip(np.diag(self.rho).real, 0.0, None)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho)[0])

    def is_physical(self, tol=1e-10) -> bool:
        return self.min_eigenvalue() >= -tol

    def embed(self, cutoff: int) -> "FockState":
        """Zero-pad into a larger truncated space."""
        if cutoff < self.cutoff:
            raise InvalidArgument(f"cannot embed cutoff {self.cutoff} into {cutoff}")
        rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        rho[: self.cutoff + 1, : self.cutoff + 1] = self.rho
        return FockState(rho, self.regular_order)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Density matrix on two truncated modes, index ``n1 * (N2 + 1) + n2``.

    ``rho`` may be a dense array or a scipy sparse matrix.  Amplification,
    loss and beam splitters preserve the band structure of states built from
    finitely many number states, so sparse storage keeps large cutoffs cheap.
    """

    rho: object
    cutoffs: tuple
    regular_orders: tuple = (GENERIC_ORDER, GENERIC_ORDER)
    trace_deficit: float = field(init=False)

    def __post_init__(self):
        n1, n2 = (int(c) for c in self.cutoffs)
        if n1 < 0 or n2 < 0:
            raise InvalidArgument(f"cutoffs must be non-negative, got {self.cutoffs}")
        dim = (n1 + 1) * (n2 + 1)
        if sp.issparse(self.rho):
            rho = sp.csr_matrix(self.rho, dtype=complex)
            if rho.shape != (dim, dim):
                raise InvalidArgument(f"matrix shape {rho.shape} does not match cutoffs {self.cutoffs}")
            dev = abs(rho - rho.conj().T).max() if rho.nnz else 0.0
            if dev > HERMITIAN_TOL:
                raise InvalidArgument(f"density matrix is not self-adjoint (max deviation {dev:.3e})")
            rho = ((rho + rho.conj().T) * 0.5).tocsr()
            rho.eliminate_zeros()
            tr = rho.diagonal().real.sum()
            if tr > 1.0 + TRACE_TOL or tr < 0.0:
                raise InvalidArgument(f"trace {tr!r} outside [0, 1]")
            deficit = max(0.0, 1.0 - tr)
        else:
            rho = _as_matrix(self.rho)
            if rho.shape[0] != dim:
                raise InvalidArgument(f"matrix dimension {rho.shape[0]} does not match cutoffs {self.cutoffs}")
            rho = 0.5 * (rho + rho.conj().T) if _near_hermitian(rho) else rho
            deficit = _check_density(rho)
            rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "cutoffs", (n1, n2))
        object.__setattr__(self, "regular_orders", tuple(float(o) for o in self.regular_orders))
        object.__setattr__(self, "trace_deficit", deficit)

    @property
    def dims(self) -> tuple:
        return (self.cutoffs[0] + 1, self.cutoffs[1] + 1)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rho)

    @property
    def trace(self) -> float:
        return float(self.rho.diagonal().real.sum())

    def to_dense(self) -> "TwoModeState":
        if not self.is_sparse:
            return self
        return TwoModeState(self.rho.toarray(), self.cutoffs, self.regular_orders)

    def to_sparse(self) -> "TwoModeState":
        if self.is_sparse:
            return self
        return TwoModeState(sp.csr_matrix(self.rho), self.cutoffs, self.regular_orders)

    def dense_matrix(self) -> np.ndarray:
        return self.rho.toarray() if self.is_sparse else self.rho

    def tensor4(self) -> np.ndarray:
        """Dense view as ``rho[n1, n2, m1, m2]``."""
        d1, d2 = self.dims
        return self.dense_matrix().reshape(d1, d2, d1, d2)

    def entries(self):
        """Nonzero entries as arrays ``(n1, n2, m1, m2, value)``."""
        d2 = self.dims[1]
        coo = sp.coo_matrix(self.rho)
        return coo.row // d2, coo.row % d2, coo.col // d2, coo.col % d2, coo.data

    def element(self, bra, ket) -> complex:
        """Matrix element ``<bra|rho|ket>`` for occupation pairs."""
        d2 = self.dims[1]
        return complex(self.rho[bra[0] * d2 + bra[1], ket[0] * d2 + ket[1]])

    def min_eigenvalue(self) -> float:
        return float(block_eigvalsh(self.rho)[0])


def two_mode_from_entries(n1, n2, m1, m2, values, cutoffs, regular_orders=(GENERIC_ORDER, GENERIC_ORDER)) -> TwoModeState:
    """Sparse two-mode state from coordinate entries; duplicates are summed."""
    d2 = cutoffs[1] + 1
    dim = (cutoffs[0] + 1) * d2
    M = sp.coo_matrix((values, (np.asarray(n1) * d2 + n2, np.asarray(m1) * d2 + m2)), shape=(dim, dim)).tocsr()
    M.sum_duplicates()
    return TwoModeState(M, cutoffs, regular_orders)


def _near_hermitian(rho):
    return rho.size == 0 or np.max(np.abs(rho - rho.conj().T)) <= HERMITIAN_TOL


def _finish_pure(amps, regular_order, norm_sq=1.0, what="state"):
    amps = np.asarray(amps, dtype=complex) / np.sqrt(norm_sq)
    rho = np.outer(amps, amps.conj())
    state = FockState(rho, regular_order)
    if state.trace_deficit > CONSTRUCTOR_TAIL_TOL:
        warnings.warn(
            f"{what} loses {state.trace_deficit:.3e} of its weight above cutoff {state.cutoff}",
            TruncationWarning,
            stacklevel=3,
        )
    return state


def _check_cutoff(cutoff):
    if int(cutoff) != cutoff or cutoff < 0:
        raise InvalidArgument(f"cutoff must be a non-negative integer, got {cutoff!r}")
    return int(cutoff)


def make_fock(n: int, cutoff: int) -> FockState:
    cutoff = _check_cutoff(cutoff)
    if int(n) != n or n < 0:
        raise InvalidArgument(f"occupation must be a non-negative integer, got {n!r}")
    if n > cutoff:
        raise InvalidArgument(f"occupation {n} exceeds cutoff {cutoff}")
    rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    rho[n, n] = 1.0
    return FockState(rho, BELOW_P_ORDER)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes of ``|alpha>`` up to ``cutoff``."""
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps


def make_coherent(alpha: complex, cutoff: int) -> FockState:
    cutoff = _check_cutoff(cutoff)
    return _finish_pure(coherent_amplitudes(complex(alpha), cutoff), BELOW_P_ORDER, what="coherent state")


def make_cat(alpha: complex, sign: int, cutoff: int) -> FockState:
    """Normalized ``|alpha> + sign |-alpha>`` with ``sign`` in {+1, -1}."""
    cutoff = _check_cutoff(cutoff)
    if sign not in (1, -1):
        raise InvalidArgument(f"cat parity sign must be +1 or -1, got {sign!r}")
    alpha = complex(alpha)
    if sign == -1 and alpha == 0:
        raise InvalidArgument("odd cat state with alpha = 0 has zero norm")
    base = coherent_amplitudes(alpha, cutoff)
    parity = (-1.0) ** np.arange(cutoff + 1)
    amps = base * (1.0 + sign * parity)
    # exact norm of the untruncated superposition
    norm_sq = 2.0 * (1.0 + sign * np.exp(-2.0 * abs(alpha) ** 2))
    return _finish_pure(amps, BELOW_P_ORDER, norm_sq, what="cat state")


def make_squeezed_vacuum(r: float, cutoff: int) -> FockState:
    """Squeezed vacuum ``exp[r (a^2 - a^dag^2) / 2] |0>``; x is the squeezed quadrature."""
    cutoff = _check_cutoff(cutoff)
    if r < 0:
        raise InvalidArgument(f"squeezing parameter must be >= 0, got {r!r}")
    amps = np.zeros(cutoff + 1, dtype=complex)
    t = -np.tanh(r)
    amps[0] = 1.0 / np.sqrt(np.cosh(r))
    for m in range(1, cutoff // 2 + 1):
        # c_{2m} = c_{2m-2} * t * sqrt((2m)(2m-1)) / (2m)
        amps[2 * m] = amps[2 * m - 2] * t * np.sqrt((2 * m - 1) / (2 * m))
    return _finish_pure(amps, float(np.exp(-2.0 * r)), what="squeezed vacuum")


def make_thermal(nbar: float, cutoff: int) -> FockState:
    cutoff = _check_cutoff(cutoff)
    if nbar < 0:
        raise InvalidArgument(f"mean photon number must be >= 0, got {nbar!r}")
    n = np.arange(cutoff + 1)
    if nbar == 0:
        pops = (n == 0).astype(float)
    else:
        pops = np.exp(n * np.log(nbar) - (n + 1) * np.log1p(nbar))
    # P is a Gaussian of variance nbar; singular only at s = 1 + 2 nbar
    state = FockState(np.diag(pops).astype(complex), float(np.nextafter(1.0 + 2.0 * nbar, 0.0)))
    if state.trace_deficit > CONSTRUCTOR_TAIL_TOL:
        warnings.warn(
            f"thermal state loses {state.trace_deficit:.3e} above cutoff {cutoff}",
            TruncationWarning,
            stacklevel=2,
        )
    return state


STATE_FAMILIES = ("fock", "coherent", "cat", "squeezed", "thermal")


@dataclass(frozen=True)
class StateSpec:
    """Family name plus parameters for one of the built-in state constructors."""

    family: str
    n: int = 0
    alpha: complex = 0j
    sign: int = 1
    r: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.family not in STATE_FAMILIES:
            raise InvalidArgument(f"unknown state family {self.family!r}")
        if self.n < 0 or self.r < 0 or self.nbar < 0:
            raise InvalidArgument(f"parameters out of domain in {self}")

    def build(self, cutoff: int) -> FockState:
        if self.family == "fock":
            return make_fock(self.n, cutoff)
        if self.family == "coherent":
            return make_coherent(self.alpha, cutoff)
        if self.family == "cat":
            return make_cat(self.alpha, self.sign, cutoff)
        if self.family == "squeezed":
            return make_squeezed_vacuum(self.r, cutoff)
        return make_thermal(self.nbar, cutoff)


def tensor(s1: FockState, s2: FockState) -> TwoModeState:
    return TwoModeState(np.kron(s1.rho, s2.rho), (s1.cutoff, s2.cutoff), (s1.regular_order, s2.regular_order))


def partial_trace(s: TwoModeState, keep: int) -> FockState:
    """Reduced state of mode ``keep`` (1 or 2)."""
    if keep not in (1, 2):
        raise InvalidArgument(f"mode index must be 1 or 2, got {keep!r}")
    if s.is_sparse:
        n1, n2, m1, m2, v = s.entries()
        d = s.dims[keep - 1]
        red = np.zeros((d, d), dtype=complex)
        if keep == 1:
            sel = n2 == m2
            np.add.at(red, (n1[sel], m1[sel]), v[sel])
        else:
            sel = n1 == m1
            np.add.at(red, (n2[sel], m2[sel]), v[sel])
        return FockState(red, s.regular_orders[keep - 1])
    r = s.tensor4()
    red = np.einsum("ajbj->ab", r) if keep == 1 else np.einsum("jajb->ab", r)
    return FockState(red, s.regular_orders[keep - 1])


def two_mode_from_vector(psi, cutoffs, regular_orders=(GENERIC_ORDER, GENERIC_ORDER)) -> TwoModeState:
    """Pure two-mode state from amplitudes ``psi[n1, n2]`` (flattened or 2-D)."""
    d1, d2 = cutoffs[0] + 1, cutoffs[1] + 1
    v = np.asarray(psi, dtype=complex).reshape(d1 * d2)
    return TwoModeState(np.outer(v, v.conj()), cutoffs, regular_orders)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def _falling_factorial(n, k):
    out = np.zeros(n.shape)
    ok = n >= k
    out[ok] = np.exp(gammaln(n[ok] + 1) - gammaln(n[ok] - k + 1))
    return out


def normal_moment(s: FockState, k: int) -> float:
    """``<a^dag^k a^k>`` evaluated exactly on the truncated basis."""
    if int(k) != k or k < 0:
        raise InvalidArgument(f"moment order must be a non-negative integer, got {k!r}")
    if k > s.cutoff:
        raise InvalidArgument(f"moment order {k} exceeds cutoff {s.cutoff}")
    n = np.arange(s.cutoff + 1)
    return float(np.dot(_falling_factorial(n, int(k)), np.diag(s.rho).real))


def mean_photon(s: FockState) -> float:
    return float(np.dot(np.arange(s.cutoff + 1), np.diag(s.rho).real))


def mean_field(s: FockState) -> complex:
    """``<a> = sum_n sqrt(n + 1) rho[n + 1, n]``."""
    n = np.arange(s.cutoff)
    return complex(np.sum(np.sqrt(n + 1.0) * np.diag(s.rho, -1)))


def parity(s: FockState) -> float:
    return float(np.dot((-1.0) ** np.arange(s.cutoff + 1), np.diag(s.rho).real))


def fidelity(s1: FockState, s2: FockState) -> float:
    """Overlap ``Tr(rho1 rho2)``; the smaller state is zero-padded to the larger cutoff."""
    n = min(s1.cutoff, s2.cutoff) + 1
    # elements outside the common block multiply zeros
    val = np.sum(s1.rho[:n, :n] * s2.rho[:n, :n].T)
    return float(val.real)


# Displacement matrix elements -------------------------------------------------


def _laguerre_rows(x, logr, k, jmax):
    """Rows ``h_j = |b|^k sqrt(j!/(j+k)!) exp(-x/2) L_j^(k)(x)`` for j = 0..jmax.

    ``x = |b|^2`` and ``logr = log|b|`` are arrays over displacement points.
    Built by the three-term Laguerre recurrence in j, with the factorial
    prefactor folded in to keep every row bounded by 1.
    """
    h = np.empty((jmax + 1,) + x.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        if k == 0:
            h0 = np.exp(-0.5 * x)
        else:
            h0 = np.where(x > 0, np.exp(k * logr - 0.5 * x - 0.5 * gammaln(k + 1)), 0.0)
    h[0] = h0
    if jmax >= 1:
        h[1] = (1.0 + k - x) * h0 / np.sqrt(k + 1.0)
    for j in range(1, jmax):
        h[j + 1] = ((2 * j + 1 + k - x) * h[j] - np.sqrt(j * (j + k)) * h[j - 1]) / np.sqrt((j + 1) * (j + k + 1))
    return h


def _polar(beta):
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    with np.errstate(divide="ignore"):
        logr = np.log(np.abs(beta))
    phase = np.exp(1j * np.angle(beta))
    return beta, x, logr, phase


def displacement_matrix(beta, rows: int, cols: int | None = None) -> np.ndarray:
    """Exact elements ``<m|D(beta)|n>`` for ``m <= rows``, ``n <= cols``.

    ``beta`` may be a scalar or an array; array input returns a stack with the
    point axes first.  Elements follow the associated-Laguerre closed form, so
    the block is the corner of the infinite unitary, not the exponential of a
    truncated generator.
    """
    cols = rows if cols is None else cols
    beta, x, logr, phase = _polar(beta)
    out = np.zeros(beta.shape + (rows + 1, cols + 1), dtype=complex)
    for k in range(max(rows, cols) + 1):
        # lower part: m = n + k
        jl = min(rows - k, cols)
        ju = min(cols - k, rows)
        jmax = max(jl, ju)
        if jmax < 0:
            continue
        h = _laguerre_rows(x, logr, k, jmax)
        h = np.moveaxis(h, 0, -1)
        pk = phase**k
        if jl >= 0:
            j = np.arange(jl + 1)
            out[..., j + k, j] = pk[..., None] * h[..., : jl + 1]
        if k > 0 and ju >= 0:
            j = np.arange(ju + 1)
            out[..., j, j + k] = ((-1) ** k) * np.conj(pk)[..., None] * h[..., : ju + 1]
    return out


def displaced_trace(rho: np.ndarray, beta) -> np.ndarray:
    """``Tr[rho D(beta)]`` for an array of points without forming the matrices."""
    beta, x, logr, phase = _polar(beta)
    n = rho.shape[0] - 1
    acc = np.zeros(beta.shape, dtype=complex)
    for k in range(n + 1):
        jmax = n - k
        h = _laguerre_rows(x, logr, k, jmax)
        # D[j+k, j] pairs with rho[j, j+k]; D[j, j+k] with rho[j+k, j]
        lower = np.tensordot(np.diagonal(rho, k), h, axes=(0, 0))
        term = (phase**k) * lower
        if k > 0:
            upper = np.tensordot(np.diagonal(rho, -k), h, axes=(0, 0))
            term = term + ((-1) ** k) * np.conj(phase**k) * upper
        acc += term
    return acc
