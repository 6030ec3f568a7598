"""Observable nonclassicality tests built from photon-counting statistics.

Moment matrices ``M_ij = <:(a^dag a)^(i+j-2):>`` have a negative determinant
only for nonclassical light.  The Gaussian test operator
``[(sigma-1)/sigma]^(a^dag a)`` reduces to photon-number parity at
``sigma = 1/2``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .channels import apply_loss, displace, pila_populations
from .errors import InvalidArgument
from .fock import FockState, mean_photon
from .phase_space import quasi_prob_at


def factorial_moments(populations, kmax: int) -> np.ndarray:
    """``<a^dag^k a^k> = sum_n n!/(n-k)! p_n`` for ``k = 0..kmax``."""
    p = np.asarray(populations, dtype=float)
    n = np.arange(p.size, dtype=float)
    out = np.zeros(kmax + 1)
    for k in range(kmax + 1):
        ok = n >= k
        out[k] = np.dot(np.exp(gammaln(n[ok] + 1) - gammaln(n[ok] - k + 1)), p[ok])
    return out


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    """Hankel matrix of normal-ordered photon-number moments."""

    order: int
    entries: np.ndarray

    def det(self) -> float:
        return _scaled_det(self.entries)


def _moment_hankel(moments, n):
    i = np.arange(n)
    return moments[i[:, None] + i[None, :]]


def _scaled_det(M):
    """Determinant after rescaling row and column i by ``M[0,1]^-i``.

    Moment magnitudes grow like ``<:n:>^(i+j)``, so the rescaled matrix is
    of order one and the sign of its pivoted LU determinant is reliable.
    """
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0])
    m1 = M[0, 1]
    scale = m1 if m1 > 0 else 1.0
    d = scale ** -np.arange(n)
    sign, logdet = np.linalg.slogdet(d[:, None] * M * d[None, :])
    if sign == 0:
        return 0.0
    return float(sign * np.exp(logdet + n * (n - 1) * np.log(scale)))


def _check_order(n):
    if int(n) != n or n < 1:
        raise InvalidArgument(f"moment-matrix order must be a positive integer, got {n!r}")
    return int(n)


def moment_matrix(s: FockState, n: int) -> MomentMatrix:
    n = _check_order(n)
    if s.cutoff < 2 * n - 2:
        raise InvalidArgument(f"order {n} needs cutoff >= {2 * n - 2}, state has {s.cutoff}")
    mom = factorial_moments(np.diag(s.rho).real, 2 * n - 2)
    return MomentMatrix(n, _moment_hankel(mom, n))


def det_moment_matrix(s: FockState, n: int) -> float:
    """``Det M^(n)``; a negative value certifies nonclassical photon statistics."""
    return moment_matrix(s, n).det()


def efficiency_scaled_det(s: FockState, n: int, eta: float) -> float:
    """Determinant after detection with efficiency ``eta`` (modeled as pure loss)."""
    return det_moment_matrix(apply_loss(s, eta), n)


def gaussian_test(s: FockState, sigma: float, alpha0: complex = 0j) -> float:
    """``<:T:>`` for the Gaussian test operator centred at ``alpha0``.

    For ``sigma >= 1/2`` this is ``sum_n ((sigma-1)/sigma)^n P(n)`` of the
    state displaced by ``-alpha0``.  For ``sigma < 1/2`` that series
    diverges and the equivalent ``pi sigma W_{1-2 sigma}(alpha0)`` is used,
    which needs the s = 1 - 2 sigma distribution to be regular.
    """
    sigma = float(sigma)
    if not sigma > 0:
        raise InvalidArgument(f"sigma must be positive, got {sigma!r}")
    if sigma < 0.5:
        return float(np.pi * sigma * quasi_prob_at(s, complex(alpha0), 1.0 - 2.0 * sigma)[0])
    if alpha0 != 0:
        s = displace(s, -complex(alpha0), deficit_bound=max(1e-8, 10 * s.trace_deficit))
    ratio = (sigma - 1.0) / sigma
    p = np.diag(s.rho).real
    return float(np.dot(ratio ** np.arange(p.size), p))


# Critical-gain scan ----------------------------------------------------------


@dataclass(frozen=True)
class CriticalGainResult:
    """Gain at which ``Det M^(n)`` of the amplified input changes sign.

    ``status`` is ``"ok"`` or ``"out-of-range"``; in the latter case ``G_c``
    is NaN and ``bracket`` is the searched range.
    """

    order: int
    G_c: float
    bracket: tuple
    iterations: int
    status: str = "ok"

    def csv_row(self) -> str:
        lo, hi = self.bracket
        return f"{self.order},{self.G_c:.17g},{lo:.17g},{hi:.17g}"


CRITICAL_GAIN_HEADER = "order,G_c,bracket_lo,bracket_hi"


def critical_gain_csv(results, header_comment: str | None = None, status: bool = False) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(CRITICAL_GAIN_HEADER + (",status" if status else "") + "\n")
    for r in results:
        buf.write(r.csv_row() + (f",{r.status}" if status else "") + "\n")
    return buf.getvalue()


def amplified_moments(input_pops, G: float, kmax: int, rtol: float = 1e-14) -> tuple:
    """Factorial moments of the amplified state with a converged photon-number tail.

    Starts from a cutoff ``ceil(8 (G nbar + G))`` and doubles it until every
    moment up to ``kmax`` changes by less than ``rtol`` relative.
    Returns ``(moments, cutoff)``.
    """
    p = np.asarray(input_pops, dtype=float)
    nbar = float(np.dot(np.arange(p.size), p))
    N = max(int(np.ceil(8 * (G * nbar + G))), p.size - 1, 2 * kmax)
    prev = factorial_moments(pila_populations(p, G, N), kmax)
    while True:
        N *= 2
        cur = factorial_moments(pila_populations(p, G, N), kmax)
        if np.all(np.abs(cur - prev) <= rtol * np.abs(cur)):
            return cur, N
        if N > 200000:
            raise InvalidArgument(f"moment tail did not converge up to cutoff {N}")
        prev = cur


def amplified_det(s: FockState, n: int, G: float) -> float:
    mom, _ = amplified_moments(np.diag(s.rho).real, G, 2 * n - 2)
    return _scaled_det(_moment_hankel(mom, n))


def critical_gain_scan(s: FockState, n: int, G_range=(1.5, 50.0), tol: float = 1e-7, max_iter: int = 200) -> CriticalGainResult:
    """Bisect for the gain where ``Det M^(n)`` of the amplified input turns non-negative.

    The default range starts at G = 1.5 because high-order determinants of
    amplified number states can be positive just above G = 1.
    """
    n = _check_order(n)
    if n < 2:
        raise InvalidArgument("moment-matrix order must be at least 2 for a sign test")
    lo, hi = float(G_range[0]), float(G_range[1])
    if not 1.0 <= lo < hi:
        raise InvalidArgument(f"gain range must satisfy 1 <= lo < hi, got {G_range}")
    if amplified_det(s, n, lo) >= 0 or amplified_det(s, n, hi) < 0:
        return CriticalGainResult(n, float("nan"), (lo, hi), 0, "out-of-range")
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if amplified_det(s, n, mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return CriticalGainResult(n, 0.5 * (lo + hi), (lo, hi), it)
