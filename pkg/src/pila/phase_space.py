"""Characteristic functions, s-ordered quasiprobabilities and nonclassical depth.

Conventions: ``alpha = x + i y``, ``D(l) = exp(l a^dag - l* a)`` and

    chi_s(l) = Tr[rho D(l)] exp(s |l|^2 / 2),
    W_s(alpha) = pi^-2 \\int chi_s(l) exp(alpha l* - alpha* l) d^2 l.

The vacuum has quadrature variance (1 - s)/4 under W_s, so s = 1, 0, -1 give
the P, Wigner and Q functions.  Smoothing a P-function with the kernel
``exp(-|a|^2 / tau) / (pi tau)`` gives the s = 1 - 2 tau distribution.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import GridTooSmallWarning, InvalidArgument
from .fock import FockState, coherent_amplitudes, displaced_trace, mean_photon

DEFAULT_POINTS = 201
CHI_DECAY = 1e-10
MAX_LAMBDA_EXTENT = 16.0
NEGATIVITY_THRESHOLD = 1e-9
GAUSSIAN_TOL = 1e-8


# Grids ---------------------------------------------------------------------


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid of phase-space points ``x + i y``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = DEFAULT_POINTS
    ny: int = DEFAULT_POINTS

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InvalidArgument("grids need at least two points per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidArgument("grid bounds must be increasing")

    @classmethod
    def square(cls, extent: float, n: int = DEFAULT_POINTS) -> "GridSpec":
        return cls(-extent, extent, -extent, extent, n, n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def cell_area(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1) * (self.y_max - self.y_min) / (self.ny - 1)

    def points(self) -> np.ndarray:
        return self.x[:, None] + 1j * self.y[None, :]

    @property
    def half_extent(self) -> float:
        return max(abs(self.x_min), abs(self.x_max), abs(self.y_min), abs(self.y_max))


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Samples ``values[i, j]`` at ``x[i] + i y[j]`` of an s-ordered distribution.

    ``quadrature_deficit`` is the state's trace minus the grid integral, the
    weight the grid misses.
    """

    spec: GridSpec
    values: np.ndarray
    ordering: float
    quadrature_deficit: float = field(default=float("nan"))

    @property
    def x(self):
        return self.spec.x

    @property
    def y(self):
        return self.spec.y

    def integral(self) -> float:
        """Trapezoidal integral over the grid."""
        return float(_trapezoid(_trapezoid(self.values.real, self.y, axis=1), self.x))

    def minimum(self) -> tuple:
        """``(value, location)`` of the smallest sample."""
        i, j = np.unravel_index(np.argmin(self.values.real), self.values.shape)
        return float(self.values[i, j].real), complex(self.x[i], self.y[j])

    def maximum(self) -> float:
        return float(np.max(self.values.real))

    def to_csv(self, stream=None, header_comment: str | None = None) -> str:
        """Row-major ``x,y,value`` table with 17 significant digits."""
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        buf.write("x,y,value\n")
        xs, ys = self.x, self.y
        vals = self.values.real
        for i, xv in enumerate(xs):
            for j, yv in enumerate(ys):
                buf.write(f"{xv:.17g},{yv:.17g},{vals[i, j]:.17g}\n")
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def default_grid(state: FockState, s_ord: float = 0.0, n: int = DEFAULT_POINTS) -> GridSpec:
    """Square grid of half-width ``sqrt(nbar) + 4 + sqrt((1 - s)/2)``.

    The width grows to five standard deviations of the widest quadrature
    around the mean when that is larger, as for strongly squeezed states.
    """
    nbar = max(mean_photon(state), 0.0)
    margin = np.sqrt(max(0.0, (1.0 - s_ord) / 2.0))
    mean, V = gaussian_moments(state)
    spread = np.abs(mean).max() + 5.0 * np.sqrt(max(np.linalg.eigvalsh(V)[1] - s_ord / 4.0, 0.0))
    return GridSpec.square(float(max(np.sqrt(nbar) + 4.0 + margin, spread)), n)


# Characteristic functions ---------------------------------------------------


def char_fn(state: FockState, lam, s_ord: float = 0.0):
    """s-ordered characteristic function ``chi_s(lam)``.

    ``lam`` is an array of complex points or a :class:`GridSpec`; a grid
    returns a complex-valued :class:`PhaseSpaceGrid`.
    """
    if isinstance(lam, GridSpec):
        vals = char_fn(state, lam.points(), s_ord)
        return PhaseSpaceGrid(lam, vals, s_ord)
    lam = np.asarray(lam, dtype=complex)
    return displaced_trace(state.rho, lam) * np.exp(0.5 * s_ord * np.abs(lam) ** 2)


def _ring(radius, n=64):
    return radius * np.exp(2j * np.pi * np.arange(n) / n)


def _lambda_extent(state, s_ord, start=3.0, step=0.5):
    """Smallest radius on which ``|chi_s|`` has decayed below ``CHI_DECAY``.

    For ``s > 0`` rounding errors in ``Tr[rho D]`` are amplified by
    ``exp(s |l|^2 / 2)``; once the ring maximum starts to grow again the
    search stops at the best radius seen and reports failure.
    """
    ref = abs(state.trace) or 1.0
    best, best_r = np.inf, start
    r = start
    while r <= MAX_LAMBDA_EXTENT:
        edge = np.max(np.abs(char_fn(state, _ring(r), s_ord)))
        if edge < CHI_DECAY * ref:
            return r, True
        if edge < best:
            best, best_r = edge, r
        elif edge > 10 * best:
            break
        r += step
    return best_r, False


def _support_radius(state, s_ord):
    return float(np.sqrt(max(mean_photon(state), 0.0)) + 4.0 + np.sqrt(max(0.0, (1.0 - s_ord) / 2.0)))


def fourier_grid(chi_fn, spec: GridSpec, lam_extent: float, support: float):
    """Evaluate ``pi^-2 \\int chi(l) exp(alpha l* - alpha* l) d^2 l`` on ``spec``.

    ``chi`` is sampled inside the disk ``|l| <= lam_extent``.  The integral
    is a Riemann sum on a square lambda lattice, done as two
    dense matrix products.  Spacing is chosen so periodic images of the
    distribution sit well outside both the grid and the state's support.
    """
    period = 2.5 * max(spec.half_extent, support)
    h = np.pi / period
    m = int(np.ceil(lam_extent / h))
    lam1 = h * np.arange(-m, m + 1)
    lam = lam1[:, None] + 1j * lam1[None, :]
    inside = np.abs(lam) <= lam_extent
    chi = np.zeros(lam.shape, dtype=complex)
    chi[inside] = chi_fn(lam[inside])
    A = np.exp(2j * np.outer(spec.y, lam1))
    B = np.exp(-2j * np.outer(spec.x, lam1))
    W = B @ (A @ chi).T
    return (W * h * h / np.pi**2).real


# Gaussian states -------------------------------------------------------------


def gaussian_moments(state: FockState):
    """Mean ``(x, y)`` and covariance of the Wigner function from low moments.

    With ``m = <da^2>`` and ``n = <da^dag da>`` the covariance is
    ``[[(2n+1)/4 + Re m/2, Im m/2], [Im m/2, (2n+1)/4 - Re m/2]]``.
    """
    rho = state.rho
    N = state.cutoff
    tr = state.trace
    k = np.arange(N)
    a1 = np.sum(np.sqrt(k + 1.0) * np.diag(rho, -1)) / tr
    k2 = np.arange(max(N - 1, 0))
    a2 = np.sum(np.sqrt((k2 + 1.0) * (k2 + 2.0)) * np.diag(rho, -2)) / tr
    n = np.dot(np.arange(N + 1), np.diag(rho).real) / tr
    m = a2 - a1**2
    nn = n - abs(a1) ** 2
    V = np.array(
        [
            [(2 * nn + 1) / 4 + m.real / 2, m.imag / 2],
            [m.imag / 2, (2 * nn + 1) / 4 - m.real / 2],
        ]
    )
    return np.array([a1.real, a1.imag]), V


def gaussian_char(mean, V, lam):
    lam = np.asarray(lam, dtype=complex)
    k = np.stack([2 * lam.imag, -2 * lam.real], axis=-1)
    quad = np.einsum("...i,ij,...j->...", k, V, k)
    return np.exp(1j * (k @ mean) - 0.5 * quad)


def is_gaussian(state: FockState, tol: float = GAUSSIAN_TOL) -> bool:
    """True when the Wigner characteristic function matches its moment Gaussian."""
    mean, V = gaussian_moments(state)
    if np.linalg.eigvalsh(V)[0] <= 0:
        return False
    t = np.linspace(-3.0, 3.0, 13)
    lam = (t[:, None] + 1j * t[None, :]).ravel()
    lam = lam[np.abs(lam) <= 3.0]
    diff = char_fn(state, lam, 0.0) - state.trace * gaussian_char(mean, V, lam)
    return bool(np.max(np.abs(diff)) < tol)


def gaussian_density(mean, cov, spec: GridSpec):
    pts = spec.points()
    d = np.stack([pts.real - mean[0], pts.imag - mean[1]], axis=-1)
    inv = np.linalg.inv(cov)
    q = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(np.linalg.det(cov)))


def gaussian_depth(V) -> float:
    """Depth of a Gaussian state, ``max(0, 1/2 - 2 lambda_min(V))``."""
    return float(min(1.0, max(0.0, 0.5 - 2.0 * np.linalg.eigvalsh(V)[0])))


# Quasiprobabilities ----------------------------------------------------------


def _check_ordering(s_ord):
    s_ord = float(s_ord)
    if not -1.0 <= s_ord <= 1.0:
        raise InvalidArgument(f"ordering must lie in [-1, 1], got {s_ord!r}")
    return s_ord


def quasi_prob(state: FockState, grid: GridSpec | None = None, s_ord: float = 0.0, gaussian: bool | None = None) -> PhaseSpaceGrid:
    """s-ordered quasiprobability sampled on ``grid``.

    Orderings ``s <= 0`` are always regular.  ``s > 0`` is accepted only if
    the state's recorded ``regular_order`` reaches it, or, for Gaussian
    states, if the covariance minus ``s/4`` stays positive definite.
    Gaussian states (detected automatically unless ``gaussian`` is given) are
    evaluated in closed form; others by Fourier transform of ``chi_s``.
    """
    s_ord = _check_ordering(s_ord)
    grid = grid or default_grid(state, s_ord)
    if gaussian is None:
        gaussian = s_ord > 0 and is_gaussian(state)
    if gaussian:
        mean, V = gaussian_moments(state)
        cov = V - 0.25 * s_ord * np.eye(2)
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise InvalidArgument(
                f"ordering s={s_ord} is singular for this Gaussian state "
                f"(smallest quadrature variance {np.linalg.eigvalsh(V)[0]:.6g} <= s/4)"
            )
        vals = state.trace * gaussian_density(mean, cov, grid)
    else:
        if s_ord > 0 and s_ord > state.regular_order:
            raise InvalidArgument(
                f"ordering s={s_ord} exceeds the state's guaranteed regular order "
                f"{state.regular_order:.6g}; the distribution may be singular"
            )
        ext, ok = _lambda_extent(state, s_ord)
        if not ok:
            warnings.warn(
                f"characteristic function at s={s_ord} has not decayed below {CHI_DECAY:g} "
                f"within |lambda| <= {ext}",
                GridTooSmallWarning,
                stacklevel=2,
            )
        vals = fourier_grid(lambda l: char_fn(state, l, s_ord), grid, ext, _support_radius(state, s_ord))
    out = PhaseSpaceGrid(grid, vals, s_ord)
    return PhaseSpaceGrid(grid, vals, s_ord, state.trace - out.integral())


def q_function(state: FockState, alpha) -> np.ndarray:
    """``<alpha|rho|alpha> / pi`` evaluated directly from coherent amplitudes."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    out = np.empty(alpha.shape)
    for idx, a in np.ndenumerate(alpha):
        c = coherent_amplitudes(a, state.cutoff)
        out[idx] = (c.conj() @ state.rho @ c).real / np.pi
    return out


def smooth_p(grid: PhaseSpaceGrid, tau: float) -> PhaseSpaceGrid:
    """Convolve with ``exp(-|b - a|^2 / tau) / (pi tau)``; lowers the ordering by ``2 tau``."""
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise InvalidArgument(f"smoothing width must lie in [0, 1], got {tau!r}")
    if tau <= 1e-12:
        return grid
    x, y = grid.x, grid.y
    dx, dy = x[1] - x[0], y[1] - y[0]
    Kx = np.exp(-((x[:, None] - x[None, :]) ** 2) / tau) * dx
    Ky = np.exp(-((y[:, None] - y[None, :]) ** 2) / tau) * dy
    vals = Kx @ grid.values.real @ Ky.T / (np.pi * tau)
    return PhaseSpaceGrid(grid.spec, vals, grid.ordering - 2.0 * tau)


# Nonclassical depth ------------------------------------------------------------


@dataclass(frozen=True)
class DepthEstimate:
    """Bracket ``[tau_lower, tau_upper]`` on the nonclassical depth.

    ``certificate`` is the phase-space point with the most negative smoothed
    value at ``tau_lower`` (or the zero of the Q-function when
    ``tau_upper = 1`` is certified that way).  ``conclusive`` is False when
    the searchable range did not allow a bracket.
    """

    tau_lower: float
    tau_upper: float
    certificate: complex | None
    conclusive: bool
    method: str

    @property
    def tau(self) -> float:
        return 0.5 * (self.tau_lower + self.tau_upper)


def critical_gain_from_depth(tau: float) -> float:
    """``1 / (1 - tau)``, with ``inf`` at ``tau = 1``."""
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise InvalidArgument(f"depth must lie in [0, 1], got {tau!r}")
    return float("inf") if tau == 1.0 else 1.0 / (1.0 - tau)


def local_critical_gains(tau: float, theta: float) -> tuple:
    """Critical gains of the two beam-splitter outputs, ``1/(1 - tau cos^2)`` and ``1/(1 - tau sin^2)``."""
    tau = float(tau)
    if not 0.0 <= tau <= 1.0:
        raise InvalidArgument(f"depth must lie in [0, 1], got {tau!r}")
    if not 0.0 <= theta <= np.pi / 2 + 1e-15:
        raise InvalidArgument(f"beam-splitter angle must lie in [0, pi/2], got {theta!r}")
    t1 = tau * np.cos(theta) ** 2
    t2 = tau * np.sin(theta) ** 2
    return critical_gain_from_depth(min(t1, 1.0)), critical_gain_from_depth(min(t2, 1.0))


def q_minimum(state: FockState, spec: GridSpec | None = None):
    """Global minimum of the Q-function: coarse grid search plus local refinement."""
    spec = spec or default_grid(state, -1.0, 61)
    pts = spec.points()
    vals = q_function(state, pts)
    i = np.unravel_index(np.argmin(vals), vals.shape)
    a0 = pts[i]
    res = minimize(
        lambda v: q_function(state, v[0] + 1j * v[1])[0],
        [a0.real, a0.imag],
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-16},
    )
    best = complex(res.x[0], res.x[1])
    return float(min(res.fun, vals[i])), best if res.fun <= vals[i] else a0


def _grid_status(state, tau, spec):
    """Classify the s = 1 - 2 tau distribution as negative, non-negative or unresolved.

    Returns ``(status, location_of_minimum)``.  ``unresolved`` means the
    characteristic function did not decay inside the largest lambda window,
    so the distribution is too sharp to sample.
    """
    s_ord = 1.0 - 2.0 * tau
    ext, ok = _lambda_extent(state, s_ord)
    if not ok:
        return "unresolved", None
    vals = fourier_grid(lambda l: char_fn(state, l, s_ord), spec, ext, _support_radius(state, s_ord))
    g = PhaseSpaceGrid(spec, vals, s_ord)
    vmin, loc = g.minimum()
    if vmin < -NEGATIVITY_THRESHOLD * g.maximum():
        return "negative", loc
    return "nonnegative", loc


def nonclassical_depth(state: FockState, grid: GridSpec | None = None, tol: float = 1e-4, max_iter: int = 40) -> DepthEstimate:
    """Bracket the smallest smoothing ``tau`` giving a non-negative distribution.

    Gaussian states use the exact criterion ``lambda_min(V) >= (1 - 2 tau)/4``.
    Other states bisect over ``tau`` in ``[tau_reg, 1]``, with ``tau_reg``
    fixed by the state's regular order, testing the sampled s = 1 - 2 tau
    grid for negativity.  A zero of the Q-function certifies ``tau_upper = 1``.
    If the bracket cannot be closed because the distribution is too sharp to
    sample, the estimate is returned with ``conclusive=False``.
    """
    if is_gaussian(state):
        _, V = gaussian_moments(state)
        lmin = np.linalg.eigvalsh(V)[0]
        lo, hi = 0.0, 1.0
        if lmin >= 0.25:
            return DepthEstimate(0.0, 0.0, None, True, "gaussian")
        for _ in range(max_iter):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if lmin < (1.0 - 2.0 * mid) / 4.0:
                lo = mid
            else:
                hi = mid
        return DepthEstimate(lo, hi, None, True, "gaussian")

    tau_reg = float(np.clip((1.0 - state.regular_order) / 2.0, 0.0, 1.0))
    if tau_reg >= 1.0:
        return DepthEstimate(0.0, 1.0, None, False, "unsearchable")
    spec = grid or default_grid(state, -1.0, 121)
    qmin, qloc = q_minimum(state)
    q_zero = qmin <= 1e-12

    lower, probe, hi = tau_reg, tau_reg, 1.0
    cert = qloc if q_zero else None
    for _ in range(max_iter):
        if hi - probe <= tol:
            break
        mid = 0.5 * (probe + hi)
        status, loc = _grid_status(state, mid, spec)
        if status == "nonnegative":
            hi = mid
        else:
            probe = mid
            if status == "negative":
                lower, cert = mid, loc
    if q_zero:
        hi = 1.0
    conclusive = hi - lower <= tol
    if not conclusive and lower == tau_reg and tau_reg == 0.0 and hi <= tol:
        conclusive = True
    return DepthEstimate(lower, hi, cert, conclusive, "grid")


def quasi_prob_at(state: FockState, alpha, s_ord: float = 0.0) -> np.ndarray:
    """s-ordered quasiprobability at individual points, same rules as :func:`quasi_prob`."""
    s_ord = _check_ordering(s_ord)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if s_ord > 0 and is_gaussian(state):
        mean, V = gaussian_moments(state)
        cov = V - 0.25 * s_ord * np.eye(2)
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise InvalidArgument(f"ordering s={s_ord} is singular for this Gaussian state")
        d = np.stack([alpha.real - mean[0], alpha.imag - mean[1]], axis=-1)
        q = np.einsum("...i,ij,...j->...", d, np.linalg.inv(cov), d)
        return state.trace * np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(np.linalg.det(cov)))
    if s_ord > 0 and s_ord > state.regular_order:
        raise InvalidArgument(
            f"ordering s={s_ord} exceeds the state's guaranteed regular order {state.regular_order:.6g}"
        )
    ext, ok = _lambda_extent(state, s_ord)
    if not ok:
        warnings.warn(
            f"characteristic function at s={s_ord} has not decayed below {CHI_DECAY:g} within |lambda| <= {ext}",
            GridTooSmallWarning,
            stacklevel=2,
        )
    reach = max(float(np.max(np.abs(alpha))), _support_radius(state, s_ord))
    h = np.pi / (2.5 * reach)
    m = int(np.ceil(ext / h))
    lam1 = h * np.arange(-m, m + 1)
    lam = (lam1[:, None] + 1j * lam1[None, :]).ravel()
    lam = lam[np.abs(lam) <= ext]
    chi = char_fn(state, lam, s_ord)
    phase = np.exp(2j * (np.outer(alpha.imag, lam.real) - np.outer(alpha.real, lam.imag)))
    return (phase @ chi).real * h * h / np.pi**2
