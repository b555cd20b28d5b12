"""s-parameterized characteristic functions, quasi-probability grids and marginals.

Grid convention: a ``QuasiProbGrid`` samples alpha_r, alpha_i on
``-half_extent + j * spacing`` for j = 0..n-1 with ``spacing = 2 half_extent / n``;
index n/2 is the origin.  ``values[j, l]`` is the distribution at
alpha = alpha_r[j] + i alpha_i[l].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import hilbert
from .errors import AccuracyWarning, NormalizationError, OrderingError, ResolutionError
from .hilbert import DensityMatrix

NORM_TOL = 1e-3
BOUNDARY_TOL = 1e-4
GAUSS_HERMITE_NODES = 128


@dataclass(frozen=True)
class QuasiProbGrid:
    s: float
    half_extent: float
    n: int
    values: np.ndarray
    meta: str = "direct"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.n, self.n):
            raise ValueError(f"values shape {v.shape} does not match n={self.n}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.n

    @property
    def axis(self) -> np.ndarray:
        return axis_points(self.half_extent, self.n)

    def integral(self) -> float:
        return float(self.values.sum() * self.spacing ** 2)

    def norm_residual(self) -> float:
        return abs(self.integral() - 1.0)

    def boundary_max(self) -> float:
        v = np.abs(self.values)
        return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max()))

    def same_layout(self, other: "QuasiProbGrid") -> bool:
        return (self.n == other.n and math.isclose(self.half_extent, other.half_extent)
                and math.isclose(self.s, other.s, rel_tol=1e-12, abs_tol=1e-12))

    def moment(self, p: int, q: int) -> complex:
        """Integral of the distribution times conj(alpha)^q alpha^p."""
        ax = self.axis
        alpha = ax[:, None] + 1j * ax[None, :]
        return complex(np.sum(self.values * alpha.conj() ** q * alpha ** p) * self.spacing ** 2)

    def profile_imag_axis(self) -> np.ndarray:
        """Values along alpha_r = 0."""
        return self.values[self.n // 2, :]

    def profile_real_axis(self) -> np.ndarray:
        return self.values[:, self.n // 2]


@dataclass(frozen=True)
class Marginal:
    theta: float
    xs: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if xs.shape != d.shape or xs.ndim != 1:
            raise ValueError("xs and density must be 1-D arrays of equal length")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.any(d < 0):
            raise ValueError("marginal density must be non-negative")
        xs.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "density", d)

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.xs))

    def mean(self) -> float:
        return float(np.trapezoid(self.xs * self.density, self.xs) / self.integral())

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.xs - m) ** 2 * self.density, self.xs) / self.integral())

    def char(self, eta) -> np.ndarray:
        """Characteristic function int M(x) exp(i eta x) dx by the trapezoid rule."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        dx = np.diff(self.xs)
        w = np.zeros_like(self.xs)
        w[:-1] += dx / 2
        w[1:] += dx / 2
        wd = w * self.density
        keep = wd > 1e-18 * wd.max()
        return np.exp(1j * np.outer(eta, self.xs[keep])) @ wd[keep]


def axis_points(half_extent: float, n: int) -> np.ndarray:
    return -half_extent + np.arange(n) * (2.0 * half_extent / n)


def default_half_extent(rho: DensityMatrix, s: float = 0.0) -> float:
    """Grid half-width: the state's spread plus a Gaussian margin widening as s drops."""
    reach = math.sqrt(rho.mean_number())
    return max(4.0, reach + 4.0 * math.sqrt(max(1.0, (1.0 - s) / 2.0)))


# -- pointwise functions -------------------------------------------------------

def char_function(rho: DensityMatrix, s: float, xi) -> complex | np.ndarray:
    """C(s, xi) = Tr[rho D(xi)] exp(s |xi|^2 / 2); ``xi`` may be an array."""
    xi_arr = np.asarray(xi, dtype=np.complex128)
    if np.max(np.abs(xi_arr)) ** 2 > rho.dim / 4 and rho.truncation_deficit > 0:
        warnings.warn(f"|xi|^2 beyond dim/4 for a truncated state (dim={rho.dim})",
                      AccuracyWarning, stacklevel=2)
    val = hilbert.displacement_trace(rho.elements, xi_arr) * np.exp(0.5 * s * np.abs(xi_arr) ** 2)
    return complex(val) if val.ndim == 0 else val


def wigner_point(rho: DensityMatrix, alpha: complex) -> float:
    """(2/pi) Tr[D^dag(alpha) rho D(alpha) parity].

    Uses D(alpha) parity D^dag(alpha) = D(2 alpha) parity, so only the block of
    D(2 alpha) on the populated levels is needed and no truncation enters.
    """
    d = hilbert.displacement_matrix(2.0 * complex(alpha), rho.dim)
    sign = (-1.0) ** np.arange(rho.dim)
    return float(2.0 / math.pi * np.sum(rho.elements * d.T * sign[:, None]).real)


def qfunction_point(rho: DensityMatrix, alpha: complex) -> float:
    """<alpha|rho|alpha> / pi."""
    c = hilbert.coherent_amplitudes(complex(alpha), rho.dim)
    return float(np.real(c.conj() @ rho.elements @ c) / math.pi)


def hermite_functions(x, dim: int, scaled: bool = False) -> np.ndarray:
    """Position wavefunctions psi_n(x) of the Fock states, shape (dim,) + x.shape.

    With ``scaled=True`` the Gaussian factor exp(-x^2/2) is omitted, which keeps
    the values finite far from the origin.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((dim,) + x.shape)
    out[0] = math.pi ** -0.25 * (1.0 if scaled else np.exp(-0.5 * x * x))
    if dim > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def wigner_quadrature_point(rho: DensityMatrix, alpha_r: float, alpha_i: float,
                            nodes: int = GAUSS_HERMITE_NODES) -> float:
    """Wigner's formula (2/pi) int dx e^{-2 i sqrt2 alpha_i x} <sqrt2 a_r + x|rho|sqrt2 a_r - x>.

    The Gaussian factors of the two wavefunctions combine to exp(-2 a_r^2 - x^2),
    so Gauss-Hermite quadrature with weight exp(-x^2) applies directly.
    """
    xk, wk = np.polynomial.hermite.hermgauss(nodes)
    q0 = math.sqrt(2.0) * alpha_r
    left = hermite_functions(q0 + xk, rho.dim, scaled=True)
    right = hermite_functions(q0 - xk, rho.dim, scaled=True)
    kernel = np.einsum("mk,mn,nk->k", left, rho.elements, right)
    phase = np.exp(-2j * math.sqrt(2.0) * alpha_i * xk)
    val = 2.0 / math.pi * math.exp(-2.0 * alpha_r ** 2) * np.sum(wk * phase * kernel)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise ResolutionError("Wigner quadrature did not converge (imaginary residue)")
    return float(val.real)


# -- grids -----------------------------------------------------------------------

def _xi_grid(half_extent: float, n: int):
    """Conjugate grid for the transform exp(-i(u alpha_r + v alpha_i)).

    With u = 2 xi_i and v = -2 xi_r, the quasi-probability kernel
    exp(alpha xi^* - alpha^* xi) becomes exp(-i(u alpha_r + v alpha_i)).
    u and v run over (k - n/2) * pi / half_extent.
    """
    du = math.pi / half_extent
    u = (np.arange(n) - n // 2) * du
    return u, du


def quasiprob_grid(rho: DensityMatrix, s: float, half_extent: float | None = None,
                   n: int = 256) -> QuasiProbGrid:
    """s-parameterized distribution on a square grid via a 2-D FFT of C(s, xi).

    P(s, alpha) = pi^-2 int d^2xi C(s, xi) exp(alpha xi^* - alpha^* xi).
    """
    if s > 0:
        raise OrderingError("s > 0 distributions are generalized functions; use s <= 0")
    if n < 4 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 4, got {n}")
    if half_extent is None:
        half_extent = default_half_extent(rho, s)
    u, du = _xi_grid(half_extent, n)
    xi = -u[None, :] / 2 + 1j * u[:, None] / 2  # rows: u (-> alpha_r), cols: v (-> alpha_i)
    with warnings.catch_warnings():
        # the far conjugate grid is covered by the boundary and normalization checks
        warnings.simplefilter("ignore", AccuracyWarning)
        c = char_function(rho, s, xi)
    sign = (-1.0) ** np.arange(n)
    checker = sign[:, None] * sign[None, :]
    spectrum = np.fft.fft2(checker * c)
    values = (checker * spectrum).real * du * du / (4.0 * math.pi ** 2)
    grid = QuasiProbGrid(float(s), float(half_extent), n, values, "direct")
    _check_grid(grid)
    return grid


def _check_grid(grid: QuasiProbGrid):
    b = grid.boundary_max()
    if b > BOUNDARY_TOL:
        raise ResolutionError(
            f"grid half_extent={grid.half_extent:g} too small: boundary magnitude {b:.3g} > {BOUNDARY_TOL:g}"
        )
    if grid.norm_residual() > NORM_TOL:
        raise ResolutionError(f"grid normalization off by {grid.norm_residual():.3g}")


def convolve_to_s(grid: QuasiProbGrid, s_target: float) -> QuasiProbGrid:
    """Lower the ordering parameter by Gaussian convolution.

    The kernel 2/(pi ds) exp(-2|alpha|^2/ds), ds = s - s_target, has
    characteristic function exp(-ds |xi|^2 / 2); it is applied as that transfer
    function on a zero-padded FFT so the convolution is linear, not circular.
    """
    ds = grid.s - s_target
    if ds <= 0:
        raise OrderingError(f"s_target={s_target} must be below the grid's s={grid.s}")
    if 4.0 * math.sqrt(ds / 4.0) > 2.0 * grid.half_extent:
        raise ResolutionError("convolution kernel wider than the grid")
    n = grid.n
    m = 2 * n
    padded = np.zeros((m, m))
    padded[:n, :n] = grid.values
    k = 2.0 * math.pi * np.fft.fftfreq(m, d=grid.spacing)
    transfer = np.exp(-ds * (k[:, None] ** 2 + k[None, :] ** 2) / 8.0)
    # kernel sits at index 0 with wrap-around; padding keeps the wrap off the data
    conv = np.fft.ifft2(np.fft.fft2(padded) * transfer).real
    out = QuasiProbGrid(float(s_target), grid.half_extent, n, conv[:n, :n], "convolved")
    total = out.integral()
    out = QuasiProbGrid(out.s, out.half_extent, n, out.values / total, "convolved")
    _check_grid(out)
    return out


# -- marginals -------------------------------------------------------------------

def max_quadrature_rms(rho: DensityMatrix) -> float:
    """max over theta of sqrt(<X_theta^2>)."""
    dim = rho.dim + 2
    r = rho.padded(dim)
    a = hilbert.annihilation(dim)
    n_mean = np.trace(r @ a.T @ a).real
    a2 = np.trace(r @ a @ a)
    return math.sqrt(n_mean + 0.5 + abs(a2))


def default_xs(rho: DensityMatrix, points: int = 1001) -> np.ndarray:
    half = 6.0 * max_quadrature_rms(rho)
    return np.linspace(-half, half, points)


def marginal(rho: DensityMatrix, theta: float, xs=None) -> Marginal:
    """Quadrature distribution M(x, theta) = <x_theta|rho|x_theta>.

    Rotating to X_theta = e^{i theta n} X e^{-i theta n} multiplies rho_mn by
    e^{-i(m-n)theta}; the density is then sum psi_m(x) rho'_mn psi_n(x).
    """
    if xs is None:
        xs = default_xs(rho)
    xs = np.asarray(xs, dtype=float)
    m = np.arange(rho.dim)
    rotated = rho.elements * np.exp(-1j * theta * (m[:, None] - m[None, :]))
    psi = hermite_functions(xs, rho.dim)
    density = np.einsum("mk,mn,nk->k", psi, rotated, psi).real
    density = np.clip(density, 0.0, None)
    out = Marginal(float(theta), xs, density)
    total = out.integral()
    if abs(total - 1.0) > NORM_TOL:
        raise NormalizationError(f"marginal integrates to {total:.6f}; widen the x grid")
    return out


def marginal_char(rho: DensityMatrix, eta: float, theta: float, pad: int = 60) -> complex:
    """C_m(eta, theta) = Tr[rho exp(i eta X_theta)], by matrix exponential.

    The exponential is taken in a Fock space ``pad`` levels larger than rho so
    that cutoff-edge error does not reach the populated block.
    """
    dim = rho.dim + pad
    u = expm(1j * eta * hilbert.quadrature(theta, dim))
    return complex(np.trace(rho.elements @ u[: rho.dim, : rho.dim]))


def marginal_from_grid(grid: QuasiProbGrid, theta: float) -> Marginal:
    """Integrate an s = 0 grid along the direction conjugate to X_theta.

    Only theta = 0 and pi/2 are supported (axis-aligned sums): X = sqrt2 alpha_r,
    P = sqrt2 alpha_i, and dX dP = 2 d^2alpha.
    """
    ax = grid.axis
    if math.isclose(theta, 0.0, abs_tol=1e-12):
        dens = grid.values.sum(axis=1) * grid.spacing
    elif math.isclose(theta, math.pi / 2, abs_tol=1e-12):
        dens = grid.values.sum(axis=0) * grid.spacing
    else:
        raise ValueError("marginal_from_grid supports theta in {0, pi/2}")
    xs = math.sqrt(2.0) * ax
    return Marginal(theta, xs, np.clip(dens / math.sqrt(2.0), 0.0, None))


# -- shape diagnostics -------------------------------------------------------------

def local_maxima(profile, rel_floor: float = 1e-6) -> np.ndarray:
    """Indices of interior local maxima above ``rel_floor * max(profile)``."""
    p = np.asarray(profile, dtype=float)
    floor = rel_floor * p.max()
    inner = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] > floor)
    return np.nonzero(inner)[0] + 1


def radial_profile(grid: QuasiProbGrid):
    """Angle-averaged values in rings one grid spacing wide; returns (radii, means)."""
    ax = grid.axis
    r = np.hypot(ax[:, None], ax[None, :])
    idx = np.rint(r / grid.spacing).astype(int).ravel()
    limit = int(grid.half_extent / grid.spacing)
    keep = idx < limit
    sums = np.bincount(idx[keep], weights=grid.values.ravel()[keep], minlength=limit)
    counts = np.bincount(idx[keep], minlength=limit)
    return np.arange(limit) * grid.spacing, sums / np.maximum(counts, 1)


def radial_summary(grid: QuasiProbGrid) -> dict:
    """Peak radius and unimodality of the angle-averaged profile."""
    radii, prof = radial_profile(grid)
    padded = np.concatenate([[prof[1]], prof])  # mirror r -> -r so r = 0 can be a peak
    peaks = local_maxima(padded) - 1
    return {
        "radial_peak_radius": float(radii[int(np.argmax(prof))]),
        "radial_local_maxima": int(len(peaks)),
        "radial_unimodal": bool(len(peaks) == 1),
    }
