"""Synthetic pulsed tomography and s-parameterized reconstruction from marginals.

Reconstruction formula (alpha = alpha_r + i alpha_i, x_alpha(theta) =
sqrt2 (alpha_r cos theta + alpha_i sin theta) the X_theta coordinate of alpha):

    P(s, alpha) = pi^-2 int_0^pi dtheta int_0^inf deta eta exp(s eta^2/4)
                  Re[C_m(eta, theta) exp(-i eta x_alpha(theta))]

which follows from the quasi-probability transform with xi = i eta e^{i theta}/sqrt2,
d^2xi = (eta/2) deta dtheta and C(s, xi) = C_m(eta, theta) exp(s eta^2/4).  Data
measured with strength chi have C_meas = C_m exp(s_nat eta^2/4), so the filter
applied to them is exp((s_target - s_nat) eta^2/4).  Evaluation is a filtered
back-projection: one 1-D filtered projection per angle, interpolated onto the grid.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.stats import gaussian_kde

from . import probe as probe_mod
from .errors import AccuracyWarning, OrderingError
from .hilbert import DensityMatrix
from .phasespace import Marginal, QuasiProbGrid, default_xs, marginal
from .probe import ProbeParams

log = logging.getLogger(__name__)

MIN_SAMPLES = 100
ETA_SEARCH_MAX = 40.0
ANALYTIC_FLOOR = 1e-8


@dataclass(frozen=True)
class TomogramDataset:
    probe: ProbeParams
    angles: np.ndarray
    samples: tuple
    seed: int | None = None
    state_label: str = ""

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.ndim != 1 or len(angles) == 0:
            raise ValueError("dataset needs at least one angle")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("angles must be strictly increasing")
        if angles[0] < 0 or angles[-1] >= math.pi:
            raise ValueError("angles must lie in [0, pi)")
        samples = tuple(np.asarray(s, dtype=float) for s in self.samples)
        if len(samples) != len(angles):
            raise ValueError("one sample block per angle required")
        if any(len(s) < 1 for s in samples):
            raise ValueError("every angle needs at least one sample")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "samples", samples)

    @property
    def s_natural(self) -> float:
        return probe_mod.s_parameter(self.probe)


@dataclass(frozen=True)
class ReconstructionConfig:
    """Settings for :func:`invert_marginals`.

    ``s_target=None`` reconstructs at the natural s of the probe.  ``eta_max=None``
    picks the radial cutoff where the filtered spectrum falls to the noise floor
    (4/sqrt(samples) for data, 1e-8 for analytic marginals).
    """

    s_target: float | None = None
    eta_max: float | None = None
    n_eta: int = 256
    half_extent: float = 4.0
    n: int = 256
    estimator: str = "histogram"
    bins: str = "fd"
    bandwidth: str | float = "silverman"
    x_points: int = 1001

    def __post_init__(self):
        if self.estimator not in ("histogram", "kde"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.eta_max is not None and not self.eta_max > 0:
            raise ValueError("eta_max must be positive")


def uniform_angles(count: int = 24) -> np.ndarray:
    return np.arange(count) * math.pi / count


# -- protocol ------------------------------------------------------------------

def run_protocol(rho: DensityMatrix, probe: ProbeParams, angles, per_angle: int, seed: int,
                 xs=None) -> TomogramDataset:
    """Prepare, rotate by theta, pulse, record; ``per_angle`` repetitions per angle.

    Each repetition starts from a fresh copy of ``rho``, so free evolution is the
    exact rotation of the marginal and there is no back-action carry-over.
    Angle k draws from a PCG64 stream spawned from ``SeedSequence(seed)``.
    """
    if per_angle < MIN_SAMPLES:
        raise ValueError(f"per_angle must be at least {MIN_SAMPLES}, got {per_angle}")
    angles = np.asarray(angles, dtype=float)
    if xs is None:
        xs = default_xs(rho)
    children = np.random.SeedSequence(seed).spawn(len(angles))
    blocks = []
    for theta, child in zip(angles, children):
        m = marginal(rho, theta, xs)
        blocks.append(probe_mod.sample_homodyne(m, probe, per_angle, child))
    return TomogramDataset(probe, angles, tuple(blocks), seed, rho.label)


# -- marginal estimation ---------------------------------------------------------

def estimate_scaled_marginal(samples, probe: ProbeParams, estimator: str = "histogram",
                             theta: float = 0.0, bins="fd", bandwidth="silverman",
                             points: int = 1001) -> Marginal:
    """Density of P_L / chi.

    This is the true marginal blurred by a Gaussian of variance
    (1 + 2 sigma_P^2) / (2 chi^2); the blur is kept, it is what sets s.
    """
    y = np.asarray(samples, dtype=float) / probe.chi
    if y.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {y.size}")
    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        w = max(abs(lo), 1.0) * 1e-6
        return Marginal(theta, np.array([lo - w, lo, lo + w]), np.array([0.0, 1.0 / w, 0.0]))
    if estimator == "histogram":
        edges = np.histogram_bin_edges(y, bins=bins)
        counts, edges = np.histogram(y, bins=edges, density=True)
        width = edges[1] - edges[0]
        centres = 0.5 * (edges[:-1] + edges[1:])
        xs = np.concatenate([[centres[0] - width], centres, [centres[-1] + width]])
        dens = np.concatenate([[0.0], counts, [0.0]])
        return Marginal(theta, xs, dens)
    if estimator == "kde":
        # binned Gaussian KDE: bandwidth from scipy's rule, kernel applied on a fine grid
        bw = math.sqrt(gaussian_kde(y, bw_method=bandwidth).covariance[0, 0])
        xs = np.linspace(lo - 5 * bw, hi + 5 * bw, points)
        step = xs[1] - xs[0]
        counts = np.bincount(np.clip(np.rint((y - xs[0]) / step).astype(int), 0, points - 1),
                             minlength=points).astype(float)
        dens = gaussian_filter1d(counts, bw / step, mode="constant", truncate=6.0)
        return Marginal(theta, xs, dens / np.trapezoid(dens, xs))
    raise ValueError(f"unknown estimator {estimator!r}")


def scaled_marginal_analytic(rho: DensityMatrix, theta: float, probe: ProbeParams, xs=None) -> Marginal:
    """Noise-free expectation of :func:`estimate_scaled_marginal`: the true marginal
    convolved with the outcome-noise Gaussian, on the P_L / chi scale."""
    m = marginal(rho, theta, xs)
    var = probe.outcome_noise_var / probe.chi ** 2
    half = m.xs[-1] + 8 * math.sqrt(var)
    ys = np.linspace(-half, half, 2 * len(m.xs) - 1)
    dens = probe.chi * probe_mod.homodyne_pdf(m, probe, probe.chi * ys)
    return Marginal(theta, ys, dens)


# -- inversion -------------------------------------------------------------------

def _auto_eta_max(chars_fn, thetas, ds, floor, limit=ETA_SEARCH_MAX) -> float:
    """Largest eta where the filtered spectrum of any angle still exceeds ``floor``."""
    probe_eta = np.linspace(0.0, limit, 161)
    env = np.zeros_like(probe_eta)
    for th in thetas:
        env = np.maximum(env, np.abs(chars_fn(th, probe_eta)))
    env = env * np.exp(ds * probe_eta ** 2 / 4.0)
    above = np.nonzero(env > floor)[0]
    if len(above) == 0:
        return 2.0
    return float(min(limit, max(2.0, probe_eta[above[-1]] + 0.5)))


def invert_marginal_set(marginals, s_natural: float, cfg: ReconstructionConfig,
                        sample_count: int | None = None) -> QuasiProbGrid:
    """Reconstruct a grid at ``cfg.s_target`` from scaled marginals carrying ``s_natural``.

    ``marginals`` must cover [0, pi) uniformly in theta (the angular sum is the
    periodic trapezoid rule).
    """
    s_target = s_natural if cfg.s_target is None else cfg.s_target
    if s_target > s_natural + 1e-12:
        raise OrderingError(
            f"s_target={s_target:g} above the natural s={s_natural:g} would need deconvolution")
    ds = s_target - s_natural
    marginals = list(marginals)
    thetas = np.array([m.theta for m in marginals])
    by_theta = {m.theta: m for m in marginals}

    floor = ANALYTIC_FLOOR if sample_count is None else 4.0 / math.sqrt(sample_count)
    eta_max = cfg.eta_max
    if eta_max is None:
        # a tabulated spectrum is periodic in eta beyond the Nyquist limit pi / dx
        nyquist = min(math.pi / float(np.diff(m.xs).max()) for m in marginals)
        eta_max = _auto_eta_max(lambda th, eta: by_theta[th].char(eta), thetas, ds, floor,
                                min(ETA_SEARCH_MAX, nyquist))
    else:
        tail = max(abs(m.char([eta_max])[0]) for m in marginals) * math.exp(ds * eta_max ** 2 / 4)
        if tail > max(1e-3 * math.exp(ds * eta_max ** 2 / 4), floor):
            warnings.warn(f"eta_max={eta_max:g} truncates a non-negligible spectrum "
                          f"(|C| e^(ds eta^2/4) = {tail:.2g} at cutoff)", AccuracyWarning, stacklevel=2)

    ax = -cfg.half_extent + np.arange(cfg.n) * (2.0 * cfg.half_extent / cfg.n)
    t_reach = 2.0 * cfg.half_extent * 1.01
    n_eta = max(cfg.n_eta, int(math.ceil(eta_max / 0.1)) + 1)
    eta = np.linspace(0.0, eta_max, n_eta)
    h_eta = eta[1] - eta[0]
    weights = np.full(n_eta, h_eta)
    weights[0] = weights[-1] = 0.5 * h_eta
    weights = weights * eta * np.exp(ds * eta ** 2 / 4.0)
    n_t = 4097
    ts = np.linspace(-t_reach, t_reach, n_t)
    backproj = np.exp(-1j * np.outer(ts, eta)) * weights[None, :]

    ar, ai = np.meshgrid(ax, ax, indexing="ij")
    values = np.zeros((cfg.n, cfg.n))
    for th in thetas:
        c = by_theta[th].char(eta)
        # Euler-Maclaurin endpoint term: the integrand eta f(eta) has slope Re C(0) at eta = 0
        projection = (backproj @ c).real + h_eta ** 2 / 12.0 * c[0].real
        x_alpha = math.sqrt(2.0) * (ar * math.cos(th) + ai * math.sin(th))
        values += np.interp(x_alpha, ts, projection)
    values *= (math.pi / len(thetas)) / math.pi ** 2
    log.debug("reconstructed at s=%g with eta_max=%g over %d angles", s_target, eta_max, len(thetas))
    return QuasiProbGrid(float(s_target), float(cfg.half_extent), cfg.n, values, "reconstructed")


def invert_marginals(dataset: TomogramDataset, cfg: ReconstructionConfig | None = None) -> QuasiProbGrid:
    """Reconstruct the quasi-probability grid from a homodyne dataset."""
    cfg = cfg or ReconstructionConfig()
    s_nat = dataset.s_natural
    if cfg.s_target is not None and cfg.s_target > s_nat + 1e-12:
        raise OrderingError(
            f"s_target={cfg.s_target:g} above the natural s={s_nat:g} would need deconvolution")
    marginals = [estimate_scaled_marginal(block, dataset.probe, cfg.estimator, theta=th,
                                          bins=cfg.bins, bandwidth=cfg.bandwidth,
                                          points=cfg.x_points)
                 for th, block in zip(dataset.angles, dataset.samples)]
    count = min(len(b) for b in dataset.samples)
    return invert_marginal_set(marginals, s_nat, cfg, sample_count=count)


@dataclass(frozen=True)
class GridComparison:
    l2: float
    max_abs: float
    min_value_a: float
    min_value_b: float

    def to_dict(self) -> dict:
        return {"l2": self.l2, "max_abs": self.max_abs,
                "min_value_a": self.min_value_a, "min_value_b": self.min_value_b}


def compare_grids(a: QuasiProbGrid, b: QuasiProbGrid, check_s: bool = True) -> GridComparison:
    """Pointwise difference metrics; ``l2`` is the root-mean-square over grid points.

    With ``check_s=False`` grids at different s (same extent and size) may be compared.
    """
    same = a.same_layout(b) if check_s else (
        a.n == b.n and math.isclose(a.half_extent, b.half_extent))
    if not same:
        raise ValueError(
            f"grids differ in layout: (s={a.s}, L={a.half_extent}, n={a.n}) vs "
            f"(s={b.s}, L={b.half_extent}, n={b.n})")
    d = a.values - b.values
    return GridComparison(float(np.sqrt(np.mean(d * d))), float(np.abs(d).max()),
                          float(a.values.min()), float(b.values.min()))
