"""Gaussian state pipeline for pulsed conditioning and cooling-by-measurement.

A pulse measures X with outcome P_L = chi X + noise (variance (1 + 2 sigma_P^2)/2),
and feeds back onto P: a deterministic kick omega plus back-action variance
chi^2 (1 + 2 sigma_X^2)/2 (quantum back-action and classical amplitude noise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .probe import ProbeParams

HEISENBERG_TOL = 1e-9


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if cov[0, 0] <= 0 or np.linalg.det(cov) <= 0:
            raise ValueError("covariance must be positive definite")
        if np.linalg.det(cov) < 0.25 - HEISENBERG_TOL:
            raise ValueError(f"covariance violates the uncertainty bound: det={np.linalg.det(cov)}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.cov))

    @property
    def occupation(self) -> float:
        """Effective thermal occupation from the purity: 1 + 2n = 2 sqrt(det cov)."""
        return math.sqrt(self.det) - 0.5

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist(),
                "occupation": self.occupation}


@dataclass(frozen=True)
class BathParams:
    nbar: float = 0.0
    quality: float = math.inf

    def __post_init__(self):
        if self.nbar < 0:
            raise ValueError("bath occupation must be non-negative")
        if not self.quality > 0:
            raise ValueError("quality factor must be positive")

    @property
    def quarter_period_heating(self) -> float:
        """Variance added per quadrature during a quarter period: pi nbar / (2Q)."""
        return math.pi * self.nbar / (2.0 * self.quality)


def thermal_gaussian(nbar: float) -> GaussianState:
    if nbar < 0:
        raise ValueError("mean occupation must be non-negative")
    v = nbar + 0.5
    return GaussianState(np.zeros(2), np.diag([v, v]))


def condition_on_outcome(g: GaussianState, p: ProbeParams, pl: float) -> GaussianState:
    """State after one pulse with homodyne outcome ``pl``."""
    cov = g.cov
    r = p.outcome_noise_var
    innovation_var = p.chi ** 2 * cov[0, 0] + r
    gain = p.chi * cov[:, 0] / innovation_var
    mean = g.mean + gain * (pl - p.chi * g.mean[0])
    cov = cov - p.chi * np.outer(gain, cov[0, :])
    mean = mean + np.array([0.0, p.omega])
    cov = cov + np.diag([0.0, p.backaction_var])
    return GaussianState(mean, cov)


def free_evolution(g: GaussianState, theta: float, bath: BathParams | None = None) -> GaussianState:
    """Rotate by phase-space angle ``theta`` and add bath diffusion theta nbar / Q per quadrature."""
    if theta < 0:
        raise ValueError("evolution angle must be non-negative")
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])
    mean = rot @ g.mean
    cov = rot @ g.cov @ rot.T
    if bath is not None and bath.nbar > 0:
        cov = cov + np.eye(2) * theta * bath.nbar / bath.quality
    return GaussianState(mean, cov)


def n_eff_closed_form(chi: float, sigma_p: float, sigma_x: float, nbar: float, quality: float) -> float:
    """Large-occupation occupation after two pulses a quarter period apart."""
    a = (1.0 + 2.0 * sigma_p ** 2) / chi ** 2
    bath = nbar * math.pi / quality if math.isfinite(quality) else 0.0
    return 0.5 * (math.sqrt(a * (a + bath + chi ** 2 * (1.0 + 2.0 * sigma_x ** 2))) - 1.0)


@dataclass(frozen=True)
class CoolingRun:
    steps: list = field(default_factory=list)  # (name, GaussianState) pairs
    compensated: list = field(default_factory=list)
    n_eff: float = 0.0
    n_eff_closed: float = 0.0

    @property
    def final(self) -> GaussianState:
        return self.steps[-1][1]

    @property
    def relative_error(self) -> float:
        return abs(self.n_eff - self.n_eff_closed) / self.n_eff_closed

    def to_dict(self) -> dict:
        return {
            "steps": [{"step": name, **st.to_dict()} for name, st in self.steps],
            "compensated_means": [{"step": name, "mean": st.mean.tolist()}
                                  for name, st in self.compensated],
            "n_eff": self.n_eff,
            "n_eff_closed_form": self.n_eff_closed,
            "relative_error": self.relative_error,
        }


def _cooling_steps(nbar, p, bath, pl1, pl2):
    steps = [("thermal", thermal_gaussian(nbar))]
    steps.append(("pulse1", condition_on_outcome(steps[-1][1], p, pl1)))
    steps.append(("quarter_period", free_evolution(steps[-1][1], math.pi / 2, bath)))
    steps.append(("pulse2", condition_on_outcome(steps[-1][1], p, pl2)))
    return steps


def cool_by_measurement(nbar: float, p: ProbeParams, bath: BathParams | None = None,
                        pl1: float = 0.0, pl2: float = 0.0) -> CoolingRun:
    """Pulse, wait a quarter period, pulse again; report the purity-derived occupation.

    Means are reported raw and with the known kick omega removed (the same
    sequence run with omega = 0); covariances do not depend on omega.
    """
    bath = bath if bath is not None else BathParams()
    steps = _cooling_steps(nbar, p, bath, pl1, pl2)
    compensated = _cooling_steps(nbar, replace(p, omega=0.0), bath, pl1, pl2)
    final = steps[-1][1]
    closed = n_eff_closed_form(p.chi, p.sigma_p, p.sigma_x, bath.nbar, bath.quality)
    return CoolingRun(steps, compensated, final.occupation, closed)
