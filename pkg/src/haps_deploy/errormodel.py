"""Pseudorange residual models and per-link Fisher information weights.

Clear-path links carry a zero-mean Gaussian residual; blocked links carry a
Gaussian mixture with positive bias components. Each link contributes a
scalar information weight psi (1/m^2): the inverse variance for Gaussians,
and the location-parameter Fisher information of the mixture, integrated
numerically, for the blocked case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .citymodel import LinkState

DEFAULT_QUADRATURE_POINTS = 32_768
_DENSITY_FLOOR = 1e-300
_ENVELOPE_SIGMAS = 8.0


@dataclass(frozen=True)
class GaussianModel:
    """Zero-mean Gaussian residual, sigma in meters."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"sigma must be finite and positive, got {self.sigma}")


@dataclass(frozen=True)
class GmmComponent:
    mean: float
    sigma: float
    weight: float


@dataclass(frozen=True)
class GmmModel:
    """Gaussian mixture residual; weights sum to one."""

    components: tuple[GmmComponent, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("mixture needs at least one component")
        total = 0.0
        for c in self.components:
            if not (math.isfinite(c.sigma) and c.sigma > 0.0):
                raise ValueError(f"component sigma must be positive, got {c.sigma}")
            if c.weight <= 0.0:
                raise ValueError(f"component weight must be positive, got {c.weight}")
            total += c.weight
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total}, expected 1")

    @classmethod
    def from_arrays(cls, means, sigmas, weights) -> "GmmModel":
        if not (len(means) == len(sigmas) == len(weights)):
            raise ValueError("means, sigmas, and weights must have equal length")
        return cls(tuple(GmmComponent(float(m), float(s), float(w))
                         for m, s, w in zip(means, sigmas, weights)))

    def arrays(self):
        mu = np.array([c.mean for c in self.components])
        sig = np.array([c.sigma for c in self.components])
        w = np.array([c.weight for c in self.components])
        return mu, sig, w


def _default_satellite_nlos() -> GmmModel:
    return GmmModel.from_arrays([20.0, 40.0, 120.0], [15.0, 20.0, 50.0], [0.5, 0.4, 0.1])


def _default_haps_nlos() -> GmmModel:
    return GmmModel.from_arrays([14.0, 28.0, 84.0], [10.0, 15.0, 35.0], [0.5, 0.4, 0.1])


@dataclass(frozen=True)
class ErrorModelSet:
    """Residual models for both source kinds and both link states."""

    satellite_los: GaussianModel = GaussianModel(10.0)
    satellite_nlos: GmmModel = field(default_factory=_default_satellite_nlos)
    haps_los: GaussianModel = GaussianModel(7.0)
    haps_nlos: GmmModel = field(default_factory=_default_haps_nlos)


@dataclass(frozen=True)
class QuadratureSpec:
    """Uniform grid for the mixture Fisher integral."""

    lo: float
    hi: float
    points: int = DEFAULT_QUADRATURE_POINTS

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError("quadrature interval is empty")
        if self.points < 2:
            raise ValueError("quadrature needs at least 2 points")

    @classmethod
    def for_model(cls, model: GmmModel, points: int = DEFAULT_QUADRATURE_POINTS) -> "QuadratureSpec":
        mu, sig, _ = model.arrays()
        return cls(
            lo=float(np.min(mu - _ENVELOPE_SIGMAS * sig)),
            hi=float(np.max(mu + _ENVELOPE_SIGMAS * sig)),
            points=points,
        )

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


def fisher_gaussian(model: GaussianModel) -> float:
    """Information weight of a Gaussian link: 1 / sigma^2."""
    return 1.0 / (model.sigma * model.sigma)


def mixture_pdf_and_derivative(model: GmmModel, z: np.ndarray):
    """Mixture density p(z) and its derivative p'(z) on the given points."""
    mu, sig, w = model.arrays()
    diff = z[:, None] - mu[None, :]
    var = sig * sig
    comp = (w / (sig * math.sqrt(2.0 * math.pi))) * np.exp(-0.5 * diff * diff / var)
    p = comp.sum(axis=1)
    dp = (comp * (-diff / var)).sum(axis=1)
    return p, dp


@lru_cache(maxsize=64)
def fisher_gmm(model: GmmModel, grid: QuadratureSpec | None = None) -> float:
    """Location-parameter Fisher information of the whole mixture.

    Trapezoidal quadrature of (p')^2 / p over the grid, which must cover
    every component's 8-sigma envelope.
    """
    if grid is None:
        grid = QuadratureSpec.for_model(model)
    mu, sig, _ = model.arrays()
    lo_needed = float(np.min(mu - _ENVELOPE_SIGMAS * sig))
    hi_needed = float(np.max(mu + _ENVELOPE_SIGMAS * sig))
    if grid.lo > lo_needed or grid.hi < hi_needed:
        raise ValueError(
            f"quadrature grid [{grid.lo}, {grid.hi}] does not cover the "
            f"8-sigma envelope [{lo_needed}, {hi_needed}]"
        )
    z = grid.grid()
    p, dp = mixture_pdf_and_derivative(model, z)
    integrand = dp * dp / np.maximum(p, _DENSITY_FLOOR)
    return float(np.trapezoid(integrand, z))


def component_inverse_variance(model: GmmModel) -> float:
    """Weighted inverse-variance reduction of a mixture: sum of w_i / sigma_i^2."""
    _, sig, w = model.arrays()
    return float(np.sum(w / (sig * sig)))


@lru_cache(maxsize=64)
def link_weight(
    kind: str,
    state: LinkState,
    models: ErrorModelSet,
    grid: QuadratureSpec | None = None,
    nlos_mode: str = "mixture",
) -> float:
    """Information weight for a link of the given source kind and state.

    ``kind`` is "satellite" or "haps". ``nlos_mode`` selects how a blocked
    link's mixture collapses to one scalar: "mixture" integrates the Fisher
    information of the whole mixture (default), "component" uses the
    weighted inverse variances of the components.
    """
    if kind not in ("satellite", "haps"):
        raise ValueError(f"unknown source kind {kind!r}")
    if state is LinkState.LOS:
        gaussian = models.satellite_los if kind == "satellite" else models.haps_los
        return fisher_gaussian(gaussian)
    mixture = models.satellite_nlos if kind == "satellite" else models.haps_nlos
    if nlos_mode == "mixture":
        return fisher_gmm(mixture, grid)
    if nlos_mode == "component":
        return component_inverse_variance(mixture)
    raise ValueError(f"unknown nlos_mode {nlos_mode!r}")


def build_psi_table(
    models: ErrorModelSet,
    grid: QuadratureSpec | None = None,
    nlos_mode: str = "mixture",
) -> dict[tuple[str, LinkState], float]:
    """Precompute the four (kind, state) weights used per scenario."""
    return {
        (kind, state): link_weight(kind, state, models, grid, nlos_mode)
        for kind in ("satellite", "haps")
        for state in (LinkState.LOS, LinkState.NLOS)
    }
