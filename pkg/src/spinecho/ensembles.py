"""Discretization of the inhomogeneously broadened line into frequency classes.

Two builders: a uniform grid under a Gaussian profile (the bulk-sample system)
and a small comb of equally spaced classes (the beat-note system).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import TWO_PI, SubEnsemble

GAUSS_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class SpinRates:
    """Rates shared by every class: g, gamma, chi in rad/s; eta in 1/s."""

    g: float
    gamma: float
    eta: float
    chi: float


@dataclass(frozen=True)
class GaussianEnsembleSpec:
    """Uniform frequency grid weighted by a Gaussian spin density.

    Class alpha = 1..n_classes sits at center + (alpha - n_classes/2) * spacing,
    so the grid is offset half a bin from perfect symmetry about the center
    (taken literally from the index convention of the source system).
    """

    n_total: float          # total spin count
    center: float           # rad/s
    fwhm: float             # rad/s
    n_classes: int
    spacing: float          # rad/s
    rates: SpinRates

    def __post_init__(self):
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if self.spacing <= 0 or self.fwhm <= 0:
            raise ValueError("spacing and fwhm must be positive")
        if self.n_total < 0:
            raise ValueError("n_total must be non-negative")

    @property
    def sigma(self) -> float:
        return self.fwhm * GAUSS_FWHM_TO_SIGMA


@dataclass(frozen=True)
class CombEnsembleSpec:
    """Odd number of classes spaced by an ordinary frequency f (Hz), one at center."""

    n_classes: int
    spacing_hz: float
    center: float           # rad/s
    n_total: float
    rates: SpinRates
    weighting: str = "gaussian-envelope"   # or "uniform"
    fwhm: float = 0.0       # rad/s, required for gaussian-envelope

    def __post_init__(self):
        if self.n_classes < 1 or self.n_classes % 2 == 0:
            raise ValueError("n_classes must be odd so one class sits at the center")
        if self.spacing_hz <= 0:
            raise ValueError("spacing_hz must be positive")
        if self.weighting not in ("uniform", "gaussian-envelope"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.weighting == "gaussian-envelope" and self.fwhm <= 0:
            raise ValueError("gaussian-envelope weighting needs a positive fwhm")


def gaussian_pdf(omega: np.ndarray, center: float, sigma: float) -> np.ndarray:
    """Normal density over angular frequency."""
    return np.exp(-((omega - center) ** 2) / (2.0 * sigma**2)) / (np.sqrt(2.0 * np.pi) * sigma)


def build_gaussian(spec: GaussianEnsembleSpec) -> list[SubEnsemble]:
    """Midpoint-rule classes N_alpha = n_total * spacing * pdf(omega_alpha).

    The truncated tail is not renormalized; a grid narrower than three FWHM
    triggers a truncation warning.
    """
    if spec.spacing * spec.n_classes < 3.0 * spec.fwhm:
        warnings.warn("frequency grid spans less than three FWHM; profile is truncated",
                      stacklevel=2)
    alpha = np.arange(1, spec.n_classes + 1)
    omega = spec.center + (alpha - spec.n_classes / 2.0) * spec.spacing
    weights = spec.n_total * spec.spacing * gaussian_pdf(omega, spec.center, spec.sigma)
    r = spec.rates
    return [SubEnsemble(omega_a=w, n_spins=n, g=r.g, gamma=r.gamma, eta=r.eta, chi=r.chi)
            for w, n in zip(omega, weights)]


def build_comb(spec: CombEnsembleSpec) -> list[SubEnsemble]:
    """Classes at center + m * 2*pi*f for m = -(n-1)/2 .. (n-1)/2."""
    half = (spec.n_classes - 1) // 2
    m = np.arange(-half, half + 1)
    omega = spec.center + m * TWO_PI * spec.spacing_hz
    if spec.weighting == "uniform":
        weights = np.full(spec.n_classes, spec.n_total / spec.n_classes)
    else:
        sigma = spec.fwhm * GAUSS_FWHM_TO_SIGMA
        envelope = gaussian_pdf(omega, spec.center, sigma)
        weights = spec.n_total * envelope / envelope.sum()
    r = spec.rates
    return [SubEnsemble(omega_a=w, n_spins=n, g=r.g, gamma=r.gamma, eta=r.eta, chi=r.chi)
            for w, n in zip(omega, weights)]
