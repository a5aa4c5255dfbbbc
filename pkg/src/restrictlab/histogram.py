"""Differentiable soft histograms built from Gaussian kernels.

A soft histogram replaces hard bin counting with a sum of Gaussian
kernels evaluated at fixed bin centers, so the binned frequencies are
smooth functions of the samples and gradients flow through them. The
module provides the histogram itself, its Jacobian with respect to the
samples, the analytic soft histogram of N(0, 1) used as an imitation
target, and the KL divergence between two histograms.

Out-of-range samples are deliberately not clamped: the kernel tails
decay smoothly, which keeps a gradient that pulls stray samples back
toward the histogram range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASS_EPS = 1e-10

_CHUNK = 65536


class HistogramError(ValueError):
    """Invalid histogram specification or incompatible histograms."""


@dataclass(frozen=True)
class HistogramSpec:
    """Fixed binning grid and kernel width for a soft histogram."""

    max: float = 10.0
    min: float = -10.0
    bins: int = 50
    sigma: float = 0.2

    def __post_init__(self):
        if not (self.max > self.min):
            raise HistogramError(f"need max > min, got ({self.min}, {self.max})")
        if self.bins < 2:
            raise HistogramError(f"need at least 2 bins, got {self.bins}")
        if not (self.sigma > 0):
            raise HistogramError(f"kernel width must be positive, got {self.sigma}")

    @property
    def delta(self) -> float:
        """Bin width (max - min) / bins."""
        return (self.max - self.min) / self.bins


@dataclass(frozen=True)
class SoftHistogram:
    """Bin centers plus normalized soft frequencies.

    ``freqs`` is a strictly positive probability vector (epsilon-smoothed
    before normalization); ``raw_mass`` keeps the unnormalized kernel
    mass for inspection.
    """

    centers: np.ndarray
    freqs: np.ndarray
    raw_mass: float


def bin_centers(spec: HistogramSpec) -> np.ndarray:
    """Evenly spaced bin centers min + (k + 1/2) * delta."""
    return spec.min + (np.arange(spec.bins) + 0.5) * spec.delta


def _kernel_masses(samples: np.ndarray, spec: HistogramSpec) -> np.ndarray:
    """Unnormalized per-bin mass: sum over samples of the Gaussian kernel
    density at each bin center, scaled by the bin width."""
    centers = bin_centers(spec)
    scale = spec.delta / (spec.sigma * math.sqrt(2.0 * math.pi))
    inv_two_var = 1.0 / (2.0 * spec.sigma**2)
    mass = np.zeros(spec.bins)
    # Chunked so million-sample inputs stay within memory; accumulation
    # order is fixed by sample index, keeping results deterministic.
    for start in range(0, samples.size, _CHUNK):
        chunk = samples[start : start + _CHUNK]
        diff = chunk[:, None] - centers[None, :]
        mass += scale * np.exp(-(diff**2) * inv_two_var).sum(axis=0)
    return mass


def _normalize(mass: np.ndarray, centers: np.ndarray) -> SoftHistogram:
    smoothed = mass + MASS_EPS
    freqs = smoothed / smoothed.sum()
    return SoftHistogram(centers=centers, freqs=freqs, raw_mass=float(mass.sum()))


def _check_samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size < 1:
        raise HistogramError("need at least one sample")
    if not np.all(np.isfinite(arr)):
        raise HistogramError("samples contain non-finite values")
    return arr


def soft_hist(samples, spec: HistogramSpec) -> SoftHistogram:
    """Soft histogram of a 1-D sample vector under ``spec``."""
    arr = _check_samples(samples)
    return _normalize(_kernel_masses(arr, spec), bin_centers(spec))


def soft_hist_with_grad(samples, spec: HistogramSpec) -> tuple[SoftHistogram, np.ndarray]:
    """Soft histogram plus the bins x n Jacobian d freqs / d samples."""
    arr = _check_samples(samples)
    centers = bin_centers(spec)
    scale = spec.delta / (spec.sigma * math.sqrt(2.0 * math.pi))
    inv_var = 1.0 / spec.sigma**2

    diff = arr[:, None] - centers[None, :]  # n x bins
    weights = scale * np.exp(-(diff**2) * (0.5 * inv_var))
    mass = weights.sum(axis=0)
    hist = _normalize(mass, centers)

    # d mass_k / d x_i = -w_ik (x_i - mu_k) / sigma^2, then project through
    # the normalization: d p_k / d m_j = (delta_kj - p_k) / total.
    dmass = -(weights * diff * inv_var)  # n x bins
    total = float((mass + MASS_EPS).sum())
    row_sums = dmass.sum(axis=1)  # n
    jac = (dmass.T - hist.freqs[:, None] * row_sums[None, :]) / total
    return hist, jac


def gaussian_reference(spec: HistogramSpec) -> SoftHistogram:
    """Expected soft histogram of N(0, 1) samples under ``spec``.

    The kernel smoothing convolves N(0, 1) with N(0, sigma^2), so each
    bin's expected mass is the N(0, 1 + sigma^2) density at its center
    times the bin width.
    """
    centers = bin_centers(spec)
    var = 1.0 + spec.sigma**2
    mass = spec.delta * np.exp(-(centers**2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    return _normalize(mass, centers)


def hist_kl(p: SoftHistogram, q: SoftHistogram) -> float:
    """KL divergence sum_k p_k ln(p_k / q_k) between two soft histograms.

    Requires matching bin grids; frequencies are already smoothed away
    from zero so the result is always finite.
    """
    if p.centers.shape != q.centers.shape or not np.allclose(
        p.centers, q.centers, rtol=0.0, atol=1e-12
    ):
        raise HistogramError("histograms have different bin grids")
    return float(np.sum(p.freqs * np.log(p.freqs / q.freqs)))
