"""Dense-matrix utilities shared by every loss and metric in the package.

Everything here is pure and deterministic: seeded Gaussian sampling,
per-column batch statistics, the Pearson correlation matrix, and a
central-finite-difference gradient oracle used to verify every analytic
gradient in the package.

Conventions
-----------
* Standard deviations use the population divisor N throughout, so the
  loss gradients stay simple and reported statistics are comparable.
* Near-constant columns are handled by flooring the standard deviation
  at ``STD_FLOOR`` instead of erroring, so collapsed feature batches
  still produce finite correlation values and losses.
* Randomness comes from one named, versioned scheme (``RNG_SCHEME``):
  a PCG64 generator seeded with ``SeedSequence([seed, *sha256(label)])``.
  Two calls with the same (seed, labels) always yield the same stream,
  and distinct labels give independent streams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

RNG_SCHEME = "pcg64-sha256labels-v1"

STD_FLOOR = 1e-8
FD_STEP = 1e-5

_U64 = 0xFFFFFFFFFFFFFFFF


class BatchError(ValueError):
    """A feature batch violated a shape, finiteness, or size contract."""


def rng_stream(seed: int, *labels: str) -> np.random.Generator:
    """Return the named random stream for (seed, labels).

    The stream identity is ``SeedSequence([seed mod 2**64] + [first 8
    bytes of sha256(label) for each label])`` feeding PCG64. Labels
    split one experiment seed into independent sub-streams (dataset,
    init, batch order, ...) without manual seed bookkeeping.
    """
    entropy = [int(seed) & _U64]
    for label in labels:
        entropy.append(int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class FeatureBatch:
    """An N x D matrix of encoded features, one sample per row.

    Entries must be finite; the array is copied to float64 and frozen so
    instances are safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise BatchError(f"feature batch must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise BatchError(f"feature batch must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise BatchError("feature batch contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ColumnStats:
    """Per-column mean and population (divisor N) standard deviation."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class CorrMatrix:
    """D x D Pearson correlation matrix.

    Construction guarantees exact symmetry, unit diagonal, and entries
    clipped into [-1, 1] (floating-point ratios can overshoot by an ulp).
    """

    m: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.m, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise BatchError(f"correlation matrix must be square, got {arr.shape}")
        arr = 0.5 * (arr + arr.T)
        arr = np.clip(arr, -1.0, 1.0)
        np.fill_diagonal(arr, 1.0)
        arr.flags.writeable = False
        object.__setattr__(self, "m", arr)

    @property
    def d(self) -> int:
        return self.m.shape[0]


def seeded_standard_normal(n: int, d: int, seed: int) -> FeatureBatch:
    """Draw a deterministic n x d batch from N(0, I)."""
    if n < 1 or d < 1:
        raise BatchError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    draws = rng_stream(seed, "standard-normal").standard_normal((int(n), int(d)))
    return FeatureBatch(draws)


def _require_stats_batch(b: FeatureBatch) -> np.ndarray:
    if b.n < 2:
        raise BatchError(f"statistics need at least 2 samples, got {b.n}")
    return b.data


def column_stats(b: FeatureBatch) -> ColumnStats:
    """Per-column mean and population standard deviation of a batch."""
    x = _require_stats_batch(b)
    mean = x.mean(axis=0)
    std = np.sqrt(np.mean((x - mean) ** 2, axis=0))
    return ColumnStats(mean=mean, std=std)


def corr_mat(b: FeatureBatch) -> CorrMatrix:
    """Pearson correlation matrix of a batch.

    Standard deviations are floored at ``STD_FLOOR`` before dividing, so
    constant columns yield zero correlation instead of an error.
    """
    x = _require_stats_batch(b)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / b.n
    std = np.sqrt(np.diag(cov))
    denom = np.maximum(std, STD_FLOOR)
    return CorrMatrix(cov / np.outer(denom, denom))


def finite_diff_grad(
    f: Callable[[FeatureBatch], float],
    b: FeatureBatch,
    h: float = FD_STEP,
) -> np.ndarray:
    """Central-difference gradient estimate of a scalar batch functional.

    Perturbs every entry by +/- h and returns the N x D estimate. Raises
    if any evaluation of ``f`` comes back non-finite.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    base = b.data
    grad = np.zeros_like(base)
    work = base.copy()
    for idx in np.ndindex(base.shape):
        orig = work[idx]
        work[idx] = orig + h
        f_plus = float(f(FeatureBatch(work)))
        work[idx] = orig - h
        f_minus = float(f(FeatureBatch(work)))
        work[idx] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError(f"non-finite evaluation while probing entry {idx}")
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, estimate: np.ndarray) -> float:
    """Max entrywise |a - g| / max(1, |a|, |g|) between two gradients."""
    a = np.asarray(analytic, dtype=np.float64)
    g = np.asarray(estimate, dtype=np.float64)
    if a.shape != g.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {g.shape}")
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(g)))
    return float(np.max(np.abs(a - g) / denom))
