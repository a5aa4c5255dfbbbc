"""Precision, recall, density, and coverage between two feature sets.

The four scores compare a fake feature set against a real one through
k-nearest-neighbor manifold estimation: each point gets a ball whose
radius is the distance to its k-th nearest neighbor within its own set,
and membership of the other set's points in those balls is counted.

Boundary rule: a point exactly on a ball's surface counts as inside
(distance <= radius), which makes identical real and fake sets score
precision = recall = coverage = 1. Ties in neighbor distance cannot
change a radius (it is the k-th order statistic of the distance list),
so results are reproducible across platforms.

``compute_prdc`` is the vectorized implementation; ``compute_prdc_reference``
is a deliberately plain O(N^2) double loop kept as an oracle. The two
must agree bit-exactly; never replace one with the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import BatchError, FeatureBatch

import numpy as np


class PrdcError(ValueError):
    """Invalid PRDC configuration or incompatible feature sets."""


@dataclass(frozen=True)
class PrdcConfig:
    """Neighbor count for the kNN balls; distances are Euclidean."""

    k: int = 5

    def __post_init__(self):
        if int(self.k) < 1:
            raise PrdcError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    def validate_for(self, n_real: int, n_fake: int) -> None:
        if self.k >= min(n_real, n_fake):
            raise PrdcError(
                f"k={self.k} must be smaller than both set sizes ({n_real}, {n_fake})"
            )


@dataclass(frozen=True)
class PrdcScores:
    precision: float
    recall: float
    density: float
    coverage: float

    def __post_init__(self):
        for name in ("precision", "recall", "coverage"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise PrdcError(f"{name} out of range [0, 1]: {v}")
        if not (self.density >= 0.0 and math.isfinite(self.density)):
            raise PrdcError(f"density must be finite and >= 0: {self.density}")

    def to_dict(self) -> dict[str, float]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "density": self.density,
            "coverage": self.coverage,
        }


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, len(a) x len(b).

    Computed from explicit differences (not the norm expansion) so the
    per-pair arithmetic matches the reference double loop bit for bit.
    """
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)


def _knn_sq_radii(batch: FeatureBatch, k: int) -> np.ndarray:
    """Squared ball radii; kept unrooted so boundary ties stay exact."""
    if k < 1:
        raise PrdcError(f"k must be >= 1, got {k}")
    if k >= batch.n:
        raise PrdcError(f"k={k} must be smaller than the set size {batch.n}")
    d2 = _sq_dists(batch.data, batch.data)
    np.fill_diagonal(d2, np.inf)
    d2.sort(axis=1)
    return d2[:, k - 1]


def knn_radius(batch: FeatureBatch, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest same-set neighbor.

    The point itself is excluded by index, not by value, so duplicated
    points legitimately produce zero radii.
    """
    return np.sqrt(_knn_sq_radii(batch, k))


def compute_prdc(real: FeatureBatch, fake: FeatureBatch, cfg: PrdcConfig) -> PrdcScores:
    """PRDC of a fake set against a real set.

    precision: fraction of fake points inside at least one real ball.
    recall:    fraction of real points inside at least one fake ball.
    density:   real-ball membership count over fake points, normalized
               by k * n_fake (can exceed 1).
    coverage:  fraction of real points whose own ball contains a fake point.
    """
    if real.d != fake.d:
        raise PrdcError(f"dimension mismatch: real is {real.d}-D, fake is {fake.d}-D")
    cfg.validate_for(real.n, fake.n)

    real_r2 = _knn_sq_radii(real, cfg.k)
    fake_r2 = _knn_sq_radii(fake, cfg.k)
    d2 = _sq_dists(real.data, fake.data)  # n_real x n_fake

    inside_real = d2 <= real_r2[:, None]
    precision = int(inside_real.any(axis=0).sum()) / fake.n
    density = int(inside_real.sum()) / (cfg.k * fake.n)
    coverage = int(inside_real.any(axis=1).sum()) / real.n
    recall = int((d2 <= fake_r2[None, :]).any(axis=1).sum()) / real.n
    return PrdcScores(precision=precision, recall=recall, density=density, coverage=coverage)


# ---------------------------------------------------------------------------
# Brute-force reference. Plain Python on purpose: independent of the
# vectorized path above, used to pin its behavior exactly.
# ---------------------------------------------------------------------------


def _sq_dist_rows(p, q) -> float:
    total = 0.0
    for a, b in zip(p, q):
        diff = a - b
        total += diff * diff
    return total


def _knn_sq_radii_reference(points: list[list[float]], k: int) -> list[float]:
    radii = []
    for i, p in enumerate(points):
        dists = [_sq_dist_rows(p, q) for j, q in enumerate(points) if j != i]
        dists.sort()
        radii.append(dists[k - 1])
    return radii


def compute_prdc_reference(
    real: FeatureBatch, fake: FeatureBatch, cfg: PrdcConfig
) -> PrdcScores:
    """O(N^2) double-loop PRDC used as the oracle for ``compute_prdc``."""
    if real.d != fake.d:
        raise PrdcError(f"dimension mismatch: real is {real.d}-D, fake is {fake.d}-D")
    cfg.validate_for(real.n, fake.n)

    real_pts = real.data.tolist()
    fake_pts = fake.data.tolist()
    real_r2 = _knn_sq_radii_reference(real_pts, cfg.k)
    fake_r2 = _knn_sq_radii_reference(fake_pts, cfg.k)

    n_prec = 0
    n_recall = 0
    n_density = 0
    n_cover = 0
    for i, rp in enumerate(real_pts):
        in_any_fake_ball = False
        ball_hit = False
        for j, fp in enumerate(fake_pts):
            d2 = _sq_dist_rows(rp, fp)
            if d2 <= real_r2[i]:
                n_density += 1
                ball_hit = True
            if d2 <= fake_r2[j]:
                in_any_fake_ball = True
        if in_any_fake_ball:
            n_recall += 1
        if ball_hit:
            n_cover += 1
    for j, fp in enumerate(fake_pts):
        if any(_sq_dist_rows(rp, fp) <= real_r2[i] for i, rp in enumerate(real_pts)):
            n_prec += 1

    return PrdcScores(
        precision=n_prec / fake.n,
        recall=n_recall / real.n,
        density=n_density / (cfg.k * fake.n),
        coverage=n_cover / real.n,
    )
