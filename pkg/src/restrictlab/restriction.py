"""Encoded-feature restriction losses with analytic gradients.

Four losses pull the distribution of an encoded feature batch toward
N(0, I), each returning its value together with the exact gradient with
respect to the features:

* ``conventional_kl`` - the per-sample variational KL over (mu, logvar)
  posteriors. Its minimizer is mu identically zero, i.e. it admits a
  fully collapsed batch.
* ``batch_kl`` - KL between the Gaussian fitted to the batch's
  per-dimension moments and N(0, I). A collapsed batch scores badly
  here because a zero batch standard deviation is maximally wrong.
* ``correlation_loss`` - mean absolute deviation of the batch Pearson
  correlation matrix from the identity.
* ``histogram_imitation_loss`` - per-dimension KL between the batch's
  soft histograms and the soft histogram of N(0, 1), averaged over
  dimensions.

``combined_restriction`` sums the batch KL, correlation, and histogram
terms under a weight set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import STD_FLOOR, BatchError, FeatureBatch
from .histogram import HistogramSpec, gaussian_reference, soft_hist_with_grad
from .translation import LossWeights


@dataclass(frozen=True)
class LossEval:
    """A loss value plus its gradient with respect to the input batch."""

    value: float
    grad: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"loss value is not finite: {self.value}")
        if not np.all(np.isfinite(self.grad)):
            raise ValueError("loss gradient contains non-finite entries")


@dataclass(frozen=True)
class VaeMoments:
    """Per-sample posterior parameters (mu, logvar), both N x D."""

    mu: np.ndarray
    logvar: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64, copy=True)
        logvar = np.array(self.logvar, dtype=np.float64, copy=True)
        if mu.ndim != 2 or mu.shape != logvar.shape:
            raise BatchError(
                f"mu and logvar must be equal-shape 2-D arrays, got {mu.shape} vs {logvar.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(logvar))):
            raise BatchError("moments contain non-finite entries")
        mu.flags.writeable = False
        logvar.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "logvar", logvar)


@dataclass(frozen=True)
class VaeKlEval:
    """Conventional KL value with gradients for both moment arrays."""

    value: float
    grad_mu: np.ndarray
    grad_logvar: np.ndarray


def conventional_kl(m: VaeMoments) -> VaeKlEval:
    """Per-sample KL(N(mu, e^logvar) || N(0, 1)), averaged over samples.

    value = (1/N) sum_i 1/2 sum_d (mu^2 + e^logvar - logvar - 1)
    """
    n = m.mu.shape[0]
    ev = np.exp(m.logvar)
    value = 0.5 * np.sum(m.mu**2 + ev - m.logvar - 1.0) / n
    grad_mu = m.mu / n
    grad_logvar = 0.5 * (ev - 1.0) / n
    return VaeKlEval(value=float(value), grad_mu=grad_mu, grad_logvar=grad_logvar)


def conventional_kl_features(b: FeatureBatch) -> LossEval:
    """Conventional KL of a plain feature batch treated as mu, logvar = 0.

    This is the restriction a deterministic encoder sees under the
    per-sample KL condition; it is minimized by driving every feature
    to zero.
    """
    ev = conventional_kl(VaeMoments(mu=b.data, logvar=np.zeros_like(b.data)))
    return LossEval(value=ev.value, grad=ev.grad_mu)


def _floored_moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    centered = x - mean
    std = np.sqrt(np.mean(centered**2, axis=0))
    return mean, centered, np.maximum(std, STD_FLOOR)


def batch_kl(b: FeatureBatch) -> LossEval:
    """KL of the batch's per-dimension moment Gaussian against N(0, I).

    value = 1/2 sum_d (m_d^2 + s_d^2 - ln s_d^2 - 1) with batch mean m
    and population std s (floored at STD_FLOOR). Unlike the per-sample
    KL this is zero exactly when the batch itself has unit moments, and
    large when the batch collapses.
    """
    if b.n < 2:
        raise BatchError(f"batch KL needs at least 2 samples, got {b.n}")
    x = b.data
    mean, centered, std = _floored_moments(x)
    var = std**2
    value = 0.5 * np.sum(mean**2 + var - np.log(var) - 1.0)
    # d var / d x_id = (2/N)(x_id - m_d) while the floor is inactive.
    active = (std > STD_FLOOR).astype(np.float64)
    grad = (mean + active * (1.0 - 1.0 / var) * centered) / b.n
    return LossEval(value=float(value), grad=grad)


def correlation_loss(b: FeatureBatch) -> LossEval:
    """Mean |corr - identity| over all D^2 entries of the batch Pearson matrix.

    The gradient uses the sign subgradient of |.| (zero at ties) chained
    through the Pearson construction. Near-constant columns keep the
    standard-deviation floor, where the std's own gradient is dropped.
    """
    if b.n < 2 or b.d < 2:
        raise BatchError(f"correlation loss needs N >= 2 and D >= 2, got {b.n}x{b.d}")
    x = b.data
    n, d = b.n, b.d
    _, centered, std = _floored_moments(x)
    z = centered / std
    corr = z.T @ z / n
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)

    off_diag = ~np.eye(d, dtype=bool)
    value = np.sum(np.abs(corr[off_diag])) / d**2

    sign = np.sign(corr)
    np.fill_diagonal(sign, 0.0)
    active = (std > STD_FLOOR).astype(np.float64)
    # d corr_pq / d x_kp = (z_kq - corr_pq z_kp) / (N s_p); summed over the
    # symmetric pair (p,q) and (q,p) each off-diagonal entry contributes twice.
    row_weight = np.sum(sign * corr, axis=1)  # sum_q |corr_dq| over q != d
    grad = (2.0 / (d**2 * n)) * ((z @ sign) - active * row_weight * z) / std
    return LossEval(value=float(value), grad=grad)


def histogram_imitation_loss(
    b: FeatureBatch, spec: HistogramSpec | None = None
) -> LossEval:
    """Soft-histogram KL against the N(0, 1) reference, averaged over dimensions.

    Each feature dimension gets its own soft histogram; the loss is the
    mean KL(histogram || reference) and the gradient is chained through
    the histogram Jacobians.
    """
    spec = spec if spec is not None else HistogramSpec()
    reference = gaussian_reference(spec)
    log_q = np.log(reference.freqs)
    total = 0.0
    grad = np.zeros_like(b.data)
    for dim in range(b.d):
        hist, jac = soft_hist_with_grad(b.data[:, dim], spec)
        log_ratio = np.log(hist.freqs) - log_q
        kl = float(np.sum(hist.freqs * log_ratio))
        total += kl
        # d KL / d p_k = log_ratio_k + 1; the +1 cancels through the
        # Jacobian because the freqs sum to one for every input.
        grad[:, dim] = (log_ratio + 1.0) @ jac
    return LossEval(value=total / b.d, grad=grad / b.d)


def combined_restriction(
    b: FeatureBatch,
    weights: LossWeights | None = None,
    spec: HistogramSpec | None = None,
) -> LossEval:
    """Weighted sum of the batch KL, correlation, and histogram losses.

    Terms with zero weight are skipped entirely, so a 1-D batch is fine
    as long as the correlation weight is zero.
    """
    weights = weights if weights is not None else LossWeights.proposed_set()
    value = 0.0
    grad = np.zeros_like(b.data)
    for weight, term in (
        (weights.lambda_bkl, batch_kl),
        (weights.lambda_corr_enc, correlation_loss),
        (weights.lambda_hist, lambda batch: histogram_imitation_loss(batch, spec)),
    ):
        if weight == 0.0:
            continue
        ev = term(b)
        value += weight * ev.value
        grad += weight * ev.grad
    return LossEval(value=float(value), grad=grad)
