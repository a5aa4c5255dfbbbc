"""Pure-function forms of the translation objective.

These operate on caller-supplied score vectors and tensors; no networks
live here. The adversarial pieces use least-squares (mean-square-error)
targets, reconstruction-style terms use mean absolute difference, and
``total_loss`` folds pre-summed components into one weighted scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


class LossInputError(ValueError):
    """Loss inputs violated a shape or finiteness contract."""


@dataclass(frozen=True)
class DomainCode:
    """One-hot or soft class-membership vector (entries >= 0, sum 1)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64, copy=True).ravel()
        if arr.size < 1:
            raise LossInputError("domain code must be non-empty")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise LossInputError("domain code entries must be finite and >= 0")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise LossInputError(f"domain code must sum to 1, got {arr.sum()!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)


@dataclass(frozen=True)
class StyleCode:
    """Latent style vector consumed and recovered by the generator."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True).ravel()
        if arr.size < 1:
            raise LossInputError("style code must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise LossInputError("style code entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class DiscriminatorOutputs:
    """Patch realness scores plus optional class logits."""

    realness: np.ndarray
    class_logits: np.ndarray | None = None

    def __post_init__(self):
        real = np.array(self.realness, dtype=np.float64, copy=True).ravel()
        if not np.all(np.isfinite(real)):
            raise LossInputError("realness scores must be finite")
        real.flags.writeable = False
        object.__setattr__(self, "realness", real)
        if self.class_logits is not None:
            logits = np.array(self.class_logits, dtype=np.float64, copy=True).ravel()
            if not np.all(np.isfinite(logits)):
                raise LossInputError("class logits must be finite")
            logits.flags.writeable = False
            object.__setattr__(self, "class_logits", logits)


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights for every term of the total objective.

    Defaults are the full tuned set; ``conventional_kl_set`` and
    ``proposed_set`` give the two restriction conditions compared by the
    experiment lab (per-sample KL only vs batch KL + correlation +
    histogram imitation).
    """

    lambda_cycle: float = 5.0
    lambda_idt: float = 5.0
    lambda_reg: float = 0.5
    lambda_idt_reg: float = 0.5
    lambda_kl: float = 0.1
    lambda_bkl: float = 10.0
    lambda_corr_enc: float = 100.0
    lambda_hist: float = 100.0
    lambda_class: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not np.isfinite(v) or v < 0:
                raise LossInputError(f"{f.name} must be finite and >= 0, got {v}")
            object.__setattr__(self, f.name, v)

    @classmethod
    def conventional_kl_set(cls) -> "LossWeights":
        return cls(lambda_idt_reg=0.0, lambda_kl=0.1, lambda_bkl=0.0,
                   lambda_corr_enc=0.0, lambda_hist=0.0)

    @classmethod
    def proposed_set(cls) -> "LossWeights":
        return cls(lambda_idt_reg=0.0, lambda_kl=0.0, lambda_bkl=10.0,
                   lambda_corr_enc=100.0, lambda_hist=100.0)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise LossInputError(f"unknown weight keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


# Component names accepted by total_loss, in the order they are summed.
COMPONENT_WEIGHTS = {
    "adv": None,  # unweighted
    "cycle": "lambda_cycle",
    "idt": "lambda_idt",
    "reg": "lambda_reg",
    "idt_reg": "lambda_idt_reg",
    "class": "lambda_class",
    "kl": "lambda_kl",
    "bkl": "lambda_bkl",
    "corr_enc": "lambda_corr_enc",
    "hist": "lambda_hist",
}


def lsgan_adv(
    real: DiscriminatorOutputs,
    fake: DiscriminatorOutputs,
    targets: tuple[float, float] = (1.0, 0.0),
) -> tuple[float, float]:
    """Least-squares adversarial losses (d_loss, g_loss).

    ``targets`` is (real_target, fake_target); the discriminator pushes
    real scores toward the first and fake scores toward the second,
    while the generator pushes fake scores toward the real target.
    """
    if real.realness.size == 0 or fake.realness.size == 0:
        raise LossInputError("score vectors must be non-empty")
    real_target, fake_target = float(targets[0]), float(targets[1])
    d_loss = 0.5 * np.mean((real.realness - real_target) ** 2) + 0.5 * np.mean(
        (fake.realness - fake_target) ** 2
    )
    g_loss = 0.5 * np.mean((fake.realness - real_target) ** 2)
    return float(d_loss), float(g_loss)


def l1_loss(a, b) -> float:
    """Mean absolute difference over all entries of two equal-shape tensors."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise LossInputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.mean(np.abs(x - y)))


def regression_loss(c: StyleCode, c_hat: StyleCode) -> float:
    """Mean absolute error between an input style code and its recovery.

    Covers both the regular and identity-image regression terms, which
    differ only in which generated image produced ``c_hat``.
    """
    if c.values.shape != c_hat.values.shape:
        raise LossInputError(
            f"style code length mismatch: {c.values.size} vs {c_hat.values.size}"
        )
    return float(np.mean(np.abs(c.values - c_hat.values)))


def class_loss(out: DiscriminatorOutputs, z: DomainCode) -> float:
    """Half mean squared error between class logits and the domain code."""
    if out.class_logits is None:
        raise LossInputError("discriminator outputs carry no class logits")
    if out.class_logits.shape != z.probs.shape:
        raise LossInputError(
            f"class logit length mismatch: {out.class_logits.size} vs {z.probs.size}"
        )
    return float(0.5 * np.mean((out.class_logits - z.probs) ** 2))


def total_loss(components: dict[str, float], w: LossWeights) -> float:
    """Weighted total of pre-summed loss components.

    ``components`` maps names from ``COMPONENT_WEIGHTS`` to scalars;
    missing components count as zero, unknown names are rejected. The
    adversarial term enters unweighted; every other term is scaled by
    its weight.
    """
    unknown = set(components) - set(COMPONENT_WEIGHTS)
    if unknown:
        raise LossInputError(f"unknown loss components: {sorted(unknown)}")
    total = 0.0
    for name, weight_attr in COMPONENT_WEIGHTS.items():
        value = float(components.get(name, 0.0))
        if not np.isfinite(value):
            raise LossInputError(f"component {name!r} is not finite: {value}")
        coeff = 1.0 if weight_attr is None else getattr(w, weight_attr)
        total += coeff * value
    return float(total)
