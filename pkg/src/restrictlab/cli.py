"""Command-line interface.

Subcommands:

* ``losses eval``: restriction-loss values for a feature batch file.
* ``losses total``: weighted objective total from a component JSON.
* ``prdc``: precision/recall/density/coverage between two batches.
* ``train-toy``: run the synthetic-cluster training lab.
* ``gradcheck``: finite-difference verification of every analytic
  gradient, printing the max relative error per loss.
* ``report``: re-render tables and figures from a stored report JSON.

Results go to stdout as JSON. Failures print a one-line machine-readable
JSON object to stderr and exit nonzero (2 for usage errors, 1
otherwise). ``--seed`` exists only on subcommands that actually draw
random numbers; the others reject it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .batchio import FORMATS, read_batch
from .core import (
    FeatureBatch,
    corr_mat,
    finite_diff_grad,
    relative_error,
    seeded_standard_normal,
)
from .prdc import PrdcConfig, compute_prdc
from .reports import (
    emit_report,
    experiment_from_dict,
    read_report,
    scores_from_dict,
    write_json,
)
from .restriction import (
    batch_kl,
    combined_restriction,
    conventional_kl_features,
    correlation_loss,
    histogram_imitation_loss,
)
from .toylab import CONDITIONS, TrainConfig, run_experiment
from .translation import LossWeights, total_loss

WEIGHT_PRESETS = {
    "table1": LossWeights,
    "conventional-kl": LossWeights.conventional_kl_set,
    "proposed": LossWeights.proposed_set,
}

GRADCHECK_TOLERANCES = {
    "conventional_kl": 1e-4,
    "batch_kl": 1e-4,
    "correlation": 1e-3,
    "histogram_imitation": 1e-4,
}

# Offdiagonal correlations this close to zero sit on the subgradient
# kink of the correlation loss, where finite differences are undefined.
KINK_MARGIN = 1e-6


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage errors as machine-readable JSON."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def _resolve_weights(spec: str) -> LossWeights:
    if spec in WEIGHT_PRESETS:
        return WEIGHT_PRESETS[spec]()
    path = Path(spec)
    if not path.exists():
        raise ValueError(
            f"--weights must be one of {sorted(WEIGHT_PRESETS)} or a JSON file, got {spec!r}"
        )
    return LossWeights.from_dict(json.loads(path.read_text()))


def _resolve_format(fmt: str, path: str) -> str:
    if fmt != "auto":
        return fmt
    return "fbv" if Path(path).suffix == ".fbv" else "csv"


def _cmd_losses_eval(args) -> dict:
    batch = read_batch(args.input, _resolve_format(args.format, args.input))
    weights = _resolve_weights(args.weights)
    ckl = conventional_kl_features(batch)
    bkl = batch_kl(batch)
    corr = correlation_loss(batch)
    hist = histogram_imitation_loss(batch)
    payload = {
        "input": str(args.input),
        "n": batch.n,
        "d": batch.d,
        "conventional_kl": ckl.value,
        "batch_kl": bkl.value,
        "correlation": corr.value,
        "histogram_imitation": hist.value,
        "restriction_total": (
            weights.lambda_kl * ckl.value + combined_restriction(batch, weights).value
        ),
        "weights": weights.to_dict(),
    }
    if args.out:
        path = write_json(payload, Path(args.out) / "losses.json")
        payload["artifacts"] = [str(path)]
    return payload


def _cmd_losses_total(args) -> dict:
    components = json.loads(Path(args.components).read_text())
    if not isinstance(components, dict):
        raise ValueError(f"{args.components}: expected a JSON object of component values")
    weights = _resolve_weights(args.weights)
    return {
        "components": components,
        "weights": weights.to_dict(),
        "total": total_loss(components, weights),
    }


def _cmd_prdc(args) -> dict:
    real = read_batch(args.real, _resolve_format(args.format, args.real))
    fake = read_batch(args.fake, _resolve_format(args.format, args.fake))
    cfg = PrdcConfig(k=args.k)
    scores = compute_prdc(real, fake, cfg)
    payload = dict(scores.to_dict())
    payload.update({"k": cfg.k, "n_real": real.n, "n_fake": fake.n})
    if args.out:
        out = Path(args.out)
        if out.suffix == ".json":
            write_json(payload, out)
            payload["artifacts"] = [str(out)]
        else:
            bundle = emit_report(
                scores, out, config={"k": cfg.k, "n_real": real.n, "n_fake": fake.n}
            )
            payload["artifacts"] = [str(p) for p in bundle.paths]
    return payload


def _cmd_train_toy(args) -> dict:
    weights = _resolve_weights(args.weights) if args.weights else None
    cfg = TrainConfig(
        condition=args.condition.replace("-", "_"),
        weights=weights,
        steps=args.steps,
        step_size=args.step_size,
        batch=args.batch,
        seed=args.seed,
    )
    _, report = run_experiment(cfg, with_pretraining=args.pretrain)
    payload = {
        "condition": report.condition,
        "seed": report.seed,
        "steps": report.steps,
        "pretrain": bool(args.pretrain),
        "feature_std_min": float(np.min(report.feature_std)),
        "feature_std_max": float(np.max(report.feature_std)),
        "corr_deviation": report.corr_deviation,
        "hist_kl_mean": float(np.mean(report.hist_kl_per_dim)),
        "classifier_accuracy": report.classifier_accuracy,
        "centroid_accuracy": report.centroid_accuracy,
        "trunk_frozen_intact": report.trunk_checksum_before == report.trunk_checksum_after,
    }
    if args.out:
        config_echo = {
            "condition": cfg.condition,
            "steps": cfg.steps,
            "step_size": cfg.effective_step_size(),
            "batch": cfg.batch,
            "seed": cfg.seed,
            "feature_dim": cfg.feature_dim,
            "hidden_dim": cfg.hidden_dim,
            "pretrain": bool(args.pretrain),
            "weights": cfg.effective_weights().to_dict(),
        }
        bundle = emit_report(report, args.out, config=config_echo)
        payload["artifacts"] = [str(p) for p in bundle.paths]
    return payload


_GRAD_FUNCS = {
    "conventional_kl": conventional_kl_features,
    "batch_kl": batch_kl,
    "correlation": correlation_loss,
    "histogram_imitation": histogram_imitation_loss,
}


def _near_corr_kink(batch: FeatureBatch) -> bool:
    c = corr_mat(batch).m.copy()
    np.fill_diagonal(c, 1.0)
    off = c[~np.eye(c.shape[0], dtype=bool)]
    return bool(np.any(np.abs(off) < KINK_MARGIN))


def _cmd_gradcheck(args) -> dict:
    errors = {name: 0.0 for name in _GRAD_FUNCS}
    for i in range(args.batches):
        batch = seeded_standard_normal(args.n, args.d, args.seed + i)
        for name, fn in _GRAD_FUNCS.items():
            if name == "correlation" and _near_corr_kink(batch):
                continue
            ev = fn(batch)
            fd = finite_diff_grad(lambda b, fn=fn: fn(b).value, batch)
            errors[name] = max(errors[name], relative_error(ev.grad, fd))
    failures = {
        name: err
        for name, err in errors.items()
        if err >= GRADCHECK_TOLERANCES[name]
    }
    if failures:
        raise ValueError(f"gradient check failed: {failures}")
    return {
        "batches": args.batches,
        "n": args.n,
        "d": args.d,
        "seed": args.seed,
        "max_relative_error": errors,
        "tolerances": GRADCHECK_TOLERANCES,
    }


def _cmd_report(args) -> dict:
    payload = read_report(args.input)
    manifest = payload.get("manifest") or {}
    kind = manifest.get("kind")
    if kind is None and {"precision", "recall", "density", "coverage"} <= set(payload):
        kind = "prdc"
    if kind == "experiment":
        report = experiment_from_dict(payload)
        bundle = emit_report(report, args.out, config=manifest.get("config"))
    elif kind == "prdc":
        scores = scores_from_dict(payload)
        extras = {k: payload[k] for k in ("k", "n_real", "n_fake") if k in payload}
        bundle = emit_report(scores, args.out, config=extras or None)
    else:
        raise ValueError(f"{args.input}: manifest kind must be experiment or prdc, got {kind!r}")
    return {"input": str(args.input), "artifacts": [str(p) for p in bundle.paths]}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="restrictlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"restrictlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    losses = sub.add_parser("losses", help="evaluate or combine loss values")
    losses_sub = losses.add_subparsers(dest="losses_command", required=True)

    ev = losses_sub.add_parser("eval", help="restriction losses of a batch file")
    ev.add_argument("--input", required=True, help="feature batch file")
    ev.add_argument("--format", choices=("auto",) + FORMATS, default="auto")
    ev.add_argument("--weights", default="table1", help="preset name or JSON file")
    ev.add_argument("--out", help="directory to write losses.json into")
    ev.set_defaults(func=_cmd_losses_eval)

    tot = losses_sub.add_parser("total", help="weighted total of component values")
    tot.add_argument("--components", required=True, help="JSON file of component values")
    tot.add_argument("--weights", default="table1", help="preset name or JSON file")
    tot.set_defaults(func=_cmd_losses_total)

    prdc = sub.add_parser("prdc", help="precision/recall/density/coverage")
    prdc.add_argument("--real", required=True, help="real feature batch file")
    prdc.add_argument("--fake", required=True, help="fake feature batch file")
    prdc.add_argument("--format", choices=("auto",) + FORMATS, default="auto")
    prdc.add_argument("--k", type=int, default=5, help="neighbor count (default 5)")
    prdc.add_argument("--out", help="scores JSON path, or a directory for the full bundle")
    prdc.set_defaults(func=_cmd_prdc)

    toy = sub.add_parser("train-toy", help="run the synthetic training lab")
    toy.add_argument(
        "--condition",
        choices=CONDITIONS + ("conventional-kl",),
        default="proposed",
    )
    toy.add_argument("--pretrain", action="store_true", help="classifier stage first")
    toy.add_argument("--seed", type=int, default=0)
    toy.add_argument("--steps", type=int, default=TrainConfig.steps)
    toy.add_argument(
        "--step-size", type=float, default=None, help="default: tuned per condition"
    )
    toy.add_argument("--batch", type=int, default=TrainConfig.batch)
    toy.add_argument("--weights", help="override preset name or JSON file")
    toy.add_argument("--out", help="report directory")
    toy.set_defaults(func=_cmd_train_toy)

    grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--batches", type=int, default=20)
    grad.add_argument("--n", type=int, default=32)
    grad.add_argument("--d", type=int, default=8)
    grad.set_defaults(func=_cmd_gradcheck)

    rep = sub.add_parser("report", help="re-render artifacts from a report JSON")
    rep.add_argument("--input", required=True, help="report.json or scores.json")
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0
