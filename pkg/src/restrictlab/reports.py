"""Report serialization and artifact emission.

An experiment report becomes one JSON file, one CSV per feature
dimension's histogram, a correlation CSV, and three SVG figures. PRDC
scores become a JSON file, a one-row CSV, and a bar chart. File bytes
are deterministic: JSON is sorted and indented, CSV floats use shortest
round-trip formatting, and the figure layer pins matplotlib's sources
of nondeterminism.

JSON floats use Python repr, so a report round-trips through
``read_report`` and ``experiment_from_dict`` bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__
from .core import CorrMatrix
from .figures import corr_heatmap, histogram_grid, loss_trace, metric_bars
from .histogram import HistogramSpec, bin_centers, gaussian_reference
from .prdc import PrdcScores
from .toylab import ExperimentReport

TOOL_NAME = "restrictlab"


class ReportError(ValueError):
    """A report payload could not be serialized or reconstructed."""


@dataclass(frozen=True)
class ReportBundle:
    """Manifest plus the artifact paths written by ``emit_report``."""

    manifest: dict
    paths: tuple[Path, ...]

    def __post_init__(self):
        missing = [str(p) for p in self.paths if not Path(p).exists()]
        if missing:
            raise ReportError(f"bundle lists missing artifacts: {missing}")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_json(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def read_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: not valid JSON: {exc}") from None


def _manifest(kind: str, seed: int | None, config: dict | None) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "kind": kind,
        "seed": seed,
        "config": config,
    }


def experiment_to_dict(r: ExperimentReport, config: dict | None = None) -> dict:
    return {
        "manifest": _manifest("experiment", r.seed, config),
        "condition": r.condition,
        "seed": r.seed,
        "steps": r.steps,
        "feature_mean": [float(v) for v in r.feature_mean],
        "feature_std": [float(v) for v in r.feature_std],
        "corr": [[float(v) for v in row] for row in r.corr.m],
        "corr_deviation": float(r.corr_deviation),
        "hist_spec": {
            "max": r.hist_spec.max,
            "min": r.hist_spec.min,
            "bins": r.hist_spec.bins,
            "sigma": r.hist_spec.sigma,
        },
        "hist_freqs": [[float(v) for v in row] for row in r.hist_freqs],
        "hist_kl_per_dim": [float(v) for v in r.hist_kl_per_dim],
        "loss_trace": [float(v) for v in r.loss_trace],
        "classifier_accuracy": (
            None if r.classifier_accuracy is None else float(r.classifier_accuracy)
        ),
        "centroid_accuracy": float(r.centroid_accuracy),
        "trunk_checksum_before": r.trunk_checksum_before,
        "trunk_checksum_after": r.trunk_checksum_after,
    }


def experiment_from_dict(d: dict) -> ExperimentReport:
    try:
        spec = HistogramSpec(**d["hist_spec"])
        return ExperimentReport(
            condition=d["condition"],
            seed=d["seed"],
            steps=d["steps"],
            feature_mean=np.array(d["feature_mean"]),
            feature_std=np.array(d["feature_std"]),
            corr=CorrMatrix(np.array(d["corr"])),
            corr_deviation=d["corr_deviation"],
            hist_spec=spec,
            hist_freqs=np.array(d["hist_freqs"]),
            hist_kl_per_dim=np.array(d["hist_kl_per_dim"]),
            loss_trace=np.array(d["loss_trace"]),
            classifier_accuracy=d["classifier_accuracy"],
            centroid_accuracy=d["centroid_accuracy"],
            trunk_checksum_before=d["trunk_checksum_before"],
            trunk_checksum_after=d["trunk_checksum_after"],
        )
    except (KeyError, TypeError) as exc:
        raise ReportError(f"experiment report payload is malformed: {exc}") from None


def scores_to_dict(
    s: PrdcScores,
    k: int | None = None,
    n_real: int | None = None,
    n_fake: int | None = None,
    config: dict | None = None,
) -> dict:
    payload = dict(s.to_dict())
    if k is not None:
        payload["k"] = int(k)
    if n_real is not None:
        payload["n_real"] = int(n_real)
    if n_fake is not None:
        payload["n_fake"] = int(n_fake)
    payload["manifest"] = _manifest("prdc", None, config)
    return payload


def scores_from_dict(d: dict) -> PrdcScores:
    try:
        return PrdcScores(
            precision=d["precision"],
            recall=d["recall"],
            density=d["density"],
            coverage=d["coverage"],
        )
    except KeyError as exc:
        raise ReportError(f"scores payload is missing {exc}") from None


def _write_hist_csvs(r: ExperimentReport, out: Path) -> list[Path]:
    centers = bin_centers(r.hist_spec)
    reference = gaussian_reference(r.hist_spec)
    paths = []
    for dim in range(r.hist_freqs.shape[0]):
        lines = ["center,frequency,reference"]
        for c, f, q in zip(centers, r.hist_freqs[dim], reference.freqs):
            lines.append(f"{_fmt(c)},{_fmt(f)},{_fmt(q)}")
        path = out / f"hist_dim{dim}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def _write_corr_csv(r: ExperimentReport, out: Path) -> Path:
    lines = [",".join(_fmt(v) for v in row) for row in r.corr.m]
    path = out / "corr.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_report(
    r: ExperimentReport | PrdcScores,
    out_dir: str | Path,
    config: dict | None = None,
) -> ReportBundle:
    """Write the full artifact set for a report into ``out_dir``.

    Emitting the same report twice produces byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(r, ExperimentReport):
        payload = experiment_to_dict(r, config)
        paths = [write_json(payload, out / "report.json")]
        paths.extend(_write_hist_csvs(r, out))
        paths.append(_write_corr_csv(r, out))
        paths.append(
            histogram_grid(
                r.hist_freqs,
                r.hist_spec,
                out / "histograms.svg",
                title=f"Held-out feature histograms ({r.condition})",
            )
        )
        paths.append(corr_heatmap(r.corr.m, out / "corr.svg"))
        paths.append(loss_trace(r.loss_trace, out / "trace.svg"))
        return ReportBundle(manifest=payload["manifest"], paths=tuple(paths))
    if isinstance(r, PrdcScores):
        payload = scores_to_dict(r, config=config)
        if config:
            for key in ("k", "n_real", "n_fake"):
                if key in config:
                    payload[key] = int(config[key])
        paths = [write_json(payload, out / "scores.json")]
        metrics = r.to_dict()
        csv_path = out / "scores.csv"
        csv_path.write_text(
            ",".join(metrics.keys())
            + "\n"
            + ",".join(_fmt(v) for v in metrics.values())
            + "\n"
        )
        paths.append(csv_path)
        paths.append(metric_bars(metrics, out / "scores.svg", title="PRDC scores"))
        return ReportBundle(manifest=payload["manifest"], paths=tuple(paths))
    raise ReportError(f"cannot emit a report for {type(r).__name__}")
