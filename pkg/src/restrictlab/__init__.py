"""Restriction losses, translation-loss arithmetic, and PRDC metrics.

The package provides, as pure numpy code with analytic gradients:

* three batch-level restriction losses that pull encoded features
  toward N(0, I) without collapsing them (batch KL divergence, Pearson
  correlation penalty, Gaussian soft-histogram imitation), plus the
  conventional per-sample KL they replace;
* the weighted loss ledger of a multi-domain image translation
  objective (adversarial, cycle, identity, regression, class terms);
* precision / recall / density / coverage metrics with a brute-force
  reference implementation;
* a deterministic synthetic training lab demonstrating the
  collapse-versus-spread behavior of the two restriction approaches;
* batch file I/O, report emission, and a CLI (``restrictlab``).
"""

from ._version import __version__
from .batchio import (
    BatchIoError,
    read_batch,
    read_batch_csv,
    read_batch_fbv,
    write_batch,
    write_batch_csv,
    write_batch_fbv,
)
from .core import (
    FD_STEP,
    RNG_SCHEME,
    STD_FLOOR,
    BatchError,
    ColumnStats,
    CorrMatrix,
    FeatureBatch,
    column_stats,
    corr_mat,
    finite_diff_grad,
    relative_error,
    rng_stream,
    seeded_standard_normal,
)
from .histogram import (
    HistogramError,
    HistogramSpec,
    SoftHistogram,
    bin_centers,
    gaussian_reference,
    hist_kl,
    soft_hist,
    soft_hist_with_grad,
)
from .prdc import (
    PrdcConfig,
    PrdcError,
    PrdcScores,
    compute_prdc,
    compute_prdc_reference,
    knn_radius,
)
from .reports import ReportBundle, ReportError, emit_report, read_report
from .restriction import (
    LossEval,
    VaeKlEval,
    VaeMoments,
    batch_kl,
    combined_restriction,
    conventional_kl,
    conventional_kl_features,
    correlation_loss,
    histogram_imitation_loss,
)
from .toylab import (
    ExperimentReport,
    MlpEncoder,
    SyntheticDataset,
    TrainConfig,
    TrainingDiverged,
    gen_clusters,
    heldout_batch,
    nearest_centroid_accuracy,
    pretrain_classifier,
    run_experiment,
    train_restriction_head,
)
from .translation import (
    COMPONENT_WEIGHTS,
    DiscriminatorOutputs,
    DomainCode,
    LossInputError,
    LossWeights,
    StyleCode,
    class_loss,
    l1_loss,
    lsgan_adv,
    regression_loss,
    total_loss,
)

__all__ = [
    "__version__",
    "BatchIoError",
    "read_batch",
    "read_batch_csv",
    "read_batch_fbv",
    "write_batch",
    "write_batch_csv",
    "write_batch_fbv",
    "FD_STEP",
    "RNG_SCHEME",
    "STD_FLOOR",
    "BatchError",
    "ColumnStats",
    "CorrMatrix",
    "FeatureBatch",
    "column_stats",
    "corr_mat",
    "finite_diff_grad",
    "relative_error",
    "rng_stream",
    "seeded_standard_normal",
    "HistogramError",
    "HistogramSpec",
    "SoftHistogram",
    "bin_centers",
    "gaussian_reference",
    "hist_kl",
    "soft_hist",
    "soft_hist_with_grad",
    "PrdcConfig",
    "PrdcError",
    "PrdcScores",
    "compute_prdc",
    "compute_prdc_reference",
    "knn_radius",
    "ReportBundle",
    "ReportError",
    "emit_report",
    "read_report",
    "LossEval",
    "VaeKlEval",
    "VaeMoments",
    "batch_kl",
    "combined_restriction",
    "conventional_kl",
    "conventional_kl_features",
    "correlation_loss",
    "histogram_imitation_loss",
    "ExperimentReport",
    "MlpEncoder",
    "SyntheticDataset",
    "TrainConfig",
    "TrainingDiverged",
    "gen_clusters",
    "heldout_batch",
    "nearest_centroid_accuracy",
    "pretrain_classifier",
    "run_experiment",
    "train_restriction_head",
    "COMPONENT_WEIGHTS",
    "DiscriminatorOutputs",
    "DomainCode",
    "LossInputError",
    "LossWeights",
    "StyleCode",
    "class_loss",
    "l1_loss",
    "lsgan_adv",
    "regression_loss",
    "total_loss",
]
