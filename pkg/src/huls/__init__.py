"""Hybrid unsupervised learning toolkit for batch-process monitoring.

An ITM-resampled SOM with U-matrix/watershed clustering, a plain-SOM
baseline, online scoring, and a synthetic batch-process generator.
"""

from .dataset import (
    Dataset,
    NormalizationParams,
    apply_normalization,
    fit_normalization,
    invert_normalization,
    load_csv,
    write_csv,
)
from .som import (
    BmuResult,
    SomConfig,
    SomModel,
    find_bmu,
    find_two_bmus,
    init_random,
    learning_rate,
    neighborhood,
    quantization_error,
    topographic_error,
    train,
)
from .umatrix import ClusterMap, UMatrix, assign_cluster, compute_umatrix, watershed
from .itm import (
    ItmGraph,
    find_two_bmus_itm,
    itm_quantization_error,
    itm_step,
    itm_train,
    resampled_set,
)
from .pipeline import (
    ComparisonReport,
    HulsModel,
    ModelMetrics,
    compare_models,
    evaluate_model,
    train_huls,
    train_plain,
)
from .monitor import (
    AlarmPolicy,
    MonitoringTrace,
    phase_trajectory,
    resolve_threshold,
    score_stream,
)
from .batchsim import BatchRecord, CampaignTruth, ProcessConfig, generate_batch, generate_campaign
from .io import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "AlarmPolicy",
    "BatchRecord",
    "BmuResult",
    "CampaignTruth",
    "ClusterMap",
    "ComparisonReport",
    "Dataset",
    "HulsModel",
    "ItmGraph",
    "ModelMetrics",
    "MonitoringTrace",
    "NormalizationParams",
    "ProcessConfig",
    "SomConfig",
    "SomModel",
    "UMatrix",
    "apply_normalization",
    "assign_cluster",
    "compare_models",
    "compute_umatrix",
    "evaluate_model",
    "find_bmu",
    "find_two_bmus",
    "find_two_bmus_itm",
    "fit_normalization",
    "generate_batch",
    "generate_campaign",
    "init_random",
    "invert_normalization",
    "itm_quantization_error",
    "itm_step",
    "itm_train",
    "learning_rate",
    "load_csv",
    "load_model",
    "neighborhood",
    "phase_trajectory",
    "quantization_error",
    "resampled_set",
    "resolve_threshold",
    "save_model",
    "score_stream",
    "topographic_error",
    "train",
    "train_huls",
    "train_plain",
    "watershed",
    "write_csv",
]
