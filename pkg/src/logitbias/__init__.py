"""Single-image test-time adaptation via entropy-minimized logit biases.

Two additive corrections are learned per test sample at the logit level:
a global bias from consistency across augmented views, and a spatial
bias from the most class-relevant regions of the feature grid. Both are
fused with the unadapted prediction by plain addition.
"""

from .container import (
    ClassEmbeddingSet,
    DatasetManifest,
    SampleRecord,
    read_class_file,
    read_manifest,
    read_sample_file,
    write_class_file,
    write_manifest,
    write_sample_file,
)
from .global_bias import GlobalConfig, global_adjusted_logits, learn_global_bias, select_confident_views
from .numerics import (
    TTATrace,
    cosine_logits,
    entropy,
    l2_normalize_rows,
    mean_softmax_entropy,
    mean_softmax_entropy_gradient,
    softmax,
)
from .pipeline import (
    MODES,
    PRESETS,
    EvalReport,
    SampleResult,
    TTAConfig,
    adapt_sample,
    emit_report,
    evaluate_dataset,
)
from .spatial_bias import (
    SpatialConfig,
    category_aware_map,
    learn_spatial_bias,
    significant_region_count,
    spatial_logits,
    topk_regions,
)

__version__ = "0.1.0"

__all__ = [
    "ClassEmbeddingSet",
    "DatasetManifest",
    "EvalReport",
    "GlobalConfig",
    "MODES",
    "PRESETS",
    "SampleRecord",
    "SampleResult",
    "SpatialConfig",
    "TTAConfig",
    "TTATrace",
    "adapt_sample",
    "category_aware_map",
    "cosine_logits",
    "emit_report",
    "entropy",
    "evaluate_dataset",
    "global_adjusted_logits",
    "l2_normalize_rows",
    "learn_global_bias",
    "learn_spatial_bias",
    "mean_softmax_entropy",
    "mean_softmax_entropy_gradient",
    "read_class_file",
    "read_manifest",
    "read_sample_file",
    "select_confident_views",
    "significant_region_count",
    "softmax",
    "spatial_logits",
    "topk_regions",
    "write_class_file",
    "write_manifest",
    "write_sample_file",
]
