"""Long-tailed classification on frozen embeddings with concept-cue losses.

The training objective combines a logit-adjusted cross-entropy with two
binary logit-adjusted auxiliary losses whose multi-label targets come from
instance-level zero-shot cues and class-level semantic-neighbor cues.
"""
from .cues import (
    CueTargets,
    expand_targets_llm,
    expand_targets_zs,
    topk_cues,
    variant_cues,
    zero_shot_logits,
)
from .dataset import (
    FEW,
    MANY,
    MEDIUM,
    LabeledEmbeddings,
    SplitDescriptor,
    assign_shot_split,
    build_longtail_indices,
    build_split,
    class_counts,
    compute_prior,
    longtail_profile,
)
from .losses import LossConfig, LossValue, bla_loss, cue_loss, la_loss
from .metrics import (
    EvalReport,
    TransitionReport,
    balancedness,
    evaluate,
    mean_misclassified,
    transition_analysis,
)
from .neighbors import (
    FixtureProvider,
    LiveProvider,
    NeighborGraph,
    batch_labels,
    build_neighbor_graph,
    filter_and_align,
    render_prompt,
)
from .tensorio import Manifest, load_dataset, read_tensor, write_tensor
from .trainer import (
    HeadModel,
    MlpHead,
    TrainConfig,
    TrainReport,
    cosine_lr,
    predict,
    sgd_step,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CueTargets",
    "EvalReport",
    "FEW",
    "FixtureProvider",
    "HeadModel",
    "LabeledEmbeddings",
    "LiveProvider",
    "LossConfig",
    "LossValue",
    "MANY",
    "MEDIUM",
    "Manifest",
    "MlpHead",
    "NeighborGraph",
    "SplitDescriptor",
    "TrainConfig",
    "TrainReport",
    "TransitionReport",
    "assign_shot_split",
    "balancedness",
    "batch_labels",
    "bla_loss",
    "build_longtail_indices",
    "build_neighbor_graph",
    "build_split",
    "class_counts",
    "compute_prior",
    "cosine_lr",
    "cue_loss",
    "evaluate",
    "expand_targets_llm",
    "expand_targets_zs",
    "filter_and_align",
    "la_loss",
    "load_dataset",
    "longtail_profile",
    "mean_misclassified",
    "predict",
    "read_tensor",
    "render_prompt",
    "sgd_step",
    "topk_cues",
    "train",
    "transition_analysis",
    "variant_cues",
    "write_tensor",
    "zero_shot_logits",
]
