from .backbone import (
    MAX_CHANNELS,
    BackboneConfig,
    SegmentationBackbone,
    ShapeError,
    build_backbone,
    parameter_groups,
)
from .checkpoint import Checkpoint, capture_rng, load_checkpoint, restore_rng, save_checkpoint
from .classifier import (
    N_DOMAINS,
    ClassifierConfig,
    DomainClassifier,
    build_classifier,
    classifier_parameter_count,
)
from .grl import GradientReversal, grl
from .joint import JointModel, JointOutput, forward_joint

__all__ = [
    "MAX_CHANNELS",
    "BackboneConfig",
    "SegmentationBackbone",
    "ShapeError",
    "build_backbone",
    "parameter_groups",
    "Checkpoint",
    "capture_rng",
    "load_checkpoint",
    "restore_rng",
    "save_checkpoint",
    "N_DOMAINS",
    "ClassifierConfig",
    "DomainClassifier",
    "build_classifier",
    "classifier_parameter_count",
    "GradientReversal",
    "grl",
    "JointModel",
    "JointOutput",
    "forward_joint",
]
