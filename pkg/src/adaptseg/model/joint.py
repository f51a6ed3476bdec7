"""Joint forward pass: shared encoder, segmentation head, reversed domain head."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .backbone import SegmentationBackbone
from .classifier import DomainClassifier
from .grl import grl


@dataclass
class JointOutput:
    seg_logits: torch.Tensor  # (B, regions, *patch)
    aux_seg_logits: list[torch.Tensor]  # finest-first; empty without deep supervision
    domain_logits: torch.Tensor | None  # (B, 2); None when no classifier attached


def forward_joint(
    backbone: SegmentationBackbone,
    classifier: DomainClassifier | None,
    patches: torch.Tensor,
    alpha: float,
) -> JointOutput:
    """One shared-encoder pass producing segmentation and domain logits.

    The classifier consumes the bottleneck feature map through the gradient
    reversal layer with coefficient ``alpha``.
    """
    seg_logits, aux, bottleneck = backbone(patches)
    domain_logits = classifier(grl(bottleneck, alpha)) if classifier is not None else None
    return JointOutput(seg_logits=seg_logits, aux_seg_logits=aux, domain_logits=domain_logits)


class JointModel(nn.Module):
    """Backbone plus optional domain classifier as one checkpointable module."""

    def __init__(self, backbone: SegmentationBackbone, classifier: DomainClassifier | None = None):
        super().__init__()
        self.backbone = backbone
        self.classifier = classifier

    def forward(self, patches: torch.Tensor, alpha: float = 0.0) -> JointOutput:
        return forward_joint(self.backbone, self.classifier, patches, alpha)
