"""Domain-adversarial 3D segmentation lab.

A segmentation backbone with a gradient-reversal domain classifier, the
supervised baseline strategies, a two-domain synthetic benchmark, and a
Dice/HD95 evaluation harness with cross-validation and significance testing.
"""

__version__ = "0.1.0"
