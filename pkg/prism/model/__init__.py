"""
The PRISM forecaster: configuration, parameters, encoder blocks and checkpoints.
"""

from prism.model.checkpoint import load_checkpoint, save_checkpoint
from prism.model.config import VARIANTS, PrismConfig
from prism.model.network import (
    Complexity,
    EncoderDiagnostics,
    ForwardResult,
    LayerDiagnostics,
    PrismModel,
    complexity,
    estimate_flops,
    forward,
)
from prism.model.params import parameter_count

__all__ = [
    "VARIANTS",
    "Complexity",
    "EncoderDiagnostics",
    "ForwardResult",
    "LayerDiagnostics",
    "PrismConfig",
    "PrismModel",
    "complexity",
    "estimate_flops",
    "forward",
    "load_checkpoint",
    "parameter_count",
    "save_checkpoint",
]
