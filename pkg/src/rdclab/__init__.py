"""rdclab: rate-distortion-classification/perception compression lab.

Trains RDC and RDP codecs on 28x28 digit images with dithered quantization,
supports the frozen-encoder universal protocol, and ships an exact
finite-alphabet oracle for the underlying tradeoff functions.
"""

from .datamodel import (
    ConstraintRegion,
    CurvePoint,
    DiscreteSource,
    Mode,
    Objective,
    QuantizerSpec,
    RunConfig,
    TradeoffParams,
    rate_of,
    run_id,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "QuantizerSpec",
    "TradeoffParams",
    "RunConfig",
    "CurvePoint",
    "DiscreteSource",
    "ConstraintRegion",
    "Mode",
    "Objective",
    "rate_of",
    "validate",
    "run_id",
    "__version__",
]
