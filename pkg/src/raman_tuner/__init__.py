"""Pulse design for a Raman-coupled Lambda system in a lossy cavity."""
from .model import (
    ConditionalState,
    ModeIndex,
    NumericError,
    OperationKind,
    ParameterError,
    PulseShape,
    ShapeKind,
    SystemParams,
    TuningOutcome,
    from_internal,
    to_internal,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionalState",
    "ModeIndex",
    "NumericError",
    "OperationKind",
    "ParameterError",
    "PulseShape",
    "ShapeKind",
    "SystemParams",
    "TuningOutcome",
    "from_internal",
    "to_internal",
]
