"""Linear and quadratic Bell inequalities as multipartite entanglement witnesses."""

from quadbell.kernels import BACKEND
from quadbell.operators import (
    BellOperator,
    MeasurementSettings,
    build,
    build_F,
    build_S,
    expand_terms,
    family_terms,
    verify_identities,
)
from quadbell.tensor import QuantumState, StateError, UnitVector3
from quadbell.witness import SCHEMA_VERSION, WitnessReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BellOperator",
    "MeasurementSettings",
    "QuantumState",
    "SCHEMA_VERSION",
    "StateError",
    "UnitVector3",
    "WitnessReport",
    "build",
    "build_F",
    "build_S",
    "evaluate",
    "expand_terms",
    "family_terms",
    "verify_identities",
]
