"""Exact simulation of two-source linear-optical teleportation with lossy detectors and cascades."""
from __future__ import annotations

from .detection import CascadeSpec, DiagonalPovm, apply_measurement, cascade_effective_coefficient
from .experiment import (
    ExperimentConfig,
    IdealState,
    OrderedDensity,
    build_output_state,
    cross_term_check,
    fidelity,
)
from .fock import DensityOperator, Ket, basis_ket, inner_product, partial_trace, squared_norm
from .scalar import Scalar

__all__ = [
    "CascadeSpec",
    "DiagonalPovm",
    "apply_measurement",
    "cascade_effective_coefficient",
    "ExperimentConfig",
    "IdealState",
    "OrderedDensity",
    "build_output_state",
    "cross_term_check",
    "fidelity",
    "DensityOperator",
    "Ket",
    "basis_ket",
    "inner_product",
    "partial_trace",
    "squared_norm",
    "Scalar",
]

__version__ = "0.1.0"
