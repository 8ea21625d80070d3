"""Statevector shot engine, circuit model and exact density-operator oracles."""

from .circuit import (
    Circuit,
    ControlledNot,
    ControlledSwap,
    ControlledUnitary,
    ControlledZ,
    Hadamard,
    MeasurePauliString,
    MeasureX,
    MeasureZ,
    MultiControlledRotationY,
    PrepareMixed,
    ResetToZero,
    RotationY,
)
from .config import DEFAULT_MAX_QUBITS, ENV_MAX_QUBITS, max_qubits
from .density import evolve_density, permutation_trace_check, signed_expectation
from .records import ShotBatch, ShotRecord
from .states import MixedState, PureState, random_mixed_state, random_pure_state, reduced_density
from .statevector import run_shot, run_shots
from .streams import derive_seed

__all__ = [
    "Circuit",
    "ControlledNot",
    "ControlledSwap",
    "ControlledUnitary",
    "ControlledZ",
    "DEFAULT_MAX_QUBITS",
    "ENV_MAX_QUBITS",
    "Hadamard",
    "MeasurePauliString",
    "MeasureX",
    "MeasureZ",
    "MixedState",
    "MultiControlledRotationY",
    "PrepareMixed",
    "PureState",
    "ResetToZero",
    "RotationY",
    "ShotBatch",
    "ShotRecord",
    "derive_seed",
    "evolve_density",
    "max_qubits",
    "permutation_trace_check",
    "random_mixed_state",
    "random_pure_state",
    "reduced_density",
    "run_shot",
    "run_shots",
    "signed_expectation",
]
