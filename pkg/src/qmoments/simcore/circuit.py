"""Instruction set and the :class:`Circuit` container.

Qubit 0 is the most significant bit of every basis label. Measurement
outcomes are recorded as +1 (eigenvalue +1, i.e. |0> after rotation) or -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from ..errors import CircuitError
from .gates import validate_pauli
from .states import MixedState


def _tuple(values) -> tuple[int, ...]:
    return tuple(int(v) for v in values)


@dataclass(frozen=True)
class Hadamard:
    qubit: int


@dataclass(frozen=True)
class RotationY:
    qubit: int
    angle: float


@dataclass(frozen=True)
class ControlledNot:
    control: int
    target: int


@dataclass(frozen=True)
class ControlledZ:
    """Z on ``target`` when every control qubit equals its condition bit."""

    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "controls", _tuple(self.controls))
        object.__setattr__(self, "conditions", _tuple(self.conditions))


@dataclass(frozen=True)
class MultiControlledRotationY:
    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    target: int
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "controls", _tuple(self.controls))
        object.__setattr__(self, "conditions", _tuple(self.conditions))


@dataclass(frozen=True)
class ControlledSwap:
    """Swap register A with register B (qubit-wise) when the controls match."""

    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    register_a: tuple[int, ...]
    register_b: tuple[int, ...]

    def __post_init__(self):
        for name in ("controls", "conditions", "register_a", "register_b"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class ControlledUnitary:
    """Dense unitary on ``qubits`` applied when the controls match."""

    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    qubits: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("controls", "conditions", "qubits"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=complex))


@dataclass(frozen=True)
class MeasureX:
    qubit: int
    slot: int


@dataclass(frozen=True)
class MeasureZ:
    qubit: int
    slot: int


@dataclass(frozen=True)
class MeasurePauliString:
    """Measure a Pauli string on ``qubits``.

    Either ``pauli`` names a fixed string, or ``observable`` names a registered
    observable whose term is importance-sampled once per shot (shared by every
    instruction that refers to the same observable id).
    """

    qubits: tuple[int, ...]
    slot: int
    pauli: str | None = None
    observable: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", _tuple(self.qubits))
        if (self.pauli is None) == (self.observable is None):
            raise CircuitError("MeasurePauliString needs exactly one of pauli / observable")
        if self.pauli is not None:
            object.__setattr__(self, "pauli", validate_pauli(self.pauli))


@dataclass(frozen=True)
class ResetToZero:
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", _tuple(self.qubits))


@dataclass(frozen=True)
class PrepareMixed:
    qubits: tuple[int, ...]
    state: str

    def __post_init__(self):
        object.__setattr__(self, "qubits", _tuple(self.qubits))


Instruction = Union[
    Hadamard,
    RotationY,
    ControlledNot,
    ControlledZ,
    MultiControlledRotationY,
    ControlledSwap,
    ControlledUnitary,
    MeasureX,
    MeasureZ,
    MeasurePauliString,
    ResetToZero,
    PrepareMixed,
]

MEASUREMENTS = (MeasureX, MeasureZ, MeasurePauliString)


class SampledObservable(Protocol):
    """What the simulator needs from an importance-sampled observable."""

    num_qubits: int
    paulis: tuple[str, ...]
    coeffs: np.ndarray


def touched_qubits(ins: Instruction) -> tuple[int, ...]:
    if isinstance(ins, (Hadamard, RotationY, MeasureX, MeasureZ)):
        return (ins.qubit,)
    if isinstance(ins, ControlledNot):
        return (ins.control, ins.target)
    if isinstance(ins, (ControlledZ, MultiControlledRotationY)):
        return ins.controls + (ins.target,)
    if isinstance(ins, ControlledSwap):
        return ins.controls + ins.register_a + ins.register_b
    if isinstance(ins, ControlledUnitary):
        return ins.controls + ins.qubits
    if isinstance(ins, (MeasurePauliString, ResetToZero, PrepareMixed)):
        return ins.qubits
    raise CircuitError(f"unknown instruction {ins!r}")


@dataclass
class Circuit:
    """Ordered instruction list on ``num_qubits`` qubits.

    ``states`` and ``observables`` map ids used by :class:`PrepareMixed` and
    sampled :class:`MeasurePauliString` instructions to their objects.
    ``registers`` names qubit groups and ``meta`` holds builder-specific layout
    information (slot roles and so on).
    """

    num_qubits: int
    instructions: list = field(default_factory=list)
    num_slots: int = 0
    states: dict[str, MixedState] = field(default_factory=dict)
    observables: dict[str, SampledObservable] = field(default_factory=dict)
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def append(self, ins: Instruction) -> "Circuit":
        self.instructions.append(ins)
        return self

    def extend(self, instructions) -> "Circuit":
        for ins in instructions:
            self.append(ins)
        return self

    def new_slot(self) -> int:
        self.num_slots += 1
        return self.num_slots - 1

    def count(self, kind) -> int:
        return sum(isinstance(ins, kind) for ins in self.instructions)

    def slots_of(self, kind) -> list[int]:
        return [ins.slot for ins in self.instructions if isinstance(ins, kind)]

    def validate(self) -> "Circuit":
        seen_slots: set[int] = set()
        for ins in self.instructions:
            qubits = touched_qubits(ins)
            if any(q < 0 or q >= self.num_qubits for q in qubits):
                raise CircuitError(f"{ins!r}: qubit index out of range for {self.num_qubits} qubits")
            if len(set(qubits)) != len(qubits):
                raise CircuitError(f"{ins!r}: repeated qubit")
            if hasattr(ins, "conditions") and len(ins.conditions) != len(ins.controls):
                raise CircuitError(f"{ins!r}: one condition bit per control required")
            if hasattr(ins, "conditions") and any(c not in (0, 1) for c in ins.conditions):
                raise CircuitError(f"{ins!r}: condition bits must be 0 or 1")
            if isinstance(ins, ControlledSwap) and len(ins.register_a) != len(ins.register_b):
                raise CircuitError(f"{ins!r}: swapped registers differ in size")
            if isinstance(ins, ControlledUnitary) and ins.matrix.shape != (2 ** len(ins.qubits),) * 2:
                raise CircuitError(f"{ins!r}: matrix shape does not match qubit count")
            if isinstance(ins, PrepareMixed):
                state = self.states.get(ins.state)
                if state is None:
                    raise CircuitError(f"state id {ins.state!r} is not registered")
                if state.num_qubits != len(ins.qubits):
                    raise CircuitError(f"{ins!r}: state has {state.num_qubits} qubits")
            if isinstance(ins, MeasurePauliString):
                if ins.observable is not None:
                    obs = self.observables.get(ins.observable)
                    if obs is None:
                        raise CircuitError(f"observable id {ins.observable!r} is not registered")
                    if obs.num_qubits != len(ins.qubits):
                        raise CircuitError(f"{ins!r}: observable acts on {obs.num_qubits} qubits")
                elif len(ins.pauli) != len(ins.qubits):
                    raise CircuitError(f"{ins!r}: Pauli string length differs from qubit count")
            if isinstance(ins, MEASUREMENTS):
                if not 0 <= ins.slot < self.num_slots:
                    raise CircuitError(f"{ins!r}: slot outside 0..{self.num_slots - 1}")
                if ins.slot in seen_slots:
                    raise CircuitError(f"record slot {ins.slot} written twice")
                seen_slots.add(ins.slot)
        if len(seen_slots) != self.num_slots:
            missing = sorted(set(range(self.num_slots)) - seen_slots)
            raise CircuitError(f"record slots never written: {missing}")
        return self
