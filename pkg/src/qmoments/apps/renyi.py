"""Integer Renyi entropies and the purified Gibbs-Z moment experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NumericalError
from ..moments import mean_and_stderr
from ..simcore.circuit import Circuit, ControlledNot, ControlledSwap, Hadamard, MeasureX, ResetToZero, RotationY
from ..simcore.states import MixedState
from ..simcore.statevector import run_shots


def renyi_entropy(source: MixedState | float, alpha: int, base: float = math.e) -> float:
    """S_alpha = log(Tr rho^alpha) / (1 - alpha) from a state or a moment value."""
    if int(alpha) != alpha or alpha < 2:
        raise ValueError("alpha must be an integer >= 2")
    moment = source.moment(int(alpha)) if isinstance(source, MixedState) else float(source)
    if not moment > 0:
        raise NumericalError(
            f"moment Tr(rho^{alpha}) = {moment:.4g} is not positive; increase the number of shots"
        )
    return math.log(moment) / (1 - alpha) / math.log(base)


def gibbs_z_angle(beta: float) -> float:
    return 2.0 * math.atan(math.exp(beta))


def gibbs_z_instructions(system: int, purifier: int, beta: float) -> list:
    """RY then CNOT: the system qubit's reduced state is exp(-beta Z)/Z."""
    return [RotationY(system, gibbs_z_angle(beta)), ControlledNot(system, purifier)]


def gibbs_z_circuit(beta: float) -> Circuit:
    c = Circuit(num_qubits=2)
    c.registers.update({"system": (0,), "purifier": (1,)})
    return c.extend(gibbs_z_instructions(0, 1, beta))


def gibbs_z_state(beta: float) -> MixedState:
    return MixedState.from_matrix(np.diag([math.exp(-beta), math.exp(beta)]) / (2 * math.cosh(beta)))


def build_purified_chain(beta: float, k: int) -> Circuit:
    """Moment chain whose copies are prepared by the two-qubit purification.

    Qubits: 0 ancilla, (1, 2) B1 system/purifier, (3, 4) B2 system/purifier.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    c = Circuit(num_qubits=5)
    c.registers.update({"ancilla": (0,), "b1": (1,), "b2": (3,), "purifiers": (2, 4)})
    c.extend(gibbs_z_instructions(1, 2, beta))
    slots = []
    for j in range(1, k):
        if j > 1:
            c.append(ResetToZero((3, 4)))
            c.append(ResetToZero((0,)))
        c.extend(gibbs_z_instructions(3, 4, beta))
        c.append(Hadamard(0))
        c.append(ControlledSwap((0,), (1,), (1,), (3,)))
        slot = c.new_slot()
        c.append(MeasureX(0, slot))
        slots.append(slot)
    c.meta.update({"kind": "purified-chain", "k": k, "x_slots": tuple(slots)})
    return c


@dataclass(frozen=True)
class RenyiRow:
    alpha: int
    moment: float
    moment_stderr: float
    exact_moment: float
    entropy: float | None
    exact_entropy: float


def renyi_experiment(
    beta: float,
    alphas: Sequence[int],
    shots: int,
    seed: int,
    *,
    base: float = math.e,
    threads: int = 1,
) -> list[RenyiRow]:
    """Estimate Tr(rho^alpha) for all requested alphas from one purified chain."""
    alphas = sorted(set(int(a) for a in alphas))
    if not alphas or alphas[0] < 2:
        raise ValueError("alphas must be integers >= 2")
    circuit = build_purified_chain(beta, alphas[-1])
    batch = run_shots(circuit, shots, seed, threads=threads)
    mean, se = mean_and_stderr(batch.running_products(circuit.meta["x_slots"]))
    rho = gibbs_z_state(beta)
    rows = []
    for a in alphas:
        est = float(mean[a - 2])
        entropy = renyi_entropy(est, a, base) if est > 0 else None
        rows.append(RenyiRow(a, est, float(se[a - 2]), rho.moment(a), entropy, renyi_entropy(rho, a, base)))
    return rows
