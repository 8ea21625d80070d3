"""Simultaneous estimation of Tr(rho^2) ... Tr(rho^k) with one reset-based chain.

Register layout of the chain circuit: qubit 0 is the SWAP-test ancilla,
qubits 1..m hold the persistent copy B1 and qubits m+1..2m the reusable
copy B2. Round j re-prepares B2, runs a Hadamard-test SWAP between B1 and B2
and records x_j; the running product x_1 ... x_l estimates Tr(rho^{l+1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exact_sampler import sample_circuit
from .simcore.circuit import (
    Circuit,
    ControlledSwap,
    ControlledUnitary,
    Hadamard,
    MeasurePauliString,
    MeasureX,
    PrepareMixed,
    ResetToZero,
)
from .simcore.config import max_qubits
from .simcore.records import ShotBatch
from .simcore.states import MixedState
from .simcore.statevector import run_shots

STATE_ID = "rho"
BACKENDS = ("statevector", "distribution", "auto")


@dataclass(frozen=True)
class MomentPlan:
    k: int
    shots: int
    seed: int
    eps: float | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("moment order k must be >= 2")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("target error eps must be > 0")

    @classmethod
    def from_error(cls, k: int, eps: float, seed: int) -> "MomentPlan":
        return cls(k=k, shots=required_shots(k, eps), seed=seed, eps=eps)


@dataclass(frozen=True)
class MomentEstimates:
    """Estimates of Tr(rho^2) ... Tr(rho^k); ``estimates[j - 2]`` is order j."""

    k: int
    shots: int
    seed: int
    estimates: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray | None = field(default=None)

    def order(self, j: int) -> float:
        if j == 1:
            return 1.0
        if not 2 <= j <= self.k:
            raise ValueError(f"order {j} outside 1..{self.k}")
        return float(self.estimates[j - 2])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "shots": self.shots,
            "seed": self.seed,
            "estimates": [float(v) for v in self.estimates],
            "stderr": [float(v) for v in self.stderr],
            "exact": None if self.exact is None else [float(v) for v in self.exact],
        }


def required_shots(k: int, eps: float) -> int:
    """Shots for all k-1 estimates to be eps-accurate w.p. 2/3 (Hoeffding + union bound)."""
    if k < 2:
        raise ValueError("moment order k must be >= 2")
    if not eps > 0:
        raise ValueError("target error eps must be > 0")
    return math.ceil(2.0 * math.log(6 * k) / eps**2)


def exact_moments(rho: MixedState, k: int) -> np.ndarray:
    """(Tr rho^2, ..., Tr rho^k) from the spectrum."""
    lam = rho.eigenvalues
    return np.array([float(np.sum(lam**j)) for j in range(2, k + 1)])


def build_moment_chain_circuit(
    m: int,
    k: int,
    *,
    state: MixedState | None = None,
    observable=None,
    lcu_matrix: np.ndarray | None = None,
) -> Circuit:
    """Chain circuit on 2m+1 qubits with k-1 SWAP-test rounds.

    With ``observable`` (a Pauli-sum), each round also measures the per-shot
    sampled Pauli term on B2 before it is reset, and the same term is measured
    on B1 at the end. With ``lcu_matrix`` an extra ancilla runs a Hadamard test
    of that unitary on B2 after every round and on B1 at the end.
    """
    if k < 2:
        raise ValueError("moment order k must be >= 2")
    if m < 1:
        raise ValueError("register size m must be >= 1")
    if observable is not None and lcu_matrix is not None:
        raise ValueError("choose either a sampled observable or an LCU unitary")
    anc = 0
    b1 = tuple(range(1, m + 1))
    b2 = tuple(range(m + 1, 2 * m + 1))
    lcu = 2 * m + 1
    n = 2 * m + 1 + (lcu_matrix is not None)
    c = Circuit(num_qubits=n)
    c.registers.update({"ancilla": (anc,), "b1": b1, "b2": b2})
    if lcu_matrix is not None:
        c.registers["lcu"] = (lcu,)
    if state is not None:
        if state.num_qubits != m:
            raise ValueError(f"state has {state.num_qubits} qubits, chain expects {m}")
        c.states[STATE_ID] = state
    if observable is not None:
        c.observables["O"] = observable

    def effect_on(register):
        if observable is not None:
            slot = c.new_slot()
            c.append(MeasurePauliString(register, slot, observable="O"))
            return slot
        if lcu_matrix is not None:
            slot = c.new_slot()
            c.append(ResetToZero((lcu,)))
            c.append(Hadamard(lcu))
            c.append(ControlledUnitary((lcu,), (1,), register, lcu_matrix))
            c.append(MeasureX(lcu, slot))
            return slot
        return None

    x_slots, y_slots = [], []
    c.append(PrepareMixed(b1, STATE_ID))
    for j in range(1, k):
        if j > 1:
            c.append(ResetToZero(b2))
        c.append(PrepareMixed(b2, STATE_ID))
        if j > 1:
            c.append(ResetToZero((anc,)))
        c.append(Hadamard(anc))
        c.append(ControlledSwap((anc,), (1,), b1, b2))
        slot = c.new_slot()
        c.append(MeasureX(anc, slot))
        x_slots.append(slot)
        y = effect_on(b2)
        if y is not None:
            y_slots.append(y)
    final = effect_on(b1)
    c.meta.update(
        {
            "kind": "moment-chain",
            "k": k,
            "m": m,
            "state": STATE_ID,
            "x_slots": tuple(x_slots),
            "y_slots": tuple(y_slots),
            "final_slot": final,
            "observable": "O" if observable is not None else None,
            "lcu": lcu_matrix is not None,
        }
    )
    return c


def execute(
    circuit: Circuit,
    shots: int,
    seed: int,
    *,
    backend: str = "statevector",
    threads: int = 1,
    key: Sequence[int] = (),
    law=None,
) -> ShotBatch:
    """Run ``circuit`` on the chosen backend.

    ``distribution`` samples the exact outcome law (chain and SWAP-test
    circuits only); ``auto`` uses the statevector engine when the circuit fits
    the simulator cap and the exact law otherwise. ``law`` (a precomputed
    exact law) is only used by the distribution backend.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if backend == "auto":
        backend = "statevector" if circuit.num_qubits <= max_qubits() else "distribution"
    if backend == "statevector":
        return run_shots(circuit, shots, seed, threads=threads, key=key)
    return sample_circuit(circuit, shots, seed, threads=threads, key=key, law=law)


def mean_and_stderr(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and std/sqrt(n) (population std, so stderr <= 1/sqrt(n) for +/-1 data)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    return values.mean(axis=0), values.std(axis=0) / math.sqrt(n)


def estimate_moments(
    rho: MixedState,
    plan: MomentPlan,
    *,
    backend: str = "statevector",
    threads: int = 1,
) -> MomentEstimates:
    """Run the chain ``plan.shots`` times and average the running products."""
    circuit = build_moment_chain_circuit(rho.num_qubits, plan.k, state=rho)
    batch = execute(circuit, plan.shots, plan.seed, backend=backend, threads=threads)
    products = batch.running_products(circuit.meta["x_slots"])
    mean, se = mean_and_stderr(products)
    return MomentEstimates(plan.k, plan.shots, plan.seed, mean, se, exact_moments(rho, plan.k))


def build_swap_test_circuit(m: int, k: int, *, state: MixedState | None = None, observable=None) -> Circuit:
    """Hadamard test of the cyclic shift of k copies (k*m + 1 qubits).

    The shift is a ladder of controlled register swaps. With ``observable``
    the per-shot sampled Pauli term is also measured on copy 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    anc = 0
    copies = [tuple(range(1 + i * m, 1 + (i + 1) * m)) for i in range(k)]
    c = Circuit(num_qubits=k * m + 1)
    c.registers["ancilla"] = (anc,)
    for i, reg in enumerate(copies):
        c.registers[f"copy{i + 1}"] = reg
    if state is not None:
        c.states[STATE_ID] = state
    if observable is not None:
        c.observables["O"] = observable
    for reg in copies:
        c.append(PrepareMixed(reg, STATE_ID))
    c.append(Hadamard(anc))
    for i in range(k - 1):
        c.append(ControlledSwap((anc,), (1,), copies[i], copies[i + 1]))
    x_slot = c.new_slot()
    c.append(MeasureX(anc, x_slot))
    y_slot = None
    if observable is not None:
        y_slot = c.new_slot()
        c.append(MeasurePauliString(copies[0], y_slot, observable="O"))
    c.meta.update(
        {
            "kind": "swap-test",
            "k": k,
            "m": m,
            "state": STATE_ID,
            "x_slot": x_slot,
            "y_slot": y_slot,
            "observable": "O" if observable is not None else None,
        }
    )
    return c


@dataclass(frozen=True)
class SwapTestEstimate:
    estimate: float
    stderr: float
    shots: int


def swap_test_samples(batch: ShotBatch, circuit: Circuit) -> np.ndarray:
    """Per-shot unbiased samples: x, or S*sgn(a_p)*x*y for a weighted test."""
    meta = circuit.meta
    x = batch.outcomes[:, meta["x_slot"]].astype(float)
    if meta["observable"] is None:
        return x
    obs = circuit.observables[meta["observable"]]
    scale = float(np.sum(np.abs(obs.coeffs)))
    return scale * batch.signs[meta["observable"]] * x * batch.outcomes[:, meta["y_slot"]]


def generalized_swap_test(
    rho: MixedState,
    k: int,
    shots: int,
    seed: int,
    *,
    weighted_by=None,
    backend: str = "statevector",
    threads: int = 1,
    key: Sequence[int] = (),
) -> SwapTestEstimate:
    """Estimate Tr(rho^k), or Tr(O rho^k) when ``weighted_by`` is a Pauli sum."""
    circuit = build_swap_test_circuit(rho.num_qubits, k, state=rho, observable=weighted_by)
    batch = execute(circuit, shots, seed, backend=backend, threads=threads, key=key)
    samples = swap_test_samples(batch, circuit)
    mean, se = mean_and_stderr(samples)
    return SwapTestEstimate(float(mean), float(se), shots)
