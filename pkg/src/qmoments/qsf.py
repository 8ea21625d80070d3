"""Direct estimation of polynomial functionals f(rho) = sum_j a_j Tr(rho^j).

One ancilla A in |+>, a control register B of ceil(log2 k) qubits and the
copy registers B1, B2. Register B is driven by a ladder of multi-controlled
RY rotations into sum_i sqrt(lambda_i)|g(i-1)> with g the binary-reflected
Gray code; the branch g(i-1) sees i-1 controlled swaps, so <X_A> is
sum_i lambda_i sgn(a_i) Tr(rho^i) after the sign-fixing CZ gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError
from .moments import MomentEstimates, MomentPlan, STATE_ID, estimate_moments, execute
from .simcore.circuit import (
    Circuit,
    ControlledSwap,
    ControlledZ,
    Hadamard,
    MeasureX,
    MultiControlledRotationY,
    PrepareMixed,
    ResetToZero,
)
from .simcore.config import max_qubits
from .simcore.gates import ry
from .simcore.states import MixedState
from .simcore.tensor import apply_matrix, controlled


@dataclass(frozen=True)
class PolynomialFunctional:
    """Coefficients a_1..a_k of f(rho) = sum_j a_j Tr(rho^j)."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        if not coeffs:
            raise ValueError("a functional needs at least one coefficient")
        if not all(math.isfinite(a) for a in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def parse(cls, text: str) -> "PolynomialFunctional":
        return cls(tuple(float(tok) for tok in text.replace(",", " ").split()))

    @property
    def k(self) -> int:
        return len(self.coeffs)

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(a) for a in self.coeffs))

    @property
    def weights(self) -> np.ndarray:
        norm = self.l1_norm
        if norm == 0:
            raise ValueError("functional has zero l1 norm")
        return np.abs(np.array(self.coeffs)) / norm

    @property
    def signs(self) -> np.ndarray:
        return np.sign(np.array(self.coeffs)).astype(int)

    @property
    def majority_negative(self) -> bool:
        return int(self.signs.sum()) < 0

    def padded(self, k: int) -> "PolynomialFunctional":
        if k < self.k:
            raise ValueError("cannot pad to a smaller order")
        return PolynomialFunctional(self.coeffs + (0.0,) * (k - self.k))

    def evaluate(self, moments: Sequence[float]) -> float:
        """sum_j a_j m_j with ``moments[j - 1]`` = Tr(rho^j)."""
        return float(sum(a * m for a, m in zip(self.coeffs, moments)))

    def exact(self, rho: MixedState) -> float:
        return self.evaluate([rho.moment(j) for j in range(1, self.k + 1)])


def register_width(k: int) -> int:
    return 0 if k <= 1 else math.ceil(math.log2(k))


def gray_code(i: int, width: int) -> str:
    if not 0 <= i < 2**width:
        raise ValueError(f"index {i} outside 0..{2**width - 1}")
    return format(i ^ (i >> 1), f"0{width}b") if width else ""


@dataclass(frozen=True)
class LadderStep:
    target: int  # bit position within B (0 = most significant)
    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    angle: float


@dataclass(frozen=True)
class GivensLadder:
    width: int
    labels: tuple[str, ...]
    cumulative: tuple[float, ...]
    steps: tuple[LadderStep | None, ...]  # None marks a skipped (zero-tail) step

    def state(self) -> np.ndarray:
        """Amplitudes of the ladder applied to |0...0> (for checks)."""
        psi = np.zeros((2,) * max(self.width, 1), dtype=complex)
        psi[(0,) * max(self.width, 1)] = 1.0
        if self.width == 0:
            return np.array([1.0 + 0j])
        for step in self.steps:
            if step is None:
                continue
            mat = controlled(ry(step.angle), step.conditions)
            psi = apply_matrix(psi, mat, list(step.controls) + [step.target])
        return psi.reshape(-1)


def build_givens_ladder(f: PolynomialFunctional) -> GivensLadder:
    lam = f.weights  # raises for a zero functional
    k = f.k
    width = register_width(k)
    labels = tuple(gray_code(i, width) for i in range(k))
    cumulative = tuple(float(lam[j:].sum()) for j in range(k))
    steps: list[LadderStep | None] = []
    for j in range(1, k):
        big = cumulative[j - 1]
        if big <= 0:
            steps.append(None)
            continue
        ratio = min(1.0, max(0.0, lam[j - 1] / big))
        angle = 2.0 * math.acos(math.sqrt(ratio))
        prev, cur = labels[j - 1], labels[j]
        target = next(b for b in range(width) if prev[b] != cur[b])
        controls = tuple(b for b in range(width) if b != target)
        conditions = tuple(int(cur[b]) for b in controls)
        steps.append(LadderStep(target, controls, conditions, angle))
    return GivensLadder(width, labels, cumulative, tuple(steps))


def negative_basis(f: PolynomialFunctional) -> list[int]:
    """Indices i (1-based) whose branch g(i-1) receives a CZ.

    The minority sign gets the CZ; if negatives dominate the whole estimate
    is negated at the end instead.
    """
    flip = f.majority_negative
    return [i for i, a in enumerate(f.coeffs, start=1) if (a > 0 if flip else a < 0)]


def build_qsf_circuit(f: PolynomialFunctional, m: int, *, state: MixedState | None = None) -> Circuit:
    """Circuit on 2m + ceil(log2 k) + 1 qubits; slot 0 is the X outcome of A."""
    k = f.k
    w = register_width(k)
    anc = 0
    breg = tuple(range(1, 1 + w))
    b1 = tuple(range(1 + w, 1 + w + m))
    b2 = tuple(range(1 + w + m, 1 + w + 2 * m))
    c = Circuit(num_qubits=2 * m + w + 1)
    c.registers.update({"ancilla": (anc,), "control": breg, "b1": b1, "b2": b2})
    if state is not None:
        c.states[STATE_ID] = state
    ladder = build_givens_ladder(f)
    c.append(PrepareMixed(b1, STATE_ID))
    c.append(Hadamard(anc))
    for j in range(1, k):
        step = ladder.steps[j - 1]
        if step is not None:
            c.append(
                MultiControlledRotationY(
                    tuple(breg[q] for q in step.controls), step.conditions, breg[step.target], step.angle
                )
            )
        if j > 1:
            c.append(ResetToZero(b2))
        c.append(PrepareMixed(b2, STATE_ID))
        label = ladder.labels[j]
        c.append(ControlledSwap((anc,) + breg, (1,) + tuple(int(ch) for ch in label), b1, b2))
    for i in negative_basis(f):
        label = ladder.labels[i - 1]
        c.append(ControlledZ(breg, tuple(int(ch) for ch in label), anc))
    slot = c.new_slot()
    c.append(MeasureX(anc, slot))
    c.meta.update({"kind": "qsf", "k": k, "m": m, "state": STATE_ID, "x_slot": slot})
    return c


@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    stderr: float
    shots: int
    exact: float | None = None


def estimate_functional(
    rho: MixedState,
    f: PolynomialFunctional,
    shots: int,
    seed: int,
    *,
    threads: int = 1,
    key: Sequence[int] = (),
) -> FunctionalEstimate:
    """Unbiased estimate ||f||_1 * mean(x), negated when negatives dominate."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    exact = f.exact(rho)
    if f.l1_norm == 0:
        return FunctionalEstimate(0.0, 0.0, shots, exact)
    if f.k == 1:
        return FunctionalEstimate(f.coeffs[0], 0.0, shots, exact)
    circuit = build_qsf_circuit(f, rho.num_qubits, state=rho)
    batch = execute(circuit, shots, seed, threads=threads, key=key)
    x = batch.outcomes[:, circuit.meta["x_slot"]].astype(float)
    scale = f.l1_norm * (-1.0 if f.majority_negative else 1.0)
    return FunctionalEstimate(float(scale * x.mean()), float(abs(scale) * x.std() / math.sqrt(shots)), shots, exact)


def functional_from_moments(est: MomentEstimates, f: PolynomialFunctional) -> FunctionalEstimate:
    """Classical contraction a_1 + sum_{j>=2} a_j p_j; ``stderr`` holds the
    worst-case bound sum_{j>=2} |a_j| stderr_j."""
    if f.k > est.k:
        raise ValueError(f"functional has order {f.k} but moments only reach {est.k}")
    value = f.coeffs[0] + sum(a * est.order(j) for j, a in enumerate(f.coeffs[1:], start=2))
    bound = sum(abs(a) * float(est.stderr[j - 2]) for j, a in enumerate(f.coeffs[1:], start=2))
    exact = None
    if est.exact is not None:
        exact = f.evaluate([1.0] + [float(v) for v in est.exact])
    return FunctionalEstimate(float(value), float(bound), est.shots, exact)


def build_parallel_qsf_circuit(fs: Sequence[PolynomialFunctional], m: int, *, state: MixedState | None = None) -> Circuit:
    """Several functionals on shared copy registers.

    Functional i owns ancilla A_i and control register B^(i); every round
    applies all ladders' next rotation, re-prepares B2 once and then the
    controlled swaps of every functional in turn. Slot i is X on A_i.
    """
    k = max(f.k for f in fs)
    if k < 2:
        raise ValueError("parallel circuit needs at least one functional of order >= 2")
    fs = [f.padded(k) for f in fs]
    w = register_width(k)
    nf = len(fs)
    ancs = tuple(i * (w + 1) for i in range(nf))
    bregs = [tuple(range(a + 1, a + 1 + w)) for a in ancs]
    base = nf * (w + 1)
    b1 = tuple(range(base, base + m))
    b2 = tuple(range(base + m, base + 2 * m))
    c = Circuit(num_qubits=base + 2 * m)
    c.registers.update({"ancillas": ancs, "b1": b1, "b2": b2})
    for i, reg in enumerate(bregs):
        c.registers[f"control{i}"] = reg
    if state is not None:
        c.states[STATE_ID] = state
    ladders = [build_givens_ladder(f) for f in fs]
    c.append(PrepareMixed(b1, STATE_ID))
    for a in ancs:
        c.append(Hadamard(a))
    for j in range(1, k):
        for ladder, breg in zip(ladders, bregs):
            step = ladder.steps[j - 1]
            if step is not None:
                c.append(
                    MultiControlledRotationY(
                        tuple(breg[q] for q in step.controls), step.conditions, breg[step.target], step.angle
                    )
                )
        if j > 1:
            c.append(ResetToZero(b2))
        c.append(PrepareMixed(b2, STATE_ID))
        for a, ladder, breg in zip(ancs, ladders, bregs):
            label = ladder.labels[j]
            c.append(ControlledSwap((a,) + breg, (1,) + tuple(int(ch) for ch in label), b1, b2))
    slots = []
    for f, a, ladder, breg in zip(fs, ancs, ladders, bregs):
        for i in negative_basis(f):
            c.append(ControlledZ(breg, tuple(int(ch) for ch in ladder.labels[i - 1]), a))
    for a in ancs:
        slot = c.new_slot()
        c.append(MeasureX(a, slot))
        slots.append(slot)
    c.meta.update({"kind": "parallel-qsf", "k": k, "m": m, "state": STATE_ID, "x_slots": tuple(slots)})
    return c


STRATEGIES = ("moment-reuse", "parallel-circuit")


def estimate_multiple_functionals(
    rho: MixedState,
    fs: Sequence[PolynomialFunctional],
    shots: int,
    seed: int,
    *,
    strategy: str = "moment-reuse",
    threads: int = 1,
    backend: str = "statevector",
) -> list[FunctionalEstimate]:
    """Estimate every functional in ``fs`` from one shared shot stream."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    fs = list(fs)
    if not fs:
        return []
    k = max(f.k for f in fs)
    if k == 1:
        return [FunctionalEstimate(f.coeffs[0], 0.0, shots, f.coeffs[0]) for f in fs]
    if strategy == "moment-reuse":
        est = estimate_moments(rho, MomentPlan(k, shots, seed), backend=backend, threads=threads)
        return [functional_from_moments(est, f) for f in fs]

    w = register_width(k)
    width = 2 * rho.num_qubits + len(fs) * (w + 1)
    if width > max_qubits():
        raise CapacityError(
            f"parallel circuit needs {width} qubits (cap {max_qubits()}); use strategy 'moment-reuse'"
        )
    active = [f for f in fs if f.l1_norm > 0]
    if not active:
        return [FunctionalEstimate(0.0, 0.0, shots, 0.0) for _ in fs]
    circuit = build_parallel_qsf_circuit(active, rho.num_qubits, state=rho)
    batch = execute(circuit, shots, seed, threads=threads)
    out, pos = [], 0
    for f in fs:
        if f.l1_norm == 0:
            out.append(FunctionalEstimate(0.0, 0.0, shots, 0.0))
            continue
        x = batch.outcomes[:, circuit.meta["x_slots"][pos]].astype(float)
        pos += 1
        scale = f.l1_norm * (-1.0 if f.majority_negative else 1.0)
        out.append(
            FunctionalEstimate(float(scale * x.mean()), float(abs(scale) * x.std() / math.sqrt(shots)), shots, f.exact(rho))
        )
    return out
