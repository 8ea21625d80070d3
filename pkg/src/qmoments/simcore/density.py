"""Exact expectation oracles by density-operator evolution.

The operator is a tensor with 2n axes: rows on axes 0..n-1, columns on
n..2n-1. A recorded +/-1 measurement of a Pauli P applies the signed
instrument (P sigma + sigma P)/2 = M+ sigma M+ - M- sigma M-, an unrecorded one
applies (sigma + P sigma P)/2, so the final trace is E[prod of recorded outcomes].
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping

import numpy as np

from ..errors import CapacityError, CircuitError
from . import gates
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
from .config import max_qubits
from .states import MixedState
from .tensor import apply_matrix, controlled


def _check_cap(num_qubits: int) -> None:
    cap = max_qubits()
    if num_qubits > cap:
        raise CapacityError(f"density operator on {num_qubits} qubits exceeds the cap of {cap} qubits")


def initial_density(num_qubits: int) -> np.ndarray:
    rho = np.zeros((2,) * (2 * num_qubits), dtype=complex)
    rho[(0,) * (2 * num_qubits)] = 1.0
    return rho


def _unitary(rho, mat, qubits, n):
    rho = apply_matrix(rho, mat, list(qubits))
    return apply_matrix(rho, mat.conj(), [q + n for q in qubits])


def _pauli_instrument(rho, qubits, label, n, signed):
    support = [(q, ch) for q, ch in zip(qubits, label) if ch != "I"]
    if not support:
        return rho
    qs = [q for q, _ in support]
    p = gates.pauli_matrix("".join(ch for _, ch in support))
    left = apply_matrix(rho, p, qs)
    if signed:
        right = apply_matrix(rho, p.T, [q + n for q in qs])
        return (left + right) / 2
    both = apply_matrix(left, p.T, [q + n for q in qs])
    return (rho + both) / 2


def _reset(rho, qubit, n):
    idx00 = [slice(None)] * (2 * n)
    idx11 = [slice(None)] * (2 * n)
    idx00[qubit] = idx00[qubit + n] = 0
    idx11[qubit] = idx11[qubit + n] = 1
    block = rho[tuple(idx00)] + rho[tuple(idx11)]
    out = np.zeros_like(rho)
    out[tuple(idx00)] = block
    return out


def _prepare(rho, qubits, state: MixedState, n):
    for q in qubits:
        rho = _reset(rho, q, n)
    idx = [slice(None)] * (2 * n)
    for q in qubits:
        idx[q] = idx[q + n] = 0
    rest = rho[tuple(idx)]  # axes: remaining rows then remaining columns
    m = len(qubits)
    sigma = state.matrix.reshape((2,) * (2 * m))
    full = np.multiply.outer(rest, sigma)
    remaining = [q for q in range(n) if q not in qubits]
    r = len(remaining)
    source = {}
    for i, q in enumerate(remaining):
        source[q] = i
        source[q + n] = r + i
    for i, q in enumerate(qubits):
        source[q] = 2 * r + i
        source[q + n] = 2 * r + m + i
    return np.transpose(full, [source[a] for a in range(2 * n)])


def evolve_density(
    circuit: Circuit,
    slots: Iterable[int] = (),
    paulis: Mapping[str, str] | None = None,
    rho: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve |0..0><0..0| (or ``rho``) through ``circuit``.

    Measurements writing a slot in ``slots`` use the signed instrument; all
    others are averaged out. ``paulis`` fixes the term used by each sampled
    observable id.
    """
    circuit.validate()
    n = circuit.num_qubits
    _check_cap(n)
    signed = set(int(s) for s in slots)
    paulis = dict(paulis or {})
    rho = initial_density(n) if rho is None else rho.reshape((2,) * (2 * n)).astype(complex)
    for ins in circuit.instructions:
        if isinstance(ins, Hadamard):
            rho = _unitary(rho, gates.H, [ins.qubit], n)
        elif isinstance(ins, RotationY):
            rho = _unitary(rho, gates.ry(ins.angle), [ins.qubit], n)
        elif isinstance(ins, ControlledNot):
            rho = _unitary(rho, controlled(gates.X, [1]), [ins.control, ins.target], n)
        elif isinstance(ins, ControlledZ):
            rho = _unitary(rho, controlled(gates.Z, ins.conditions), ins.controls + (ins.target,), n)
        elif isinstance(ins, MultiControlledRotationY):
            mat = controlled(gates.ry(ins.angle), ins.conditions)
            rho = _unitary(rho, mat, ins.controls + (ins.target,), n)
        elif isinstance(ins, ControlledUnitary):
            rho = _unitary(rho, controlled(ins.matrix, ins.conditions), ins.controls + ins.qubits, n)
        elif isinstance(ins, ControlledSwap):
            mat = controlled(gates.swap_matrix(len(ins.register_a)), ins.conditions)
            rho = _unitary(rho, mat, ins.controls + ins.register_a + ins.register_b, n)
        elif isinstance(ins, MeasureZ):
            rho = _pauli_instrument(rho, (ins.qubit,), "Z", n, ins.slot in signed)
        elif isinstance(ins, MeasureX):
            rho = _unitary(rho, gates.H, [ins.qubit], n)
            rho = _pauli_instrument(rho, (ins.qubit,), "Z", n, ins.slot in signed)
        elif isinstance(ins, MeasurePauliString):
            if ins.pauli is not None:
                label = ins.pauli
            elif ins.observable in paulis:
                label = paulis[ins.observable]
            else:
                raise CircuitError(f"no Pauli term fixed for observable {ins.observable!r}")
            rho = _pauli_instrument(rho, ins.qubits, label, n, ins.slot in signed)
        elif isinstance(ins, ResetToZero):
            for q in ins.qubits:
                rho = _reset(rho, q, n)
        elif isinstance(ins, PrepareMixed):
            rho = _prepare(rho, list(ins.qubits), circuit.states[ins.state], n)
        else:  # pragma: no cover
            raise CircuitError(f"unsupported instruction {ins!r}")
    return rho


def _trace(rho: np.ndarray, n: int) -> complex:
    d = 2**n
    return np.trace(rho.reshape(d, d))


def signed_expectation(circuit: Circuit, slots: Iterable[int], *, rescale: bool = False) -> float:
    """Exact E[prod_{s in slots} x_s] for ``circuit``.

    Importance-sampled Pauli measurements are averaged over their terms with
    the sampling weights |a_p|/S. With ``rescale=True`` every sampled
    observable also contributes its estimator factor S*sgn(a_p), so the result
    is the expectation of the rescaled estimator, sum_p a_p E_p.
    """
    slots = tuple(slots)
    ids = sorted(circuit.observables)
    n = circuit.num_qubits
    if not ids:
        return float(_trace(evolve_density(circuit, slots), n).real)
    total = 0.0
    choices = [range(len(circuit.observables[i].paulis)) for i in ids]
    for combo in itertools.product(*choices):
        weight = 1.0
        assignment = {}
        for obs_id, t in zip(ids, combo):
            obs = circuit.observables[obs_id]
            coeff = float(obs.coeffs[t])
            s_norm = float(np.sum(np.abs(obs.coeffs)))
            weight *= coeff if rescale else abs(coeff) / s_norm
            assignment[obs_id] = obs.paulis[t]
        if weight == 0.0:
            continue
        total += weight * _trace(evolve_density(circuit, slots, assignment), n).real
    return float(total)


def permutation_trace_check(rho: MixedState, k: int) -> float:
    """Tr(P_k rho^{(x)k}) with P_k the cyclic shift of k copies.

    P_k maps copy j to copy j+1 (mod k); it is built as an explicit index
    permutation of the d^k basis states and the trace is summed entry by entry.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_cap(k * rho.num_qubits)
    d = rho.dim
    basis = np.arange(d**k)
    digits = np.stack([(basis // d ** (k - 1 - j)) % d for j in range(k)], axis=1)
    shifted = np.roll(digits, 1, axis=1)  # row index P_k x, column index x
    mat = rho.matrix
    entries = np.ones(d**k, dtype=complex)
    for j in range(k):
        entries *= mat[shifted[:, j], digits[:, j]]
    return float(entries.sum().real)


def cyclic_permutation_matrix(d: int, k: int) -> np.ndarray:
    """Dense P_k on k copies of a d-level system (for small oracle checks)."""
    _check_cap(k * (d.bit_length() - 1))
    basis = np.arange(d**k)
    digits = np.stack([(basis // d ** (k - 1 - j)) % d for j in range(k)], axis=1)
    shifted = np.roll(digits, 1, axis=1)
    rows = (shifted * (d ** np.arange(k - 1, -1, -1))).sum(axis=1)
    out = np.zeros((d**k, d**k), dtype=complex)
    out[rows, basis] = 1.0
    return out
