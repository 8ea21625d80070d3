"""Batched statevector execution with mid-circuit measurement and reset.

A block of B shots is held as one complex tensor of shape (B, 2, ..., 2);
axis ``q + 1`` is qubit ``q``. Every shot in a block evolves independently:
measurements draw one uniform per shot and collapse that shot's row.
"""

from __future__ import annotations

from typing import Sequence

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
from .records import ShotBatch, ShotRecord
from .streams import block_rng, parallel_map, shot_blocks
from .tensor import apply_matrix, parity_mask, sub_axis

PREPARE_ATOL = 1e-10
# Amplitudes per block; the block size depends only on the circuit width.
_BLOCK_AMPLITUDES = 2**20


def block_size_for(num_qubits: int) -> int:
    return int(min(16384, max(16, _BLOCK_AMPLITUDES >> num_qubits)))


class _Executor:
    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.n = circuit.num_qubits
        self._masks: dict[tuple[int, ...], np.ndarray] = {}

    # -- helpers ---------------------------------------------------------
    def _index(self, qubits: Sequence[int], values: Sequence[int]) -> tuple:
        idx: list = [slice(None)] * (self.n + 1)
        for q, v in zip(qubits, values):
            idx[q + 1] = int(v)
        return tuple(idx)

    def _gate(self, psi, mat, targets, controls=(), conditions=()):
        if not controls:
            return apply_matrix(psi, mat, [t + 1 for t in targets])
        idx = self._index(controls, conditions)
        removed = [c + 1 for c in controls]
        axes = [sub_axis(t + 1, removed) for t in targets]
        psi[idx] = apply_matrix(psi[idx], mat, axes)
        return psi

    def _mask(self, support: tuple[int, ...]) -> np.ndarray:
        if support not in self._masks:
            self._masks[support] = parity_mask(self.n, support)
        return self._masks[support]

    def _measure_z(self, psi, qubit, rng):
        """Collapse ``qubit`` per shot; returns outcome bits (0/1) per row."""
        b = psi.shape[0]
        one = psi[self._index([qubit], [1])].reshape(b, -1)
        p1 = np.einsum("ij,ij->i", one, one.conj()).real
        bits = rng.random(b) < p1
        keep = np.where(bits, p1, 1.0 - p1)
        zero_view = psi[self._index([qubit], [0])]
        one_view = psi[self._index([qubit], [1])]
        zero_view[bits] = 0
        one_view[~bits] = 0
        psi /= np.sqrt(keep).reshape((b,) + (1,) * self.n)
        return bits

    def _measure_parity(self, psi, support, rng, rows=None):
        """Z-parity measurement on ``support`` (already rotated); returns bits."""
        sub = psi if rows is None else psi[rows]
        b = sub.shape[0]
        mask = self._mask(tuple(support))
        prob = (sub * sub.conj()).real.reshape(b, -1)
        p_odd = prob @ mask.reshape(-1).astype(float)
        bits = rng.random(b) < p_odd
        keep = np.where(bits, p_odd, 1.0 - p_odd)
        select = (mask[None, ...] == bits.reshape((b,) + (1,) * self.n).astype(np.int8))
        sub = np.where(select, sub, 0) / np.sqrt(keep).reshape((b,) + (1,) * self.n)
        if rows is None:
            psi[...] = sub
        else:
            psi[rows] = sub
        return bits

    def _measure_pauli(self, psi, qubits, label, rng, rows=None):
        support = [q for q, ch in zip(qubits, label) if ch != "I"]
        count = psi.shape[0] if rows is None else int(np.count_nonzero(rows))
        if not support:
            return np.zeros(count, dtype=bool)
        sub = psi if rows is None else psi[rows]
        for q, ch in zip(qubits, label):
            if ch in "XY":
                sub = apply_matrix(sub, gates.PAULI_BASIS_CHANGE[ch], [q + 1])
        bits = self._measure_parity(sub, support, rng)
        for q, ch in zip(qubits, label):
            if ch in "XY":
                sub = apply_matrix(sub, gates.PAULI_BASIS_CHANGE[ch].conj().T, [q + 1])
        if rows is None:
            psi[...] = sub
        else:
            psi[rows] = sub
        return bits

    def _reset(self, psi, qubit, rng):
        b = psi.shape[0]
        one = psi[self._index([qubit], [1])].reshape(b, -1)
        p1 = np.einsum("ij,ij->i", one, one.conj()).real
        bits = rng.random(b) < p1
        keep = np.where(bits, p1, 1.0 - p1)
        zero_view = psi[self._index([qubit], [0])]
        one_view = psi[self._index([qubit], [1])]
        zero_view[bits] = one_view[bits]
        one_view[...] = 0
        psi /= np.sqrt(keep).reshape((b,) + (1,) * self.n)

    def _prepare(self, psi, ins: PrepareMixed, rng):
        state = self.circuit.states[ins.state]
        b = psi.shape[0]
        qs = list(ins.qubits)
        zero = psi[self._index(qs, [0] * len(qs))]
        total = np.sum(np.abs(psi.reshape(b, -1)) ** 2, axis=1)
        inside = np.sum(np.abs(zero.reshape(b, -1)) ** 2, axis=1)
        if np.any(total - inside > PREPARE_ATOL):
            raise CircuitError(f"PrepareMixed on qubits {qs} that are not in |0...0>")
        choice = rng.choice(state.dim, size=b, p=state.probabilities)
        vecs = state.eigenvectors.T[choice]  # (b, 2^m)
        rest = zero.ndim - 1
        new = zero[..., None] * vecs.reshape((b,) + (1,) * rest + (state.dim,))
        new = new.reshape(new.shape[:-1] + (2,) * len(qs))
        # ``new`` has the untouched qubits first and the prepared ones last.
        remaining = [q for q in range(self.n) if q not in qs]
        source = {q: 1 + i for i, q in enumerate(remaining)}
        source.update({q: 1 + len(remaining) + i for i, q in enumerate(qs)})
        perm = [0] + [source[q] for q in range(self.n)]
        return np.ascontiguousarray(np.transpose(new, perm))

    # -- main loop -------------------------------------------------------
    def run_block(self, shots: int, rng: np.random.Generator) -> ShotBatch:
        c = self.circuit
        n = self.n
        psi = np.zeros((shots,) + (2,) * n, dtype=complex)
        psi.reshape(shots, -1)[:, 0] = 1.0
        outcomes = np.zeros((shots, c.num_slots), dtype=np.int8)

        terms, signs = {}, {}
        for obs_id in sorted(c.observables):
            obs = c.observables[obs_id]
            weights = np.abs(obs.coeffs)
            terms[obs_id] = rng.choice(len(weights), size=shots, p=weights / weights.sum())
            signs[obs_id] = np.sign(obs.coeffs[terms[obs_id]]).astype(np.int8)

        for ins in c.instructions:
            if isinstance(ins, Hadamard):
                psi = self._gate(psi, gates.H, [ins.qubit])
            elif isinstance(ins, RotationY):
                psi = self._gate(psi, gates.ry(ins.angle), [ins.qubit])
            elif isinstance(ins, ControlledNot):
                psi = self._gate(psi, gates.X, [ins.target], [ins.control], [1])
            elif isinstance(ins, ControlledZ):
                idx = self._index(ins.controls + (ins.target,), ins.conditions + (1,))
                psi[idx] *= -1
            elif isinstance(ins, MultiControlledRotationY):
                psi = self._gate(psi, gates.ry(ins.angle), [ins.target], ins.controls, ins.conditions)
            elif isinstance(ins, ControlledUnitary):
                psi = self._gate(psi, ins.matrix, list(ins.qubits), ins.controls, ins.conditions)
            elif isinstance(ins, ControlledSwap):
                idx = self._index(ins.controls, ins.conditions)
                sub = psi[idx]
                removed = [q + 1 for q in ins.controls]
                perm = list(range(sub.ndim))
                for a, bq in zip(ins.register_a, ins.register_b):
                    ia, ib = sub_axis(a + 1, removed), sub_axis(bq + 1, removed)
                    perm[ia], perm[ib] = perm[ib], perm[ia]
                psi[idx] = np.transpose(sub, perm).copy()
            elif isinstance(ins, MeasureZ):
                bits = self._measure_z(psi, ins.qubit, rng)
                outcomes[:, ins.slot] = np.where(bits, -1, 1)
            elif isinstance(ins, MeasureX):
                psi = self._gate(psi, gates.H, [ins.qubit])
                bits = self._measure_z(psi, ins.qubit, rng)
                outcomes[:, ins.slot] = np.where(bits, -1, 1)
            elif isinstance(ins, MeasurePauliString):
                if ins.pauli is not None:
                    bits = self._measure_pauli(psi, ins.qubits, ins.pauli, rng)
                else:
                    obs = c.observables[ins.observable]
                    bits = np.zeros(shots, dtype=bool)
                    chosen = terms[ins.observable]
                    for t in np.unique(chosen):
                        rows = chosen == t
                        bits[rows] = self._measure_pauli(psi, ins.qubits, obs.paulis[t], rng, rows)
                outcomes[:, ins.slot] = np.where(bits, -1, 1)
            elif isinstance(ins, ResetToZero):
                for q in ins.qubits:
                    self._reset(psi, q, rng)
            elif isinstance(ins, PrepareMixed):
                psi = self._prepare(psi, ins, rng)
            else:  # pragma: no cover - validate() rejects unknown instructions
                raise CircuitError(f"unsupported instruction {ins!r}")
        return ShotBatch(outcomes, terms, signs)


def _check_capacity(circuit: Circuit) -> None:
    cap = max_qubits()
    if circuit.num_qubits > cap:
        raise CapacityError(f"circuit has {circuit.num_qubits} qubits; simulator cap is {cap}")


def run_shot(circuit: Circuit, rng: np.random.Generator) -> ShotRecord:
    """Execute one shot of ``circuit`` drawing randomness from ``rng``."""
    circuit.validate()
    _check_capacity(circuit)
    return _Executor(circuit).run_block(1, rng).record(0)


def run_shots(
    circuit: Circuit,
    shots: int,
    seed: int,
    *,
    threads: int = 1,
    key: Sequence[int] = (),
) -> ShotBatch:
    """Execute ``shots`` shots; results depend only on ``(seed, key)``.

    Shots are split into fixed-size blocks, each with its own keyed stream,
    so ``threads`` changes wall-clock time but never the records.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuit.validate()
    _check_capacity(circuit)
    executor = _Executor(circuit)
    blocks = shot_blocks(shots, block_size_for(circuit.num_qubits))

    def work(item):
        b, (start, stop) = item
        return executor.run_block(stop - start, block_rng(seed, b, key))

    return ShotBatch.concatenate(parallel_map(work, list(enumerate(blocks)), threads))
