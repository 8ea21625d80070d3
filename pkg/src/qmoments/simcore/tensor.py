"""Small tensor utilities shared by the statevector and density engines."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def apply_matrix(t: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a 2^k x 2^k matrix into ``k`` qubit axes of ``t``.

    The first listed axis is the most significant bit of ``mat``'s index.
    Returns a new array with the output axes back in their original places.
    """
    k = len(axes)
    op = np.asarray(mat).reshape((2,) * (2 * k))
    out = np.tensordot(op, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def controlled(mat: np.ndarray, conditions: Sequence[int]) -> np.ndarray:
    """Dense matrix acting as ``mat`` when the control bits equal ``conditions``.

    Control qubits come first (most significant), target qubits after.
    """
    c = len(conditions)
    d = mat.shape[0]
    full = np.eye(d * 2**c, dtype=complex)
    pattern = 0
    for bit in conditions:
        pattern = (pattern << 1) | int(bit)
    full[pattern * d : (pattern + 1) * d, pattern * d : (pattern + 1) * d] = mat
    return full


def parity_mask(num_qubits: int, support: Sequence[int]) -> np.ndarray:
    """Tensor of shape (2,)*n holding the parity (0/1) of the ``support`` bits."""
    mask = np.zeros((2,) * num_qubits, dtype=np.int8)
    for q in support:
        shape = [1] * num_qubits
        shape[q] = 2
        mask = mask ^ np.arange(2, dtype=np.int8).reshape(shape)
    return mask


def sub_axis(axis: int, removed: Sequence[int]) -> int:
    """Position of ``axis`` after the axes in ``removed`` are indexed away."""
    return axis - sum(r < axis for r in removed)
