"""Dense gate matrices and Pauli-string helpers."""

from functools import lru_cache, reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_DAG = np.diag([1, -1j]).astype(complex)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

# Rotation taking each Pauli's eigenbasis to the computational basis:
# B P B^dagger = Z for P in {X, Y, Z}.
PAULI_BASIS_CHANGE = {"I": I2, "X": H, "Y": H @ S_DAG, "Z": I2}


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def validate_pauli(label: str) -> str:
    label = label.strip().upper()
    if not label or any(ch not in PAULI for ch in label):
        raise ValueError(f"invalid Pauli string {label!r}")
    return label


@lru_cache(maxsize=4096)
def _pauli_matrix_cached(label: str) -> np.ndarray:
    mat = kron_all(PAULI[ch] for ch in label)
    mat.setflags(write=False)
    return mat


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string; qubit 0 is the leftmost character."""
    return _pauli_matrix_cached(validate_pauli(label))


def swap_matrix(num_qubits_each: int) -> np.ndarray:
    """SWAP of two equally sized registers (register A first)."""
    d = 2**num_qubits_each
    perm = np.arange(d * d).reshape(d, d).T.reshape(-1)
    return np.eye(d * d, dtype=complex)[perm]


def is_unitary(mat: np.ndarray, atol: float = 1e-12) -> bool:
    return np.allclose(mat @ mat.conj().T, np.eye(mat.shape[0]), atol=atol, rtol=0)
