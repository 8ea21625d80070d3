"""Density operators and pure states used throughout the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIGEN_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class MixedState:
    """An m-qubit density operator with a cached eigendecomposition.

    Eigenvalues are stored in descending order; eigenvectors are the matching
    columns. Tiny negative eigenvalues (above ``-1e-12``) are clamped to zero.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    num_qubits: int

    @classmethod
    def from_matrix(cls, matrix, *, atol: float = HERMITIAN_ATOL) -> "MixedState":
        rho = np.array(matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        dim = rho.shape[0]
        m = dim.bit_length() - 1
        if dim < 2 or 2**m != dim:
            raise ValueError(f"dimension {dim} is not a power of two >= 2")
        if np.max(np.abs(rho - rho.conj().T)) > atol:
            raise ValueError("density matrix is not Hermitian")
        rho = (rho + rho.conj().T) / 2
        if abs(np.trace(rho).real - 1.0) > max(atol, TRACE_ATOL):
            raise ValueError(f"density matrix has trace {np.trace(rho).real!r}, expected 1")
        w, v = np.linalg.eigh(rho)
        if w.min() < -max(EIGEN_CLAMP, atol):
            raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
        w = np.clip(w, 0.0, None)
        order = np.argsort(w)[::-1]
        return cls(matrix=rho, eigenvalues=w[order], eigenvectors=v[:, order], num_qubits=m)

    @classmethod
    def from_spectrum(cls, eigenvalues, eigenvectors=None) -> "MixedState":
        lam = np.asarray(eigenvalues, dtype=float)
        if eigenvectors is None:
            eigenvectors = np.eye(lam.size, dtype=complex)
        vecs = np.asarray(eigenvectors, dtype=complex)
        return cls.from_matrix((vecs * lam) @ vecs.conj().T, atol=1e-10)

    @classmethod
    def pure(cls, amplitudes) -> "MixedState":
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls.from_matrix(np.outer(psi, psi.conj()), atol=1e-10)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "MixedState":
        dim = 2**num_qubits
        return cls.from_matrix(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        """Eigenvalues renormalised to an exact probability vector."""
        return self.eigenvalues / self.eigenvalues.sum()

    def moment(self, order: int) -> float:
        return float(np.sum(self.eigenvalues**order))


@dataclass(frozen=True, eq=False)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(f"expected {2**self.num_qubits} amplitudes, got {amps.shape}")
        if abs(np.vdot(amps, amps).real - 1.0) > 1e-12:
            raise ValueError("pure state is not normalised")
        object.__setattr__(self, "amplitudes", amps)

    def density(self) -> MixedState:
        return MixedState.pure(self.amplitudes)


def random_mixed_state(num_qubits: int, rng: np.random.Generator, rank: int | None = None) -> MixedState:
    """Draw a random density matrix from the induced (Ginibre) measure."""
    dim = 2**num_qubits
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return MixedState.from_matrix(rho / np.trace(rho).real, atol=1e-10)


def random_pure_state(num_qubits: int, rng: np.random.Generator) -> MixedState:
    return random_mixed_state(num_qubits, rng, rank=1)


def reduced_density(amplitudes: np.ndarray, keep: list[int], num_qubits: int) -> np.ndarray:
    """Partial trace of a pure state onto ``keep`` (qubit 0 is most significant)."""
    psi = np.asarray(amplitudes, dtype=complex).reshape((2,) * num_qubits)
    drop = [q for q in range(num_qubits) if q not in keep]
    psi = np.transpose(psi, list(keep) + drop).reshape(2 ** len(keep), -1)
    return psi @ psi.conj().T
