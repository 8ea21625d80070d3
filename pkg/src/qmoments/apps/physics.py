"""Open-boundary Heisenberg chain, Gibbs states and virtually cooled energies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, NumericalError
from ..observables import DENSE_MAX_QUBITS, PauliObservable
from ..simcore.states import MixedState


@dataclass(frozen=True)
class HeisenbergSpec:
    """H = J sum_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}) + h sum_i Z_i, open ends."""

    n: int
    J: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Heisenberg chain needs n >= 2 sites")


def _label(n: int, sites: dict[int, str]) -> str:
    return "".join(sites.get(i, "I") for i in range(n))


def heisenberg_hamiltonian(spec: HeisenbergSpec) -> PauliObservable:
    if spec.n > DENSE_MAX_QUBITS:
        raise CapacityError(f"Heisenberg chain limited to {DENSE_MAX_QUBITS} sites")
    terms = []
    if spec.J != 0:
        for i in range(spec.n - 1):
            for p in "XYZ":
                terms.append((spec.J, _label(spec.n, {i: p, i + 1: p})))
    if spec.h != 0:
        for i in range(spec.n):
            terms.append((spec.h, _label(spec.n, {i: "Z"})))
    if not terms:
        terms = [(0.0, "I" * spec.n)]
    return PauliObservable.from_terms(terms)


def ground_energy(hamiltonian: PauliObservable) -> float:
    return float(np.linalg.eigvalsh(hamiltonian.matrix())[0])


def gibbs_state(hamiltonian: PauliObservable, beta: float) -> MixedState:
    """exp(-beta H)/Z via the eigendecomposition of H (shifted for stability)."""
    w, v = np.linalg.eigh(hamiltonian.matrix())
    weights = np.exp(-beta * (w - w.min()))
    weights /= weights.sum()
    rho = (v * weights) @ v.conj().T
    return MixedState.from_matrix((rho + rho.conj().T) / 2, atol=1e-10)


def exact_cooled_energy(rho: MixedState, hamiltonian: PauliObservable, k: int) -> float:
    """Tr(H rho^k) / Tr(rho^k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    denom = rho.moment(k)
    if denom < 1e-300:
        raise NumericalError(f"Tr(rho^{k}) = {denom:.3e} underflows")
    return hamiltonian.expectation(rho, k) / denom


def thermal_energy(hamiltonian: PauliObservable, beta: float) -> float:
    return hamiltonian.expectation(gibbs_state(hamiltonian, beta), 1)
