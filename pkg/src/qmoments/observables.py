"""Observable-weighted moments Tr(O rho^j) and functionals f(O, rho).

Two schemes run on the moment chain:

* ``pauli``: a Pauli term P_p of O = sum_p a_p P_p is drawn per shot with
  probability |a_p|/S. It is measured on B2 after every SWAP round (before
  the reset) and on B1 at the end. S*sgn(a_p)*y_j*x_1...x_j is unbiased for
  Tr(O rho^{j+1}); the final B1 outcome alone gives Tr(O rho).
* ``lcu``: O = ||O|| (U + U^dagger)/2 with U = O' + i sqrt(I - O'^2). A second
  ancilla runs a Hadamard test of U on the same registers, and the outcome
  times ||O|| replaces S*sgn(a_p)*y_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, NumericalError
from .moments import build_moment_chain_circuit, execute
from .qsf import PolynomialFunctional
from .simcore.config import max_qubits
from .simcore.density import signed_expectation
from .simcore.gates import PAULI, kron_all, pauli_matrix, validate_pauli
from .simcore.states import MixedState

DENSE_MAX_QUBITS = 8
SCHEMES = ("pauli", "lcu")


@dataclass(frozen=True, eq=False)
class PauliObservable:
    """O = sum_p a_p P_p with real coefficients and distinct Pauli strings."""

    num_qubits: int
    paulis: tuple[str, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        paulis = tuple(validate_pauli(p) for p in self.paulis)
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if not paulis:
            raise ValueError("observable has no terms")
        if len(paulis) != coeffs.size:
            raise ValueError("one coefficient per Pauli string required")
        if any(len(p) != self.num_qubits for p in paulis):
            raise ValueError(f"every Pauli string must have length {self.num_qubits}")
        if len(set(paulis)) != len(paulis):
            raise ValueError("Pauli strings must be distinct")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "paulis", paulis)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[float, str]]) -> "PauliObservable":
        """Build from (coefficient, string) pairs, merging repeated strings."""
        merged: dict[str, float] = {}
        for coeff, label in terms:
            label = validate_pauli(label)
            merged[label] = merged.get(label, 0.0) + float(coeff)
        if not merged:
            raise ValueError("observable has no terms")
        labels = list(merged)
        return cls(len(labels[0]), tuple(labels), np.array([merged[p] for p in labels]))

    @classmethod
    def from_text(cls, text: str) -> "PauliObservable":
        """Parse one ``coeff PAULISTRING`` term per line (``#`` starts a comment)."""
        terms = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coeff PAULISTRING', got {raw!r}")
            try:
                coeff = float(parts[0])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
            terms.append((coeff, parts[1]))
        obs = cls.from_terms(terms)
        return obs

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, *, atol: float = 1e-12) -> "PauliObservable":
        """Pauli decomposition a_p = Tr(P_p O)/2^m of a Hermitian matrix."""
        mat = np.asarray(matrix, dtype=complex)
        d = mat.shape[0]
        m = d.bit_length() - 1
        if mat.shape != (d, d) or 2**m != d:
            raise ValueError("matrix must be square with power-of-two dimension")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise ValueError("observable matrix must be Hermitian")
        terms = []
        for letters in np.ndindex(*(4,) * m):
            label = "".join("IXYZ"[i] for i in letters)
            coeff = np.trace(pauli_matrix(label) @ mat).real / d
            if abs(coeff) > atol:
                terms.append((coeff, label))
        if not terms:
            terms = [(0.0, "I" * m)]
        return cls.from_terms(terms)

    def to_text(self) -> str:
        return "".join(f"{c:.17g} {p}\n" for c, p in zip(self.coeffs, self.paulis))

    @property
    def num_terms(self) -> int:
        return len(self.paulis)

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def matrix(self) -> np.ndarray:
        if self.num_qubits > DENSE_MAX_QUBITS:
            raise CapacityError(f"dense observable limited to {DENSE_MAX_QUBITS} qubits")
        d = 2**self.num_qubits
        out = np.zeros((d, d), dtype=complex)
        for c, p in zip(self.coeffs, self.paulis):
            out += c * kron_all(PAULI[ch] for ch in p)
        return out

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix()))))

    def expectation(self, rho: MixedState, power: int = 1) -> float:
        """Tr(O rho^power) by dense algebra."""
        rho_p = (rho.eigenvectors * rho.eigenvalues**power) @ rho.eigenvectors.conj().T
        return float(np.real(np.trace(self.matrix() @ rho_p)))


@dataclass(frozen=True, eq=False)
class LcuUnitary:
    matrix: np.ndarray
    observable: PauliObservable
    norm: float


def lcu_unitary(obs: PauliObservable) -> LcuUnitary:
    """U = O' + i sqrt(I - O'^2), O' = O/||O||, built in O's eigenbasis."""
    mat = obs.matrix()
    w, v = np.linalg.eigh(mat)
    norm = float(np.max(np.abs(w)))
    if norm == 0:
        raise NumericalError("observable has zero spectral norm")
    o = w / norm
    root = np.sqrt(np.clip(1.0 - o**2, 0.0, None))
    u = (v * (o + 1j * root)) @ v.conj().T
    return LcuUnitary(u, obs, norm)


@dataclass(frozen=True)
class NormReport:
    spectral: float
    l1: float
    sqrt_terms_spectral: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.spectral, self.l1, self.sqrt_terms_spectral)


def norm_report(obs: PauliObservable, *, atol: float = 1e-9) -> NormReport:
    """(||O||, S, sqrt(n_P) ||O||), checking ||O|| <= S <= sqrt(n_P) ||O||."""
    spectral = obs.spectral_norm()
    l1 = obs.l1_norm
    upper = math.sqrt(obs.num_terms) * spectral
    if not (spectral <= l1 + atol and l1 <= upper + atol):
        raise NumericalError(f"norm chain violated: {spectral} <= {l1} <= {upper}")
    return NormReport(spectral, l1, upper)


@dataclass(frozen=True)
class WeightedMomentEstimates:
    """Estimates of Tr(O rho^j) for j = 1..k; index j-1 is order j."""

    scheme: str
    k: int
    shots: int
    seed: int
    estimates: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray | None = None


def _check_scheme(scheme: str, obs: PauliObservable, m: int) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if obs.num_qubits != m:
        raise ValueError(f"observable acts on {obs.num_qubits} qubits, state on {m}")
    if scheme == "lcu" and (m > DENSE_MAX_QUBITS or 2 * m + 2 > max_qubits()):
        raise CapacityError(f"lcu scheme needs {2 * m + 2} qubits and a dense {m}-qubit unitary; too large")


def build_weighted_chain(rho: MixedState, obs: PauliObservable, k: int, scheme: str):
    """Chain circuit for ``scheme`` and the per-shot rescaling factor source."""
    _check_scheme(scheme, obs, rho.num_qubits)
    chain_k = max(k, 2)
    if scheme == "pauli":
        return build_moment_chain_circuit(rho.num_qubits, chain_k, state=rho, observable=obs), None
    lcu = lcu_unitary(obs)
    return build_moment_chain_circuit(rho.num_qubits, chain_k, state=rho, lcu_matrix=lcu.matrix), lcu


def weighted_samples(batch, circuit, obs: PauliObservable, lcu: LcuUnitary | None, k: int) -> np.ndarray:
    """Per-shot unbiased samples for Tr(O rho^j), j = 1..k (shape shots x k)."""
    meta = circuit.meta
    if lcu is None:
        scale = obs.l1_norm * batch.signs[meta["observable"]].astype(float)
    else:
        scale = np.full(batch.shots, lcu.norm)
    out = np.empty((batch.shots, k))
    out[:, 0] = scale * batch.outcomes[:, meta["final_slot"]]
    if k > 1:
        prods = batch.running_products(meta["x_slots"])
        for j in range(1, k):
            out[:, j] = scale * batch.outcomes[:, meta["y_slots"][j - 1]] * prods[:, j - 1]
    return out


def exact_weighted_moments(rho: MixedState, obs: PauliObservable, k: int) -> np.ndarray:
    return np.array([obs.expectation(rho, j) for j in range(1, k + 1)])


def estimate_weighted_moments(
    rho: MixedState,
    obs: PauliObservable,
    k: int,
    shots: int,
    seed: int,
    *,
    scheme: str = "pauli",
    backend: str = "statevector",
    threads: int = 1,
    key: Sequence[int] = (),
) -> WeightedMomentEstimates:
    """Tr(O rho), Tr(O rho^2), ..., Tr(O rho^k) from one shot stream."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuit, lcu = build_weighted_chain(rho, obs, k, scheme)
    batch = execute(circuit, shots, seed, backend=backend, threads=threads, key=key)
    samples = weighted_samples(batch, circuit, obs, lcu, k)
    exact = exact_weighted_moments(rho, obs, k) if rho.num_qubits <= DENSE_MAX_QUBITS else None
    return WeightedMomentEstimates(
        scheme, k, shots, seed, samples.mean(axis=0), samples.std(axis=0) / math.sqrt(shots), exact
    )


def weighted_oracle(rho: MixedState, obs: PauliObservable, k: int, scheme: str) -> np.ndarray:
    """Exact expectation of each scheme's estimator for orders 1..k.

    Pauli scheme: rescaled estimator (should equal Tr(O rho^j)).
    LCU scheme: raw ancilla product before the ||O|| rescaling (Tr(O' rho^j)).
    """
    circuit, _ = build_weighted_chain(rho, obs, k, scheme)
    meta = circuit.meta
    rescale = scheme == "pauli"
    out = [signed_expectation(circuit, [meta["final_slot"]], rescale=rescale)]
    for j in range(1, k):
        slots = list(meta["x_slots"][:j]) + [meta["y_slots"][j - 1]]
        out.append(signed_expectation(circuit, slots, rescale=rescale))
    return np.array(out)


@dataclass(frozen=True)
class WeightedFunctionalEstimate:
    value: float
    stderr: float
    shots: int
    exact: float | None = None


def estimate_weighted_functionals(
    rho: MixedState,
    obs: PauliObservable,
    fs: Sequence[PolynomialFunctional],
    shots: int,
    seed: int,
    *,
    scheme: str = "pauli",
    backend: str = "statevector",
    threads: int = 1,
    k: int | None = None,
) -> list[WeightedFunctionalEstimate]:
    """f_i(O, rho) = sum_j b_ij Tr(O rho^j), all from one shared shot stream."""
    fs = list(fs)
    need = max((f.k for f in fs), default=1)
    k = need if k is None else k
    if need > k:
        raise ValueError(f"functional order {need} exceeds k = {k}")
    if all(f.l1_norm == 0 for f in fs):
        return [WeightedFunctionalEstimate(0.0, 0.0, shots, 0.0) for _ in fs]
    circuit, lcu = build_weighted_chain(rho, obs, k, scheme)
    batch = execute(circuit, shots, seed, backend=backend, threads=threads)
    samples = weighted_samples(batch, circuit, obs, lcu, k)
    exact = exact_weighted_moments(rho, obs, k) if rho.num_qubits <= DENSE_MAX_QUBITS else None
    out = []
    for f in fs:
        beta = np.array(f.padded(k).coeffs)
        per_shot = samples @ beta
        out.append(
            WeightedFunctionalEstimate(
                float(per_shot.mean()),
                float(per_shot.std() / math.sqrt(shots)),
                shots,
                None if exact is None else float(exact @ beta),
            )
        )
    return out
