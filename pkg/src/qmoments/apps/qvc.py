"""Virtual cooling: E(k') = Tr(H rho^k') / Tr(rho^k') for k' = 1..k.

The chain scheme obtains every numerator (Pauli-weighted estimator) and
every denominator (SWAP-test product) from one shot stream. The baseline runs
an independent weighted k'-copy SWAP test per k', with shots chosen so that
both use the same total number of prepared copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..exact_sampler import outcome_law
from ..moments import build_swap_test_circuit, execute, swap_test_samples
from ..observables import PauliObservable, build_weighted_chain, weighted_samples
from ..simcore.states import MixedState
from ..simcore.streams import derive_seed, parallel_map
from .physics import exact_cooled_energy

SCHEMES = ("chain", "swap-baseline")


@dataclass(frozen=True)
class QvcResult:
    """Per-k' aggregates over runs; array index i is k' = i + 1."""

    scheme: str
    k: int
    shots: int
    runs: int
    mean_energy: np.ndarray
    sigma_energy: np.ndarray
    mad: np.ndarray
    exact_energy: np.ndarray
    invalid: np.ndarray
    energies: np.ndarray = field(repr=False)  # runs x k, NaN for invalid runs
    copies_per_run: int = 0


def baseline_shots(shots: int, k: int) -> int:
    """Shots per k' so that sum_{k'} k' * N_b equals the chain's k * shots copies."""
    return max(1, (2 * shots) // (k + 1))


class ChainRunner:
    """Chain circuit (and its exact law, when sampled that way) built once per study."""

    def __init__(self, rho, hamiltonian, k, backend="distribution"):
        self.k = k
        self.hamiltonian = hamiltonian
        self.backend = backend
        self.circuit, _ = build_weighted_chain(rho, hamiltonian, k, "pauli")
        self.law = outcome_law(self.circuit) if backend == "distribution" else None

    def energies(self, shots: int, seed: int, key: Sequence[int] = ()) -> np.ndarray:
        """Cooled energies for k' = 1..k from one run (NaN if Tr(rho^k') <= 0)."""
        k, circuit = self.k, self.circuit
        batch = execute(circuit, shots, seed, backend=self.backend, key=key, law=self.law)
        num = weighted_samples(batch, circuit, self.hamiltonian, None, k).mean(axis=0)
        den = np.ones(k)
        if k > 1:
            den[1:] = batch.running_products(circuit.meta["x_slots"]).mean(axis=0)[: k - 1]
        safe = np.where(den > 0, den, 1.0)
        return np.where(den > 0, num / safe, np.nan)


class BaselineRunner:
    """One weighted k'-copy SWAP-test circuit per k' = 1..k."""

    def __init__(self, rho, hamiltonian, k, backend="distribution"):
        self.k = k
        self.backend = backend
        self.circuits = [
            build_swap_test_circuit(rho.num_qubits, kp, state=rho, observable=hamiltonian) for kp in range(1, k + 1)
        ]
        self.laws = [outcome_law(c) if backend == "distribution" else None for c in self.circuits]

    def energies(self, shots: int, seed: int, key: Sequence[int] = ()) -> np.ndarray:
        n_b = baseline_shots(shots, self.k)
        out = np.empty(self.k)
        for kp, (circuit, law) in enumerate(zip(self.circuits, self.laws), start=1):
            batch = execute(circuit, n_b, seed, backend=self.backend, key=tuple(key) + (kp,), law=law)
            num = swap_test_samples(batch, circuit).mean()
            den = batch.outcomes[:, circuit.meta["x_slot"]].astype(float).mean()
            out[kp - 1] = num / den if den > 0 else np.nan
        return out


def virtual_cooling_estimate(
    rho: MixedState,
    hamiltonian: PauliObservable,
    k: int,
    shots: int,
    runs: int,
    seed: int,
    *,
    scheme: str = "chain",
    backend: str | None = None,
    threads: int = 1,
) -> QvcResult:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if runs < 1 or shots < 1 or k < 1:
        raise ValueError("k, shots and runs must be >= 1")

    runner_cls = ChainRunner if scheme == "chain" else BaselineRunner
    runner = runner_cls(rho, hamiltonian, k, backend or "distribution")
    energies = np.array(parallel_map(lambda r: runner.energies(shots, derive_seed(seed, r)), list(range(runs)), threads))
    exact = np.array([exact_cooled_energy(rho, hamiltonian, kp) for kp in range(1, k + 1)])
    valid = ~np.isnan(energies)
    invalid = (~valid).sum(axis=0)
    mean = np.full(k, np.nan)
    sigma = np.full(k, np.nan)
    mad = np.full(k, np.nan)
    for i in range(k):
        e = energies[valid[:, i], i]
        if e.size:
            mean[i] = e.mean()
            mad[i] = np.abs(e - exact[i]).mean()
        if e.size > 1:
            sigma[i] = e.std(ddof=1)
    if scheme == "chain":
        copies = shots * max(k, 2)
    else:
        copies = baseline_shots(shots, k) * k * (k + 1) // 2
    return QvcResult(scheme, k, shots, runs, mean, sigma, mad, exact, invalid, energies, copies)


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    k: int
    shots: int
    mean_abs_err: float
    invalid: int


@dataclass(frozen=True)
class ScalingFit:
    n: int
    k: int
    slope: float
    intercept: float


def error_scaling_study(
    ns: Sequence[int],
    beta: float,
    ks: Sequence[int],
    shot_grid: Sequence[int] = (1000, 10000, 100000, 1000000),
    runs: int = 100,
    seed: int = 0,
    *,
    J: float = 1.0,
    h: float = 1.0,
    backend: str = "distribution",
    threads: int = 1,
) -> tuple[list[ScalingPoint], list[ScalingFit]]:
    """Mean |E_est - E_exact| over runs per (n, k, N) and the log-log slope in N.

    One chain of order max(ks) per run yields all k' simultaneously.
    """
    from .physics import HeisenbergSpec, gibbs_state, heisenberg_hamiltonian

    kmax = max(ks)
    points, fits = [], []
    for n in ns:
        ham = heisenberg_hamiltonian(HeisenbergSpec(n, J, h))
        rho = gibbs_state(ham, beta)
        exact = np.array([exact_cooled_energy(rho, ham, kp) for kp in range(1, kmax + 1)])
        errs = {kk: [] for kk in ks}
        runner = ChainRunner(rho, ham, kmax, backend)
        for g, shots in enumerate(shot_grid):

            def one_run(r: int, shots=int(shots), g=g) -> np.ndarray:
                return runner.energies(shots, derive_seed(seed, n, g, r))

            energies = np.array(parallel_map(one_run, list(range(runs)), threads))
            for kk in ks:
                e = energies[:, kk - 1]
                ok = ~np.isnan(e)
                err = float(np.abs(e[ok] - exact[kk - 1]).mean()) if ok.any() else math.nan
                errs[kk].append(err)
                points.append(ScalingPoint(n, kk, int(shots), err, int((~ok).sum())))
        for kk in ks:
            x = np.log(np.asarray(shot_grid, dtype=float))
            y = np.log(np.asarray(errs[kk]))
            slope, intercept = np.polyfit(x, y, 1)
            fits.append(ScalingFit(n, kk, float(slope), float(intercept)))
    return points, fits
