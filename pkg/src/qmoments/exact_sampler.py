"""Sampling chain and SWAP-test circuits from their exact outcome distribution.

For these two circuit families the joint law of all recorded outcomes can be
written down exactly, which makes large registers (n = 6 sites, or k copies
beyond the statevector cap) cheap to sample. The law is enumerated in the
eigenbasis of rho.

Chain round with outcome x on the SWAP-test ancilla, followed by a two-outcome
measurement of B2 with effect Q (Q = I when B2 is not measured), maps the
unnormalised B1 operator sigma to

    (sigma Tr(Q rho) + rho Tr(Q sigma) + x (rho Q sigma + sigma Q rho)) / 4.

A round's probabilities come from tracing the result. For the SWAP test on k
fresh copies with an optional +/-1 measurement A on copy 1,

    P(x, y) = (1 + x Tr rho^k + y Tr(A rho) + x y Re Tr(A rho^k)) / 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CircuitError
from .simcore.circuit import Circuit, ControlledUnitary
from .simcore.records import ShotBatch
from .simcore.states import MixedState
from .simcore.streams import block_rng, parallel_map, shot_blocks
from .simcore.gates import pauli_matrix

SAMPLER_BLOCK = 2**16


@dataclass(frozen=True)
class OutcomeLaw:
    """Finite outcome distribution.

    ``table[c]`` is the full slot vector of category ``c`` and ``term[c]`` the
    importance-sampled term (or -1 when nothing is sampled).
    """

    probs: np.ndarray
    table: np.ndarray
    term: np.ndarray


def _effects(circuit: Circuit) -> tuple[list[np.ndarray] | None, np.ndarray | None]:
    meta = circuit.meta
    obs_id = meta.get("observable")
    if obs_id is not None:
        obs = circuit.observables[obs_id]
        weights = np.abs(np.asarray(obs.coeffs, dtype=float))
        return [pauli_matrix(p) for p in obs.paulis], weights / weights.sum()
    if meta.get("lcu"):
        cu = [ins for ins in circuit.instructions if isinstance(ins, ControlledUnitary)]
        u = cu[0].matrix
        return [(u + u.conj().T) / 2], np.ones(1)
    return None, None


def chain_law(
    rho: MixedState,
    k: int,
    effects: Sequence[np.ndarray] | None = None,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray | None, np.ndarray]:
    """Enumerate the outcome law of the moment chain.

    Returns ``(probs, xs, ys, y0, term)``: per category the probability, the
    k-1 SWAP-test outcomes, the k-1 per-round effect outcomes on B2 and the
    final outcome on B1 (``ys``/``y0`` are ``None`` without effects).
    """
    lam = rho.eigenvalues.astype(float)
    vecs = rho.eigenvectors
    d = lam.size
    eye = np.eye(d)
    probs_all, xs_all, ys_all, y0_all, terms_all = [], [], [], [], []
    term_list = [None] if effects is None else list(effects)
    term_weights = np.ones(1) if effects is None else np.asarray(weights, dtype=float)
    for t, effect in enumerate(term_list):
        a = None if effect is None else vecs.conj().T @ effect @ vecs
        sigma = np.diag(lam).astype(complex)[None]
        xs = np.zeros((1, 0), dtype=np.int8)
        ys = np.zeros((1, 0), dtype=np.int8)
        for _ in range(k - 1):
            tr_sigma = np.einsum("nii->n", sigma)
            children, cx, cy = [], [], []
            branches = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if a is not None else [(1, 0), (-1, 0)]
            for x, y in branches:
                if a is None:
                    q_sigma = sigma
                    tr_q_rho = 1.0
                    tr_q_sigma = tr_sigma
                    sigma_q = sigma
                else:
                    q = (eye + y * a) / 2
                    q_sigma = q[None] @ sigma
                    sigma_q = sigma @ q[None]
                    tr_q_rho = float(np.real(np.sum(np.diag(q) * lam)))
                    tr_q_sigma = np.einsum("nii->n", q_sigma)
                rho_q_sigma = lam[None, :, None] * q_sigma
                sigma_q_rho = sigma_q * lam[None, None, :]
                new = (
                    sigma * tr_q_rho
                    + np.einsum("n,ij->nij", tr_q_sigma, np.diag(lam))
                    + x * (rho_q_sigma + sigma_q_rho)
                ) / 4
                children.append(new)
                cx.append(np.full((sigma.shape[0], 1), x, dtype=np.int8))
                cy.append(np.full((sigma.shape[0], 1), y, dtype=np.int8))
            nb = len(branches)
            sigma = np.stack(children, axis=1).reshape(-1, d, d)
            xs = np.concatenate([np.repeat(xs, nb, axis=0), np.stack(cx, axis=1).reshape(-1, 1)], axis=1)
            ys = np.concatenate([np.repeat(ys, nb, axis=0), np.stack(cy, axis=1).reshape(-1, 1)], axis=1)
        if a is None:
            p = np.real(np.einsum("nii->n", sigma))
            probs_all.append(p * term_weights[t])
            xs_all.append(xs)
            terms_all.append(np.full(p.size, -1))
        else:
            for y0 in (1, -1):
                q = (eye + y0 * a) / 2
                p = np.real(np.einsum("ij,nji->n", q, sigma))
                probs_all.append(p * term_weights[t])
                xs_all.append(xs)
                ys_all.append(ys)
                y0_all.append(np.full(p.size, y0, dtype=np.int8))
                terms_all.append(np.full(p.size, t))
    probs = np.concatenate(probs_all)
    xs = np.concatenate(xs_all)
    ys = np.concatenate(ys_all) if ys_all else None
    y0 = np.concatenate(y0_all) if y0_all else None
    return probs, xs, ys, y0, np.concatenate(terms_all)


def swap_test_law(
    rho: MixedState,
    k: int,
    effects: Sequence[np.ndarray] | None = None,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray]:
    """Outcome law of the k-copy SWAP test; returns ``(probs, x, y, term)``."""
    mk = rho.moment(k)
    rho_k = (rho.eigenvectors * rho.eigenvalues**k) @ rho.eigenvectors.conj().T
    if effects is None:
        probs = np.array([(1 + mk) / 2, (1 - mk) / 2])
        return probs, np.array([1, -1], dtype=np.int8), None, np.array([-1, -1])
    probs, xs, ys, terms = [], [], [], []
    for t, a in enumerate(effects):
        ea = float(np.real(np.trace(a @ rho.matrix)))
        eak = float(np.real(np.trace(a @ rho_k)))
        for x in (1, -1):
            for y in (1, -1):
                probs.append(weights[t] * (1 + x * mk + y * ea + x * y * eak) / 4)
                xs.append(x)
                ys.append(y)
                terms.append(t)
    return np.array(probs), np.array(xs, dtype=np.int8), np.array(ys, dtype=np.int8), np.array(terms)


def outcome_law(circuit: Circuit) -> OutcomeLaw:
    """Exact law of all record slots of a chain or SWAP-test circuit."""
    meta = circuit.meta
    kind = meta.get("kind")
    rho = circuit.states[meta["state"]]
    effects, weights = _effects(circuit)
    if kind == "moment-chain":
        probs, xs, ys, y0, term = chain_law(rho, meta["k"], effects, weights)
        table = np.zeros((probs.size, circuit.num_slots), dtype=np.int8)
        table[:, list(meta["x_slots"])] = xs
        if ys is not None:
            table[:, list(meta["y_slots"])] = ys
            table[:, meta["final_slot"]] = y0
    elif kind == "swap-test":
        probs, xs, ys, term = swap_test_law(rho, meta["k"], effects, weights)
        table = np.zeros((probs.size, circuit.num_slots), dtype=np.int8)
        table[:, meta["x_slot"]] = xs
        if ys is not None:
            table[:, meta["y_slot"]] = ys
    else:
        raise CircuitError(f"no exact outcome law for circuit kind {kind!r}")
    probs = np.clip(probs, 0.0, None)
    return OutcomeLaw(probs / probs.sum(), table, term)


def sample_circuit(
    circuit: Circuit,
    shots: int,
    seed: int,
    *,
    threads: int = 1,
    key: Sequence[int] = (),
    law: OutcomeLaw | None = None,
) -> ShotBatch:
    """Draw ``shots`` records from :func:`outcome_law`, block-keyed like the
    statevector engine so that ``threads`` never changes the result.

    Pass a precomputed ``law`` to reuse it across many runs of one circuit.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuit.validate()
    law = outcome_law(circuit) if law is None else law
    cdf = np.cumsum(law.probs)
    cdf /= cdf[-1]
    obs_id = circuit.meta.get("observable")
    coeffs = None if obs_id is None else np.asarray(circuit.observables[obs_id].coeffs)

    def work(item):
        b, (start, stop) = item
        u = block_rng(seed, b, key).random(stop - start)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        terms, signs = {}, {}
        if coeffs is not None:
            terms[obs_id] = law.term[idx]
            signs[obs_id] = np.sign(coeffs[law.term[idx]]).astype(np.int8)
        return ShotBatch(law.table[idx], terms, signs)

    blocks = list(enumerate(shot_blocks(shots, SAMPLER_BLOCK)))
    return ShotBatch.concatenate(parallel_map(work, blocks, threads))
