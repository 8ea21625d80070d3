import math

import numpy as np
import pytest

from qmoments.apps.physics import HeisenbergSpec, gibbs_state, heisenberg_hamiltonian
from qmoments.errors import NumericalError
from qmoments.observables import (
    PauliObservable,
    estimate_weighted_functionals,
    estimate_weighted_moments,
    lcu_unitary,
    norm_report,
    weighted_oracle,
)
from qmoments.qsf import PolynomialFunctional
from qmoments.simcore.gates import is_unitary
from qmoments.simcore.states import random_mixed_state

Z = PauliObservable.from_terms([(1.0, "Z")])


def _random_hermitian(m, rng):
    a = rng.normal(size=(2**m, 2**m)) + 1j * rng.normal(size=(2**m, 2**m))
    return (a + a.conj().T) / 2


def test_text_round_trip():
    obs = PauliObservable.from_text("1.0 XX\n-0.5 ZI\n# comment\n0.25 XX\n")
    assert obs.num_terms == 2
    assert dict(zip(obs.paulis, obs.coeffs))["XX"] == pytest.approx(1.25)
    again = PauliObservable.from_text(obs.to_text())
    assert np.allclose(again.matrix(), obs.matrix())
    with pytest.raises(ValueError):
        PauliObservable.from_text("1.0 XQ")
    with pytest.raises(ValueError):
        PauliObservable.from_text("1.0 XX\n2.0 Z")


def test_from_matrix(rng):
    h = _random_hermitian(2, rng)
    assert np.allclose(PauliObservable.from_matrix(h).matrix(), h)


def test_lcu_examples():
    assert np.allclose(lcu_unitary(Z).matrix, np.diag([1, -1]))
    d = PauliObservable.from_matrix(np.diag([1.0, 0.5]))
    assert np.allclose(lcu_unitary(d).matrix, np.diag([1, 0.5 + 1j * math.sqrt(0.75)]))
    xz = PauliObservable.from_terms([(0.5, "X"), (0.5, "Z")])
    lcu = lcu_unitary(xz)
    assert lcu.norm == pytest.approx(1 / math.sqrt(2))
    assert np.allclose(lcu.matrix, (np.array([[1, 1], [1, -1]])) / math.sqrt(2))
    with pytest.raises(NumericalError):
        lcu_unitary(PauliObservable.from_terms([(0.0, "Z")]))


def test_lcu_reconstruction(rng):
    for _ in range(20):
        m = int(rng.integers(1, 3))
        obs = PauliObservable.from_matrix(_random_hermitian(m, rng))
        lcu = lcu_unitary(obs)
        assert is_unitary(lcu.matrix, atol=1e-10)
        rebuilt = lcu.norm * (lcu.matrix + lcu.matrix.conj().T) / 2
        assert np.allclose(rebuilt, obs.matrix(), atol=1e-10)


def test_norm_report_examples():
    assert norm_report(Z).as_tuple() == pytest.approx((1, 1, 1))
    h2 = heisenberg_hamiltonian(HeisenbergSpec(2))
    assert norm_report(h2).as_tuple() == pytest.approx((3, 5, 3 * math.sqrt(5)), abs=1e-9)
    xz = PauliObservable.from_terms([(1.0, "X"), (1.0, "Z")])
    assert norm_report(xz).as_tuple() == pytest.approx((math.sqrt(2), 2, 2), abs=1e-12)


def test_norm_chain_random(rng):
    for n in (2, 3, 4):
        norm_report(heisenberg_hamiltonian(HeisenbergSpec(n)))
    for _ in range(50):
        norm_report(PauliObservable.from_matrix(_random_hermitian(int(rng.integers(1, 3)), rng)))


@pytest.mark.parametrize("scheme", ["pauli", "lcu"])
def test_weighted_oracle_single_qubit(scheme, rng):
    for _ in range(5):
        rho = random_mixed_state(1, rng)
        obs = PauliObservable.from_matrix(_random_hermitian(1, rng))
        oracle = weighted_oracle(rho, obs, 4, scheme)
        if scheme == "lcu":
            oracle = oracle * lcu_unitary(obs).norm
        exact = [obs.expectation(rho, j) for j in range(1, 5)]
        assert np.allclose(oracle, exact, atol=1e-9)


def test_weighted_oracle_heisenberg():
    h = heisenberg_hamiltonian(HeisenbergSpec(2))
    rho = gibbs_state(h, 0.5)
    dense = h.matrix() @ rho.matrix @ rho.matrix
    oracle = weighted_oracle(rho, h, 2, "pauli")
    assert oracle[1] == pytest.approx(np.trace(dense).real, abs=1e-9)


def test_identity_observable_gives_moments(gibbs_z):
    ident = PauliObservable.from_terms([(1.0, "I")])
    est = estimate_weighted_moments(gibbs_z, ident, 3, 100_000, 3)
    for got, se, want in zip(est.estimates, est.stderr, (1.0, 0.606776, 0.410166)):
        assert abs(got - want) <= 5 * se + 1e-12


@pytest.mark.parametrize("scheme", ["pauli", "lcu"])
def test_z_weighted_order_two(scheme, gibbs_z):
    est = estimate_weighted_moments(gibbs_z, Z, 2, 100_000, 4, scheme=scheme)
    assert abs(est.estimates[1] - (-0.462117)) <= 5 * est.stderr[1]


def test_scheme_agreement_and_variance():
    h = heisenberg_hamiltonian(HeisenbergSpec(2))
    rho = gibbs_state(h, 0.5)
    n = 100_000
    p = estimate_weighted_moments(rho, h, 3, n, 5, scheme="pauli")
    l = estimate_weighted_moments(rho, h, 3, n, 6, scheme="lcu")
    assert np.all(np.abs(p.estimates - l.estimates) <= 5 * np.hypot(p.stderr, l.stderr))
    single_shot_var = (p.stderr * math.sqrt(n)) ** 2
    assert np.all(single_shot_var <= 1.1 * h.l1_norm**2)


def test_weighted_functionals(gibbs_z):
    f1 = PolynomialFunctional((1.0,))
    est = estimate_weighted_functionals(gibbs_z, Z, [f1], 100_000, 1)[0]
    assert est.exact == pytest.approx(-math.tanh(0.5), abs=1e-9)
    assert abs(est.value + 0.462117) <= 5 * est.stderr
    ident = PauliObservable.from_terms([(1.0, "I")])
    g = PolynomialFunctional((-1.0, 1.0))
    e2 = estimate_weighted_functionals(gibbs_z, ident, [g], 100_000, 2)[0]
    assert e2.exact == pytest.approx(-0.393224, abs=1e-6)
    assert abs(e2.value + 0.393224) <= 5 * e2.stderr
    zeros = estimate_weighted_functionals(gibbs_z, Z, [PolynomialFunctional((0.0, 0.0))] * 2, 100, 3)
    assert [z.value for z in zeros] == [0.0, 0.0]
    with pytest.raises(ValueError):
        estimate_weighted_functionals(gibbs_z, Z, [PolynomialFunctional((0, 0, 1.0))], 100, 3, k=2)
