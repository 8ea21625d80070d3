import math

import numpy as np
import pytest

from qmoments.errors import CapacityError
from qmoments.exact_sampler import outcome_law
from qmoments.moments import (
    MomentPlan,
    build_moment_chain_circuit,
    build_swap_test_circuit,
    estimate_moments,
    exact_moments,
    execute,
    generalized_swap_test,
    required_shots,
)
from qmoments.observables import PauliObservable
from qmoments.simcore.circuit import ControlledSwap, MeasureX, PrepareMixed, ResetToZero
from qmoments.simcore.density import signed_expectation
from qmoments.simcore.states import MixedState, random_mixed_state

from conftest import GIBBS_Z_MOMENTS


def test_required_shots():
    assert required_shots(4, 0.1) == 636
    assert required_shots(2, 1.0) == 5
    assert required_shots(16, 0.05) == 3652
    assert required_shots(4, 0.01) == math.ceil(2 * math.log(24) / 1e-4)
    with pytest.raises(ValueError):
        required_shots(4, 0.0)
    with pytest.raises(ValueError):
        required_shots(1, 0.1)


def test_plan_validation():
    with pytest.raises(ValueError):
        MomentPlan(1, 10, 0)
    with pytest.raises(ValueError):
        MomentPlan(3, 0, 0)
    assert MomentPlan.from_error(4, 0.1, seed=3).shots == 636


@pytest.mark.parametrize("m,k,rounds", [(1, 2, 1), (1, 5, 4), (2, 3, 2)])
def test_chain_structure(m, k, rounds):
    c = build_moment_chain_circuit(m, k)
    assert c.num_qubits == 2 * m + 1
    assert c.num_slots == rounds
    assert c.count(ControlledSwap) == rounds
    assert c.count(MeasureX) == rounds
    assert all(len(ins.register_a) == m for ins in c.instructions if isinstance(ins, ControlledSwap))
    # B1 is prepared once and never reset
    b1 = set(range(1, m + 1))
    assert not any(isinstance(ins, ResetToZero) and b1 & set(ins.qubits) for ins in c.instructions)
    assert sum(isinstance(ins, PrepareMixed) for ins in c.instructions) == k
    with pytest.raises(ValueError):
        build_moment_chain_circuit(m, 1)


def test_chain_oracle_examples(gibbs_z):
    c = build_moment_chain_circuit(1, 4, state=gibbs_z)
    xs = c.meta["x_slots"]
    assert signed_expectation(c, xs[:1]) == pytest.approx(0.606776, abs=1e-6)
    pure = MixedState.pure(np.array([1, 1j]) / np.sqrt(2))
    cp = build_moment_chain_circuit(1, 5, state=pure)
    for l in range(1, 5):
        assert signed_expectation(cp, cp.meta["x_slots"][:l]) == pytest.approx(1.0, abs=1e-12)


def test_chain_oracle_random(rng):
    for m in (1, 2):
        rho = random_mixed_state(m, rng)
        c = build_moment_chain_circuit(m, 4, state=rho)
        exact = exact_moments(rho, 4)
        for l in range(1, 4):
            assert signed_expectation(c, c.meta["x_slots"][:l]) == pytest.approx(exact[l - 1], abs=1e-9)


def test_exact_moments():
    assert np.allclose(exact_moments(MixedState.maximally_mixed(2), 4), [2**-2, 2**-4, 2**-6])
    pure = MixedState.pure(np.array([0, 1.0]))
    assert np.allclose(exact_moments(pure, 5), 1.0)


def test_pure_state_every_shot_accepts():
    pure = MixedState.pure(np.array([1.0, 0.0]))
    c = build_moment_chain_circuit(1, 5, state=pure)
    batch = execute(c, 2000, seed=3)
    assert np.all(batch.outcomes == 1)
    est = estimate_moments(pure, MomentPlan(5, 500, 1))
    assert np.all(est.estimates == 1.0)


def test_gibbs_k2_mean(gibbs_z):
    est = estimate_moments(gibbs_z, MomentPlan(2, 100_000, 8))
    assert abs(est.order(2) - 0.6068) <= 0.005


def test_maximally_mixed_moments():
    rho = MixedState.maximally_mixed(1)
    est = estimate_moments(rho, MomentPlan(3, 100_000, 2))
    for j, target in ((2, 0.5), (3, 0.25)):
        assert abs(est.order(j) - target) <= 5 * est.stderr[j - 2]


def test_estimate_invariants_and_variance(gibbs_z):
    n = 100_000
    c = build_moment_chain_circuit(1, 4, state=gibbs_z)
    batch = execute(c, n, seed=21)
    assert batch.shots == n  # one shot stream feeds every order
    prods = batch.running_products(c.meta["x_slots"])
    est = estimate_moments(gibbs_z, MomentPlan(4, n, 21))
    assert np.allclose(est.estimates, prods.mean(axis=0))
    assert np.all(np.abs(est.estimates) <= 1)
    assert np.all(est.stderr <= 1 / math.sqrt(n))
    var = prods.var(axis=0)
    theory = 1 - np.array(GIBBS_Z_MOMENTS) ** 2
    assert np.all(np.abs(var - theory) <= 0.1 * theory)


def test_distribution_backend_matches_oracle(rng):
    rho = random_mixed_state(2, rng)
    est = estimate_moments(rho, MomentPlan(5, 200_000, 4), backend="distribution")
    assert np.all(np.abs(est.estimates - est.exact) <= 5 * est.stderr + 1e-12)


def test_outcome_law_matches_density(rng):
    rho = random_mixed_state(1, rng)
    obs = PauliObservable.from_terms([(0.7, "Z"), (-0.4, "X")])
    c = build_moment_chain_circuit(1, 3, state=rho, observable=obs)
    law = outcome_law(c)
    for slots in ([0], [0, 1], [0, 2], [0, 2, 3]):
        law_mean = float(np.sum(law.probs * np.prod(law.table[:, slots], axis=1)))
        assert law_mean == pytest.approx(signed_expectation(c, slots), abs=1e-12)


def test_swap_test_examples(gibbs_z):
    pure = MixedState.pure(np.array([0.6, 0.8]))
    assert generalized_swap_test(pure, 3, 1000, seed=1).estimate == 1.0
    est = generalized_swap_test(gibbs_z, 3, 100_000, seed=2)
    assert abs(est.estimate - 0.410166) <= 5 * est.stderr
    z = PauliObservable.from_terms([(1.0, "Z")])
    w = generalized_swap_test(gibbs_z, 2, 100_000, seed=3, weighted_by=z)
    assert abs(w.estimate - (-0.462117)) <= 5 * w.stderr


def test_swap_test_circuit_oracle(rng):
    rho = random_mixed_state(1, rng)
    c = build_swap_test_circuit(1, 3, state=rho)
    assert c.num_qubits == 4
    assert signed_expectation(c, [c.meta["x_slot"]]) == pytest.approx(rho.moment(3), abs=1e-12)


def test_baseline_equivalence(gibbs_z):
    chain = estimate_moments(gibbs_z, MomentPlan(3, 100_000, 5))
    base = generalized_swap_test(gibbs_z, 3, 100_000, seed=6)
    combined = math.hypot(chain.stderr[1], base.stderr)
    assert abs(chain.order(3) - base.estimate) <= 5 * combined


def test_swap_test_capacity():
    rho = MixedState.maximally_mixed(3)
    with pytest.raises(CapacityError):
        generalized_swap_test(rho, 5, 10, seed=0, backend="statevector")


def test_moment_estimates_json_shape(gibbs_z):
    est = estimate_moments(gibbs_z, MomentPlan(3, 1000, 1))
    d = est.to_dict()
    assert set(d) == {"k", "shots", "seed", "estimates", "stderr", "exact"}
    assert len(d["estimates"]) == 2
