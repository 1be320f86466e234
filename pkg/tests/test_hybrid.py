import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from utils.errors import StructureError
from utils.hybrid import (ALICE, BOB, HybridOperator, HybridState, as_label, hybrid_expectation,
                          hybrid_trace_distance, restrict)
from utils.numerics import dagger, haar_unitary, kron, random_density, rng_from


@pytest.fixture
def two_branch():
    rho = random_density(2, 1)
    sigma = random_density(2, 2)
    return HybridState({(0,): (0.25, rho), (1,): (0.75, sigma)}), rho, sigma


def test_labels_and_weights(two_branch):
    s, rho, sigma = two_branch
    assert s.labels == [(0,), (1,)]
    assert s.weight(1) == 0.75
    assert s.weight((5,)) == 0.0
    np.testing.assert_allclose(s.block((0,)), 0.25 * rho)
    assert (1,) in s and len(s) == 2


def test_zero_weight_branches_are_pruned():
    s = HybridState({(0,): (1.0, np.eye(2) / 2), (1,): (0.0, np.eye(2) / 2)})
    assert s.labels == [(0,)]


def test_from_blocks_normalizes():
    s = HybridState.from_blocks({(0, 1): np.diag([0.3, 0.1]), (2,): np.diag([0.6])})
    np.testing.assert_allclose(s.weight((0, 1)), 0.4)
    np.testing.assert_allclose(np.trace(s.state((0, 1))), 1.0)


def test_invalid_states():
    with pytest.raises(StructureError, match="sum"):
        HybridState({(0,): (0.5, np.eye(2) / 2)})
    with pytest.raises(StructureError, match="non-negative"):
        as_label((0, -1))
    assert as_label(3) == (3,)


def test_expectation(two_branch):
    s, _, _ = two_branch
    np.testing.assert_allclose(hybrid_expectation(s, HybridOperator.identity_like(s)), 1.0)
    only_first = HybridOperator({(0,): np.eye(2), (1,): np.zeros((2, 2))})
    np.testing.assert_allclose(hybrid_expectation(s, only_first), 0.25)
    with pytest.raises(StructureError, match="no block"):
        hybrid_expectation(s, HybridOperator({(0,): np.eye(2)}))


def test_trace_distance():
    rho = random_density(3, 4)
    a = HybridState.single(rho, (0,))
    b = HybridState.single(rho, (1,))
    assert hybrid_trace_distance(a, a) < 1e-12
    np.testing.assert_allclose(hybrid_trace_distance(a, b), 2.0)
    with pytest.raises(StructureError, match="differ"):
        hybrid_trace_distance(a, HybridState.single(np.eye(2) / 2, (0,)))


def test_restrict_product_branch():
    rho_a = random_density(2, 5)
    rho_b = random_density(3, 6)
    s = HybridState({(0,): (1.0, kron(rho_a, rho_b))}, splits={(0,): (2, 3)})
    np.testing.assert_allclose(restrict(s, ALICE).state((0,)), rho_a, atol=1e-12)
    np.testing.assert_allclose(restrict(s, BOB).state((0,)), rho_b, atol=1e-12)
    assert restrict(s, BOB).weight((0,)) == 1.0


def test_restrict_errors():
    s = HybridState.single(np.eye(4) / 4, (0,))
    with pytest.raises(ValueError, match="side"):
        restrict(s, "carol", (2, 2))
    with pytest.raises(StructureError, match="factorization"):
        restrict(s, ALICE)
    with pytest.raises(StructureError, match="does not factor"):
        restrict(s, ALICE, (3, 2))


def random_hybrid(seed, labels=((0,), (1,), (2,))):
    rng = rng_from(seed)
    weights = rng.dirichlet(np.ones(len(labels)))
    branches = {label: (w, random_density(4, rng)) for label, w in zip(labels, weights)}
    return HybridState(branches, splits={label: (2, 2) for label in labels})


def random_effect(d, rng):
    u = haar_unitary(d, rng)
    return u @ np.diag(rng.uniform(0.0, 1.0, d)) @ dagger(u)


@settings(max_examples=30, deadline=None)
@given(integers(min_value=0, max_value=2 ** 32 - 1))
def test_trace_distance_is_a_metric(seed):
    s = random_hybrid(rng_from(seed, 0), labels=((0,), (1,)))
    t = random_hybrid(rng_from(seed, 1), labels=((1,), (2,)))
    u = random_hybrid(rng_from(seed, 2))
    assert hybrid_trace_distance(s, s) == pytest.approx(0.0, abs=1e-12)
    assert hybrid_trace_distance(s, t) == pytest.approx(hybrid_trace_distance(t, s), abs=1e-12)
    assert hybrid_trace_distance(s, u) <= hybrid_trace_distance(s, t) + hybrid_trace_distance(t, u) + 1e-12
    assert hybrid_trace_distance(s, t) <= 2 + 1e-12


@settings(max_examples=30, deadline=None)
@given(integers(min_value=0, max_value=2 ** 32 - 1))
def test_restrict_never_increases_distance(seed):
    s = random_hybrid(rng_from(seed, 0))
    t = random_hybrid(rng_from(seed, 1), labels=((0,), (2,)))
    full = hybrid_trace_distance(s, t)
    for side in (ALICE, BOB):
        assert hybrid_trace_distance(restrict(s, side), restrict(t, side)) <= full + 1e-12


@settings(max_examples=30, deadline=None)
@given(integers(min_value=0, max_value=2 ** 32 - 1))
def test_effects_have_probabilities_in_unit_interval(seed):
    rng = rng_from(seed)
    s = random_hybrid(rng)
    f = HybridOperator({label: random_effect(4, rng) for label in s.labels})
    value = hybrid_expectation(s, f)
    assert abs(value.imag) <= 1e-12
    assert -1e-12 <= value.real <= 1 + 1e-12
