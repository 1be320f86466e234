import numpy as np
import pytest

from utils.analysis_config import analysis_config
from utils.channel_norms import cb_lower_choi, cb_norm_oracle, fidelity_sum_optimizer, op_norm_estimate
from utils.channels import (Channel, EnergyConstraint, apply, average_fidelity, channel_fidelity, check_povm, choi,
                            compose, constrained_state, depolarizing, energy_respecting_channel, energy_truncate,
                            identity_channel, measure_prepare, measurement_channel, mu_star, random_channel,
                            randomizing_channel, stinespring, tensor, unitary_channel)
from utils.errors import DomainError, InvalidChannelError, ShapeError
from utils.numerics import (dagger, fidelity, haar_unitary, is_density, partial_transpose, psd_sqrt, random_density,
                            rng_from)


def test_identity_and_unitary():
    rho = random_density(3, 0)
    np.testing.assert_allclose(apply(identity_channel(3), rho), rho, atol=1e-12)
    u = haar_unitary(3, 1)
    np.testing.assert_allclose(apply(unitary_channel(u), rho), u @ rho @ dagger(u), atol=1e-12)


def test_completeness_is_checked():
    with pytest.raises(InvalidChannelError, match="completeness"):
        Channel([0.5 * np.eye(2)])
    with pytest.raises(InvalidChannelError, match="increases trace"):
        Channel([2 * np.eye(2)], trace_preserving=False)
    partial = Channel([0.5 * np.eye(2)], validate=False)
    with pytest.raises(InvalidChannelError, match="not trace preserving"):
        apply(partial, np.eye(2) / 2)
    with pytest.raises(ShapeError, match="share a shape"):
        Channel([np.eye(2), np.eye(3)])


@pytest.mark.parametrize('d', [2, 3, 5])
def test_depolarizing(d):
    c = depolarizing(d)
    np.testing.assert_allclose(apply(c, random_density(d, d)), np.eye(d) / d, atol=1e-12)
    np.testing.assert_allclose(channel_fidelity(c), 1 / d ** 2, atol=1e-12)
    np.testing.assert_allclose(average_fidelity(c)[0], 1 / d, atol=1e-12)
    np.testing.assert_allclose(average_fidelity(identity_channel(d))[0], 1.0, atol=1e-12)


def test_measurement_gives_hybrid_state():
    plus = np.ones((2, 2)) / 2
    out = apply(measurement_channel(np.eye(2)), plus)
    assert out.labels == [(1,), (2,)]
    np.testing.assert_allclose([out.weight(1), out.weight(2)], [0.5, 0.5])
    assert out.dim(1) == 1


def test_povm_checks():
    with pytest.raises(InvalidChannelError, match="sum to the identity"):
        check_povm([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])])
    with pytest.raises(InvalidChannelError, match="positive"):
        check_povm([np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])])


def test_compose_and_tensor():
    u = haar_unitary(2, 3)
    v = haar_unitary(2, 4)
    rho = random_density(2, 5)
    both = compose(unitary_channel(u), unitary_channel(v))
    np.testing.assert_allclose(apply(both, rho), v @ u @ rho @ dagger(u) @ dagger(v), atol=1e-12)
    pair = tensor(identity_channel(2), depolarizing(3))
    assert pair.d_in == 6 and pair.d_out == 6
    labeled = compose(identity_channel(2), measurement_channel(np.eye(2)))
    assert labeled.labels == [(1,), (2,)]


def test_stinespring_reproduces_channel():
    c = random_channel(3, 2, 4, 6)
    dilation = stinespring(c)
    assert dilation.isometry_error() < 1e-12
    rho = random_density(3, 7)
    np.testing.assert_allclose(dilation.channel().act(rho), c.act(rho), atol=1e-12)
    padded = dilation.padded(6)
    assert padded.dims(()) == (6, 2)
    np.testing.assert_allclose(padded.channel().act(rho), c.act(rho), atol=1e-12)
    with pytest.raises(ShapeError, match="shrink"):
        dilation.padded(1)


def test_choi_round_trip_and_adjoint():
    c = random_channel(2, 3, 2, 8)
    j = c.choi()
    np.testing.assert_allclose(np.trace(j), 1.0, atol=1e-12)
    rebuilt = Channel.from_choi(j, 2)
    x = random_density(2, 9)
    np.testing.assert_allclose(rebuilt.act(x), c.act(x), atol=1e-10)
    y = random_density(3, 10)
    np.testing.assert_allclose(np.trace(y @ c.act(x)), np.trace(c.adjoint(y) @ x), atol=1e-12)


def test_randomizing_channel():
    c = randomizing_channel(4, 3, 11)
    assert c.unitaries.shape == (3, 4, 4)
    assert c.params == {'d': 4, 'mu': 3, 'seed': 11}
    assert c.completeness_error() < 1e-12
    np.testing.assert_array_equal(c.unitaries, randomizing_channel(4, 3, 11).unitaries)
    with pytest.raises(ValueError):
        randomizing_channel(1, 3, 11)


def test_mu_star():
    assert mu_star(2, 1.0) == 186
    with pytest.raises(ValueError, match="positive"):
        mu_star(2, 0.0)


def test_random_channel_needs_enough_kraus():
    with pytest.raises(ShapeError, match="cannot be complete"):
        random_channel(5, 2, 2, 0)


def test_monte_carlo_average_fidelity():
    c = random_channel(3, 3, 2, 12)
    exact, err = average_fidelity(c)
    assert err == 0.0
    estimate, stderr = average_fidelity(c, mode="montecarlo", samples=4000, seed=13)
    assert abs(estimate - exact) <= 4 * stderr
    with pytest.raises(ValueError, match="at least 2"):
        average_fidelity(c, mode="montecarlo", samples=1, seed=0)


def test_energy_truncation():
    ec = EnergyConstraint(np.diag(np.arange(8.0)), 1.0)
    c = energy_respecting_channel(ec, 14)
    truncation = energy_truncate(c, ec, 0.1)
    assert truncation.rank == 8
    truncation = energy_truncate(c, ec, 0.25)
    assert truncation.rank == 5
    for i in range(5):
        rho = constrained_state(ec, i)
        assert is_density(rho)
        assert ec.energy_of(rho) <= 1.0 + 1e-10
        assert truncation.error(rho) <= truncation.bound


def test_energy_constraint_errors():
    with pytest.raises(DomainError, match="Hermitian"):
        EnergyConstraint(np.array([[0.0, 1.0], [0.0, 1.0]]), 1.0)
    with pytest.raises(DomainError, match="no state"):
        EnergyConstraint(np.diag([2.0, 3.0]), 1.0)
    ec = EnergyConstraint(np.diag([0.0, 1.0]), 0.5)
    with pytest.raises(ValueError, match="gamma"):
        energy_truncate(identity_channel(2), ec, 1.5)


@pytest.mark.parametrize('d', [2, 3])
def test_choi_distance_identity_versus_depolarizing(d):
    np.testing.assert_allclose(cb_lower_choi(identity_channel(d), depolarizing(d)), 2 - 2 / d ** 2, atol=1e-10)
    assert cb_lower_choi(depolarizing(d), depolarizing(d)) < 1e-12


def test_choi_distance_low_rank_path():
    c = randomizing_channel(4, 2, 15)
    dense = cb_lower_choi(c, depolarizing(4))
    with analysis_config.override(LOWRANK_THRESHOLD=1):
        low_rank = cb_lower_choi(c, depolarizing(4))
    np.testing.assert_allclose(low_rank, dense, atol=1e-10)
    assert dense >= 2 - 2 * 2 / 16 - 1e-9


def test_choi_distance_shape_mismatch():
    with pytest.raises(ShapeError, match="input dimensions"):
        cb_lower_choi(identity_channel(2), identity_channel(3))


def test_plain_and_stabilized_norms():
    value, witness = op_norm_estimate(identity_channel(2), depolarizing(2), 3, 16)
    np.testing.assert_allclose(value, 1.0, atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(witness), 1.0)
    stabilized, _ = cb_norm_oracle(identity_channel(2), depolarizing(2), 2, 17)
    assert stabilized >= 1.5 - 1e-9
    with pytest.raises(ShapeError, match="limited"):
        cb_norm_oracle(identity_channel(5), depolarizing(5), 1, 0)
    with pytest.raises(ValueError, match="at least 1"):
        op_norm_estimate(identity_channel(2), depolarizing(2), 0, 0)


def test_fidelity_sum_optimizer_reaches_one_plus_fidelity():
    rho = random_density(3, 18)
    sigma = random_density(3, 19)
    value, omega = fidelity_sum_optimizer(rho, sigma)
    assert is_density(omega, tol=1e-8)
    np.testing.assert_allclose(value, 1 + fidelity(rho, sigma), atol=1e-7)


def random_povm(d, outcomes, seed):
    rng = rng_from(seed)
    parts = []
    for _ in range(outcomes):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        parts.append(g @ dagger(g))
    inv_root = np.linalg.inv(psd_sqrt(sum(parts)))
    return [inv_root @ a @ inv_root for a in parts]


@pytest.mark.parametrize('seed', range(5))
def test_measure_prepare_choi_is_ppt(seed):
    povm = random_povm(3, 3, seed)
    states = [random_density(2, rng_from(seed, k)) for k in range(3)]
    c = measure_prepare(povm, states)
    assert c.completeness_error() < 1e-9
    j = choi(c)
    for index in (0, 1):
        assert np.linalg.eigvalsh(partial_transpose(j, [2, 3], index))[0] >= -1e-12
    entangled = np.linalg.eigvalsh(partial_transpose(choi(identity_channel(2)), [2, 2], 1))
    assert entangled[0] < -0.4
