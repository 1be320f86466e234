import numpy as np
import pytest

from utils.channels import Channel, depolarizing, identity_channel, stinespring
from utils.errors import ShapeError
from utils.lemma_checks import random_entanglement_breaking
from utils.monster import (MonsterInstance, honest_attack, monster_build, monster_general_attack,
                           monster_passive_cheat, passive_attack, passive_chain, random_attack, record_check,
                           separation, soundness)


@pytest.fixture(scope="module")
def small():
    return monster_build(4, 1, 3)


@pytest.fixture(scope="module")
def standard():
    return monster_build(8, 2, 1)


def test_instance_shapes(small):
    assert small.ancilla_dims == (1, 16)
    assert small.v0_pad.shape == (64, 4)
    assert small.v1_pad.shape == (64, 4)
    assert small.isometry_error() < 1e-12
    assert small.restriction_error() < 1e-12
    assert small.params() == {'d': 4, 'mu': 1, 'seed': 3}


def test_build_arguments():
    with pytest.raises(ValueError, match="d >= 2"):
        monster_build(1, 1, 0)
    with pytest.raises(ValueError, match="mu >= 1"):
        monster_build(4, 0, 0)


def test_from_isometries():
    inst = MonsterInstance.from_isometries(stinespring(identity_channel(2)), stinespring(depolarizing(2)))
    assert inst.mu is None
    assert inst.ancilla_dims == (1, 4)


@pytest.mark.parametrize('d', [2, 3, 4])
def test_single_unitary_choi_bound(d):
    chain = passive_chain(monster_build(d, 1, d))
    np.testing.assert_allclose(chain['cb_lower'], 2 - 2 / d ** 2, atol=1e-10)


def test_passive_chain(standard):
    chain = passive_chain(standard)
    assert chain['cb_lower'] >= 1.9375 - 1e-9
    assert chain['chain_holds']
    assert chain['bound_holds']
    assert [step['step'] for step in chain['chain']] == [
        'choi_distance', 'dilation_distance', 'channel_fidelity', 'average_fidelity']
    np.testing.assert_allclose(chain['delta_hat'], 2 - chain['cb_lower'])
    assert 0 <= chain['passive_probability'] <= chain['bound'] + 1e-9


def test_soundness(standard):
    assert soundness(standard) == pytest.approx({"0": 1.0, "1": 1.0}, abs=1e-10)


def test_honest_and_passive_attacks(standard):
    honest = monster_general_attack(standard, honest_attack(standard))
    np.testing.assert_allclose(honest['p0'], 1.0, atol=1e-10)
    assert honest['holds']
    passive = monster_general_attack(standard, passive_attack(standard))
    np.testing.assert_allclose(passive['p'], 0.5 + 0.5 * monster_passive_cheat(standard), atol=1e-10)
    assert passive['holds']


@pytest.mark.parametrize('seed', range(5))
def test_random_attacks_respect_the_bound(standard, seed):
    result = monster_general_attack(standard, random_attack(standard, seed))
    assert result['holds']
    assert 0 <= result['p'] <= 1 + 1e-9
    np.testing.assert_allclose(result['bound'], 0.5 + 1 / 8 + 0.5 * np.sqrt(2 - passive_chain(standard)['cb_lower']))


def test_attack_shapes_are_checked(small):
    t_sharp, t0, t1 = honest_attack(small)
    with pytest.raises(ShapeError, match="commitment channel"):
        monster_general_attack(small, (identity_channel(3), t0, t1))
    with pytest.raises(ShapeError, match="opening channel for bit 1"):
        monster_general_attack(small, (t_sharp, t0, Channel([np.eye(1)])))


def test_separation(small):
    result = separation(small, 3, 7)
    np.testing.assert_allclose(result['cb_lower'], 1.875, atol=1e-10)
    np.testing.assert_allclose(result['choi_bound'], 1.875)
    np.testing.assert_allclose(result['op_norm_estimate'], 1.5, atol=1e-8)
    np.testing.assert_allclose(result['gap'], 0.375, atol=1e-8)
    assert result['trials'] == 3


def test_record_check():
    record = random_entanglement_breaking(2, 2, 2, 6)
    inst = monster_build(2, 1, 5, record=record)
    result = record_check(inst, samples=4, trials=2)
    assert result['passed']
    assert result['largest_sample'] <= result['op_norm_estimate'] + 1e-6
    with pytest.raises(ValueError, match="entanglement-breaking"):
        record_check(monster_build(2, 1, 5))
