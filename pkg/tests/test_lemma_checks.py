import numpy as np
import pytest

from utils.channels import identity_channel, measurement_channel, random_channel
from utils.errors import InvalidChannelError
from utils.lemma_checks import (average_fidelity_battery, energy_battery, fidelity_sum_battery,
                                fidelity_trace_battery, random_entanglement_breaking, run_batteries,
                                separable_battery, separable_norm_check)


def test_fidelity_trace_battery():
    result = fidelity_trace_battery(trials=60, seed=1)
    assert result['passed']
    assert result['trials'] == 60
    assert result['worst_margin'] >= -1e-10


def test_fidelity_trace_battery_is_worker_independent():
    assert fidelity_trace_battery(trials=12, seed=2, workers=1) == fidelity_trace_battery(trials=12, seed=2, workers=3)


def test_fidelity_sum_battery():
    result = fidelity_sum_battery(trials=10, seed=3)
    assert result['passed']
    assert result['largest_overshoot'] <= 1e-9


def test_average_fidelity_battery():
    result = average_fidelity_battery(channels=2, d=3, samples=2000, seed=4, sigmas=4.0)
    assert result['passed']
    assert len(result['channels']) == 2


def test_random_entanglement_breaking_is_a_channel():
    record = random_entanglement_breaking(3, 2, 3, 5)
    assert record.completeness_error() < 1e-9
    assert all(np.linalg.matrix_rank(k, tol=1e-10) == 1 for k in record.kraus)


def test_separable_norm_check():
    c1 = random_channel(2, 2, 2, 6)
    c2 = random_channel(2, 2, 2, 7)
    result = separable_norm_check(c1, c2, random_entanglement_breaking(2, 2, 2, 8), samples=4, trials=2)
    assert result['passed']
    with pytest.raises(InvalidChannelError, match="rank-one"):
        separable_norm_check(c1, c2, identity_channel(2))
    with pytest.raises(InvalidChannelError, match="single output"):
        separable_norm_check(c1, c2, measurement_channel(np.eye(2)))


def test_separable_battery():
    result = separable_battery(pairs=4, seed=9)
    assert result['passed']
    assert result['records'] == {'measure_prepare': 2, 'classical': 2}


def test_energy_battery():
    result = energy_battery(trials=8, seed=10)
    assert result['passed']
    assert result['trials'] == 24


@pytest.mark.slow
def test_full_batteries():
    results = run_batteries(seed=0)
    assert set(results) == {'fidelity_trace', 'fidelity_sum', 'average_fidelity', 'separable_norm',
                            'energy_truncation'}
    assert all(battery['passed'] for battery in results.values())
