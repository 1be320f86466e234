import json

import numpy as np
import pytest

from utils.channels import identity_channel, randomizing_channel
from utils.errors import ConfigError
from utils.hybrid import BOB, HybridState, restrict
from utils.instances import bell_protocol, shredder_protocol
from utils.protocol import run
from utils.report_io import (decode_matrix, decode_number, dumps_report, encode_channel, encode_matrix,
                             encode_number, encode_state, encode_value, load_protocol, protocol_from_dict,
                             protocol_to_dict, save_protocol, write_report)


def test_number_codec():
    assert encode_number(0.1) == '0.10000000000000001'
    assert encode_number(1 + 2j) == ['1', '2']
    assert decode_number('0.1') == 0.1
    assert decode_number(['1', '-2']) == 1 - 2j
    with pytest.raises(ConfigError, match="not a number"):
        decode_number('one', ('tree', 0))
    with pytest.raises(ConfigError, match="pairs"):
        decode_number(['1', '2', '3'])


def test_matrix_codec_is_exact():
    m = np.array([[np.pi, 1 / 3 + 1e-17j], [np.e * 1j, -0.0]])
    np.testing.assert_array_equal(decode_matrix(encode_matrix(m)), m)
    with pytest.raises(ConfigError, match=r"row of length 1, expected 2 \(at initial_state/1\)"):
        decode_matrix([['1', '0'], ['1']], ('initial_state',))
    with pytest.raises(ConfigError, match="non-empty list"):
        decode_matrix([])


def test_encode_value():
    encoded = encode_value({'a': np.float64(0.5), 'b': [np.int64(3), True, None], 'c': np.eye(1)})
    assert encoded == {'a': '0.5', 'b': [3, True, None], 'c': [[['1', '0']]]}


def test_state_and_channel_encoding():
    state = HybridState({(0,): (0.5, np.eye(2) / 2), (1,): (0.5, np.eye(1))})
    branches = encode_state(state)['branches']
    assert [b['label'] for b in branches] == [[0], [1]]
    assert branches[0]['weight'] == '0.5'
    assert 'regenerate' not in encode_channel(identity_channel(2))
    assert encode_channel(randomizing_channel(3, 2, 4))['regenerate'] == {'d': 3, 'mu': 2, 'seed': 4}


@pytest.mark.parametrize('factory', [bell_protocol, lambda: shredder_protocol(2)])
def test_protocol_round_trip(factory):
    protocol = factory()
    loaded = protocol_from_dict(json.loads(json.dumps(protocol_to_dict(protocol))))
    assert loaded.name == protocol.name
    assert sorted(loaded.tree.nodes) == sorted(protocol.tree.nodes)
    assert [b.name for b in loaded.bobs] == [b.name for b in protocol.bobs]
    for bit in (0, 1):
        for original_bob, loaded_bob in zip(protocol.bobs, loaded.bobs):
            expected = restrict(run(protocol.tree, protocol.alices[bit], original_bob), BOB)
            actual = restrict(run(loaded.tree, loaded.alices[bit], loaded_bob), BOB)
            assert actual.labels == expected.labels
            for label in expected.labels:
                np.testing.assert_array_equal(actual.block(label), expected.block(label))
    np.testing.assert_array_equal(loaded.verifier.effects[(0, 0, 0, 0)]["0"],
                                  protocol.verifier.effects[(0, 0, 0, 0)]["0"])


def test_notary_flag_survives_round_trip():
    loaded = protocol_from_dict(protocol_to_dict(shredder_protocol(2, notary=True)))
    assert loaded.a0.notarized and loaded.a1.notarized


def test_load_protocol_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_protocol(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{\"schema\": ")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_protocol(str(broken))


@pytest.mark.parametrize('mutate, message', [
    (lambda d: d.update(schema="0"), "unsupported schema"),
    (lambda d: d['tree'][0].update(owner="carol"), r"unknown owner 'carol' \(at tree/0/owner\)"),
    (lambda d: d['tree'][1].update(owner="bob"), "alternate"),
    (lambda d: d['strategies'].update(bobs=[]), "empty"),
    (lambda d: d['strategies']['a0']['actions'][0]['messages'].update({'0': [[['2']]]}), "strategies/a0/actions/0"),
    (lambda d: d['verifier'][0]['effects'].update({'0': [['-1']]}), "not positive"),
    (lambda d: d.pop('tree'), "missing field 'tree'"),
])
def test_malformed_definitions(mutate, message):
    data = json.loads(json.dumps(protocol_to_dict(bell_protocol())))
    mutate(data)
    with pytest.raises(ConfigError, match=message):
        protocol_from_dict(data)


def test_save_and_load(tmp_path, capsys):
    path = tmp_path / "defs" / "bell.json"
    save_protocol(bell_protocol(), str(path))
    assert "Protocol saved" in capsys.readouterr().out
    assert load_protocol(str(path)).name == "bell"


def test_reports_are_deterministic(tmp_path):
    report = {'b': 1.0, 'a': {'z': np.float64(2.5), 'y': [1, 2]}}
    first = write_report(str(tmp_path / "out" / "one.json"), report)
    second = write_report(str(tmp_path / "two.json"), report)
    text = open(first, encoding="utf-8").read()
    assert text == open(second, encoding="utf-8").read() == dumps_report(report)
    assert text.endswith("}\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)['a']['z'] == '2.5'
