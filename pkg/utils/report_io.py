"""
Report and definition files
JSON codecs for numbers, matrices, states and channels, protocol definition
files, and deterministic report writing
"""

import json
import os

import numpy as np

from .analysis_config import analysis_config
from .channels import Channel
from .errors import ConfigError, QBCError, TreeError
from .hybrid import ALICE, BOB, as_label
from .protocol import PHASES, CommunicationTree, Node, Protocol, Strategy, Verifier


def encode_number(x):
    """17 significant digits; complex numbers become [re, im]."""
    if isinstance(x, (complex, np.complexfloating)):
        return [format(float(x.real), '.17g'), format(float(x.imag), '.17g')]
    return format(float(x), '.17g')


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[encode_number(z) for z in row] for row in m]


def encode_value(value):
    """Recursive encoder for report dicts: floats as strings, arrays as matrices."""
    if isinstance(value, dict):
        return {str(k): encode_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return encode_matrix(value)
        return [encode_value(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, complex, np.floating, np.complexfloating)):
        return encode_number(value)
    return value


def _fail(message, path):
    raise ConfigError(message, path=path)


def decode_number(raw, path=()):
    try:
        if isinstance(raw, list):
            if len(raw) != 2:
                _fail("complex entries are [re, im] pairs", path)
            return complex(float(raw[0]), float(raw[1]))
        return complex(float(raw))
    except (TypeError, ValueError):
        _fail(f"not a number: {raw!r}", path)


def decode_matrix(rows, path=()):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        _fail("matrix must be a non-empty list of rows", path)
    width = len(rows[0])
    values = []
    for i, row in enumerate(rows):
        if len(row) != width:
            _fail(f"row of length {len(row)}, expected {width}", path + (i,))
        values.append([decode_number(z, path + (i, j)) for j, z in enumerate(row)])
    return np.array(values, dtype=complex)


def encode_state(s):
    return {
        'branches': [
            {'label': list(label), 'weight': encode_number(weight), 'state': encode_matrix(rho)}
            for label, (weight, rho) in s.items()
        ],
    }


def encode_channel(c):
    """Kraus blocks per output label; randomizing channels also carry their regeneration parameters."""
    data = {
        'name': c.name,
        'kind': c.kind,
        'd_in': c.d_in,
        'blocks': [{'label': list(label), 'kraus': [encode_matrix(k) for k in c.blocks[label]]}
                   for label in c.labels],
    }
    if c.kind == "randomizing":
        data['regenerate'] = dict(c.params)
    return data


def _encode_strategy(s):
    actions = []
    for label in sorted(s.actions):
        action = s.actions[label]
        actions.append({
            'label': list(label),
            'messages': {str(m[0]): [encode_matrix(k) for k in action.blocks[m]] for m in action.labels},
        })
    return {
        'player': s.player,
        'name': s.name,
        'initial_dim': s.initial_dim,
        'notarized': bool(s.notarized),
        'actions': actions,
    }


def protocol_to_dict(protocol):
    tree = [{'label': list(label), 'owner': node.owner, 'phase': node.phase,
             'messages': {str(m): dim for m, dim in sorted(node.messages.items())}}
            for label, node in sorted(protocol.tree.nodes.items())]
    verifier = None
    if protocol.verifier is not None:
        verifier = [{'leaf': list(leaf), 'effects': {k: encode_matrix(e) for k, e in sorted(table.items())}}
                    for leaf, table in sorted(protocol.verifier.effects.items())]
    return {
        'schema': analysis_config.SCHEMA_VERSION,
        'name': protocol.name,
        'tree': tree,
        'strategies': {
            'a0': _encode_strategy(protocol.a0),
            'a1': _encode_strategy(protocol.a1),
            'bobs': [_encode_strategy(b) for b in protocol.bobs],
        },
        'initial_state': encode_matrix(protocol.rho0),
        'verifier': verifier,
        'params': encode_value(protocol.params),
    }


def _field(data, key, path, kind=None):
    if not isinstance(data, dict) or key not in data:
        _fail(f"missing field '{key}'", path)
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        _fail(f"field '{key}' has the wrong type", path + (key,))
    return value


def _label(raw, path):
    if not isinstance(raw, list) or not all(isinstance(x, int) and x >= 0 for x in raw):
        _fail("labels are lists of non-negative integers", path)
    return as_label(raw)


def _decode_tree(entries, path):
    if not isinstance(entries, list):
        _fail("tree must be a list of nodes", path)
    nodes = {}
    for i, entry in enumerate(entries):
        at = path + (i,)
        label = _label(_field(entry, 'label', at), at + ('label',))
        owner = _field(entry, 'owner', at, str)
        phase = _field(entry, 'phase', at, str)
        if owner not in (ALICE, BOB):
            _fail(f"unknown owner {owner!r}", at + ('owner',))
        if phase not in PHASES:
            _fail(f"unknown phase {phase!r}", at + ('phase',))
        messages = {}
        for m, dim in _field(entry, 'messages', at, dict).items():
            if not m.isdigit() or not isinstance(dim, int):
                _fail("messages map integer keys to integer dimensions", at + ('messages', m))
            messages[int(m)] = dim
        nodes[label] = Node(owner, messages, phase)
    return CommunicationTree(nodes)


def _decode_strategy(data, path):
    player = _field(data, 'player', path, str)
    actions = {}
    for i, entry in enumerate(_field(data, 'actions', path, list)):
        at = path + ('actions', i)
        label = _label(_field(entry, 'label', at), at + ('label',))
        messages = {}
        for m, ops in _field(entry, 'messages', at, dict).items():
            if not m.isdigit() or not isinstance(ops, list) or not ops:
                _fail("each message needs a non-empty Kraus list", at + ('messages', m))
            messages[int(m)] = [decode_matrix(k, at + ('messages', m, j)) for j, k in enumerate(ops)]
        try:
            actions[label] = Channel({(m,): ops for m, ops in messages.items()}, path=label)
        except QBCError as e:
            _fail(str(e), at)
    try:
        return Strategy(player, actions, initial_dim=data.get('initial_dim', 1), name=data.get('name'),
                        notarized=bool(data.get('notarized', False)))
    except ValueError as e:
        _fail(str(e), path)


def protocol_from_dict(data):
    if not isinstance(data, dict):
        _fail("definition must be a JSON object", ())
    schema = _field(data, 'schema', ())
    if str(schema) != analysis_config.SCHEMA_VERSION:
        _fail(f"unsupported schema {schema!r}", ('schema',))
    try:
        tree = _decode_tree(_field(data, 'tree', ()), ('tree',))
    except TreeError as e:
        _fail(str(e), ('tree',))
    strategies = _field(data, 'strategies', (), dict)
    a0 = _decode_strategy(_field(strategies, 'a0', ('strategies',), dict), ('strategies', 'a0'))
    a1 = _decode_strategy(_field(strategies, 'a1', ('strategies',), dict), ('strategies', 'a1'))
    bobs = [_decode_strategy(b, ('strategies', 'bobs', i))
            for i, b in enumerate(_field(strategies, 'bobs', ('strategies',), list))]
    if not bobs:
        _fail("Bob's strategy set is empty", ('strategies', 'bobs'))
    rho0 = None
    if data.get('initial_state') is not None:
        rho0 = decode_matrix(data['initial_state'], ('initial_state',))
    verifier = None
    if data.get('verifier') is not None:
        effects = {}
        for i, entry in enumerate(data['verifier']):
            at = ('verifier', i)
            leaf = _label(_field(entry, 'leaf', at), at + ('leaf',))
            effects[leaf] = {k: decode_matrix(e, at + ('effects', k))
                             for k, e in _field(entry, 'effects', at, dict).items()}
        try:
            verifier = Verifier(effects)
        except QBCError as e:
            _fail(str(e), ('verifier',))
    return Protocol(data.get('name', 'custom'), tree, a0, a1, bobs, rho0=rho0, verifier=verifier,
                    params=data.get('params'))


def save_protocol(protocol, path):
    write_report(path, protocol_to_dict(protocol))
    print(f"💾 Protocol saved: {path}")


def load_protocol(path):
    """Read a definition file; any defect raises ConfigError with the JSON path."""
    if not os.path.exists(path):
        raise ConfigError(f"definition file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e.msg} (line {e.lineno})")
    return protocol_from_dict(data)


def dumps_report(report):
    return json.dumps(encode_value(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(path, report):
    """Sorted keys, indent 2, trailing newline; parent directories are created."""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_report(report))
    return path
