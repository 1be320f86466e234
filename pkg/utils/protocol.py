"""
Communication-tree protocol engine
Trees of classical message histories, party strategies, branchwise execution,
dimension schedules and local purification
"""

import numpy as np

from .analysis_config import analysis_config
from .channels import Channel
from .errors import (BranchExplosionError, NotaryError, ScheduleError, ShapeError, StructureError,
                     TreeError)
from .hybrid import ALICE, BOB, HybridState, as_label
from .numerics import as_square, check_entries, hermitian_part, kron

COMMIT = "commit"
HOLD = "hold"
OPEN = "open"
PHASES = (COMMIT, HOLD, OPEN)
FINAL = "final"


class Node:
    """One round: owner, message alphabet with Hilbert dimensions, phase tag."""

    def __init__(self, owner, messages, phase=COMMIT):
        if owner not in (ALICE, BOB):
            raise TreeError(f"owner must be '{ALICE}' or '{BOB}', got {owner!r}")
        if phase not in PHASES:
            raise TreeError(f"phase must be one of {PHASES}, got {phase!r}")
        self.owner = owner
        self.messages = {int(m): int(d) for m, d in dict(messages).items()}
        self.phase = phase

    def __repr__(self):
        return f"Node({self.owner}, {self.messages}, {self.phase})"


class CommunicationTree:
    """Nodes keyed by message-history label; children are label + (m,)."""

    def __init__(self, nodes):
        self.nodes = {as_label(label): node for label, node in nodes.items()}
        self.check()
        self._commit_leaves = None
        self._final_leaves = None

    def check(self):
        if () not in self.nodes:
            raise TreeError("tree has no root node")
        if self.nodes[()].owner != BOB:
            raise TreeError("Bob owns the root round", path=())
        for label, node in self.nodes.items():
            if not node.messages:
                raise TreeError("node has no messages", path=label)
            for m, d in node.messages.items():
                if m < 0 or d < 1:
                    raise TreeError(f"message {m} has dimension {d}", path=label)
            if label:
                parent = self.nodes.get(label[:-1])
                if parent is None or label[-1] not in parent.messages:
                    raise TreeError("node is not reachable from the root", path=label)
                if parent.owner == node.owner:
                    raise TreeError("owners must alternate along every path", path=label)
                if parent.phase == OPEN and node.phase != OPEN:
                    raise TreeError("commitment round after an opening round", path=label)

    def children(self, label):
        label = as_label(label)
        return [label + (m,) for m in sorted(self.nodes[label].messages)]

    def message_dim(self, label, m):
        return self.nodes[as_label(label)].messages[m]

    def is_leaf(self, label):
        return as_label(label) not in self.nodes

    @property
    def commit_leaves(self):
        """Labels where the commitment phase ends."""
        if self._commit_leaves is None:
            if self.nodes[()].phase == OPEN:
                self._commit_leaves = [()]
            else:
                found = []
                for label, node in self.nodes.items():
                    if node.phase == OPEN:
                        continue
                    for child in self.children(label):
                        if child not in self.nodes or self.nodes[child].phase == OPEN:
                            found.append(child)
                self._commit_leaves = sorted(found)
        return self._commit_leaves

    @property
    def final_leaves(self):
        if self._final_leaves is None:
            self._final_leaves = sorted(child for label in self.nodes for child in self.children(label)
                                        if child not in self.nodes)
        return self._final_leaves

    def __len__(self):
        return len(self.nodes)


def _as_action(spec, path):
    if isinstance(spec, Channel):
        if not spec.labeled:
            raise TreeError("node actions need one Kraus list per message", path=path)
        return spec
    return Channel({as_label(m): ops for m, ops in dict(spec).items()}, path=path)


def pass_through(d, m=0):
    """Identity action for a round whose only message has dimension one."""
    return Channel({(m,): [np.eye(d)]}, name="pass")


class Strategy:
    """A party's play: one branch channel per owned node, keyed by label.

    Each action is a Channel whose output labels are the messages (m,); for
    Alice the outputs are lab' (x) message, for Bob message (x) lab'.
    transitions are channels on the party's lab applied when a label is
    reached after the commitment phase (used by cheat plans).
    """

    def __init__(self, player, actions=None, initial_dim=1, name=None, notarized=False,
                 transitions=None, junk=None):
        if player not in (ALICE, BOB):
            raise ValueError(f"player must be '{ALICE}' or '{BOB}'")
        self.player = player
        self.actions = {as_label(label): _as_action(a, as_label(label)) for label, a in (actions or {}).items()}
        self.transitions = {}
        for label, t in (transitions or {}).items():
            t = t if isinstance(t, Channel) else Channel(list(t), path=as_label(label))
            if t.labeled:
                raise TreeError("transitions are unlabeled channels", path=as_label(label))
            self.transitions[as_label(label)] = t
        self.initial_dim = int(initial_dim)
        self.name = name or player
        self.notarized = notarized
        self.junk = dict(junk or {})

    def action(self, tree, label, lab_dim=None):
        """Explicit action at label, or the pass-through default."""
        label = as_label(label)
        if label in self.actions:
            return self.actions[label]
        node = tree.nodes[label]
        if len(node.messages) == 1 and next(iter(node.messages.values())) == 1 and lab_dim is not None:
            return pass_through(lab_dim, next(iter(node.messages)))
        raise TreeError(f"strategy {self.name} has no action for this round", path=label)

    @property
    def coherent(self):
        return (all(k.shape[0] == 1 for a in self.actions.values() for k in a.blocks.values())
                and all(t.n_kraus == 1 for t in self.transitions.values()))

    def revert(self, label, lab_dim):
        """Partial trace over the purification junk held at label."""
        j = self.junk.get(as_label(label), 1)
        if lab_dim % j:
            raise ShapeError(f"lab of dimension {lab_dim} does not hold junk of dimension {j}", path=label)
        rest = lab_dim // j
        eye = np.eye(j)
        if self.player == ALICE:
            ops = [kron(eye[k].reshape(1, -1), np.eye(rest)) for k in range(j)]
        else:
            ops = [kron(np.eye(rest), eye[k].reshape(1, -1)) for k in range(j)]
        return Channel(ops, name="revert")

    def __repr__(self):
        return f"Strategy({self.name}, {self.player}, {len(self.actions)} actions)"


class DimensionSchedule:
    """Per-label lab dimensions (alice, bob): actual and canonical."""

    def __init__(self, dims, canonical, excess):
        self.dims = dims
        self.canonical = canonical
        self.excess = excess

    def alice(self, label):
        return self.dims[as_label(label)][0]

    def bob(self, label):
        return self.dims[as_label(label)][1]

    @property
    def within_bound(self):
        return not self.excess


class Verifier:
    """Bob's final measurement: effects "0", "1" and "fail" per final leaf."""

    OUTCOMES = ("0", "1", "fail")

    def __init__(self, effects):
        self.effects = {}
        for leaf, table in effects.items():
            table = {str(k): as_square(v, "verifier effect") for k, v in table.items()}
            unknown = set(table) - set(self.OUTCOMES)
            if unknown:
                raise StructureError(f"unknown verifier outcomes {sorted(unknown)}", path=as_label(leaf))
            d = next(iter(table.values())).shape[0]
            if "fail" not in table:
                table["fail"] = np.eye(d) - sum(table.get(k, 0) for k in ("0", "1"))
            for key in ("0", "1"):
                table.setdefault(key, np.zeros((d, d)))
            for key, e in table.items():
                if np.linalg.eigvalsh(hermitian_part(e))[0] < -analysis_config.CHANNEL_TOL:
                    raise StructureError(f"effect {key} is not positive", path=as_label(leaf))
            self.effects[as_label(leaf)] = table

    def outcome_probabilities(self, state):
        """Outcome distribution on Bob's restricted final state; unknown leaves fail."""
        probs = dict.fromkeys(self.OUTCOMES, 0.0)
        for label, (weight, rho) in state.items():
            table = self.effects.get(label)
            if table is None:
                probs["fail"] += weight
                continue
            for key, e in table.items():
                if e.shape != rho.shape:
                    raise StructureError(f"effect of shape {e.shape} on state of shape {rho.shape}", path=label)
                probs[key] += weight * float(np.real(np.trace(rho @ e)))
        return {k: min(max(v, 0.0), 1.0) for k, v in probs.items()}


class Protocol:
    """Tree, honest strategies, Bob's strategy set, initial state and verifier."""

    def __init__(self, name, tree, a0, a1, bobs, rho0=None, verifier=None, params=None):
        self.name = name
        self.tree = tree
        self.a0 = a0
        self.a1 = a1
        self.bobs = list(bobs)
        if not self.bobs:
            raise StructureError("Bob's strategy set is empty")
        d = a0.initial_dim * self.bobs[0].initial_dim
        self.rho0 = initial_state(d) if rho0 is None else as_square(rho0, "initial state")
        self.verifier = verifier
        self.params = dict(params or {})

    @property
    def alices(self):
        return self.a0, self.a1

    def __repr__(self):
        return f"Protocol({self.name}, {len(self.tree)} rounds, {len(self.bobs)} Bob strategies)"


def initial_state(d):
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def validate(tree, alice, bob, strict=False):
    """Walk the tree and return the DimensionSchedule.

    The canonical schedule multiplies both labs by d(x, m) at every round;
    with strict=True a sender keeping more than that raises ScheduleError.
    """
    if alice.player != ALICE or bob.player != BOB:
        raise StructureError("validate expects an Alice strategy and a Bob strategy")
    for s in (alice, bob):
        for label in s.actions:
            node = tree.nodes.get(label)
            if node is None or node.owner != s.player:
                raise TreeError(f"strategy {s.name} acts on a round it does not own", path=label)

    root = (alice.initial_dim, bob.initial_dim)
    dims = {(): root}
    canonical = {(): root}
    excess = []
    stack = [()]
    while stack:
        label = stack.pop()
        da, db = dims[label]
        for s in (alice, bob):
            t = s.transitions.get(label)
            if t is None:
                continue
            lab = da if s.player == ALICE else db
            if t.d_in != lab:
                raise ShapeError(f"transition acts on {t.d_in}, lab has dimension {lab}", path=label)
            if s.player == ALICE:
                da = t.d_out
            else:
                db = t.d_out
        node = tree.nodes.get(label)
        if node is None:
            dims[label] = (da, db)
            continue
        sender = alice if node.owner == ALICE else bob
        lab = da if node.owner == ALICE else db
        action = sender.action(tree, label, lab)
        if action.d_in != lab:
            raise ShapeError(f"{sender.name} acts on dimension {action.d_in}, lab has dimension {lab}",
                             path=label)
        ca, cb = canonical[label]
        for out_label, d_out in action.out_dims.items():
            m = out_label[0] if len(out_label) == 1 else None
            if m not in node.messages:
                raise TreeError(f"{sender.name} sends unknown message {out_label}", path=label)
            d = node.messages[m]
            if d_out % d:
                raise ShapeError(f"output dimension {d_out} does not hold a message of dimension {d}",
                                 path=label)
            kept = d_out // d
            child = label + (m,)
            if node.owner == ALICE:
                dims[child] = (kept, d * db)
                limit = ca * d
            else:
                dims[child] = (da * d, kept)
                limit = cb * d
            canonical[child] = (ca * d, cb * d)
            if kept > limit:
                entry = {'label': child, 'party': node.owner, 'actual': kept, 'canonical': limit}
                if strict:
                    raise ScheduleError(f"{node.owner} keeps dimension {kept} above the bound {limit}",
                                        path=child)
                excess.append(entry)
            stack.append(child)
    return DimensionSchedule(dims, canonical, excess)


def _conjugate(kraus, x, da, db, side):
    """sum_k (K_k on one side) x (K_k on one side)^dagger for a stacked Kraus array."""
    o = kraus.shape[1]
    t = x.reshape(da, db, da, db)
    if side == ALICE:
        check_entries(o * db, o * db)
        out = np.einsum('kxa,abcd,kyc->xbyd', kraus, t, kraus.conj(), optimize=True)
        return out.reshape(o * db, o * db)
    check_entries(da * o, da * o)
    out = np.einsum('kxb,abcd,kyd->axcy', kraus, t, kraus.conj(), optimize=True)
    return out.reshape(da * o, da * o)


def _push(kraus, v, da, db, side):
    if kraus.shape[0] != 1:
        raise StructureError("vector propagation needs locally coherent strategies")
    k = kraus[0]
    cols = v.shape[1]
    t = v.reshape(da, db, cols)
    if side == ALICE:
        return np.einsum('xa,abk->xbk', k, t).reshape(-1, cols)
    return np.einsum('xb,abk->axk', k, t).reshape(-1, cols)


def _negligible(x, mode):
    if mode == "density":
        return float(np.real(np.trace(x))) <= analysis_config.PRUNE_TOL
    if mode == "vector":
        return float(np.sum(np.abs(x) ** 2)) <= analysis_config.PRUNE_TOL
    return float(np.max(np.abs(x), initial=0.0)) <= analysis_config.PRUNE_TOL


def _stops(tree, label, until):
    if until == FINAL:
        return False
    if until == COMMIT:
        return label in tree.commit_leaves
    return len(label) >= until


def propagate(tree, alice, bob, x, until=FINAL, mode="density"):
    """Branchwise forward simulation of x on A0 (x) B0.

    mode is "density" (x a state), "operator" (any square x, linear) or
    "vector" (x a matrix of column vectors, coherent strategies only).
    Returns label -> (array, dim_alice, dim_bob).
    """
    if until not in (FINAL, COMMIT) and not (isinstance(until, int) and until >= 0):
        raise ValueError(f"until must be '{COMMIT}', '{FINAL}' or a round count, got {until!r}")
    step = _push if mode == "vector" else _conjugate
    frontier = {(): (x, alice.initial_dim, bob.initial_dim)}
    done = {}
    while frontier:
        nxt = {}
        for label, (block, da, db) in frontier.items():
            if _stops(tree, label, until):
                done[label] = (block, da, db)
                continue
            for s in (alice, bob):
                t = s.transitions.get(label)
                if t is None:
                    continue
                block = step(t.blocks[()], block, da, db, s.player)
                if s.player == ALICE:
                    da = t.d_out
                else:
                    db = t.d_out
            node = tree.nodes.get(label)
            if node is None:
                done[label] = (block, da, db)
                continue
            sender = alice if node.owner == ALICE else bob
            lab = da if node.owner == ALICE else db
            action = sender.action(tree, label, lab)
            if action.d_in != lab:
                raise ShapeError(f"{sender.name} acts on dimension {action.d_in}, lab has dimension {lab}",
                                 path=label)
            for out_label, kraus in action.blocks.items():
                m = out_label[0]
                d = node.messages.get(m)
                if d is None:
                    raise TreeError(f"{sender.name} sends unknown message {m}", path=label)
                out = step(kraus, block, da, db, node.owner)
                if _negligible(out, mode):
                    continue
                kept = kraus.shape[1] // d
                dims = (kept, d * db) if node.owner == ALICE else (da * d, kept)
                nxt[label + (m,)] = (out,) + dims
        if len(nxt) + len(done) > analysis_config.BRANCH_CAP:
            raise BranchExplosionError(f"more than {analysis_config.BRANCH_CAP} branches")
        frontier = nxt
    return done


def run(tree, alice, bob, rho0=None, until=FINAL):
    """Hybrid state over the labels reached at until ('commit', 'final' or a round count)."""
    d = alice.initial_dim * bob.initial_dim
    rho0 = initial_state(d) if rho0 is None else as_square(rho0, "initial state")
    if rho0.shape[0] != d:
        raise ShapeError(f"initial state of dimension {rho0.shape[0]}, strategies start on {d}")
    out = propagate(tree, alice, bob, rho0, until, mode="density")
    blocks = {label: hermitian_part(block) for label, (block, _, _) in out.items()}
    splits = {label: (da, db) for label, (_, da, db) in out.items()}
    return HybridState.from_blocks(blocks, splits=splits)


def _purified_op(kraus, player, junk, pad_to):
    n, o, i = kraus.shape
    if pad_to and pad_to > n:
        kraus = np.concatenate([kraus, np.zeros((pad_to - n, o, i), dtype=complex)])
        n = pad_to
    if player == ALICE:
        v = kraus.reshape(n * o, i)
        return kron(np.eye(junk), v), n
    v = kraus.transpose(1, 0, 2).reshape(o * n, i)
    return kron(v, np.eye(junk)), n


def purify(s, tree, ref_dim=1, pad=None):
    """Locally coherent version of s with the same behavior towards the counterpart.

    Every Kraus set is replaced by its Stinespring isometry; the junk register
    stays with the party (leading factor for Alice, trailing for Bob) and is
    recorded per label for revert(). ref_dim adds a leading reference factor to
    Alice's initial lab. pad maps (label, m) -> Kraus count to pad to.
    """
    if s.notarized:
        raise NotaryError(f"strategy {s.name} is notarized and may not be purified")
    if ref_dim > 1 and s.player != ALICE:
        raise StructureError("only Alice holds the reference of the initial state")
    pad = pad or {}
    actions = {}
    transitions = {}
    junk = {}
    # (label, junk dim, lab dim of the original strategy)
    stack = [((), ref_dim, s.initial_dim)]
    while stack:
        label, j, lab = stack.pop()
        junk[label] = j
        t = s.transitions.get(label)
        if t is not None:
            op, n = _purified_op(t.blocks[()], s.player, j, None)
            transitions[label] = Channel([op], name="purified transition")
            j *= n
            lab = t.d_out
        node = tree.nodes.get(label)
        if node is None:
            continue
        if node.owner != s.player:
            stack.extend((label + (m,), j, lab * d) for m, d in node.messages.items())
            continue
        action = s.action(tree, label, lab)
        kraus = {}
        for out_label, k in action.blocks.items():
            m = out_label[0]
            op, n = _purified_op(k, s.player, j, pad.get((label, m)))
            kraus[out_label] = [op]
            stack.append((label + out_label, j * n, k.shape[1] // node.messages[m]))
        actions[label] = Channel(kraus, name="purified", validate=False)
    return Strategy(s.player, actions, initial_dim=ref_dim * s.initial_dim, name=f"{s.name}^",
                    transitions=transitions, junk=junk)
