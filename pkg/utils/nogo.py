"""
No-go analysis
Strategy register, Bob's commitment-time channel, concealment bounds,
and construction and evaluation of Alice's cheat from two honest strategies
"""

import numpy as np

from .alignment import align_isometries
from .analysis_config import analysis_config
from .channel_norms import cb_lower_choi
from .channels import Channel, StinespringDilation
from .errors import ScheduleError, ShapeError, StructureError
from .hybrid import ALICE, BOB, hybrid_trace_distance, restrict
from .numerics import as_square, kron, max_entangled, partial_trace, pure
from .protocol import COMMIT, FINAL, OPEN, Strategy, propagate, purify, run


class StrategyRegister:
    """Bob's finite strategy set run coherently from a control register.

    Members are purified on a common schedule (junk padded to the largest
    Kraus count per round). The register strategy applies
    sum_b V(b) (x) |b><b| at every Bob round; the register, and the record
    copy when record=True, sit after Bob's lab.
    """

    def __init__(self, tree, bobs, record=False):
        bobs = list(bobs)
        if not bobs:
            raise StructureError("Bob's strategy set is empty")
        if any(b.player != BOB for b in bobs):
            raise StructureError("register members must be Bob strategies")
        dims = {b.initial_dim for b in bobs}
        if len(dims) != 1:
            raise ScheduleError(f"register members start on different dimensions {sorted(dims)}")
        self.tree = tree
        self.members = bobs
        self.size = len(bobs)
        self.record = record
        self.bob_dim = bobs[0].initial_dim
        self.purified = [purify(b, tree, pad=self._padding()) for b in bobs]
        self.strategy = self._controlled()

    @property
    def input_dim(self):
        return self.size * self.size if self.record else self.size

    @property
    def names(self):
        return [b.name for b in self.members]

    def _padding(self):
        pad = {}
        stack = [((), [self.bob_dim] * self.size)]
        while stack:
            label, labs = stack.pop()
            node = self.tree.nodes.get(label)
            if node is None:
                continue
            if node.owner == ALICE:
                stack.extend((label + (m,), [lab * d for lab in labs]) for m, d in node.messages.items())
                continue
            actions = [b.action(self.tree, label, lab) for b, lab in zip(self.members, labs)]
            if any(a.d_in != lab for a, lab in zip(actions, labs)):
                raise ScheduleError("register members act on different dimensions", path=label)
            out_dims = {}
            for a in actions:
                for out_label, d_out in a.out_dims.items():
                    if out_dims.setdefault(out_label, d_out) != d_out:
                        raise ScheduleError("register members keep different dimensions", path=label + out_label)
            for out_label, d_out in out_dims.items():
                m = out_label[0]
                pad[(label, m)] = max(a.blocks[out_label].shape[0] for a in actions if out_label in a.blocks)
                kept = d_out // node.messages[m]
                stack.append((label + out_label, [kept] * self.size))
        return pad

    def _controlled(self):
        n = self.size
        eye = np.eye(n)
        record = np.eye(n if self.record else 1)
        actions = {}
        labels = sorted(set().union(*(p.actions for p in self.purified)))
        for label in labels:
            shapes = {}
            for p in self.purified:
                if label not in p.actions:
                    continue
                for out_label, k in p.actions[label].blocks.items():
                    shapes[out_label] = k.shape[1:]
            kraus = {}
            for out_label, shape in shapes.items():
                total = 0
                for b, p in enumerate(self.purified):
                    blocks = p.actions[label].blocks if label in p.actions else {}
                    op = blocks[out_label][0] if out_label in blocks else np.zeros(shape)
                    total = total + kron(kron(op, np.outer(eye[b], eye[b])), record)
                kraus[out_label] = [total]
            actions[label] = Channel(kraus, name="controlled", validate=False)
        return Strategy(BOB, actions, initial_dim=self.bob_dim * self.input_dim, name="register")

    def with_record(self):
        return self if self.record else StrategyRegister(self.tree, self.members, record=True)


def register_channel(tree, alice, register, rho0, until=COMMIT):
    """Channel from register states to Bob's hybrid state at until.

    Built column pair by column pair: each |s><t| is run linearly and the
    Choi blocks (1/n) sum_{s,t} Gamma(|s><t|) (x) |s><t| are assembled per label.
    """
    rho0 = as_square(rho0, "initial state")
    n = register.input_dim
    choi = {}
    for s in range(n):
        for t in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[s, t] = 1.0
            out = propagate(tree, alice, register.strategy, kron(rho0, e), until, mode="operator")
            for label, (block, da, db) in out.items():
                bob = partial_trace(block, [da, db], [1])
                part = kron(bob, e) / n
                choi[label] = choi[label] + part if label in choi else part
    return Channel.from_choi(choi, n)


def purify_initial(rho0, dim_a, dim_b):
    """Purification of rho0 with the reference leading on Alice's side; returns (psi, ref_dim)."""
    rho0 = as_square(rho0, "initial state")
    if rho0.shape[0] != dim_a * dim_b:
        raise ShapeError(f"initial state of dimension {rho0.shape[0]}, expected {dim_a}x{dim_b}")
    w, v = np.linalg.eigh(0.5 * (rho0 + rho0.conj().T))
    keep = w > analysis_config.PRUNE_TOL
    rows = np.sqrt(w[keep])[:, None] * v[:, keep].T
    return rows.reshape(-1), int(np.sum(keep))


def dilation(tree, alice_hat, register, psi0, until=COMMIT):
    """Isometry from the register into sum_x A_x (x) B_x for a coherent Alice."""
    n = register.input_dim
    columns = kron(np.asarray(psi0, dtype=complex).reshape(-1, 1), np.eye(n))
    out = propagate(tree, alice_hat, register.strategy, columns, until, mode="vector")
    return StinespringDilation([(label, da, db, v) for label, (v, da, db) in out.items()])


class Concealment:
    """Concealment bounds in the cb-norm convention, plus the plain per-strategy value."""

    def __init__(self, eps_lower, eps_upper, eps_state, per_strategy, alignment):
        self.eps_lower = eps_lower
        self.eps_upper = eps_upper
        self.eps_state = eps_state
        self.per_strategy = per_strategy
        self.alignment = alignment

    @property
    def converged(self):
        return self.alignment.converged

    def __iter__(self):
        return iter((self.eps_lower, self.eps_upper))

    def to_dict(self):
        return {
            'eps_lower': self.eps_lower,
            'eps_upper': self.eps_upper,
            'eps_state': self.eps_state,
            'per_strategy': self.per_strategy,
            'alignment': self.alignment.to_dict(),
        }


def _hats(tree, a0, a1, register, rho0):
    psi0, ref = purify_initial(rho0, a0.initial_dim, register.bob_dim)
    return psi0, purify(a0, tree, ref_dim=ref), purify(a1, tree, ref_dim=ref)


def concealment(tree, a0, a1, bobs, rho0, until=COMMIT, seed=0, restarts=None):
    """(eps_lower, eps_upper) for Bob's view at until.

    eps_lower is the Choi-state lower bound on the register channels, eps_upper twice the
    aligned distance of the purified dilations.
    """
    register = StrategyRegister(tree, bobs)
    gamma0 = register_channel(tree, a0, register, rho0, until)
    gamma1 = register_channel(tree, a1, register, rho0, until)
    eps_lower = cb_lower_choi(gamma0, gamma1)

    psi0, hat0, hat1 = _hats(tree, a0, a1, register, rho0)
    result = align_isometries(dilation(tree, hat0, register, psi0, until),
                              dilation(tree, hat1, register, psi0, until),
                              pad=True, seed=seed, restarts=restarts)
    eps_upper = 2 * result.value

    per_strategy = {}
    for b in bobs:
        s0 = restrict(run(tree, a0, b, rho0, until), BOB)
        s1 = restrict(run(tree, a1, b, rho0, until), BOB)
        per_strategy[b.name] = 0.5 * hybrid_trace_distance(s0, s1)
    eps_state = max(per_strategy.values())
    return Concealment(eps_lower, eps_upper, eps_state, per_strategy, result)


class CheatPlan:
    """Alice's pair of strategies that agree through the commitment phase.

    alice[0] is the purified honest a0; alice[1] shares its commitment-phase
    actions, applies the aligning unitary at each commitment leaf and then
    opens like the purified a1. initial_state carries Alice's reference.
    """

    def __init__(self, alice, commit_actions, unitaries, transitions, reverts, initial_state, alignment):
        self.alice = alice
        self.commit_actions = commit_actions
        self.unitaries = unitaries
        self.transitions = transitions
        self.reverts = reverts
        self.initial_state = initial_state
        self.alignment = alignment

    @property
    def value(self):
        return self.alignment.value

    @property
    def converged(self):
        return self.alignment.converged

    def unitarity_error(self):
        return self.alignment.unitarity_error()


def _transition(u, dim_in, dim_out):
    """Channel dim_in -> dim_out: pad, rotate by u, keep the first dim_out levels, park the rest on |0>."""
    w = u[:, :dim_in]
    ops = [w[:dim_out]]
    for j in range(dim_out, w.shape[0]):
        op = np.zeros((dim_out, dim_in), dtype=complex)
        op[0] = w[j]
        ops.append(op)
    return Channel(ops, name="sneak flip")


def _check_alignment(alignment, v0, v1):
    if not alignment.blockwise:
        raise StructureError("a reused alignment must be blockwise")
    for label in v0.labels:
        u = alignment.unitaries.get(label)
        if u is None:
            raise StructureError(f"the reused alignment has no unitary for commitment leaf {label}")
        if u.shape[0] < max(v0.dims(label)[0], v1.dims(label)[0]):
            raise ShapeError(f"the reused alignment is too small on commitment leaf {label}")


def synthesize_cheat(tree, a0, a1, bobs, rho0, seed=0, restarts=None, alignment=None):
    """Cheat plan from purified a0, a1 aligned blockwise at the commitment leaves.

    alignment, when given, is a padded blockwise AlignmentResult of the same
    commitment-leaf dilations (Concealment.alignment) and is used instead of
    aligning again.
    """
    register = StrategyRegister(tree, bobs)
    psi0, hat0, hat1 = _hats(tree, a0, a1, register, rho0)
    v0 = dilation(tree, hat0, register, psi0)
    v1 = dilation(tree, hat1, register, psi0)
    missing = set(v0.labels) - set(v1.labels)
    if missing:
        raise StructureError(f"the bit-1 strategy never reaches commitment leaves {sorted(missing)}")
    if alignment is None:
        result = align_isometries(v0, v1, blockwise=True, pad=True, seed=seed, restarts=restarts)
    else:
        _check_alignment(alignment, v0, v1)
        result = alignment

    transitions = {}
    reverts = {0: {}, 1: {}}
    for label in v0.labels:
        dim0 = v0.dims(label)[0]
        dim1 = v1.dims(label)[0]
        transitions[label] = _transition(result.unitaries[label], dim0, dim1)
        reverts[0][label] = hat0.revert(label, dim0)
        reverts[1][label] = hat1.revert(label, dim1)

    commit_actions = {label: a for label, a in hat0.actions.items() if tree.nodes[label].phase != OPEN}
    opening = {label: a for label, a in hat1.actions.items() if tree.nodes[label].phase == OPEN}
    sharp1 = Strategy(ALICE, {**commit_actions, **opening}, initial_dim=hat0.initial_dim,
                      name=f"{a1.name}#", transitions=transitions)
    sharp0 = Strategy(ALICE, hat0.actions, initial_dim=hat0.initial_dim, name=f"{a0.name}#",
                      junk=hat0.junk)
    return CheatPlan((sharp0, sharp1), commit_actions, result.unitaries, transitions, reverts,
                     pure(psi0), result)


class SecurityReport:
    """Concealment, binding and soundness figures for one protocol and cheat plan."""

    def __init__(self, eps_lower, eps_upper, delta_hat, eta, table, acceptance, gaps, seeds, converged,
                 alignment_value):
        self.eps_lower = eps_lower
        self.eps_upper = eps_upper
        self.delta_hat = delta_hat
        self.eta = eta
        self.table = table
        self.acceptance = acceptance
        self.gaps = gaps
        self.seeds = seeds
        self.converged = converged
        self.alignment_value = alignment_value

    def bound_holds(self, tol=1e-6):
        """delta_hat <= 2 sqrt(eps_upper) + tol."""
        return self.delta_hat <= 2 * np.sqrt(max(self.eps_upper, 0.0)) + tol

    def to_dict(self):
        return {
            'eps_lower': self.eps_lower,
            'eps_upper': self.eps_upper,
            'delta_hat': self.delta_hat,
            'eta': self.eta,
            'alignment_value': self.alignment_value,
            'strategies': self.table,
            'acceptance': self.acceptance,
            'acceptance_gaps': self.gaps,
            'seeds': self.seeds,
            'converged': self.converged,
        }


def _bob_view(tree, alice, bob, rho0):
    return restrict(run(tree, alice, bob, rho0, FINAL), BOB)


def evaluate_cheat(tree, plan, a0, a1, bobs, rho0, verifier, bounds=None, seed=0):
    """Run both cheat branches against every Bob strategy and the recorded register.

    delta_hat is half the largest trace distance between Bob's final views
    under cheat and honest play. Acceptance and eta use the first Bob strategy.
    """
    rho0 = as_square(rho0, "initial state")
    bounds = concealment(tree, a0, a1, bobs, rho0, seed=seed) if bounds is None else bounds
    honest = (a0, a1)

    register = StrategyRegister(tree, bobs, record=True)
    omega = pure(max_entangled(register.size))
    tested = [(b.name, b, rho0, plan.initial_state) for b in bobs]
    tested.append(("register+record", register.strategy, kron(rho0, omega), kron(plan.initial_state, omega)))

    table = []
    for name, bob, honest_start, cheat_start in tested:
        for bit in (0, 1):
            view_h = _bob_view(tree, honest[bit], bob, honest_start)
            view_c = _bob_view(tree, plan.alice[bit], bob, cheat_start)
            table.append({'bob': name, 'bit': bit, 'delta': 0.5 * hybrid_trace_distance(view_c, view_h)})
    delta_hat = max(row['delta'] for row in table)

    acceptance = {}
    gaps = {}
    eta = 0.0
    if verifier is not None:
        for bit in (0, 1):
            key = str(bit)
            p_honest = verifier.outcome_probabilities(_bob_view(tree, honest[bit], bobs[0], rho0))
            p_cheat = verifier.outcome_probabilities(_bob_view(tree, plan.alice[bit], bobs[0], plan.initial_state))
            acceptance[key] = {'honest': p_honest, 'cheat': p_cheat}
            gaps[key] = abs(p_cheat[key] - p_honest[key])
            eta = max(eta, 1.0 - p_honest[key])

    return SecurityReport(bounds.eps_lower, bounds.eps_upper, float(delta_hat), float(min(max(eta, 0.0), 1.0)),
                          table, acceptance, gaps, {'alignment': int(seed)},
                          bool(plan.converged and bounds.converged), plan.value)
