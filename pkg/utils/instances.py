"""
Built-in protocol instances
Bell-state commitment, anonymous-state commitment with a tunable leak,
and the two-basis shredder with its dedicated evaluator
"""

import numpy as np

from .channels import identity_channel, tensor
from .errors import ShapeError
from .hybrid import ALICE, BOB
from .numerics import fourier_mub, kron, max_entangled, partial_trace, pure
from .protocol import OPEN, CommunicationTree, Node, Protocol, Strategy, Verifier


def _commit_tree(commit_dim, open_dim, bob_dim=1):
    """Bob opens the conversation, Alice commits, Bob is silent, Alice announces the bit."""
    return CommunicationTree({
        (): Node(BOB, {0: bob_dim}),
        (0,): Node(ALICE, {0: commit_dim}),
        (0, 0): Node(BOB, {0: 1}, OPEN),
        (0, 0, 0): Node(ALICE, {0: open_dim, 1: open_dim}, OPEN),
    })


def _column(v):
    return np.asarray(v, dtype=complex).reshape(-1, 1)


def bell_protocol():
    """Alice sends half of Phi+ (bit 0) or Phi- (bit 1) and the other half at opening."""
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    phi_minus = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
    tree = _commit_tree(2, 2)

    def alice(bit, bell):
        return Strategy(ALICE, {
            (0,): {0: [_column(bell)]},
            (0, 0, 0): {bit: [np.eye(2)]},
        }, name=f"a{bit}")

    hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    bobs = [
        Strategy(BOB, name="honest"),
        Strategy(BOB, {(0, 0): {0: [hadamard]}}, name="hadamard"),
    ]
    verifier = Verifier({
        (0, 0, 0, 0): {"0": pure(phi_plus)},
        (0, 0, 0, 1): {"1": pure(phi_minus)},
    })
    return Protocol("bell", tree, alice(0, phi_plus), alice(1, phi_minus), bobs, verifier=verifier)


def leak_unitary(d, leak):
    """diag(exp(2 pi i leak j / d)), j = 0..d-1: identity at 0, orthogonal to it at 1."""
    if not 0 <= leak <= 1:
        raise ValueError("leak must lie in [0, 1]")
    return np.diag(np.exp(2j * np.pi * leak * np.arange(d) / d))


def anonymous_state_protocol(d, leak):
    """Bob supplies half of a maximally entangled pair, Alice encodes her bit on it.

    Bit 0 sends the half back untouched, bit 1 rotates it by leak_unitary(d, leak).
    Opening is a classical announcement; Bob then projects onto the encoded pair.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    unitaries = (np.eye(d, dtype=complex), leak_unitary(d, leak))
    omega = max_entangled(d)
    tree = _commit_tree(d, 1, bob_dim=d)

    def alice(bit):
        return Strategy(ALICE, {
            (0,): {0: [unitaries[bit]]},
            (0, 0, 0): {bit: [np.eye(1)]},
        }, name=f"a{bit}")

    product = np.zeros(d * d, dtype=complex)
    product[0] = 1.0
    bobs = [
        Strategy(BOB, {(): {0: [_column(omega)]}}, name="entangled"),
        Strategy(BOB, {(): {0: [_column(product)]}}, name="product"),
    ]
    verifier = Verifier({
        (0, 0, 0, bit): {str(bit): pure(kron(u, np.eye(d)) @ omega)} for bit, u in enumerate(unitaries)
    })
    return Protocol("anon", tree, alice(0), alice(1), bobs, verifier=verifier,
                    params={'d': d, 'leak': float(leak)})


class ShredderInstance:
    """Commit states built from the standard basis and its Fourier partner.

    rho0 = (1/d) sum_j |e_j e_j><e_j e_j|, rho1 = (1/d) sum_j |f_j conj(f_j)><...|;
    Alice keeps the first factor and Bob receives the second.
    """

    def __init__(self, d):
        self.d = d
        self.e, self.f = fourier_mub(d)
        self.vectors = (
            [kron(e, e) for e in self.e],
            [kron(f, f.conj()) for f in self.f],
        )
        self.rho0, self.rho1 = (sum(pure(v) for v in vs) / d for vs in self.vectors)
        self.p0 = d * self.rho0
        self.p1 = d * self.rho1

    @property
    def states(self):
        return self.rho0, self.rho1

    @property
    def projectors(self):
        return self.p0, self.p1

    def projector_error(self):
        return max(float(np.max(np.abs(p @ p - p))) for p in self.projectors)


def shredder_eval(inst, cheat_channels):
    """Success of Alice's post-commitment channels T on her retained half.

    For each T, success_01 = tr P1 (T (x) id)(rho0) and success_10 = tr P0 (T (x) id)(rho1).
    Both equal 1/d for every channel.
    """
    d = inst.d
    ref = identity_channel(d)
    success_01, success_10 = [], []
    for t in cheat_channels:
        if t.labeled or t.d_in != d or t.d_out != d:
            raise ShapeError(f"cheat channel must map dimension {d} to itself, got {t}")
        joint = tensor(t, ref)
        success_01.append(float(np.real(np.trace(inst.p1 @ joint.act(inst.rho0)))))
        success_10.append(float(np.real(np.trace(inst.p0 @ joint.act(inst.rho1)))))

    mixed = np.eye(d) / d
    marginal_error = max(
        float(np.max(np.abs(partial_trace(rho, (d, d), keep=[1]) - mixed))) for rho in inst.states)
    everything = np.array(success_01 + success_10)
    return {
        'd': d,
        'expected': 1.0 / d,
        'success_01': success_01,
        'success_10': success_10,
        'max_deviation': float(np.max(np.abs(everything - 1.0 / d))) if everything.size else 0.0,
        'variance': float(np.var(everything)) if everything.size else 0.0,
        'marginal_error': marginal_error,
        'projector_error': inst.projector_error(),
    }


def shredder_protocol(d, notary=False):
    """The shredder as a full protocol; with notary=True the commit preparations may not be purified."""
    inst = ShredderInstance(d)
    tree = _commit_tree(d, d)

    def alice(bit):
        prep = [_column(v) / np.sqrt(d) for v in inst.vectors[bit]]
        return Strategy(ALICE, {
            (0,): {0: prep},
            (0, 0, 0): {bit: [np.eye(d)]},
        }, name=f"a{bit}", notarized=notary)

    fourier = np.column_stack(inst.f)
    bobs = [
        Strategy(BOB, name="honest"),
        Strategy(BOB, {(0, 0): {0: [fourier]}}, name="fourier"),
    ]
    verifier = Verifier({
        (0, 0, 0, 0): {"0": inst.p0},
        (0, 0, 0, 1): {"1": inst.p1},
    })
    return Protocol("shredder", tree, alice(0), alice(1), bobs, verifier=verifier,
                    params={'d': d, 'notary': bool(notary)})
