"""
Randomizing-channel commitment
Alice answers Bob's Haar-random state with the dilation of a randomizing
channel (bit 0) or of the completely depolarizing channel (bit 1).
Haar averages are evaluated exactly through the average fidelity.
"""

import warnings

import numpy as np

from .channel_norms import cb_lower_choi, op_norm_estimate
from .channels import (Channel, average_fidelity, channel_fidelity, depolarizing, random_channel,
                       randomizing_channel, stinespring)
from .errors import ShapeError
from .lemma_checks import separable_norm_check
from .numerics import dagger, rng_from


class MonsterInstance:
    """Dilations V0 of R (randomizing) and V1 of S (depolarizing) on C^d.

    Both isometries put their ancilla first; v0_pad and v1_pad share the
    larger ancilla so that V0^dagger V1 is defined. record is an optional
    entanglement-breaking channel applied to Bob's kept half.
    """

    def __init__(self, d, mu, seed, v0, v1, r=None, s=None, record=None):
        self.d = int(d)
        self.mu = mu
        self.seed = seed
        self.v0 = v0
        self.v1 = v1
        self.r = v0.channel() if r is None else r
        self.s = v1.channel() if s is None else s
        self.record = record
        if v0.d_in != self.d or v1.d_in != self.d:
            raise ShapeError(f"dilations must act on dimension {self.d}")
        self.ancilla = max(self.ancilla_dims)
        self.v0_pad = v0.padded(self.ancilla).matrix
        self.v1_pad = v1.padded(self.ancilla).matrix

    @classmethod
    def from_isometries(cls, v0, v1):
        return cls(v0.d_in, None, None, v0, v1)

    @property
    def ancilla_dims(self):
        return self.v0.blocks[0][1], self.v1.blocks[0][1]

    def isometry(self, bit):
        return (self.v0, self.v1)[bit].matrix

    def isometry_error(self):
        return max(self.v0.isometry_error(), self.v1.isometry_error())

    def restriction_error(self):
        """Largest Choi entry difference between each dilation's Bob marginal and R or S."""
        errors = []
        for v, c in ((self.v0, self.r), (self.v1, self.s)):
            errors.append(float(np.max(np.abs(v.channel().choi() - c.choi()))))
        return max(errors)

    def overlap(self):
        """V0^dagger V1 on the common ancilla."""
        return dagger(self.v0_pad) @ self.v1_pad

    def params(self):
        return {'d': self.d, 'mu': self.mu, 'seed': self.seed}


def monster_build(d, mu, seed, record=None):
    if d < 2 or mu < 1:
        raise ValueError("monster instance needs d >= 2 and mu >= 1")
    r = randomizing_channel(d, mu, seed)
    s = depolarizing(d)
    return MonsterInstance(d, mu, seed, stinespring(r), stinespring(s), r=r, s=s, record=record)


def monster_passive_cheat(inst):
    """Commit to one bit, announce the other: P = Fbar(V0^dagger V1)."""
    k = Channel([inst.overlap()], name="overlap", trace_preserving=False, validate=False)
    return average_fidelity(k)[0]


def passive_chain(inst, tol=1e-9):
    """Each link of the estimate 2 - delta <= ... <= 2 sqrt(1 - P + 1/d), and P <= 1/d + delta."""
    d = inst.d
    p = monster_passive_cheat(inst)
    k = Channel([inst.overlap()], trace_preserving=False, validate=False)
    fc = channel_fidelity(k)
    cb_lower = cb_lower_choi(inst.r, inst.s)
    delta_hat = 2.0 - cb_lower
    amplitude = abs(np.vdot(inst.v0_pad, inst.v1_pad)) / d
    links = [
        ('choi_distance', cb_lower),
        ('dilation_distance', 2.0 * np.sqrt(max(0.0, 1.0 - amplitude ** 2))),
        ('channel_fidelity', 2.0 * np.sqrt(max(0.0, 1.0 - fc))),
        ('average_fidelity', 2.0 * np.sqrt(max(0.0, 1.0 - p + 1.0 / d))),
    ]
    ordered = all(a[1] <= b[1] + tol for a, b in zip(links, links[1:]))
    return {
        'passive_probability': p,
        'channel_fidelity': fc,
        'cb_lower': cb_lower,
        'delta_hat': delta_hat,
        'chain': [{'step': name, 'value': float(value)} for name, value in links],
        'chain_holds': bool(ordered),
        'bound': 1.0 / d + delta_hat,
        'bound_holds': bool(p <= 1.0 / d + delta_hat + tol),
    }


def _check_attack(inst, attack):
    t_sharp, t0, t1 = attack
    d = inst.d
    if t_sharp.labeled or t_sharp.d_in != d or t_sharp.d_out % d:
        raise ShapeError(f"commitment channel must map dimension {d} into d_sharp x {d}")
    d_sharp = t_sharp.d_out // d
    for bit, (t, dim_a) in enumerate(zip((t0, t1), inst.ancilla_dims)):
        if t.labeled or t.d_in != d_sharp or t.d_out != dim_a:
            raise ShapeError(f"opening channel for bit {bit} must map {d_sharp} into {dim_a}")
    return d_sharp


def _attack_kraus(inst, t_sharp, t_bit, bit, d_sharp):
    """Kraus operators V^dagger (B_j (x) 1_d) A_i of the d -> d map seen by Bob's test."""
    d = inst.d
    v = inst.isometry(bit)
    ops = []
    for a in t_sharp.kraus:
        a = a.reshape(d_sharp, d, d)
        for b in t_bit.kraus:
            moved = np.tensordot(b, a, axes=(1, 0)).reshape(-1, d)
            ops.append(dagger(v) @ moved)
    return ops


def monster_general_attack(inst, attack, tol=1e-9):
    """P = P0/2 + P1/2 for a commitment channel T# and opening channels T0#, T1#.

    Returns the probabilities with the bound 1/2 + 1/d + sqrt(delta_hat)/2.
    """
    d_sharp = _check_attack(inst, attack)
    t_sharp = attack[0]
    probs = []
    for bit in (0, 1):
        ops = _attack_kraus(inst, t_sharp, attack[1 + bit], bit, d_sharp)
        probs.append(average_fidelity(Channel(ops, name=f"attack_{bit}", trace_preserving=False))[0])
    p = 0.5 * (probs[0] + probs[1])
    delta_hat = max(0.0, 2.0 - cb_lower_choi(inst.r, inst.s))
    bound = 0.5 + 1.0 / inst.d + 0.5 * np.sqrt(delta_hat)
    holds = p <= bound + tol
    if not holds:
        warnings.warn(f"attack beats the binding bound: {p:.6g} > {bound:.6g}", RuntimeWarning)
    return {'p0': probs[0], 'p1': probs[1], 'p': p, 'bound': float(bound), 'holds': bool(holds)}


def _embedding(d_from, d_to):
    """Isometric embedding, or a truncation that parks the overflow on |0>."""
    eye = np.eye(d_to, d_from, dtype=complex)
    if d_from <= d_to:
        return Channel([eye], name="embedding")
    ops = [eye]
    for j in range(d_to, d_from):
        op = np.zeros((d_to, d_from), dtype=complex)
        op[0, j] = 1.0
        ops.append(op)
    return Channel(ops, name="truncation")


def _reset(d_from, d_to):
    ops = []
    for j in range(d_from):
        op = np.zeros((d_to, d_from), dtype=complex)
        op[0, j] = 1.0
        ops.append(op)
    return Channel(ops, name="reset")


def _dilation_channel(inst, bit):
    return Channel([inst.isometry(bit)], name=f"V{bit}")


def honest_attack(inst, t1_sharp=None):
    """Play V0 honestly; bit 1 is opened through t1_sharp (default: reset the ancilla)."""
    dim0, dim1 = inst.ancilla_dims
    t1 = _reset(dim0, dim1) if t1_sharp is None else t1_sharp
    return _dilation_channel(inst, 0), Channel([np.eye(dim0)], name="id"), t1


def passive_attack(inst):
    """Play V0 honestly and open bit 1 with V0's ancilla embedded in V1's."""
    dim0, dim1 = inst.ancilla_dims
    return honest_attack(inst, _embedding(dim0, dim1))


def random_attack(inst, seed, d_sharp=2, n_kraus=2):
    d = inst.d
    dim0, dim1 = inst.ancilla_dims
    t_sharp = random_channel(d, d_sharp * d, n_kraus, rng_from(seed, 0))
    t0 = random_channel(d_sharp, dim0, max(n_kraus, -(-d_sharp // dim0)), rng_from(seed, 1))
    t1 = random_channel(d_sharp, dim1, max(n_kraus, -(-d_sharp // dim1)), rng_from(seed, 2))
    return t_sharp, t0, t1


def soundness(inst):
    """Acceptance probability of honest play for each bit."""
    accepted = {}
    for bit in (0, 1):
        v = inst.isometry(bit)
        k = Channel([dagger(v) @ v], trace_preserving=False, validate=False)
        accepted[str(bit)] = average_fidelity(k)[0]
    return accepted


def record_check(inst, record=None, samples=8, seed=0, trials=4):
    """(R - S) (x) D on Bob's record never beats the plain norm of R - S."""
    record = inst.record if record is None else record
    if record is None:
        raise ValueError("record_check needs an entanglement-breaking channel")
    return separable_norm_check(inst.r, inst.s, record, samples=samples, seed=seed, trials=trials)


def separation(inst, trials, seed, workers=None):
    """Choi-state lower bound versus the plain-norm ascent estimate of R - S."""
    cb_lower = cb_lower_choi(inst.r, inst.s)
    op_norm, _ = op_norm_estimate(inst.r, inst.s, trials, seed, workers=workers)
    return {
        'cb_lower': cb_lower,
        'choi_bound': 2.0 - 2.0 * inst.mu / inst.d ** 2 if inst.mu else None,
        'op_norm_estimate': op_norm,
        'gap': cb_lower - op_norm,
        'trials': int(trials),
    }
