"""
Quantum channels between hybrid systems
Kraus representation, Stinespring dilations, Choi matrices, fidelities,
the special channels used by the protocol instances, and energy truncation
"""

import math
import warnings

import numpy as np
from scipy.linalg import block_diag

from .analysis_config import analysis_config
from .errors import DomainError, InvalidChannelError, ShapeError
from .hybrid import HybridState, as_label
from .numerics import (as_matrix, as_square, check_entries, dagger, haar_isometry, haar_unitary,
                       hermitian_part, pure, random_density, random_state, rng_from, validate_density)


def _stack(ops, d_in=None):
    ops = [as_matrix(k, "Kraus operator") for k in ops]
    if not ops:
        return None
    shape = ops[0].shape
    for k in ops:
        if k.shape != shape:
            raise ShapeError(f"Kraus operators of one output block must share a shape: {shape} vs {k.shape}")
    if d_in is not None and shape[1] != d_in:
        raise ShapeError(f"Kraus operators act on dimension {shape[1]}, expected {d_in}")
    return np.stack(ops)


class Channel:
    """Completely positive map given by Kraus operators per output label.

    A plain list of operators gives a channel with a single unlabeled output;
    a dict label -> list gives a channel into a hybrid (labeled) system.
    Operators are stored stacked, one array of shape (n, d_out, d_in) per label.
    """

    def __init__(self, kraus, name=None, kind=None, params=None, trace_preserving=True,
                 validate=True, path=None):
        self.labeled = isinstance(kraus, dict)
        items = kraus.items() if self.labeled else [((), kraus)]
        self.blocks = {}
        d_in = None
        for label, ops in items:
            stacked = ops if isinstance(ops, np.ndarray) and ops.ndim == 3 else _stack(list(ops), d_in)
            if stacked is None or stacked.shape[0] == 0:
                continue
            stacked = np.asarray(stacked, dtype=complex)
            if d_in is None:
                d_in = stacked.shape[2]
            elif stacked.shape[2] != d_in:
                raise ShapeError(f"output block {label} acts on {stacked.shape[2]}, expected {d_in}", path=path)
            check_entries(stacked.shape[0] * stacked.shape[1], stacked.shape[2])
            self.blocks[as_label(label) if self.labeled else ()] = stacked
        if d_in is None:
            raise InvalidChannelError("channel has no Kraus operators", path=path)
        self.d_in = d_in
        self.name = name
        self.kind = kind
        self.params = dict(params or {})
        self.unitaries = None
        self.trace_preserving = trace_preserving
        if validate:
            err = self.completeness_error()
            if trace_preserving and err > analysis_config.CHANNEL_TOL:
                raise InvalidChannelError(f"Kraus completeness violated by {err:.3g}", path=path)
            if not trace_preserving:
                top = np.linalg.eigvalsh(hermitian_part(self.gram()))[-1]
                if top > 1 + analysis_config.CHANNEL_TOL:
                    raise InvalidChannelError(f"map increases trace (sum K^dagger K has eigenvalue {top:.6g})",
                                              path=path)

    @property
    def labels(self):
        return sorted(self.blocks)

    @property
    def out_dims(self):
        return {label: k.shape[1] for label, k in self.blocks.items()}

    @property
    def d_out(self):
        if self.labeled:
            raise ShapeError("labeled channel has one output dimension per label")
        return self.blocks[()].shape[1]

    @property
    def kraus(self):
        if self.labeled:
            raise ShapeError("labeled channel has one Kraus list per label")
        return list(self.blocks[()])

    @property
    def n_kraus(self):
        return sum(k.shape[0] for k in self.blocks.values())

    def gram(self):
        """sum K^dagger K over all labels."""
        total = np.zeros((self.d_in, self.d_in), dtype=complex)
        for k in self.blocks.values():
            total += np.einsum('kji,kjl->il', k.conj(), k)
        return total

    def completeness_error(self):
        return float(np.max(np.abs(self.gram() - np.eye(self.d_in))))

    def act(self, x):
        """Schroedinger action on any operator: matrix, or dict label -> matrix."""
        x = as_square(x)
        if x.shape[0] != self.d_in:
            raise ShapeError(f"input has dimension {x.shape[0]}, channel expects {self.d_in}")
        if self.kind == "depolarizing":
            out = {(): np.trace(x) * np.eye(self.d_in) / self.d_in}
        else:
            out = {label: np.sum((k @ x) @ dagger(k), axis=0) for label, k in self.blocks.items()}
        return out if self.labeled else out[()]

    def adjoint(self, y):
        """Heisenberg action; y is a matrix or dict label -> matrix."""
        if self.kind == "depolarizing":
            y = as_square(y)
            return np.trace(y) * np.eye(self.d_in) / self.d_in
        if not isinstance(y, dict):
            y = {(): as_square(y)} if not self.labeled else self._split_blocks(y)
        total = np.zeros((self.d_in, self.d_in), dtype=complex)
        for label, k in self.blocks.items():
            if label in y:
                total += np.sum(dagger(k) @ (y[label] @ k), axis=0)
        return total

    def _split_blocks(self, y):
        y = as_square(y)
        parts = {}
        start = 0
        for label in self.labels:
            d = self.out_dims[label]
            parts[label] = y[start:start + d, start:start + d]
            start += d
        if start != y.shape[0]:
            raise ShapeError(f"block-diagonal operator of dimension {y.shape[0]}, expected {start}")
        return parts

    def choi_vectors(self):
        """Per label, columns v_k with Choi = sum_k v_k v_k^dagger."""
        return {label: k.reshape(k.shape[0], -1).T / np.sqrt(self.d_in)
                for label, k in self.blocks.items()}

    def choi(self):
        vectors = self.choi_vectors()
        parts = []
        for label in self.labels:
            v = vectors[label]
            parts.append(v @ dagger(v))
        return parts[0] if not self.labeled else block_diag(*parts)

    @classmethod
    def from_choi(cls, choi, d_in, d_out=None, name=None, validate=True):
        """Kraus operators from a (normalized) Choi matrix or dict label -> Choi block."""
        if isinstance(choi, dict):
            kraus = {label: cls._kraus_from_choi(block, d_in) for label, block in choi.items()}
            kraus = {label: ops for label, ops in kraus.items() if ops}
            return cls(kraus, name=name, validate=validate)
        return cls(cls._kraus_from_choi(choi, d_in), name=name, validate=validate)

    @staticmethod
    def _kraus_from_choi(choi, d_in):
        choi = as_square(choi)
        d_out = choi.shape[0] // d_in
        if d_out * d_in != choi.shape[0]:
            raise ShapeError(f"Choi dimension {choi.shape[0]} is not a multiple of {d_in}")
        w, v = np.linalg.eigh(hermitian_part(choi))
        cut = analysis_config.PRUNE_TOL * max(1.0, float(np.max(np.abs(w), initial=0.0)))
        ops = []
        for lam, vec in zip(w[::-1], v.T[::-1]):
            if lam <= cut:
                break
            ops.append(np.sqrt(lam * d_in) * vec.reshape(d_out, d_in))
        return ops

    def __repr__(self):
        name = self.name or self.kind or "channel"
        return f"Channel({name}, d_in={self.d_in}, outputs={self.out_dims})"


def identity_channel(d):
    return Channel([np.eye(d)], name=f"id_{d}", kind="identity")


def unitary_channel(u, name=None):
    u = as_square(u, "unitary")
    return Channel([u], name=name or "unitary", kind="unitary")


def depolarizing(d):
    """Completely depolarizing channel rho -> tr(rho) I/d."""
    ops = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            ops[i * d + j, i, j] = 1 / np.sqrt(d)
    return Channel(ops, name=f"depolarizing_{d}", kind="depolarizing", params={"d": d})


def measurement_channel(basis, labels=None, keep_state=False):
    """Projective measurement; label j carries outcome j (1-based by default)."""
    basis = [np.asarray(b, dtype=complex).reshape(-1) for b in basis]
    labels = list(range(1, len(basis) + 1)) if labels is None else list(labels)
    if len(labels) != len(basis):
        raise ShapeError("one label per basis vector")
    kraus = {}
    for label, b in zip(labels, basis):
        op = np.outer(b, b.conj()) if keep_state else b.conj().reshape(1, -1)
        kraus[as_label(label)] = [op]
    return Channel(kraus, name="measurement", kind="measurement")


def check_povm(povm, d=None):
    povm = [as_square(m, "POVM element") for m in povm]
    if not povm:
        raise InvalidChannelError("empty POVM")
    d = povm[0].shape[0] if d is None else d
    total = np.zeros((d, d), dtype=complex)
    for m in povm:
        if m.shape != (d, d):
            raise InvalidChannelError(f"POVM element of shape {m.shape}, expected {(d, d)}")
        if np.linalg.eigvalsh(hermitian_part(m))[0] < -analysis_config.CHANNEL_TOL:
            raise InvalidChannelError("POVM element is not positive semidefinite")
        total += m
    if np.max(np.abs(total - np.eye(d))) > analysis_config.CHANNEL_TOL:
        raise InvalidChannelError("POVM elements do not sum to the identity")
    return povm


def measure_prepare(povm, states):
    """Entanglement-breaking channel rho -> sum_x tr(M_x rho) sigma_x."""
    povm = check_povm(povm)
    if len(states) != len(povm):
        raise ShapeError("one prepared state per POVM element")
    ops = []
    for m, sigma in zip(povm, states):
        sigma = validate_density(sigma, "prepared state")
        lam, a_vecs = np.linalg.eigh(hermitian_part(m))
        mu, b_vecs = np.linalg.eigh(hermitian_part(sigma))
        for la, a in zip(lam, a_vecs.T):
            if la <= analysis_config.PRUNE_TOL:
                continue
            for mb, b in zip(mu, b_vecs.T):
                if mb <= analysis_config.PRUNE_TOL:
                    continue
                ops.append(np.sqrt(la * mb) * np.outer(b, a.conj()))
    return Channel(ops, name="measure_prepare", kind="measure_prepare")


def dephasing(d):
    """Measure and re-prepare in the standard basis: the classical identity on d symbols."""
    eye = np.eye(d, dtype=complex)
    projectors = [np.outer(eye[j], eye[j]) for j in range(d)]
    return measure_prepare(projectors, projectors)


def mu_star(d, eps, log_base=math.e):
    """Number of unitaries ceil(134/eps^2 d log d) for an eps-randomizing channel."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return int(math.ceil(134.0 / eps ** 2 * d * math.log(d, log_base)))


def randomizing_channel(d, mu, seed):
    """rho -> mu^{-1} sum_i U_i rho U_i^dagger with Haar U_i from stream (seed, i)."""
    if d < 2 or mu < 1:
        raise ValueError("randomizing channel needs d >= 2 and mu >= 1")
    unitaries = np.stack([haar_unitary(d, rng_from(seed, i)) for i in range(mu)])
    channel = Channel(unitaries / np.sqrt(mu), name=f"randomizing_{d}_{mu}", kind="randomizing",
                      params={"d": d, "mu": mu, "seed": int(seed)})
    channel.unitaries = unitaries
    return channel


def random_channel(d_in, d_out, n_kraus, seed):
    """Random channel from a Haar isometry into d_out x n_kraus dimensions."""
    if n_kraus * d_out < d_in:
        raise ShapeError(f"{n_kraus} Kraus operators into dimension {d_out} cannot be complete on {d_in}")
    v = haar_isometry(n_kraus * d_out, d_in, seed)
    return Channel(v.reshape(n_kraus, d_out, d_in), name="random", kind="random")


def apply(c, rho):
    """Apply a channel to a density matrix; labeled outputs give a HybridState."""
    rho = validate_density(rho)
    if rho.shape[0] != c.d_in:
        raise ShapeError(f"state dimension {rho.shape[0]} does not match channel input {c.d_in}")
    if c.trace_preserving and c.completeness_error() > analysis_config.CHANNEL_TOL:
        raise InvalidChannelError("channel is not trace preserving")
    out = c.act(rho)
    if not c.labeled:
        return hermitian_part(out)
    return HybridState.from_blocks({label: hermitian_part(block) for label, block in out.items()})


def compose(c1, c2):
    """The channel 'first c1, then c2'; output labels are concatenated."""
    kraus = {}
    for l1, k1 in c1.blocks.items():
        if k1.shape[1] != c2.d_in:
            raise ShapeError(f"output {l1} of dimension {k1.shape[1]} cannot feed input {c2.d_in}")
        for l2, k2 in c2.blocks.items():
            prod = np.einsum('aij,bjk->abik', k2, k1)
            kraus[l1 + l2] = prod.reshape(-1, prod.shape[2], prod.shape[3])
    labeled = c1.labeled or c2.labeled
    return Channel(kraus if labeled else list(kraus[()]),
                   trace_preserving=c1.trace_preserving and c2.trace_preserving)


def tensor(c1, c2):
    """Tensor product channel; output labels are concatenated."""
    kraus = {}
    for l1, k1 in c1.blocks.items():
        for l2, k2 in c2.blocks.items():
            n1, o1, i1 = k1.shape
            n2, o2, i2 = k2.shape
            check_entries(n1 * n2 * o1 * o2, i1 * i2)
            prod = np.einsum('aij,bkl->abikjl', k1, k2)
            kraus[l1 + l2] = prod.reshape(n1 * n2, o1 * o2, i1 * i2)
    labeled = c1.labeled or c2.labeled
    return Channel(kraus if labeled else list(kraus[()]),
                   trace_preserving=c1.trace_preserving and c2.trace_preserving)


class StinespringDilation:
    """Isometry V: H -> sum_x H^A_x (x) H^B_x, stored blockwise.

    Each block is (label, dim_a, dim_b, matrix) with rows ordered ancilla-first,
    so the restriction to B is V^dagger (1_A (x) B) V blockwise.
    """

    def __init__(self, blocks):
        self.blocks = []
        d_in = None
        for label, dim_a, dim_b, v in blocks:
            v = as_matrix(v, "isometry block")
            if v.shape[0] != dim_a * dim_b:
                raise ShapeError(f"block {label} has {v.shape[0]} rows, expected {dim_a}x{dim_b}")
            if d_in is None:
                d_in = v.shape[1]
            elif v.shape[1] != d_in:
                raise ShapeError(f"block {label} acts on {v.shape[1]}, expected {d_in}")
            self.blocks.append((as_label(label), int(dim_a), int(dim_b), v))
        self.blocks.sort(key=lambda b: b[0])
        self.d_in = d_in

    @property
    def labels(self):
        return [b[0] for b in self.blocks]

    @property
    def matrix(self):
        return np.vstack([b[3] for b in self.blocks])

    def dims(self, label):
        for lab, dim_a, dim_b, _ in self.blocks:
            if lab == as_label(label):
                return dim_a, dim_b
        raise KeyError(label)

    def block(self, label):
        for lab, _, _, v in self.blocks:
            if lab == as_label(label):
                return v
        raise KeyError(label)

    def isometry_error(self):
        v = self.matrix
        return float(np.max(np.abs(dagger(v) @ v - np.eye(self.d_in))))

    def channel(self):
        """Trace out the A factors: Kraus (<a| (x) 1_B) V_x per label."""
        kraus = {label: v.reshape(dim_a, dim_b, self.d_in) for label, dim_a, dim_b, v in self.blocks}
        if self.labels == [()]:
            return Channel(list(kraus[()]))
        return Channel(kraus)

    def padded(self, dim_a):
        """Embed each A factor into a larger one; dim_a is an int or dict label -> int."""
        blocks = []
        for label, da, db, v in self.blocks:
            target = dim_a if isinstance(dim_a, int) else dim_a.get(label, da)
            if target < da:
                raise ShapeError(f"cannot shrink A factor of block {label} from {da} to {target}")
            w = np.zeros((target, db, self.d_in), dtype=complex)
            w[:da] = v.reshape(da, db, self.d_in)
            blocks.append((label, target, db, w.reshape(target * db, self.d_in)))
        return StinespringDilation(blocks)


def stinespring(c):
    """Dilation V psi = sum_{m,k} |k> (x) K_{m,k} psi, one block per output label."""
    blocks = []
    for label, k in c.blocks.items():
        n, d_out, d_in = k.shape
        blocks.append((label, n, d_out, k.reshape(n * d_out, d_in)))
    return StinespringDilation(blocks)


def choi(c):
    """(c (x) id)(|Omega><Omega|), block-diagonal over output labels."""
    return c.choi()


def channel_fidelity(c):
    """<Omega| (c (x) id)(|Omega><Omega|) |Omega> = sum_k |tr K_k|^2 / d^2."""
    if c.labeled:
        raise ShapeError("channel fidelity needs a single output block")
    k = c.blocks[()]
    if k.shape[1] != k.shape[2]:
        raise ShapeError("channel fidelity needs equal input and output dimensions")
    d = c.d_in
    traces = np.trace(k, axis1=1, axis2=2)
    return float(np.sum(np.abs(traces) ** 2) / d ** 2)


def average_fidelity(c, mode="exact", samples=None, seed=None):
    """Haar-averaged <psi| c(psi) |psi>; returns (value, standard error).

    Exact mode uses (sum_k |tr K_k|^2 + tr sum_k K_k^dagger K_k) / (d (d+1)),
    which is (d F_c + 1)/(d + 1) for trace-preserving maps.
    """
    if c.labeled:
        raise ShapeError("average fidelity needs a single output block")
    d = c.d_in
    if mode == "exact":
        k = c.blocks[()]
        if k.shape[1] != d:
            raise ShapeError("average fidelity needs equal input and output dimensions")
        traces = np.trace(k, axis1=1, axis2=2)
        weight = float(np.trace(c.gram()).real)
        return float((np.sum(np.abs(traces) ** 2) + weight) / (d * (d + 1))), 0.0
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if samples is None or samples < 2:
        raise ValueError("Monte Carlo mode needs at least 2 samples")
    values = np.empty(samples)
    for i in range(samples):
        psi = random_state(d, rng_from(seed, i))
        values[i] = np.real(psi.conj() @ c.act(np.outer(psi, psi.conj())) @ psi)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))


class EnergyConstraint:
    """States with tr(rho H) <= E for a non-negative energy operator H."""

    def __init__(self, h, energy):
        h = as_square(h, "energy operator")
        if np.max(np.abs(h - dagger(h))) > analysis_config.STATE_TOL:
            raise DomainError("energy operator must be Hermitian")
        self.h = hermitian_part(h)
        self.energy = float(energy)
        self.levels, self.vectors = np.linalg.eigh(self.h)
        if self.levels[0] < -analysis_config.STATE_TOL:
            raise DomainError("energy operator must be non-negative")
        if self.levels[0] > self.energy:
            raise DomainError("no state satisfies the energy bound")

    @property
    def dim(self):
        return self.h.shape[0]

    def energy_of(self, rho):
        return float(np.real(np.trace(rho @ self.h)))

    def projector(self, gamma):
        """Spectral projector onto levels <= E/gamma."""
        keep = self.levels <= self.energy / gamma * (1 + 1e-12)
        v = self.vectors[:, keep]
        return v @ dagger(v), int(np.sum(keep))


class EnergyTruncation:
    """Compressed channel rho -> P c(P rho P) P and its error bound."""

    def __init__(self, channel, compressed, projector, rank, gamma):
        self.channel = channel
        self.compressed = compressed
        self.projector = projector
        self.rank = rank
        self.gamma = gamma
        self.bound = 4 * math.sqrt(gamma) + 2 * gamma / (1 - gamma)

    def apply(self, rho):
        """Renormalized compressed output."""
        out = self.compressed.act(as_square(rho))
        weight = float(np.real(np.trace(out)))
        if weight <= analysis_config.PRUNE_TOL:
            raise DomainError("state has no weight inside the truncation subspace")
        return hermitian_part(out) / weight

    def error(self, rho):
        return float(np.sum(np.linalg.svd(self.channel.act(rho) - self.apply(rho), compute_uv=False)))


def energy_truncate(c, ec, gamma, check_samples=8, seed=0):
    """Truncate a constraint-respecting channel to the span of levels <= E/gamma."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if c.labeled or c.d_in != ec.dim or c.d_out != ec.dim:
        raise ShapeError("energy truncation needs a square single-output channel on the constrained space")
    for i in range(check_samples):
        rho = constrained_state(ec, rng_from(seed, i))
        if ec.energy_of(c.act(rho)) > ec.energy + analysis_config.STATE_TOL:
            warnings.warn("channel does not respect the energy constraint on a sampled input",
                          RuntimeWarning)
            break
    p, rank = ec.projector(gamma)
    k = c.blocks[()]
    compressed = Channel(p @ k @ p, name="compressed", trace_preserving=False)
    return EnergyTruncation(c, compressed, p, rank, gamma)


def constrained_state(ec, seed):
    """Random state mixed towards the ground state until tr(rho H) <= E."""
    rng = rng_from(seed)
    rho = random_density(ec.dim, rng, rank=int(rng.integers(1, ec.dim + 1)))
    energy = ec.energy_of(rho)
    if energy > ec.energy:
        ground = pure(ec.vectors[:, 0])
        t = (ec.energy - ec.levels[0]) / (energy - ec.levels[0])
        rho = t * rho + (1 - t) * ground
    return hermitian_part(rho)


def energy_respecting_channel(ec, seed, n_kraus=2):
    """Mixture of an energy-diagonal unitary and a channel into levels <= E."""
    rng = rng_from(seed)
    low = ec.vectors[:, ec.levels <= ec.energy]
    p = float(rng.uniform(0, 1))
    phases = np.exp(2j * np.pi * rng.uniform(size=ec.dim))
    diag_unitary = (ec.vectors * phases) @ dagger(ec.vectors)
    inner = random_channel(ec.dim, low.shape[1], max(n_kraus, -(-ec.dim // low.shape[1])), rng)
    ops = [np.sqrt(p) * diag_unitary] + [np.sqrt(1 - p) * (low @ k) for k in inner.kraus]
    return Channel(ops, name="energy_respecting")
