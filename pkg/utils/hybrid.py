"""
Hybrid classical-quantum states and operators
A hybrid state is a direct sum over message-history labels of weighted density matrices
"""

import numpy as np

from .analysis_config import analysis_config
from .errors import StructureError
from .numerics import as_square, partial_trace, trace_norm, validate_density

ALICE = "alice"
BOB = "bob"


def as_label(label):
    """Normalize a label to a tuple of non-negative ints."""
    if isinstance(label, (int, np.integer)):
        label = (label,)
    label = tuple(int(m) for m in label)
    if any(m < 0 for m in label):
        raise StructureError(f"label symbols must be non-negative: {label}")
    return label


class HybridState:
    """Direct sum of weighted branch states, stored as (weight, normalized state).

    splits optionally records the (dim_alice, dim_bob) factorization of each
    branch so that restrict() does not need the tree.
    """

    def __init__(self, branches, splits=None, validate=True):
        self._branches = {}
        for label, (weight, rho) in branches.items():
            weight = float(weight)
            if weight <= analysis_config.PRUNE_TOL:
                continue
            rho = validate_density(rho, f"branch {as_label(label)}") if validate else as_square(rho)
            self._branches[as_label(label)] = (weight, rho)
        if validate:
            total = sum(w for w, _ in self._branches.values())
            if abs(total - 1.0) > analysis_config.WEIGHT_TOL:
                raise StructureError(f"branch weights sum to {total:.12g}, expected 1")
        self.splits = None
        if splits is not None:
            self.splits = {as_label(k): (int(a), int(b)) for k, (a, b) in splits.items()}

    @classmethod
    def from_blocks(cls, blocks, splits=None, validate=True):
        """Build from unnormalized branch operators p_x rho_x."""
        branches = {}
        for label, block in blocks.items():
            block = as_square(block)
            weight = float(np.trace(block).real)
            if weight <= analysis_config.PRUNE_TOL:
                continue
            branches[label] = (weight, block / weight)
        return cls(branches, splits=splits, validate=validate)

    @classmethod
    def single(cls, rho, label=()):
        return cls({label: (1.0, rho)})

    @property
    def labels(self):
        return sorted(self._branches)

    def weight(self, label):
        entry = self._branches.get(as_label(label))
        return 0.0 if entry is None else entry[0]

    def state(self, label):
        return self._branches[as_label(label)][1]

    def block(self, label):
        """Unnormalized branch operator p_x rho_x."""
        weight, rho = self._branches[as_label(label)]
        return weight * rho

    def dim(self, label):
        return self._branches[as_label(label)][1].shape[0]

    def items(self):
        for label in self.labels:
            yield label, self._branches[label]

    def total_weight(self):
        return sum(w for w, _ in self._branches.values())

    def __len__(self):
        return len(self._branches)

    def __contains__(self, label):
        return as_label(label) in self._branches

    def __repr__(self):
        return f"HybridState({len(self)} branches)"


class HybridOperator:
    """Block operator: one square matrix per label."""

    def __init__(self, blocks):
        self.blocks = {as_label(k): as_square(v) for k, v in blocks.items()}

    @classmethod
    def identity_like(cls, state):
        return cls({label: np.eye(state.dim(label)) for label in state.labels})

    def __getitem__(self, label):
        return self.blocks[as_label(label)]


def hybrid_expectation(s, f):
    """sum_x p_x tr(rho_x A_x)."""
    total = 0j
    for label, (weight, rho) in s.items():
        if label not in f.blocks:
            raise StructureError(f"operator has no block for label {label}")
        block = f.blocks[label]
        if block.shape != rho.shape:
            raise StructureError(
                f"block shape {block.shape} does not match state shape {rho.shape}", path=label)
        total += weight * np.trace(rho @ block)
    return complex(total)


def hybrid_trace_distance(s, t):
    """sum_x || p_x rho_x - q_x sigma_x ||_1 over the union of labels."""
    total = 0.0
    for label in sorted(set(s.labels) | set(t.labels)):
        a = s.block(label) if label in s else None
        b = t.block(label) if label in t else None
        if a is None:
            total += trace_norm(b)
        elif b is None:
            total += trace_norm(a)
        else:
            if a.shape != b.shape:
                raise StructureError(f"branch dimensions differ: {a.shape} vs {b.shape}", path=label)
            total += trace_norm(a - b)
    return float(total)


def restrict(s, side, splits=None):
    """Branchwise partial trace onto one party; weights unchanged.

    splits maps label -> (dim_alice, dim_bob), or is a single pair for every
    branch. Defaults to the splits recorded on the state.
    """
    if side not in (ALICE, BOB):
        raise ValueError(f"side must be '{ALICE}' or '{BOB}'")
    splits = s.splits if splits is None else splits
    if splits is None:
        raise StructureError("restrict needs the Alice/Bob factorization of each branch")
    keep = 0 if side == ALICE else 1
    branches = {}
    for label, (weight, rho) in s.items():
        pair = splits if isinstance(splits, tuple) else splits.get(label)
        if pair is None:
            raise StructureError("no factorization recorded", path=label)
        dim_a, dim_b = pair
        if dim_a * dim_b != rho.shape[0]:
            raise StructureError(
                f"branch of dimension {rho.shape[0]} does not factor as {dim_a}x{dim_b}", path=label)
        branches[label] = (weight, partial_trace(rho, [dim_a, dim_b], [keep]))
    return HybridState(branches, validate=False)
