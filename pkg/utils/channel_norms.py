"""
Channel distances
Choi-state lower bound on the cb-norm, plain and stabilized norm ascent,
and the fidelity-sum optimizer used by the inequality batteries
"""

import numpy as np

from .analysis_config import analysis_config
from .channels import identity_channel, tensor
from .errors import ShapeError
from .numerics import (dagger, fidelity, hermitian_part, max_entangled, polar_align, psd_sqrt,
                       random_state, rng_from, run_trials)


def _output_layout(c1, c2):
    if c1.d_in != c2.d_in:
        raise ShapeError(f"input dimensions differ: {c1.d_in} vs {c2.d_in}")
    dims = dict(c1.out_dims)
    for label, d in c2.out_dims.items():
        if dims.setdefault(label, d) != d:
            raise ShapeError(f"output dimensions differ on label {label}: {dims[label]} vs {d}")
    return dims


def _block_trace_norm(a, b, n):
    """|| A A^dagger - B B^dagger ||_1 for n-dimensional column blocks a, b."""
    if a is None and b is None:
        return 0.0
    if a is None or b is None:
        v = a if b is None else b
        return float(np.sum(np.linalg.norm(v, axis=0) ** 2))
    if n * n <= analysis_config.LOWRANK_THRESHOLD:
        w = np.linalg.eigvalsh(hermitian_part(a @ dagger(a) - b @ dagger(b)))
        return float(np.sum(np.abs(w)))
    span = np.hstack([a, b])
    if span.shape[1] >= n:
        w = np.linalg.eigvalsh(hermitian_part(a @ dagger(a) - b @ dagger(b)))
        return float(np.sum(np.abs(w)))
    q, _ = np.linalg.qr(span)
    qa = dagger(q) @ a
    qb = dagger(q) @ b
    w = np.linalg.eigvalsh(hermitian_part(qa @ dagger(qa) - qb @ dagger(qb)))
    return float(np.sum(np.abs(w)))


def _versus_mixed(a, n):
    """|| A A^dagger - I/n ||_1 from the Gram matrix of A."""
    lam = np.linalg.eigvalsh(hermitian_part(dagger(a) @ a))
    c = 1.0 / n
    return float(np.sum(np.abs(lam - c)) + c * (n - lam.shape[0]))


def cb_lower_choi(c1, c2):
    """Trace distance of the Choi states: a lower bound on ||c1 - c2||_cb."""
    dims = _output_layout(c1, c2)
    v1 = c1.choi_vectors()
    v2 = c2.choi_vectors()
    total = 0.0
    for label, d_out in sorted(dims.items()):
        n = d_out * c1.d_in
        a = v1.get(label)
        b = v2.get(label)
        big = n * n > analysis_config.LOWRANK_THRESHOLD
        # Depolarizing Choi is I/n: rank <= mu part plus -1/n on the complement
        if big and c2.kind == "depolarizing" and a is not None and a.shape[1] < n:
            total += _versus_mixed(a, n)
        elif big and c1.kind == "depolarizing" and b is not None and b.shape[1] < n:
            total += _versus_mixed(b, n)
        else:
            total += _block_trace_norm(a, b, n)
    return float(total)


class _DifferenceMap:
    """L = c1 - c2 with forward and adjoint actions on block dicts."""

    def __init__(self, c1, c2):
        self.dims = _output_layout(c1, c2)
        self.c1 = c1
        self.c2 = c2
        self.d_in = c1.d_in

    def forward(self, x):
        out1 = self.c1.act(x)
        out2 = self.c2.act(x)
        if not self.c1.labeled:
            out1 = {(): out1}
        if not self.c2.labeled:
            out2 = {(): out2}
        result = {}
        for label, d in self.dims.items():
            block = np.zeros((d, d), dtype=complex)
            if label in out1:
                block += out1[label]
            if label in out2:
                block -= out2[label]
            result[label] = hermitian_part(block)
        return result

    def adjoint(self, y):
        y1 = y if self.c1.labeled else y.get((), None)
        y2 = y if self.c2.labeled else y.get((), None)
        total = np.zeros((self.d_in, self.d_in), dtype=complex)
        if y1 is not None:
            total += self.c1.adjoint({k: v for k, v in y1.items() if k in self.c1.blocks}
                                     if isinstance(y1, dict) else y1)
        if y2 is not None:
            total -= self.c2.adjoint({k: v for k, v in y2.items() if k in self.c2.blocks}
                                     if isinstance(y2, dict) else y2)
        return hermitian_part(total)


def _ascend(lmap, psi, tol, max_iter):
    """Alternate W = sign(L(psi)) and psi = top eigenvector of L*(W); returns (value, psi)."""
    best = -np.inf
    best_psi = psi
    for _ in range(max_iter):
        out = lmap.forward(np.outer(psi, psi.conj()))
        signs = {}
        value = 0.0
        for label, block in out.items():
            w, v = np.linalg.eigh(block)
            value += float(np.sum(np.abs(w)))
            signs[label] = (v * np.sign(w)) @ dagger(v)
        improved = value > best + tol
        if value > best:
            best, best_psi = value, psi
        if not improved:
            break
        w, v = np.linalg.eigh(lmap.adjoint(signs))
        psi = v[:, -1]
    return best, best_psi


def op_norm_estimate(c1, c2, trials, seed, starts=None, tol=None, max_iter=None, workers=None):
    """Certified lower estimate of sup over pure inputs of ||(c1 - c2)(psi)||_1.

    Each trial starts from a Haar state drawn from stream (seed, trial) and
    climbs monotonically; extra starting vectors can be passed in starts.
    Returns (value, witness vector).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    tol = analysis_config.ASCENT_TOL if tol is None else tol
    max_iter = analysis_config.ASCENT_MAX_ITER if max_iter is None else max_iter
    lmap = _DifferenceMap(c1, c2)
    initial = [np.asarray(s, dtype=complex) for s in (starts or [])]

    def trial(i):
        if i < len(initial):
            psi = initial[i] / np.linalg.norm(initial[i])
        else:
            psi = random_state(lmap.d_in, rng_from(seed, i - len(initial)))
        return _ascend(lmap, psi, tol, max_iter)

    results = run_trials(trial, len(initial) + trials, workers)
    value, witness = results[0]
    for v, psi in results[1:]:
        if v > value:
            value, witness = v, psi
    return float(value), witness


def cb_norm_oracle(c1, c2, restarts, seed, workers=None):
    """Multistart stabilized ascent: lower estimate of ||c1 - c2||_cb on small inputs.

    Approximate; only meant for input dimension up to ORACLE_MAX_DIM.
    """
    d = c1.d_in
    if d > analysis_config.ORACLE_MAX_DIM:
        raise ShapeError(f"stabilized oracle limited to input dimension {analysis_config.ORACLE_MAX_DIM}")
    ref = identity_channel(d)
    return op_norm_estimate(tensor(c1, ref), tensor(c2, ref), restarts, seed,
                            starts=[max_entangled(d)], workers=workers)


def fidelity_sum_optimizer(rho, sigma, iterations=20):
    """Maximize F^2(rho, omega) + F^2(sigma, omega) over states omega.

    Works on purifications: with purifications a, b and unit w, the lifted
    objective |<a|w>|^2 + |<b|w>|^2 is maximized by the top eigenvector of
    |a><a| + |b><b|; purifications are then re-aligned to w by polar_align.
    Returns (value, omega).
    """
    d = rho.shape[0]
    root_rho = psd_sqrt(rho)
    root_sigma = psd_sqrt(sigma)
    u, _ = polar_align(root_rho @ root_sigma)
    a = root_rho.reshape(-1)
    b = (root_sigma @ u).reshape(-1)
    best_value, best_omega = -np.inf, None
    for _ in range(iterations):
        pair = np.outer(a, a.conj()) + np.outer(b, b.conj())
        w = np.linalg.eigh(hermitian_part(pair))[1][:, -1]
        big_w = w.reshape(d, d)
        omega = hermitian_part(big_w @ dagger(big_w))
        omega = omega / np.trace(omega).real
        value = fidelity(rho, omega) ** 2 + fidelity(sigma, omega) ** 2
        if value <= best_value + 1e-14:
            break
        best_value, best_omega = value, omega
        ua, _ = polar_align(root_rho @ big_w)
        ub, _ = polar_align(root_sigma @ big_w)
        a = (root_rho @ dagger(ua)).reshape(-1)
        b = (root_sigma @ dagger(ub)).reshape(-1)
    return float(best_value), best_omega
