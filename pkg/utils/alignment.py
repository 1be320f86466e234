"""
Isometry alignment
Minimizes ||(U (x) 1_B) V0 - V1|| over unitaries U acting on the dilation factor,
either block by block (U = sum_x U_x) or over the whole dilation factor
"""

import warnings

import numpy as np
from scipy.linalg import block_diag, expm
from scipy.optimize import minimize

from .analysis_config import analysis_config
from .channels import StinespringDilation
from .errors import ShapeError
from .numerics import dagger, haar_unitary, hermitian_part, polar_align, rng_from

BETA_START = 10.0
BETA_MAX = 1e8
POLISH_PARAMS = 32
DUAL_POLISH_DIM = 4


class AlignmentResult:
    """Outcome of align_isometries.

    value is the operator norm reached, lower a dual certificate (never above
    the optimum over contractions), unitaries maps block label -> U_x.
    v0 and v1 are the (padded) dilations the unitaries act on.
    """

    def __init__(self, unitaries, value, lower, converged, iterations, v0, v1, blockwise):
        self.unitaries = unitaries
        self.value = value
        self.lower = lower
        self.converged = converged
        self.iterations = iterations
        self.v0 = v0
        self.v1 = v1
        self.blockwise = blockwise

    @property
    def gap(self):
        return self.value - self.lower

    def unitarity_error(self):
        return max(float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0])))) for u in self.unitaries.values())

    def to_dict(self):
        return {
            'value': self.value,
            'lower': self.lower,
            'converged': self.converged,
            'iterations': self.iterations,
            'blockwise': self.blockwise,
            'blocks': {"/".join(map(str, k)) or "root": u.shape[0] for k, u in self.unitaries.items()},
        }


class _Problem:
    """Blocks (label, dim_a, dim_b, A0, A1) with A_i of shape (dim_a, dim_b, n).

    summands lists the diagonal block sizes when a single block carries several
    direct summands; it only shapes the block-diagonal starts.
    """

    def __init__(self, blocks, n, summands=None):
        self.blocks = blocks
        self.n = n
        self.summands = summands
        self.g = sum(np.einsum('abn,abm->nm', a0.conj(), a0) + np.einsum('abn,abm->nm', a1.conj(), a1)
                     for _, _, _, a0, a1 in blocks)

    @property
    def dims(self):
        return [b[1] for b in self.blocks]

    def polar(self, ms):
        return [polar_align(m)[0] for m in ms]

    def value(self, us):
        """Largest singular value of the stacked residual (U_x (x) 1) V0x - V1x."""
        rows = [(np.einsum('ac,cbn->abn', u, a0) - a1).reshape(-1, self.n)
                for u, (_, _, _, a0, a1) in zip(us, self.blocks)]
        return float(np.linalg.svd(np.vstack(rows), compute_uv=False)[0])

    def residual_gram(self, us):
        g = sum(np.einsum('abn,ac,cbm->nm', a1.conj(), u, a0)
                for u, (_, _, _, a0, a1) in zip(us, self.blocks))
        return hermitian_part(self.g - g - dagger(g))

    def m_blocks(self, rho):
        """M_x(rho) = tr_B(V0x rho V1x^dagger)."""
        return [np.einsum('abn,nm,cbm->ac', a0, rho, a1.conj()) for _, _, _, a0, a1 in self.blocks]

    def dual2(self, rho):
        """inf over contractions of tr(rho X^dagger X) = tr(rho g) - 2 sum_x ||M_x(rho)||_1."""
        total = float(np.real(np.trace(rho @ self.g)))
        for m in self.m_blocks(rho):
            total -= 2 * float(np.sum(np.linalg.svd(m, compute_uv=False)))
        return total


def _smooth(h, beta):
    w = np.linalg.eigvalsh(h)
    top = w[-1]
    return float(top + np.log(np.sum(np.exp(beta * (w - top)))) / beta)


def _gibbs(h, beta):
    w, v = np.linalg.eigh(h)
    p = np.exp(beta * (w - w[-1]))
    p /= p.sum()
    return (v * p) @ dagger(v)


def _pair_blocks(v0, v1, pad):
    if v0.d_in != v1.d_in:
        raise ShapeError(f"input dimensions differ: {v0.d_in} vs {v1.d_in}")
    n = v0.d_in
    blocks = []
    for label in sorted(set(v0.labels) | set(v1.labels)):
        dims0 = v0.dims(label) if label in v0.labels else None
        dims1 = v1.dims(label) if label in v1.labels else None
        if dims0 and dims1 and dims0[1] != dims1[1]:
            raise ShapeError(f"B factors differ on block {label}: {dims0[1]} vs {dims1[1]}")
        dim_b = (dims0 or dims1)[1]
        dim_a = max(d[0] for d in (dims0, dims1) if d)
        if pad:
            dim_a = max(dim_a, 2 * n * dim_b)
        parts = []
        for v, dims in ((v0, dims0), (v1, dims1)):
            a = np.zeros((dim_a, dim_b, n), dtype=complex)
            if dims:
                a[:dims[0]] = v.block(label).reshape(dims[0], dim_b, n)
            parts.append(a)
        blocks.append((label, dim_a, dim_b, parts[0], parts[1]))
    return blocks, n


def _hat(blocks, n):
    """Single block on (sum_x A_x) (x) (sum_x B_x) with V_x on the diagonal."""
    total_a = sum(b[1] for b in blocks)
    total_b = sum(b[2] for b in blocks)
    hats = [np.zeros((total_a, total_b, n), dtype=complex) for _ in range(2)]
    off_a = off_b = 0
    for _, dim_a, dim_b, a0, a1 in blocks:
        hats[0][off_a:off_a + dim_a, off_b:off_b + dim_b] = a0
        hats[1][off_a:off_a + dim_a, off_b:off_b + dim_b] = a1
        off_a += dim_a
        off_b += dim_b
    return [((), total_a, total_b, hats[0], hats[1])]


def _to_dilation(blocks, which):
    return StinespringDilation([(label, da, db, parts[which].reshape(da * db, -1))
                                for label, da, db, *parts in blocks])


def _block_haar(problem, rng):
    if problem.summands:
        return [block_diag(*[haar_unitary(d, rng) for d in problem.summands])]
    return [haar_unitary(d, rng) for d in problem.dims]


def _starts(problem, restarts, seed):
    """Identity, mixed-aligned and block-diagonal Haar starts, then Haar starts on the whole factor.

    The first group is the blockwise start set; the unrestricted search adds
    unitaries that mix the direct summands.
    """
    starts = [[np.eye(d, dtype=complex) for d in problem.dims]]
    starts.append(problem.polar(problem.m_blocks(np.eye(problem.n) / problem.n)))
    for r in range(max(restarts - 2, 0)):
        starts.append(_block_haar(problem, rng_from(seed, r)))
    starts = starts[:max(restarts, 1)]
    if problem.summands:
        for r in range(max(restarts - 2, 1)):
            rng = rng_from(seed, restarts + r)
            starts.append([haar_unitary(d, rng) for d in problem.dims])
    return starts


def _descend(problem, us, tol, max_iter):
    """Annealed alternation of polar steps and Riemannian gradient steps."""
    beta = BETA_START
    best_value, best_us = problem.value(us), us
    visited = []
    converged = False
    it = 0
    step = 1.0
    for it in range(1, max_iter + 1):
        h = problem.residual_gram(us)
        phi = _smooth(h, beta)
        rho = _gibbs(h, beta)
        visited.append(rho)
        ms = problem.m_blocks(rho)

        candidate = problem.polar(ms)
        phi_new = _smooth(problem.residual_gram(candidate), beta)
        if phi_new >= phi - tol:
            # descend along U exp(t Omega), Omega the skew part of -(M U)
            zs = [m @ u for m, u in zip(ms, us)]
            omegas = [0.5 * (dagger(z) - z) for z in zs]
            slope = 2 * sum(float(np.real(np.trace(o @ z))) for o, z in zip(omegas, zs))
            candidate, phi_new = us, phi
            t = step
            for _ in range(30):
                trial = [u @ expm(t * o) for u, o in zip(us, omegas)]
                phi_trial = _smooth(problem.residual_gram(trial), beta)
                if phi_trial <= phi - 1e-4 * t * slope:
                    candidate, phi_new = trial, phi_trial
                    step = min(2 * t, 10.0)
                    break
                t *= 0.5
        us = candidate
        value = problem.value(us)
        if value < best_value:
            best_value, best_us = value, us
        if best_value == 0.0:
            converged = True
            break
        if phi - phi_new < tol:
            if beta >= BETA_MAX:
                converged = True
                break
            beta *= 10
    return best_value, best_us, visited, converged, it


def _polish(problem, us):
    """Nelder-Mead on Hermitian generators around us."""
    dims = problem.dims
    base = us

    def unpack(x):
        mats = []
        pos = 0
        for d in dims:
            h = x[pos:pos + d * d].reshape(d, d)
            pos += d * d
            upper = np.triu(h, 1) + 1j * np.tril(h, -1).T
            mats.append(expm(upper - dagger(upper) + 1j * np.diag(np.diag(h))))
        return [u @ e for u, e in zip(base, mats)]

    x0 = np.zeros(sum(d * d for d in dims))
    budget = 4000 * len(x0)
    res = minimize(lambda x: problem.value(unpack(x)), x0, method="Nelder-Mead",
                   options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': budget, 'maxfev': budget})
    polished = unpack(res.x)
    return problem.value(polished), polished


def _dual_polish(problem, rho):
    """Maximize the dual over states rho = A A^dagger / tr, starting from rho."""
    n = problem.n
    w, v = np.linalg.eigh(hermitian_part(rho))
    root = (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)
    x0 = np.concatenate([root.real.reshape(-1), root.imag.reshape(-1)])

    def state(x):
        a = x[:n * n].reshape(n, n) + 1j * x[n * n:].reshape(n, n)
        s = a @ dagger(a)
        return s / max(np.trace(s).real, 1e-300)

    budget = 2000 * len(x0)
    res = minimize(lambda x: -problem.dual2(state(x)), x0, method="Nelder-Mead",
                   options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': budget, 'maxfev': budget})
    best = state(res.x)
    if problem.dual2(best) < problem.dual2(rho):
        best = rho
    return problem.dual2(best), best


def align_isometries(v0, v1, blockwise=True, restarts=None, seed=0, max_iter=None, tol=None,
                     pad=False, polish=True):
    """inf over unitaries U of ||(U (x) 1_B) V0 - V1||.

    With blockwise=True, U = sum_x U_x respects the block structure. Otherwise
    the blocks are embedded on the diagonal of (sum_x A_x) (x) (sum_x B_x) and U
    acts on all of sum_x A_x, with starts that mix the summands besides the
    block-diagonal ones. pad=True
    enlarges every A factor to at least 2 dim(H) dim(B_x) by an ancilla in |0>.
    """
    restarts = analysis_config.ALIGN_RESTARTS if restarts is None else restarts
    max_iter = analysis_config.ALIGN_MAX_ITER if max_iter is None else max_iter
    tol = analysis_config.ALIGN_TOL if tol is None else tol

    blocks, n = _pair_blocks(v0, v1, pad)
    if blockwise:
        problem = _Problem(blocks, n)
    else:
        summands = [b[1] for b in blocks]
        blocks = _hat(blocks, n)
        problem = _Problem(blocks, n, summands=summands)

    best_value, best_us = np.inf, None
    visited = []
    converged = False
    iterations = 0
    for start in _starts(problem, restarts, seed):
        value, us, seen, ok, its = _descend(problem, start, tol, max_iter)
        visited.extend(seen[-3:])
        iterations += its
        if best_us is None or value < best_value - tol:
            best_value, best_us, converged = value, us, ok
        elif value <= best_value + tol:
            converged = converged or ok
        if best_value == 0.0:
            break

    if polish and best_value > tol and sum(d * d for d in problem.dims) <= POLISH_PARAMS:
        value, us = _polish(problem, best_us)
        if value < best_value:
            best_value, best_us = value, us

    lower2 = max([problem.dual2(rho) for rho in visited] + [0.0])
    if n <= DUAL_POLISH_DIM and visited and best_value > 0.0:
        dual, rho = _dual_polish(problem, visited[-1])
        lower2 = max(lower2, dual)
        candidate = problem.polar(problem.m_blocks(rho))
        value = problem.value(candidate)
        if value < best_value:
            best_value, best_us = value, candidate
    lower = float(np.sqrt(min(max(lower2, 0.0), best_value ** 2)))
    if best_value ** 2 - lower ** 2 <= 1e-6:
        converged = True
    if not converged:
        warnings.warn(f"isometry alignment did not converge (value {best_value:.3g}, lower bound {lower:.3g})",
                      RuntimeWarning)

    unitaries = dict(zip([b[0] for b in blocks], best_us))
    return AlignmentResult(unitaries, float(best_value), lower, converged, iterations,
                           _to_dilation(blocks, 0), _to_dilation(blocks, 1), blockwise)
