"""
Dense linear-algebra kernel
Tensor products, partial traces, norms, fidelity, polar alignment and seeded Haar sampling
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis_config import analysis_config
from .errors import DimensionLimitError, DomainError, ShapeError


def check_entries(rows, cols):
    """Raise if a rows x cols matrix exceeds the configured entry limit."""
    if rows * cols > analysis_config.MAX_MATRIX_ENTRIES:
        raise DimensionLimitError(
            f"{rows}x{cols} matrix exceeds {analysis_config.MAX_MATRIX_ENTRIES} entries")


def as_matrix(m, name="matrix"):
    """Coerce to a finite 2-d complex array."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeError(f"{name} has non-finite entries")
    return m


def as_square(m, name="matrix"):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b):
    """Kronecker product, left factor varying slowest."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1 and b.ndim == 1:
        check_entries(a.shape[0] * b.shape[0], 1)
        return np.kron(a, b)
    a = np.atleast_2d(a) if a.ndim < 2 else a
    b = np.atleast_2d(b) if b.ndim < 2 else b
    check_entries(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def partial_trace(m, dims, keep):
    """Trace out every tensor factor of m whose index is not in keep."""
    m = as_square(m)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ShapeError(f"dims must be positive, got {dims}")
    total = int(np.prod(dims))
    if total != m.shape[0]:
        raise ShapeError(f"dims {dims} do not multiply to matrix dimension {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeError(f"keep indices {keep} out of range for {len(dims)} factors")

    n = len(dims)
    t = m.reshape(dims + dims)
    # Trace from the highest factor down so remaining axis numbers stay valid
    live = n
    for k in reversed(range(n)):
        if k in keep:
            continue
        t = np.trace(t, axis1=k, axis2=k + live)
        live -= 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kept, kept)


def partial_transpose(m, dims, index):
    """Transpose a single tensor factor."""
    m = as_square(m)
    dims = [int(d) for d in dims]
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[index], axes[index + n] = axes[index + n], axes[index]
    return t.transpose(axes).reshape(m.shape)


def trace_norm(m):
    """Sum of singular values."""
    m = as_square(m)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hermitian_part(m):
    return 0.5 * (m + dagger(m))


def psd_sqrt(m):
    """Square root of a PSD matrix with roundoff eigenvalues clipped at zero."""
    w, v = np.linalg.eigh(hermitian_part(m))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def validate_density(rho, name="state", tol=None):
    """Return rho as a complex array or raise DomainError."""
    tol = analysis_config.STATE_TOL if tol is None else tol
    rho = as_square(rho, name)
    if np.max(np.abs(rho - dagger(rho)), initial=0.0) > tol:
        raise DomainError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise DomainError(f"{name} has trace {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(hermitian_part(rho))[0] < -tol:
        raise DomainError(f"{name} is not positive semidefinite")
    return rho


def is_density(rho, tol=None):
    try:
        validate_density(rho, tol=tol)
        return True
    except (DomainError, ShapeError):
        return False


def pure(psi):
    """Projector onto a (normalized) vector."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def fidelity(rho, sigma):
    """Root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    rho = validate_density(rho, "rho")
    sigma = validate_density(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise ShapeError(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    root = psd_sqrt(rho)
    inner = hermitian_part(root @ sigma @ root)
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(w))))


def polar_align(m, rank_tol=1e-12):
    """Unitary U maximizing Re tr(U m), with the maximum.

    From the SVD m = P S Q^dagger the maximizer is Q P^dagger on the range of
    m and the value is the sum of singular values. On the null space U is the
    unitary between ker(m^dagger) and ker(m) closest to the identity, so the
    result does not depend on the SVD basis; m = 0 and PSD m give U = 1.
    """
    m = as_square(m)
    p, s, qh = np.linalg.svd(m)
    q = dagger(qh)
    rank = int(np.sum(s > rank_tol * max(s[0], 1.0)))
    u = q[:, :rank] @ dagger(p[:, :rank])
    if rank < len(s):
        p0, q0 = p[:, rank:], q[:, rank:]
        x, _, yh = np.linalg.svd(dagger(q0) @ p0)
        u = u + q0 @ x @ yh @ dagger(p0)
    return u, float(np.sum(s))


def rng_from(seed, index=None):
    """Generator for (seed, index); passes existing generators through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("a seed is required for random sampling")
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if index is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


def ginibre(rows, cols, rng):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(d, seed):
    """Haar-distributed unitary via Ginibre + QR with phase-fixed R diagonal."""
    if d < 1:
        raise ValueError("d must be positive")
    rng = rng_from(seed)
    q, r = np.linalg.qr(ginibre(d, d, rng))
    diag = np.diagonal(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def haar_isometry(rows, cols, seed):
    """First cols columns of a Haar unitary on rows dimensions."""
    if cols > rows:
        raise ShapeError(f"no isometry from {cols} into {rows} dimensions")
    return haar_unitary(rows, seed)[:, :cols]


def random_state(d, seed):
    """Haar-random unit vector."""
    rng = rng_from(seed)
    psi = ginibre(d, 1, rng).reshape(-1)
    return psi / np.linalg.norm(psi)


def random_density(d, seed, rank=None):
    """Random density matrix from a d x rank Ginibre matrix."""
    rng = rng_from(seed)
    rank = d if rank is None else rank
    g = ginibre(d, rank, rng)
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def fourier_mub(d):
    """Standard basis and its Fourier transform, phases exp(2 pi i j k / d) with 1-based j, k."""
    if d < 2:
        raise ValueError("d must be at least 2")
    j = np.arange(1, d + 1)
    phases = np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)
    eye = np.eye(d, dtype=complex)
    e_basis = [eye[:, k] for k in range(d)]
    # column k of phases is f_{k+1} expanded in e_1..e_d
    f_basis = [phases[:, k].copy() for k in range(d)]
    return e_basis, f_basis


def max_entangled(d):
    """d^{-1/2} sum_j e_j (x) e_j."""
    if d < 1:
        raise ValueError("d must be positive")
    return np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)


def run_trials(fn, count, workers=None):
    """Evaluate fn(0..count-1) and return results in index order."""
    workers = analysis_config.WORKERS if workers is None else workers
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))
