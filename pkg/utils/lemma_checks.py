"""
Inequality batteries
Randomized checks of the fidelity, norm and truncation estimates the analysis relies on.
Every battery returns a summary dict with the number of violations and the worst margin.
"""

import numpy as np

from .channel_norms import fidelity_sum_optimizer, op_norm_estimate
from .channels import (EnergyConstraint, average_fidelity, channel_fidelity, constrained_state, dephasing,
                       energy_respecting_channel, energy_truncate, measure_prepare, random_channel, tensor)
from .errors import InvalidChannelError
from .numerics import (dagger, fidelity, ginibre, haar_unitary, kron, partial_trace, psd_sqrt, random_density,
                       random_state, rng_from, run_trials, trace_norm)


def _summary(name, margins, tol, **extra):
    margins = np.asarray(margins, dtype=float)
    violations = int(np.sum(margins < -tol))
    summary = {
        'name': name,
        'trials': int(margins.size),
        'violations': violations,
        'worst_margin': float(margins.min()) if margins.size else 0.0,
        'tolerance': tol,
        'passed': violations == 0,
    }
    summary.update(extra)
    return summary


def fidelity_trace_battery(trials=1000, seed=0, max_dim=5, tol=1e-10, workers=None):
    """1 - F <= T <= sqrt(1 - F^2) with T half the trace distance, on random full-rank pairs."""
    def trial(i):
        rng = rng_from(seed, i)
        d = int(rng.integers(2, max_dim + 1))
        rho = random_density(d, rng)
        sigma = random_density(d, rng)
        f = fidelity(rho, sigma)
        t = 0.5 * trace_norm(rho - sigma)
        return min(t - (1.0 - f), np.sqrt(max(0.0, 1.0 - f * f)) - t)

    return _summary('fidelity_trace', run_trials(trial, trials, workers), tol)


def fidelity_sum_battery(trials=100, seed=0, max_dim=4, tol=1e-3, overshoot=1e-9, workers=None):
    """max over omega of F^2(rho, omega) + F^2(sigma, omega) equals 1 + F(rho, sigma)."""
    def trial(i):
        rng = rng_from(seed, i)
        d = int(rng.integers(2, max_dim + 1))
        rho = random_density(d, rng)
        sigma = random_density(d, rng)
        target = 1.0 + fidelity(rho, sigma)
        value, _ = fidelity_sum_optimizer(rho, sigma)
        return value - target

    gaps = np.asarray(run_trials(trial, trials, workers))
    margins = np.minimum(gaps + tol, overshoot - gaps)
    return _summary('fidelity_sum', margins, 0.0, largest_shortfall=float(max(0.0, -gaps.min())),
                    largest_overshoot=float(max(0.0, gaps.max())))


def average_fidelity_battery(channels=5, d=4, samples=20000, seed=0, sigmas=3.0, tol=1e-12):
    """Fc <= Fbar <= Fc + 1/d, Fbar = (d Fc + 1)/(d + 1), and Monte Carlo agreement."""
    margins = []
    rows = []
    for i in range(channels):
        rng = rng_from(seed, 2 * i)
        c = random_channel(d, d, int(rng.integers(1, d + 1)), rng)
        fc = channel_fidelity(c)
        exact, _ = average_fidelity(c)
        sampled, stderr = average_fidelity(c, mode="montecarlo", samples=samples, seed=rng_from(seed, 2 * i + 1))
        relation = (d * fc + 1) / (d + 1)
        margins += [exact - fc, fc + 1.0 / d - exact, tol - abs(exact - relation),
                    (sigmas * stderr - abs(sampled - exact)) if stderr > 0 else tol - abs(sampled - exact)]
        rows.append({'channel_fidelity': fc, 'average_fidelity': exact, 'monte_carlo': sampled, 'stderr': stderr})
    return _summary('average_fidelity', margins, 0.0, channels=rows, samples=int(samples))


def random_entanglement_breaking(d_in, d_out, outcomes, seed):
    """measure_prepare channel with a random POVM and random prepared states."""
    rng = rng_from(seed)
    raw = []
    for _ in range(outcomes):
        g = ginibre(d_in, d_in, rng)
        raw.append(g @ dagger(g))
    inv_root = np.linalg.inv(psd_sqrt(sum(raw)))
    povm = [inv_root @ g @ inv_root for g in raw]
    states = [random_density(d_out, rng) for _ in range(outcomes)]
    return measure_prepare([0.5 * (m + dagger(m)) for m in povm], states)


def _conditional_starts(rho, d, record):
    """Eigenvectors of tr_2 (1 (x) K^dagger K) rho for every Kraus operator K of the record."""
    k_dim = record.d_in
    starts = []
    for k in record.kraus:
        effect = dagger(k) @ k
        cond = partial_trace(kron(np.eye(d), effect) @ rho, (d, k_dim), keep=[0])
        w, v = np.linalg.eigh(0.5 * (cond + dagger(cond)))
        starts += [v[:, j] for j in range(d) if w[j] > 1e-12]
    return starts


def separable_norm_check(c1, c2, record, samples=8, seed=0, trials=4, tol=1e-6):
    """Sampled ||((c1 - c2) (x) D)(psi)||_1 never exceeds the plain norm of c1 - c2.

    D must be measure-and-prepare with rank-one Kraus operators. The plain
    norm estimate is seeded with the eigenvectors of the conditional states,
    so every sampled value is dominated by some evaluated input.
    """
    if record.labeled:
        raise InvalidChannelError("record channel must have a single output")
    if any(np.linalg.matrix_rank(k, tol=1e-10) > 1 for k in record.kraus):
        raise InvalidChannelError("record channel must be measure-and-prepare with rank-one Kraus operators")
    d = c1.d_in
    joint1, joint2 = tensor(c1, record), tensor(c2, record)
    sampled = []
    starts = []
    for i in range(samples):
        psi = random_state(d * record.d_in, rng_from(seed, i))
        rho = np.outer(psi, psi.conj())
        sampled.append(trace_norm(joint1.act(rho) - joint2.act(rho)))
        starts += _conditional_starts(rho, d, record)
    reference, _ = op_norm_estimate(c1, c2, trials, seed, starts=starts)
    margins = [reference - s for s in sampled]
    return _summary('separable_norm', margins, tol, op_norm_estimate=reference,
                    largest_sample=float(max(sampled)))


def separable_battery(pairs=50, seed=0, max_dim=3, samples=4, trials=2, tol=1e-6):
    """Alternates random entanglement-breaking records with the classical identity."""
    margins = []
    kinds = {'measure_prepare': 0, 'classical': 0}
    for i in range(pairs):
        rng = rng_from(seed, 4 * i)
        d = int(rng.integers(2, max_dim + 1))
        k_dim = int(rng.integers(2, max_dim + 1))
        c1 = random_channel(d, d, 2, rng_from(seed, 4 * i + 1))
        c2 = random_channel(d, d, 2, rng_from(seed, 4 * i + 2))
        if i % 2:
            record = dephasing(k_dim)
            kinds['classical'] += 1
        else:
            record = random_entanglement_breaking(k_dim, k_dim, int(rng.integers(2, 4)), rng_from(seed, 4 * i + 3))
            kinds['measure_prepare'] += 1
        result = separable_norm_check(c1, c2, record, samples=samples, seed=int(rng.integers(2 ** 32)),
                                      trials=trials, tol=tol)
        margins.append(result['worst_margin'])
    return _summary('separable_norm', margins, tol, records=kinds)


def _random_hamiltonian(d, rng):
    levels = np.sort(rng.uniform(0.0, 10.0, d))
    levels[0] = 0.0
    u = haar_unitary(d, rng)
    return (u * levels) @ dagger(u), levels


def energy_battery(trials=100, seed=0, gammas=(0.01, 0.1, 0.25), max_dim=16, tol=1e-10):
    """Truncation error of energy-respecting channels against 4 sqrt(gamma) + 2 gamma / (1 - gamma)."""
    margins = []
    for i in range(trials):
        rng = rng_from(seed, 3 * i)
        d = int(rng.integers(2, max_dim + 1))
        h, levels = _random_hamiltonian(d, rng)
        ec = EnergyConstraint(h, float(rng.uniform(levels[1] / 4, levels.mean())))
        channel = energy_respecting_channel(ec, rng_from(seed, 3 * i + 1))
        rho = constrained_state(ec, rng_from(seed, 3 * i + 2))
        for gamma in gammas:
            truncation = energy_truncate(channel, ec, gamma, check_samples=0)
            margins.append(truncation.bound - truncation.error(rho))
    return _summary('energy_truncation', margins, tol, gammas=list(gammas))


def run_batteries(trials=1000, seed=0, workers=None, samples=20000):
    """All batteries with trial counts scaled from the fidelity-trace count."""
    return {
        'fidelity_trace': fidelity_trace_battery(trials, seed, workers=workers),
        'fidelity_sum': fidelity_sum_battery(max(1, trials // 10), seed, workers=workers),
        'average_fidelity': average_fidelity_battery(seed=seed, samples=samples),
        'separable_norm': separable_battery(max(1, trials // 20), seed),
        'energy_truncation': energy_battery(max(1, trials // 10), seed),
    }
