"""Ground-truth inference on the coupled model.

Exact enumeration of the sign posterior for tiny instances, plus a
centralized Gibbs sampler over the combined agents. Both target the same
factor-graph joint as the naming game, so agreement between the three is
the core correctness check.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels, perception, rng
from .errors import InstanceTooLargeError, InvalidParameterError

S_CENTRAL = 7


@dataclass
class ExactPosterior:
    support: list
    probs: np.ndarray

    def as_dict(self):
        return {cfg: float(p) for cfg, p in zip(self.support, self.probs)}


def _factor_tables(states):
    """Per-agent log pi, per-agent per-object loglik, per-agent phi."""
    logliks = [perception.loglik_table(s) for s in states]
    with np.errstate(divide="ignore"):
        logpis = [np.log(s.pi) for s in states]
        logphis = [np.log(s.phi) for s in states]
    return logpis, logliks, logphis


def enumerate_posterior(states, marginal="w-only", max_support=10_000_000):
    """Exact normalized posterior over sign configurations.

    marginal="w-only": support is all W^N sign configurations, with the
    agents' categories summed out. marginal="w-and-z": support entries are
    (w_config, (z_config_per_agent, ...)) over the full product space.
    Parameters are taken as fixed at the states' current values.
    """
    n_objects = states[0].n_objects
    n_signs = states[0].n_signs
    n_w = n_signs ** n_objects
    logpis, logliks, logphis = _factor_tables(states)

    if marginal == "w-only":
        if n_w > max_support:
            raise InstanceTooLargeError(f"support size {n_w} over the guard")
        # z sums out independently per (agent, object):
        # factor[i][w] = prod_a sum_k pi_a[k] lik_a(i,k) phi_a[k][w]
        log_factor = np.zeros((n_objects, n_signs))
        for a in range(len(states)):
            for i in range(n_objects):
                contrib = logpis[a][:, None] + logliks[a][i][:, None] \
                    + logphis[a]
                log_factor[i] += logsumexp(contrib, axis=0)
        support = list(itertools.product(range(n_signs), repeat=n_objects))
        scores = np.array([sum(log_factor[i, w[i]] for i in range(n_objects))
                           for w in support])
        probs = np.exp(scores - logsumexp(scores))
        probs /= probs.sum()
        return ExactPosterior(support=support, probs=probs)

    if marginal == "w-and-z":
        n_cats = [s.n_categories for s in states]
        size = n_w * int(np.prod([k ** n_objects for k in n_cats]))
        if size > max_support:
            raise InstanceTooLargeError(f"support size {size} over the guard")
        support = []
        scores = []
        z_spaces = [list(itertools.product(range(k), repeat=n_objects))
                    for k in n_cats]
        for w in itertools.product(range(n_signs), repeat=n_objects):
            for zs in itertools.product(*z_spaces):
                s = 0.0
                for a, z in enumerate(zs):
                    for i in range(n_objects):
                        s += logpis[a][z[i]] + logliks[a][i, z[i]] \
                            + logphis[a][z[i], w[i]]
                support.append((w, zs))
                scores.append(s)
        scores = np.array(scores)
        probs = np.exp(scores - logsumexp(scores))
        probs /= probs.sum()
        return ExactPosterior(support=support, probs=probs)

    raise InvalidParameterError(f"unknown marginal {marginal!r}")


def centralized_gibbs(states, initial_signs, sweeps, seed,
                      resample_params_every=None):
    """Systematic-scan Gibbs over the combined agents.

    Per sweep: each object's sign from the normalized product of the agents'
    phi columns, then every agent's categories, then (optionally) every
    agent's parameters. Returns the (sweeps, N) sign history; states are
    copied, not mutated. resample_params_every=None keeps parameters fixed.
    """
    if sweeps < 1:
        raise InvalidParameterError("sweeps must be >= 1")
    states = [s.copy() for s in states]
    n_agents = len(states)
    n_objects = states[0].n_objects
    signs = np.asarray(initial_signs, dtype=np.int64).copy()
    gen = rng.stream(seed, rng.stream_id(S_CENTRAL))
    param_gens = [rng.stream(seed, rng.stream_id(S_CENTRAL + 1, a))
                  for a in range(n_agents)]

    out = np.empty((sweeps, n_objects), dtype=np.int64)
    if resample_params_every is None:
        logpis, logliks, _ = _factor_tables(states)
        phis = np.stack([s.phi for s in states])
        logpis = np.stack(logpis)
        logliks = np.stack(logliks)
        z = np.stack([s.z for s in states]).astype(np.int64)
        u_w = gen.random((sweeps, n_objects))
        u_z = gen.random((sweeps, n_agents, n_objects))
        _kernels.centralized_chain(phis, logpis, logliks, z, signs,
                                   u_w, u_z, out)
        for a, s in enumerate(states):
            s.z = z[a]
        return out, states

    for t in range(sweeps):
        logpis, logliks, _ = _factor_tables(states)
        phis = np.stack([s.phi for s in states])
        z = np.stack([s.z for s in states]).astype(np.int64)
        _kernels.centralized_sweep(phis, np.stack(logpis), np.stack(logliks),
                                   z, signs, gen.random(n_objects),
                                   gen.random((n_agents, n_objects)))
        for a, s in enumerate(states):
            s.z = z[a]
        if (t + 1) % resample_params_every == 0:
            for a, s in enumerate(states):
                perception.resample_parameters(s, signs, param_gens[a])
        out[t] = signs
    return out, states


def empirical_law(configs, support):
    """Relative frequencies of configurations over a fixed support.

    configs: iterable of tuples (or an (S, N) int array). Raises if any
    observed configuration falls outside the support.
    """
    if isinstance(configs, np.ndarray):
        configs = [tuple(int(v) for v in row) for row in configs]
    index = {cfg: j for j, cfg in enumerate(support)}
    counts = np.zeros(len(support))
    for cfg in configs:
        j = index.get(cfg)
        if j is None:
            raise InvalidParameterError(
                f"configuration {cfg!r} outside the comparison support")
        counts[j] += 1
    if counts.sum() == 0:
        raise InvalidParameterError("no configurations given")
    return {cfg: float(c / counts.sum()) for cfg, c in zip(support, counts)}


def tv_distance(p, q):
    """Total variation distance 0.5 * sum |p - q| over a shared support."""
    p = p.as_dict() if isinstance(p, ExactPosterior) else dict(p)
    q = q.as_dict() if isinstance(q, ExactPosterior) else dict(q)
    if set(p) != set(q):
        raise InvalidParameterError("supports differ")
    return 0.5 * sum(abs(p[k] - q[k]) for k in p)
