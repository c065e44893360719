"""Seeded randomness and conjugate-statistics kernels.

All sampling in the package flows through counter-based Philox generators
keyed by (seed, stream id). Distinct stream ids give independent draw
sequences, so per-agent and per-chain streams stay reproducible no matter
how the caller schedules them.
"""

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidParameterError


def stream(seed, stream_id=0):
    """Independent Generator keyed by (seed, stream_id).

    Identical (seed, stream_id) and call sequence produce identical draws.
    """
    key = np.array([np.uint64(seed), np.uint64(stream_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_id(purpose, agent=0):
    """Pack a purpose code and agent index into one stream id."""
    return (int(purpose) << 20) | int(agent)


def is_prob_vector(p, tol=1e-9):
    p = np.asarray(p, dtype=float)
    return (
        p.ndim == 1
        and p.size >= 1
        and np.all(p >= 0)
        and abs(p.sum() - 1.0) <= tol
    )


def check_prob_vector(p, name="p", tol=1e-9):
    if not is_prob_vector(p, tol=tol):
        raise InvalidParameterError(f"{name} is not a probability vector: {p!r}")
    return np.asarray(p, dtype=float)


def sample_dirichlet(alpha, rng):
    """Draw one probability vector from Dirichlet(alpha)."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1 or np.any(alpha <= 0):
        raise InvalidParameterError(f"alpha must be positive: {alpha!r}")
    return rng.dirichlet(alpha)


def sample_categorical(p, rng):
    """Draw an index in [0, len(p)) with probabilities p."""
    from . import _kernels

    p = check_prob_vector(p)
    return int(_kernels.categorical_from_u(p, rng.random()))


def log_sum_exp(xs):
    """Overflow-safe ln(sum(exp(xs)))."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise InvalidParameterError("log_sum_exp of empty vector")
    return float(logsumexp(xs))


def normal_mean_posterior(prior_mean, prior_var, obs_sum, obs_count, obs_var):
    """Posterior of a Gaussian mean under a N(prior_mean, prior_var*I) prior.

    Observations are modelled as isotropic N(mean, obs_var*I); obs_sum is
    their vector sum and obs_count their number. Returns (mean, variance)
    where the variance is the shared scalar 1/(n/obs_var + 1/prior_var).
    """
    if prior_var <= 0 or obs_var <= 0:
        raise InvalidParameterError("variances must be positive")
    if obs_count < 0:
        raise InvalidParameterError("obs_count must be >= 0")
    prior_mean = np.asarray(prior_mean, dtype=float)
    obs_sum = np.asarray(obs_sum, dtype=float)
    precision = obs_count / obs_var + 1.0 / prior_var
    var = 1.0 / precision
    mean = (obs_sum / obs_var + prior_mean / prior_var) * var
    return mean, var
