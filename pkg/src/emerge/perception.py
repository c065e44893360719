"""One agent's internal model: mixture categorization coupled to a sign table.

The model is fully conjugate: categorical mixing weights pi ~ Dirichlet,
row-stochastic sign table phi with Dirichlet rows, isotropic Gaussian
component means with a Normal prior and known observation variance. Every
full conditional is therefore exact and enumerable, which is what the
oracle tests rely on.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rng
from .errors import InvalidParameterError

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class Hyper:
    """Prior hyperparameters; sigma2 is per-modality observation variance."""

    alpha_pi: float = 1.0
    alpha_phi: float = 1.0
    mu0: float = 0.0
    tau2: float = 100.0
    sigma2: tuple = (1.0,)

    def sigma2_for(self, n_modalities):
        s = self.sigma2
        if np.isscalar(s):
            return [float(s)] * n_modalities
        if len(s) == 1:
            return [float(s[0])] * n_modalities
        if len(s) != n_modalities:
            raise InvalidParameterError("sigma2 length must match modalities")
        return [float(v) for v in s]

    def to_dict(self):
        return {"alpha_pi": self.alpha_pi, "alpha_phi": self.alpha_phi,
                "mu0": self.mu0, "tau2": self.tau2,
                "sigma2": list(np.atleast_1d(self.sigma2).astype(float))}

    @classmethod
    def from_dict(cls, d):
        return cls(alpha_pi=d["alpha_pi"], alpha_phi=d["alpha_phi"],
                   mu0=d["mu0"], tau2=d["tau2"], sigma2=tuple(d["sigma2"]))


@dataclass
class InternalState:
    """Category assignments z, mixture (pi, mu) and sign table phi.

    obs[i][m] is this agent's private view of object i in modality m;
    phi[k] is the sign distribution an agent with category k draws from.
    """

    agent_id: int
    n_categories: int
    n_signs: int
    hyper: Hyper
    z: np.ndarray
    pi: np.ndarray
    mu: list
    phi: np.ndarray
    obs: list
    dims: list = field(default_factory=list)

    @property
    def n_objects(self):
        return len(self.obs)

    def check_invariants(self, tol=1e-9):
        assert self.pi.shape == (self.n_categories,)
        assert abs(self.pi.sum() - 1.0) <= tol
        assert self.phi.shape == (self.n_categories, self.n_signs)
        assert np.allclose(self.phi.sum(axis=1), 1.0, atol=tol)
        assert np.all((self.z >= 0) & (self.z < self.n_categories))
        for k in range(self.n_categories):
            for m, d in enumerate(self.dims):
                assert self.mu[k][m].shape == (d,)

    def to_json(self):
        doc = {
            "agent_id": self.agent_id,
            "n_categories": self.n_categories,
            "n_signs": self.n_signs,
            "hyper": self.hyper.to_dict(),
            "z": [int(v) for v in self.z],
            "pi": [float(v) for v in self.pi],
            "mu": [[list(map(float, m)) for m in k_mu] for k_mu in self.mu],
            "phi": [[float(v) for v in row] for row in self.phi],
            "obs": [[list(map(float, o)) for o in obj] for obj in self.obs],
            "dims": list(self.dims),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            agent_id=d["agent_id"],
            n_categories=d["n_categories"],
            n_signs=d["n_signs"],
            hyper=Hyper.from_dict(d["hyper"]),
            z=np.asarray(d["z"], dtype=np.int64),
            pi=np.asarray(d["pi"], dtype=float),
            mu=[[np.asarray(m, dtype=float) for m in k_mu] for k_mu in d["mu"]],
            phi=np.asarray(d["phi"], dtype=float),
            obs=[[np.asarray(o, dtype=float) for o in obj] for obj in d["obs"]],
            dims=list(d["dims"]),
        )

    def copy(self):
        return InternalState(
            agent_id=self.agent_id,
            n_categories=self.n_categories,
            n_signs=self.n_signs,
            hyper=self.hyper,
            z=self.z.copy(),
            pi=self.pi.copy(),
            mu=[[m.copy() for m in k_mu] for k_mu in self.mu],
            phi=self.phi.copy(),
            obs=self.obs,
            dims=list(self.dims),
        )


def init_state(dataset, agent_id, n_categories, n_signs, hyper, seed,
               stream_offset=0):
    """Draw pi, phi and mu from their priors and z from pi."""
    if n_categories < 1 or n_signs < 1:
        raise InvalidParameterError("K and W must be >= 1")
    gen = rng.stream(seed, rng.stream_id(90 + stream_offset, agent_id))
    hyper.sigma2_for(dataset.n_modalities)  # validate early

    pi = rng.sample_dirichlet(np.full(n_categories, hyper.alpha_pi), gen)
    phi = np.stack([rng.sample_dirichlet(np.full(n_signs, hyper.alpha_phi), gen)
                    for _ in range(n_categories)])
    mu = []
    for _ in range(n_categories):
        mu.append([hyper.mu0 + np.sqrt(hyper.tau2) * gen.normal(size=d)
                   for d in dataset.dims])
    z = np.array([rng.sample_categorical(pi, gen)
                  for _ in range(dataset.n_objects)], dtype=np.int64)

    return InternalState(
        agent_id=agent_id,
        n_categories=n_categories,
        n_signs=n_signs,
        hyper=hyper,
        z=z,
        pi=pi,
        mu=mu,
        phi=phi,
        obs=dataset.observations[agent_id],
        dims=list(dataset.dims),
    )


def _sigma2_list(state):
    return state.hyper.sigma2_for(len(state.dims))


def loglik_obs(state, object_i, category=None):
    """Sum over modalities of log N(o_i,m ; mu[k][m], sigma2_m * I).

    category defaults to the object's current assignment z_i.
    """
    k = state.z[object_i] if category is None else category
    sigma2 = _sigma2_list(state)
    total = 0.0
    for m, s2 in enumerate(sigma2):
        diff = state.obs[object_i][m] - state.mu[k][m]
        d = diff.shape[0]
        total += -0.5 * (d * (_LOG_2PI + np.log(s2)) + diff @ diff / s2)
    return float(total)


def loglik_table(state):
    """(N, K) table of loglik_obs for every object and category."""
    n, kk = state.n_objects, state.n_categories
    out = np.empty((n, kk))
    for i in range(n):
        for k in range(kk):
            out[i, k] = loglik_obs(state, i, k)
    return out


def _z_logits(state, object_i, sign_i):
    with np.errstate(divide="ignore"):
        logphi = np.log(state.phi[:, sign_i])
        logpi = np.log(state.pi)
    lik = np.array([loglik_obs(state, object_i, k)
                    for k in range(state.n_categories)])
    return logpi + lik + logphi


def gibbs_update_z(state, object_i, sign_i, gen):
    """Resample z_i from its conditional given the current sign for object i.

    Conditional over k is proportional to pi[k] * exp(loglik) * phi[k][sign].
    Mutates state.z and returns the new value. Consumes one uniform.
    """
    if not 0 <= sign_i < state.n_signs:
        raise InvalidParameterError(f"sign {sign_i} out of range")
    logits = _z_logits(state, object_i, sign_i)
    new_z = int(_kernels.categorical_from_logits(logits, gen.random()))
    state.z[object_i] = new_z
    return new_z


def sample_sign(state, object_i, gen):
    """Draw a sign from the phi row of the object's current category."""
    return int(_kernels.categorical_from_u(state.phi[state.z[object_i]],
                                           gen.random()))


def acceptance_probability(state, object_i, proposed_w, current_w):
    """Listener-side MH ratio min(1, phi[z_i][proposed]/phi[z_i][current]).

    A zero denominator (only possible for hand-built degenerate tables)
    returns 1.
    """
    if not (0 <= proposed_w < state.n_signs and 0 <= current_w < state.n_signs):
        raise InvalidParameterError("sign index out of range")
    row = state.phi[state.z[object_i]]
    denom = row[current_w]
    if denom == 0.0:
        return 1.0
    return float(min(1.0, row[proposed_w] / denom))


def resample_parameters(state, signs, gen):
    """Conjugate resample of pi, every phi row, and every component mean.

    signs: per-object sign indices (this agent's coupling view). Counts with
    empty support fall back to prior draws automatically. Mutates state.
    """
    signs = np.asarray(signs, dtype=np.int64)
    if signs.shape != (state.n_objects,):
        raise InvalidParameterError("signs length must equal object count")
    kk, ww = state.n_categories, state.n_signs
    hyper = state.hyper
    sigma2 = _sigma2_list(state)

    cat_counts = np.bincount(state.z, minlength=kk)
    state.pi = rng.sample_dirichlet(hyper.alpha_pi + cat_counts, gen)

    for k in range(kk):
        members = np.flatnonzero(state.z == k)
        sign_counts = np.bincount(signs[members], minlength=ww)
        state.phi[k] = rng.sample_dirichlet(hyper.alpha_phi + sign_counts, gen)
        for m, s2 in enumerate(sigma2):
            d = state.dims[m]
            if members.size:
                obs_sum = np.sum([state.obs[i][m] for i in members], axis=0)
            else:
                obs_sum = np.zeros(d)
            mean, var = rng.normal_mean_posterior(
                np.full(d, hyper.mu0), hyper.tau2,
                obs_sum, members.size, s2)
            state.mu[k][m] = mean + np.sqrt(var) * gen.normal(size=d)
    return state


def log_prior_density(state):
    """Log density of (pi, phi, mu) under the priors; the parameter part of
    the joint score."""
    from scipy.special import gammaln

    kk = state.n_categories
    hyper = state.hyper

    def dirichlet_logpdf(x, alpha):
        a = np.full(len(x), alpha, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logx = np.log(x)
            terms = np.where(a == 1.0, 0.0, (a - 1.0) * logx)
        return float(gammaln(a.sum()) - gammaln(a).sum() + terms.sum())

    total = dirichlet_logpdf(state.pi, hyper.alpha_pi)
    for k in range(kk):
        total += dirichlet_logpdf(state.phi[k], hyper.alpha_phi)
        for m in range(len(state.dims)):
            diff = state.mu[k][m] - hyper.mu0
            d = diff.shape[0]
            total += -0.5 * (d * (_LOG_2PI + np.log(hyper.tau2))
                             + diff @ diff / hyper.tau2)
    return float(total)
