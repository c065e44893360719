"""Synthetic multimodal datasets with ground-truth categories.

Every object belongs to one of K_true categories (assigned round-robin, so
class balance is exact). Each agent sees a private view of the same object:
its own orthogonal transform + offset of the category mean, plus isotropic
Gaussian noise. The "interoceptive" scenario relabels the modalities and
changes nothing numeric.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidParameterError

_S_MEANS = 1
_S_NOISE = 2
_S_TRANSFORM = 3


@dataclass
class Dataset:
    """Observations o[agent][object][modality] plus ground truth.

    observations: list (len A) of lists (len N) of lists (len M) of float
    arrays; truth: int array of length N; modality_labels: one tag per
    modality.
    """

    n_objects: int
    n_agents: int
    dims: list
    k_true: int
    truth: np.ndarray
    observations: list
    modality_labels: list
    meta: dict = field(default_factory=dict)

    @property
    def n_modalities(self):
        return len(self.dims)

    def obs_array(self, agent, modality):
        """All objects' observations for one agent and modality, (N, D)."""
        return np.stack([self.observations[agent][i][modality]
                         for i in range(self.n_objects)])

    def to_json(self):
        doc = {
            "meta": dict(self.meta,
                         n_objects=self.n_objects,
                         n_agents=self.n_agents,
                         dims=list(self.dims),
                         k_true=self.k_true,
                         modality_labels=list(self.modality_labels)),
            "truth": [int(t) for t in self.truth],
            "observations": [
                [[list(map(float, o)) for o in obj] for obj in agent_obs]
                for agent_obs in self.observations
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        meta = doc["meta"]
        observations = [
            [[np.asarray(o, dtype=float) for o in obj] for obj in agent_obs]
            for agent_obs in doc["observations"]
        ]
        return cls(
            n_objects=meta["n_objects"],
            n_agents=meta["n_agents"],
            dims=list(meta["dims"]),
            k_true=meta["k_true"],
            truth=np.asarray(doc["truth"], dtype=np.int64),
            observations=observations,
            modality_labels=list(meta["modality_labels"]),
            meta={k: v for k, v in meta.items()
                  if k not in ("n_objects", "n_agents", "dims", "k_true",
                               "modality_labels")},
        )


def _rotation(dim, gen):
    """Deterministic orthogonal matrix: 90-degree rotation for D=2,
    otherwise Q from the QR of a seeded Gaussian matrix (sign-fixed)."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        return np.array([[0.0, -1.0], [1.0, 0.0]])
    q, r = np.linalg.qr(gen.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def _default_transforms(n_agents, dims, seed):
    """Identity for agent 0; a fixed rotation (zero offset) for the rest."""
    gen = rng.stream(seed, rng.stream_id(_S_TRANSFORM))
    transforms = []
    for a in range(n_agents):
        per_mod = []
        for d in dims:
            if a == 0:
                mat = np.eye(d)
            else:
                mat = _rotation(d, gen)
            per_mod.append((mat, np.zeros(d)))
        transforms.append(per_mod)
    return transforms


def _simplex_vertices(k, d):
    """K points in D dims, all pairwise distances sqrt(2), centroid 0.
    Needs K <= D + 1."""
    basis = np.eye(k)
    centered = basis - basis.mean(axis=0)
    # centered rows span a (K-1)-dim subspace; orthonormalize and embed
    q, _ = np.linalg.qr(centered.T)
    coords = centered @ q[:, :k - 1]
    out = np.zeros((k, d))
    out[:, :k - 1] = coords
    return out


def _spread_means(k_true, dims, cluster_sep, noise_sd, seed):
    """Per-modality cluster means with pairwise distance >= cluster_sep*noise_sd.

    When a regular simplex fits (K <= D+1) the means sit at its vertices, so
    every pair is exactly at the separation floor and the layout stays
    compact around the origin. Larger K falls back to rescaled random
    placement.
    """
    gen = rng.stream(seed, rng.stream_id(_S_MEANS))
    means = []
    # separation floor with margin: the floor is a lower bound, not a target
    target = 1.25 * cluster_sep * noise_sd
    for d in dims:
        if k_true == 1:
            means.append(np.zeros((1, d)))
            continue
        if k_true <= d + 1:
            scale = target / np.sqrt(2.0) if target > 0 else 1.0
            means.append(_simplex_vertices(k_true, d) * scale)
            continue
        m = gen.normal(size=(k_true, d))
        dmin = min(np.linalg.norm(m[i] - m[j])
                   for i in range(k_true) for j in range(i + 1, k_true))
        if target > 0:
            # degenerate draws (dmin ~ 0) are measure-zero; rescale
            m = m * (target / dmin)
        means.append(m)
    return means


def generate_dataset(k_true, n_objects, n_agents, dims, cluster_sep, noise_sd,
                     seed, agent_transforms=None, scenario="perceptual"):
    """Build a Dataset; same arguments and seed give a byte-identical one.

    agent_transforms: optional [agent][modality] list of (orthogonal matrix,
    offset vector) pairs; defaults to identity for agent 0 and a fixed
    rotation for the others. scenario ("perceptual" or "interoceptive")
    only sets the modality labels.
    """
    dims = [int(d) for d in dims]
    if k_true < 1 or n_objects < 1 or n_agents < 1 or len(dims) < 1:
        raise InvalidParameterError("k_true, N, A, M must all be >= 1")
    if k_true > n_objects:
        raise InvalidParameterError("k_true must be <= number of objects")
    if noise_sd < 0 or cluster_sep < 0:
        raise InvalidParameterError("noise_sd and cluster_sep must be >= 0")
    if scenario not in ("perceptual", "interoceptive"):
        raise InvalidParameterError(f"unknown scenario {scenario!r}")

    if agent_transforms is None:
        agent_transforms = _default_transforms(n_agents, dims, seed)
    for a in range(n_agents):
        for m, d in enumerate(dims):
            mat, off = agent_transforms[a][m]
            if np.shape(mat) != (d, d) or np.shape(off) != (d,):
                raise InvalidParameterError(
                    f"transform shape mismatch for agent {a} modality {m}")

    truth = np.arange(n_objects, dtype=np.int64) % k_true
    means = _spread_means(k_true, dims, cluster_sep, noise_sd, seed)

    noise_gen = rng.stream(seed, rng.stream_id(_S_NOISE))
    observations = []
    for a in range(n_agents):
        agent_obs = []
        for i in range(n_objects):
            per_mod = []
            for m, d in enumerate(dims):
                mat, off = agent_transforms[a][m]
                base = mat @ means[m][truth[i]] + off
                noise = noise_gen.normal(size=d) * noise_sd
                per_mod.append(base + noise)
            agent_obs.append(per_mod)
        observations.append(agent_obs)

    if scenario == "interoceptive":
        labels = [f"interoceptive_{m}" for m in range(len(dims))]
    else:
        labels = [f"visual_{m}" for m in range(len(dims))]

    return Dataset(
        n_objects=n_objects,
        n_agents=n_agents,
        dims=dims,
        k_true=k_true,
        truth=truth,
        observations=observations,
        modality_labels=labels,
        meta={"seed": int(seed), "cluster_sep": float(cluster_sep),
              "noise_sd": float(noise_sd), "scenario": scenario},
    )
