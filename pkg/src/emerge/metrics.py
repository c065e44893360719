"""Agreement and quality measures for emergent sign systems."""

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import InvalidParameterError


@dataclass
class MetricsReport:
    kappa: float
    kappa_sampled: float
    ari: list
    acceptance_rate: float
    joint_log_score: float

    def csv_row(self, iteration):
        return (f"{iteration},{self.kappa},{self.ari[0]},{self.ari[1]},"
                f"{self.acceptance_rate},{self.joint_log_score}")


CSV_HEADER = "iteration,kappa,ari_A,ari_B,acceptance_rate,joint_log_score"


def kappa(labels_a, labels_b):
    """Cohen's kappa: chance-corrected agreement of two label vectors.

    Not relabel-invariant; equals 1 only for exact equality. When chance
    agreement is already 1 (both vectors constant on the same label) the
    observed agreement is 1 too and kappa is defined as 1.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise InvalidParameterError("label vectors must share a length >= 1")
    n = a.size
    p_obs = float(np.mean(a == b))
    labels = np.union1d(a, b)
    p_chance = sum(float(np.sum(a == v)) * float(np.sum(b == v))
                   for v in labels) / (n * n)
    if p_chance >= 1.0:
        return 1.0
    return (p_obs - p_chance) / (1.0 - p_chance)


def ari(labels, truth):
    """Adjusted Rand index via the contingency-table formula.

    Relabel-invariant; 1 for identical partitions, ~0 at chance.
    """
    x = np.asarray(labels)
    y = np.asarray(truth)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise InvalidParameterError("label vectors must share a length >= 1")
    n = x.size
    if n < 2:
        return 1.0
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    table = np.zeros((xi.max() + 1, yi.max() + 1), dtype=np.int64)
    np.add.at(table, (xi, yi), 1)

    sum_cells = comb(table, 2).sum()
    sum_rows = comb(table.sum(axis=1), 2).sum()
    sum_cols = comb(table.sum(axis=0), 2).sum()
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0 if sum_cells == expected else 0.0
    return float((sum_cells - expected) / (max_index - expected))


def map_signs(state):
    """Each object's maximum-probability sign under the agent's current
    category: argmax of phi[z_i]."""
    return np.array([int(np.argmax(state.phi[state.z[i]]))
                     for i in range(state.n_objects)], dtype=np.int64)


def compute_report(states, signs, dataset, acceptance_rate, metrics_seed=0):
    """Recompute a MetricsReport from a state snapshot.

    kappa is taken over MAP signs (argmax of each agent's phi row at its
    current category); a sampled-sign kappa is included for comparison and
    uses a dedicated stream so the game's own draws are untouched.
    """
    from . import game as game_mod
    from . import perception, rng

    maps = [map_signs(s) for s in states]
    gen = rng.stream(metrics_seed, rng.stream_id(game_mod.S_METRICS))
    sampled = [np.array([perception.sample_sign(s, i, gen)
                         for i in range(s.n_objects)]) for s in states]
    return MetricsReport(
        kappa=kappa(maps[0], maps[1]),
        kappa_sampled=kappa(sampled[0], sampled[1]),
        ari=[ari(s.z, dataset.truth) for s in states],
        acceptance_rate=float(acceptance_rate),
        joint_log_score=game_mod.target_log_score(states, signs),
    )
