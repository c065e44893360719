"""The Metropolis-Hastings naming game.

Turn-taking sign negotiation between agents: the speaker proposes a sign
drawn from its own sign table, the listener accepts with the ratio of its
own sign probabilities, then re-infers its category for the object. Each
per-object move is an exact MH kernel for the coupled joint in which both
agents' tables multiply into the shared sign (head-to-head coupling), so
the protocol is a correct Metropolis-within-Gibbs sampler; the oracle
module checks that claim by enumeration.

Sign channels: "plain" exchanges the sign index itself; "articulated"
renders it as a noisy phoneme string through a lexicon; "melodic" as a
noisy note motif. Channels draw from their own RNG stream, so with zero
channel noise all variants produce bit-identical traces.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, artic, perception, rng
from .errors import InvalidParameterError, InvariantBreachError

S_MAIN = 1
S_SCHED = 2
S_PARAMS = 3
S_CHANNEL = 4
S_METRICS = 5
S_INIT_SIGNS = 6

MODE_CODES = {"mh": 0, "always": 1, "none": 2}


@dataclass
class AgentConfig:
    n_categories: int
    n_signs: int
    hyper: perception.Hyper


@dataclass
class GameConfig:
    iterations: int
    seed: int
    acceptance_mode: str = "mh"
    resample_params_every: int | None = 1
    agents_order: str = "fixed"
    channel: object = None  # None = plain sign exchange
    metrics_every: int = 1
    collect_signs_every: int = 0

    def validate(self):
        if self.iterations < 0:
            raise InvalidParameterError("iterations must be >= 0")
        if self.acceptance_mode not in MODE_CODES:
            raise InvalidParameterError(
                f"unknown acceptance mode {self.acceptance_mode!r}")
        if self.resample_params_every is not None \
                and self.resample_params_every < 1:
            raise InvalidParameterError(
                "resample_params_every must be a positive integer or None")
        if self.agents_order not in ("fixed", "shuffled"):
            raise InvalidParameterError(
                f"unknown agents_order {self.agents_order!r}")


@dataclass
class TurnResult:
    accepted: bool
    new_w: int
    proposed: int
    resolved: int


@dataclass
class GameTrace:
    records: list
    final_states: list
    final_signs: np.ndarray
    private_signs: list | None = None
    sign_history: list = field(default_factory=list)

    def records_jsonl(self):
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":"))
                       + "\n" for r in self.records)

    def checkpoint_json(self):
        doc = {
            "final_signs": [int(w) for w in self.final_signs],
            "states": [json.loads(s.to_json()) for s in self.final_states],
        }
        if self.private_signs is not None:
            doc["private_signs"] = [[int(w) for w in p]
                                    for p in self.private_signs]
        return json.dumps(doc, sort_keys=True, indent=2)


class PlainChannel:
    """Identity channel: the sign index is transmitted as-is."""

    name = "plain"

    def transmit(self, w, gen):
        return int(w)

    def resolve(self, message, listener, object_i):
        return int(message)


class ArticulatedChannel:
    """Signs rendered as noisy phoneme strings through a lexicon.

    The listener decodes by mixing the channel likelihood of each word with
    its own sign belief phi[z_i] and takes the best-scoring word as the
    proposal it heard. With epsilon=0 and distinct pronunciations the decode
    is exact, which reduces the game to plain sign exchange.
    """

    name = "articulated"

    def __init__(self, lexicon, epsilon):
        self.lexicon = lexicon
        self.epsilon = float(epsilon)

    def transmit(self, w, gen):
        return artic.utter(self.lexicon, w, self.epsilon, gen).symbols

    def resolve(self, message, listener, object_i):
        loglik = artic.word_log_likelihoods(self.lexicon, message, self.epsilon)
        return _best_word(loglik, listener.phi[listener.z[object_i]])


class MelodicChannel:
    """Signs mapped to fixed note motifs, transmitted with substitution noise.

    Decoding mirrors the articulated channel: channel likelihood of each
    motif mixed with the listener's sign belief.
    """

    name = "melodic"

    def __init__(self, motifs, alphabet, epsilon):
        self.motifs = [str(m) for m in motifs]
        self.alphabet = str(alphabet)
        self.epsilon = float(epsilon)
        if len(set(self.motifs)) != len(self.motifs):
            raise InvalidParameterError("motifs must be distinct")
        for m in self.motifs:
            if any(c not in self.alphabet for c in m):
                raise InvalidParameterError(f"motif {m!r} leaves the alphabet")

    def transmit(self, w, gen):
        return artic.substitute_string(self.motifs[w], self.alphabet,
                                       self.epsilon, gen)

    def resolve(self, message, listener, object_i):
        loglik = np.array([
            artic.substitution_loglik(message, m, len(self.alphabet),
                                      self.epsilon)
            for m in self.motifs
        ])
        return _best_word(loglik, listener.phi[listener.z[object_i]])


def _best_word(loglik, phi_row):
    with np.errstate(divide="ignore"):
        scores = loglik + np.log(phi_row)
    if np.all(np.isinf(scores) & (scores < 0)):
        # degenerate phi zeros: fall back to the channel likelihood alone
        scores = loglik
    if np.all(np.isinf(scores) & (scores < 0)):
        from .errors import NoHypothesisError
        raise NoHypothesisError("no sign is compatible with the message")
    return int(np.argmax(scores))


def target_log_score(states, signs, dataset=None):
    """Unnormalized log joint of the coupled factor graph.

    Per agent: parameter prior density plus, per object, log pi[z_i] +
    observation log-likelihood + log phi[z_i][w_i]. The shared signs enter
    through every agent's phi factor (head-to-head coupling).
    """
    signs = np.asarray(signs, dtype=np.int64)
    total = 0.0
    for state in states:
        if signs.shape != (state.n_objects,):
            raise InvalidParameterError("signs length must equal object count")
        total += perception.log_prior_density(state)
        with np.errstate(divide="ignore"):
            logpi = np.log(state.pi)
            logphi = np.log(state.phi)
        for i in range(state.n_objects):
            total += logpi[state.z[i]]
            total += perception.loglik_obs(state, i)
            total += logphi[state.z[i], signs[i]]
    return float(total)


def turn(speaker, listener, signs, object_i, mode, uniforms,
         channel=None, channel_gen=None, listener_signs=None):
    """One naming-game turn for a single object. Mutates signs and
    listener.z.

    uniforms: a Generator (3 draws are consumed) or a (3,) array laid out as
    (proposal, accept, z-update). mode "none" leaves signs untouched and the
    listener conditions on listener_signs (its own private record) instead.
    Returns a TurnResult carrying the raw proposal for private recording.
    """
    if mode not in MODE_CODES:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    u = uniforms.random(3) if hasattr(uniforms, "random") else uniforms
    channel = channel or PlainChannel()

    proposed = int(_kernels.categorical_from_u(
        speaker.phi[speaker.z[object_i]], u[0]))
    message = channel.transmit(proposed, channel_gen)
    resolved = channel.resolve(message, listener, object_i)

    accepted = False
    if mode == "always":
        accepted = True
    elif mode == "mh":
        ratio = perception.acceptance_probability(
            listener, object_i, resolved, int(signs[object_i]))
        accepted = u[1] < ratio
    if accepted and mode != "none":
        signs[object_i] = resolved

    couple = signs if (mode != "none" or listener_signs is None) \
        else listener_signs
    logits = perception._z_logits(listener, object_i, int(couple[object_i]))
    listener.z[object_i] = int(_kernels.categorical_from_logits(logits, u[2]))
    return TurnResult(accepted=bool(accepted), new_w=int(signs[object_i]),
                      proposed=proposed, resolved=int(resolved))


def _half_sweep(speaker, listener, signs, mode_code, u_block,
                channel, channel_gen, listener_signs, loglik_li):
    """All objects' turns for one ordered (speaker, listener) pair."""
    n = signs.shape[0]
    proposals = np.empty(n, dtype=np.int64)
    for i in range(n):
        proposals[i] = _kernels.categorical_from_u(
            speaker.phi[speaker.z[i]], u_block[i, 0])
    if not isinstance(channel, PlainChannel):
        resolved = np.empty(n, dtype=np.int64)
        for i in range(n):
            message = channel.transmit(int(proposals[i]), channel_gen)
            resolved[i] = channel.resolve(message, listener, i)
    else:
        resolved = proposals

    with np.errstate(divide="ignore"):
        logpi_li = np.log(listener.pi)
    w_arg = signs if mode_code != 2 else listener_signs
    accepted = _kernels.game_half_sweep(
        listener.phi, logpi_li, loglik_li, listener.z, w_arg, resolved,
        np.ascontiguousarray(u_block[:, 1]), np.ascontiguousarray(u_block[:, 2]),
        mode_code, mode_code != 2)
    return int(accepted), proposals


def init_shared_signs(n_objects, n_signs, seed):
    """Uniform random initial signs from a dedicated stream."""
    gen = rng.stream(seed, rng.stream_id(S_INIT_SIGNS))
    return gen.integers(0, n_signs, size=n_objects).astype(np.int64)


def run_naming_game(dataset, agent_configs, config, states=None,
                    initial_signs=None):
    """Run the full protocol and return a GameTrace.

    agent_configs: one AgentConfig per agent (>= 2). states, initial_signs:
    optional pre-built starting point (the oracle comparisons pass states
    with hand-fixed parameters and resample_params_every=None).
    """
    config.validate()
    n_agents = len(agent_configs) if states is None else len(states)
    if n_agents < 2:
        raise InvalidParameterError("the naming game needs at least 2 agents")

    if states is None:
        states = [perception.init_state(dataset, a, agent_configs[a].n_categories,
                                        agent_configs[a].n_signs,
                                        agent_configs[a].hyper, config.seed)
                  for a in range(n_agents)]
    n_signs = states[0].n_signs
    n_objects = states[0].n_objects
    if any(s.n_signs != n_signs for s in states):
        raise InvalidParameterError("all agents must share the sign inventory")

    if initial_signs is None:
        signs = init_shared_signs(n_objects, n_signs, config.seed)
    else:
        signs = np.asarray(initial_signs, dtype=np.int64).copy()
        if signs.shape != (n_objects,):
            raise InvalidParameterError("initial_signs length mismatch")
    if np.any((signs < 0) | (signs >= n_signs)):
        raise InvalidParameterError("initial signs out of range")

    mode_code = MODE_CODES[config.acceptance_mode]
    channel = config.channel or PlainChannel()

    main_gen = rng.stream(config.seed, rng.stream_id(S_MAIN))
    sched_gen = rng.stream(config.seed, rng.stream_id(S_SCHED))
    channel_gen = rng.stream(config.seed, rng.stream_id(S_CHANNEL))
    metrics_gen = rng.stream(config.seed, rng.stream_id(S_METRICS))
    param_gens = [rng.stream(config.seed, rng.stream_id(S_PARAMS, a))
                  for a in range(n_agents)]

    private = [signs.copy() for _ in range(n_agents)] \
        if mode_code == 2 else None
    logliks = [perception.loglik_table(s) for s in states]

    records = []
    sign_history = []
    for it in range(config.iterations):
        if config.agents_order == "shuffled":
            order = list(sched_gen.permutation(n_agents))
        else:
            order = list(range(n_agents))

        accepted = 0
        decisions = 0
        for idx, sp in enumerate(order):
            li = order[(idx + 1) % n_agents]
            u_block = main_gen.random((n_objects, 3))
            acc, proposals = _half_sweep(
                states[sp], states[li], signs, mode_code, u_block,
                channel, channel_gen,
                private[li] if private is not None else None,
                logliks[li])
            if mode_code == 2:
                private[sp][:] = proposals
            else:
                accepted += acc
                decisions += n_objects

        if config.resample_params_every is not None \
                and (it + 1) % config.resample_params_every == 0:
            for a, state in enumerate(states):
                own = signs if private is None else private[a]
                perception.resample_parameters(state, own, param_gens[a])
                for i in range(n_objects):
                    perception.gibbs_update_z(state, i, int(own[i]),
                                              param_gens[a])
                logliks[a] = perception.loglik_table(state)

        acceptance_rate = (accepted / decisions) if decisions else 0.0
        if not 0.0 <= acceptance_rate <= 1.0:
            raise InvariantBreachError("acceptance rate out of [0,1]")

        if config.metrics_every and (it + 1) % config.metrics_every == 0:
            records.append(_iteration_record(
                it, states, signs, dataset, acceptance_rate, metrics_gen))
        if config.collect_signs_every \
                and (it + 1) % config.collect_signs_every == 0:
            sign_history.append(tuple(int(w) for w in signs))

    return GameTrace(records=records, final_states=states, final_signs=signs,
                     private_signs=private, sign_history=sign_history)


def _iteration_record(it, states, signs, dataset, acceptance_rate,
                      metrics_gen):
    from . import metrics as metrics_mod

    map_signs = [metrics_mod.map_signs(s) for s in states]
    sampled = [np.array([perception.sample_sign(s, i, metrics_gen)
                         for i in range(s.n_objects)]) for s in states]
    record = {
        "iteration": it,
        "acceptance_rate": float(acceptance_rate),
        "kappa": metrics_mod.kappa(map_signs[0], map_signs[1]),
        "kappa_sampled": metrics_mod.kappa(sampled[0], sampled[1]),
        "ari_per_agent": [metrics_mod.ari(s.z, dataset.truth) for s in states],
        "joint_log_score": target_log_score(states, signs),
        "signs": [int(w) for w in signs],
    }
    return record


def run_chain_fixed_params(states, signs, sweeps, seed, mode="mh",
                           burn_in=0):
    """Fast fixed-parameter chain for oracle comparisons (2 agents, plain
    channel, fixed role order). Returns the post-burn-in w-configuration
    history as an (sweeps, N) int array.

    Draw-for-draw equivalent to run_naming_game with metrics and resampling
    off; the test suite asserts that equivalence.
    """
    if len(states) != 2:
        raise InvalidParameterError("fixed-parameter fast path is two-agent")
    states = [s.copy() for s in states]
    signs = np.asarray(signs, dtype=np.int64).copy()
    n_objects = signs.shape[0]
    main_gen = rng.stream(seed, rng.stream_id(S_MAIN))
    mode_code = MODE_CODES[mode]

    logliks = np.stack([perception.loglik_table(s) for s in states])
    with np.errstate(divide="ignore"):
        logpis = np.stack([np.log(s.pi) for s in states])
    phis = np.stack([s.phi for s in states])
    z = np.stack([s.z for s in states]).astype(np.int64)

    total = burn_in + sweeps
    u = main_gen.random((total, 2, n_objects, 3))
    out = np.empty((sweeps, n_objects), dtype=np.int64)
    _kernels.fixed_param_game_chain(phis, logpis, logliks, z, signs, u, out,
                                    mode_code, burn_in)
    return out
