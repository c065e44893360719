"""Music-sign channel: fixed-order n-gram note model, composition as
posterior sampling.

A melody is a string of notes, one character each. The model is an order-n
Markov chain with additive smoothing; contexts shorter than n-1 are padded
with a start symbol. Constrained composition runs single-site Gibbs over
the sequence with hard per-position note masks (chord masks), which keeps
the target enumerable and the sampler exactly checkable.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels, rng
from .errors import InvalidParameterError

START = -1  # context padding; encoded as digit V in the flat table


@dataclass
class NgramModel:
    order: int
    alphabet: str
    delta: float
    counts: dict  # context tuple (ints, START-padded) -> (V,) count array

    def __post_init__(self):
        if self.order < 1:
            raise InvalidParameterError("order must be >= 1")
        if self.delta <= 0:
            raise InvalidParameterError("delta must be > 0")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise InvalidParameterError("alphabet symbols must be unique")

    @property
    def n_notes(self):
        return len(self.alphabet)

    def index(self, c):
        j = self.alphabet.find(c)
        if j < 0:
            raise InvalidParameterError(f"symbol {c!r} not in alphabet")
        return j

    def context_at(self, seq_idx, t):
        """The length-(order-1) context before position t, START-padded."""
        return tuple(seq_idx[t - self.order + 1 + d] if t - self.order + 1 + d >= 0
                     else START for d in range(self.order - 1))

    def cond_prob(self, context, note):
        """(count + delta) / (total + delta * V) for one context row."""
        row = self.counts.get(tuple(context))
        v = self.n_notes
        if row is None:
            return 1.0 / v
        return (row[note] + self.delta) / (row.sum() + self.delta * v)

    def cond_row(self, context):
        row = self.counts.get(tuple(context))
        v = self.n_notes
        if row is None:
            return np.full(v, 1.0 / v)
        out = (row + self.delta) / (row.sum() + self.delta * v)
        return out / out.sum()

    def flat_log_table(self):
        """(V+1)^(n-1) x V table of log conditional probabilities, contexts
        encoded base-(V+1) with START as digit V. Feeds the Gibbs kernel."""
        v = self.n_notes
        m = self.order - 1
        n_ctx = (v + 1) ** m
        table = np.empty((n_ctx, v))
        for code in range(n_ctx):
            digits = []
            c = code
            for _ in range(m):
                digits.append(c % (v + 1))
                c //= (v + 1)
            digits.reverse()
            ctx = tuple(START if d == v else d for d in digits)
            with np.errstate(divide="ignore"):
                table[code] = np.log(self.cond_row(ctx))
        return table

    def to_json(self):
        items = sorted(self.counts.items())
        doc = {
            "order": self.order,
            "alphabet": list(self.alphabet),
            "delta": self.delta,
            "counts": [{"context": list(ctx), "counts": [int(c) for c in row]}
                       for ctx, row in items],
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        counts = {tuple(e["context"]): np.asarray(e["counts"], dtype=np.int64)
                  for e in doc["counts"]}
        return cls(order=doc["order"], alphabet="".join(doc["alphabet"]),
                   delta=doc["delta"], counts=counts)


@dataclass
class MelodyConstraint:
    """Hard per-position allowed-note sets; allowed[t] is a set of note
    indices, nonempty at every position."""

    length: int
    allowed: list

    def __post_init__(self):
        if len(self.allowed) != self.length:
            raise InvalidParameterError("allowed sets must cover every position")
        for t, s in enumerate(self.allowed):
            if not s:
                raise InvalidParameterError(f"empty allowed set at position {t}")

    def mask(self, n_notes):
        m = np.zeros((self.length, n_notes), dtype=np.bool_)
        for t, s in enumerate(self.allowed):
            for c in s:
                if not 0 <= c < n_notes:
                    raise InvalidParameterError("allowed note out of range")
                m[t, c] = True
        return m

    def satisfied_by(self, seq_idx):
        return all(int(seq_idx[t]) in self.allowed[t]
                   for t in range(self.length))

    @classmethod
    def from_json(cls, text, alphabet):
        sets = json.loads(text)
        allowed = [{alphabet.index(c) if isinstance(c, str) else int(c)
                    for c in s} for s in sets]
        return cls(length=len(allowed), allowed=allowed)

    @classmethod
    def unconstrained(cls, length, n_notes):
        return cls(length=length, allowed=[set(range(n_notes))] * length)


def fit(sequences, order, delta, alphabet=None):
    """Count n-grams over a corpus (one note string per sequence).

    An empty corpus is not an error: it yields the smoothing-only model,
    uniform over notes. The alphabet is inferred from the corpus unless
    given explicitly.
    """
    if order < 1:
        raise InvalidParameterError("order must be >= 1")
    if delta <= 0:
        raise InvalidParameterError("delta must be > 0")
    if alphabet is None:
        symbols = sorted({c for s in sequences for c in s})
        if not symbols:
            raise InvalidParameterError(
                "empty corpus needs an explicit alphabet")
        alphabet = "".join(symbols)
    model = NgramModel(order=order, alphabet=alphabet, delta=delta, counts={})
    v = model.n_notes
    for s in sequences:
        idx = [model.index(c) for c in s]
        for t in range(len(idx)):
            ctx = model.context_at(idx, t)
            row = model.counts.setdefault(ctx, np.zeros(v, dtype=np.int64))
            row[idx[t]] += 1
    return model


def log_prob(model, sequence):
    """Chain-rule log probability of a note string under the model."""
    idx = [model.index(c) for c in sequence]
    total = 0.0
    for t in range(len(idx)):
        total += np.log(model.cond_prob(model.context_at(idx, t), idx[t]))
    return float(total)


def sample_forward(model, length, gen):
    """Ancestral draw of a length-T melody."""
    if length < 0:
        raise InvalidParameterError("length must be >= 0")
    idx = []
    for t in range(length):
        row = model.cond_row(model.context_at(idx, t))
        idx.append(rng.sample_categorical(row, gen))
    return "".join(model.alphabet[j] for j in idx)


def gibbs_chain(model, constraint, sweeps, gen, init):
    """Yield the note sequence after each single-site Gibbs sweep.

    init must satisfy the constraint; every yielded sequence does too.
    Position t is resampled from the conditional proportional to the product
    of all n-gram factors whose window covers t, restricted to the allowed
    set at t.
    """
    seq = np.array([model.index(c) for c in init], dtype=np.int64)
    if seq.shape[0] != constraint.length:
        raise InvalidParameterError("init length must match the constraint")
    if not constraint.satisfied_by(seq):
        raise InvalidParameterError("init violates the constraint")
    mask = constraint.mask(model.n_notes)
    table = model.flat_log_table()
    m = model.order - 1
    v = model.n_notes
    ctx_pow = np.array([(v + 1) ** (m - 1 - d) for d in range(m)],
                       dtype=np.int64)
    for _ in range(sweeps):
        u = gen.random(seq.shape[0])
        _kernels.melody_gibbs_sweep(table, ctx_pow, v, seq, mask, u)
        yield "".join(model.alphabet[j] for j in seq)


def gibbs_sample_constrained(model, constraint, sweeps, gen, init):
    """Run `sweeps` full Gibbs sweeps and return the final sequence."""
    out = init
    for out in gibbs_chain(model, constraint, sweeps, gen, init):
        pass
    return out


def perplexity(model, sequences):
    """exp(-mean log-likelihood per note) over a held-out set."""
    seqs = [s for s in sequences]
    total_len = sum(len(s) for s in seqs)
    if not seqs or total_len == 0:
        raise InvalidParameterError("held-out set must be nonempty")
    total = sum(log_prob(model, s) for s in seqs)
    return float(np.exp(-total / total_len))


def motifs_from_model(model, n_motifs, length, seed=0):
    """Distinct fixed motifs for the melodic sign channel, drawn from the
    model by rejection."""
    if model.n_notes ** length < n_motifs:
        raise InvalidParameterError("alphabet too small for distinct motifs")
    gen = rng.stream(seed, rng.stream_id(9))
    seen = set()
    out = []
    while len(out) < n_motifs:
        s = sample_forward(model, length, gen)
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out
