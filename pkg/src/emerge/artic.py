"""Language-sign channel with double articulation.

Words are uttered as phoneme strings through a substitution-noise channel
(symbols flip with rate epsilon, no insertions or deletions, so every
variant of a word has one fixed length). Decoding sums the channel
likelihood over a word's pronunciation variants; segmentation of a long
stream runs a lattice DP over cut positions, either maximized (Viterbi) or
sampled exactly (forward filtering, backward sampling).
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import rng
from .errors import InvalidParameterError, NoHypothesisError


@dataclass
class Lexicon:
    """alphabet: phoneme symbols; words[w]: list of (pronunciation, prob)
    variants, equal length within a word, probabilities summing to 1."""

    alphabet: str
    words: list

    def __post_init__(self):
        if len(self.words) < 1:
            raise InvalidParameterError("lexicon needs at least one word")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise InvalidParameterError("alphabet symbols must be unique")
        for w, variants in enumerate(self.words):
            if not variants:
                raise InvalidParameterError(f"word {w} has no variants")
            lengths = {len(p) for p, _ in variants}
            if len(lengths) != 1:
                raise InvalidParameterError(
                    f"word {w} variants differ in length")
            if abs(sum(q for _, q in variants) - 1.0) > 1e-9:
                raise InvalidParameterError(
                    f"word {w} variant probabilities must sum to 1")
            for p, q in variants:
                if q < 0:
                    raise InvalidParameterError("negative variant probability")
                if any(c not in self.alphabet for c in p):
                    raise InvalidParameterError(
                        f"pronunciation {p!r} leaves the alphabet")

    @property
    def n_words(self):
        return len(self.words)

    def word_length(self, w):
        return len(self.words[w][0][0])

    def to_json(self):
        doc = {
            "alphabet": list(self.alphabet),
            "words": [{"id": w,
                       "variants": [{"pron": p, "prob": q}
                                    for p, q in variants]}
                      for w, variants in enumerate(self.words)],
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        entries = sorted(doc["words"], key=lambda e: e["id"])
        words = [[(v["pron"], float(v["prob"])) for v in e["variants"]]
                 for e in entries]
        return cls(alphabet="".join(doc["alphabet"]), words=words)


@dataclass
class Utterance:
    symbols: str
    source_word: int | None = None
    source_pron: str | None = None


def substitute_string(text, alphabet, epsilon, gen):
    """Pass a string through the substitution channel: each symbol kept with
    probability 1-epsilon, else replaced uniformly among the others."""
    if not 0 <= epsilon < 1:
        raise InvalidParameterError("epsilon must be in [0, 1)")
    if epsilon > 0 and len(alphabet) < 2:
        raise InvalidParameterError("substitution needs >= 2 symbols")
    out = []
    for c in text:
        if gen.random() < epsilon:
            j = int(gen.integers(0, len(alphabet) - 1))
            others = [s for s in alphabet if s != c]
            out.append(others[j])
        else:
            out.append(c)
    return "".join(out)


def substitution_loglik(received, sent, alphabet_size, epsilon):
    """log p(received | sent) under the substitution channel; -inf on
    length mismatch."""
    if len(received) != len(sent):
        return -math.inf
    mismatches = sum(1 for a, b in zip(received, sent) if a != b)
    matches = len(sent) - mismatches
    if epsilon == 0.0:
        return 0.0 if mismatches == 0 else -math.inf
    return (matches * math.log(1.0 - epsilon)
            + mismatches * math.log(epsilon / (alphabet_size - 1)))


def utter(lexicon, w, epsilon, gen):
    """Render word w: draw a pronunciation variant, then add channel noise."""
    if not 0 <= w < lexicon.n_words:
        raise InvalidParameterError(f"word {w} out of range")
    variants = lexicon.words[w]
    probs = np.array([q for _, q in variants])
    v = rng.sample_categorical(probs, gen)
    pron = variants[v][0]
    symbols = substitute_string(pron, lexicon.alphabet, epsilon, gen)
    return Utterance(symbols=symbols, source_word=w, source_pron=pron)


def word_log_likelihood(lexicon, w, symbols, epsilon):
    """log p(symbols | word w), summed over pronunciation variants."""
    n_sym = len(lexicon.alphabet)
    terms = []
    for pron, q in lexicon.words[w]:
        if q == 0.0:
            continue
        ll = substitution_loglik(symbols, pron, n_sym, epsilon)
        if ll > -math.inf:
            terms.append(math.log(q) + ll)
    return logsumexp(terms) if terms else -math.inf


def word_log_likelihoods(lexicon, symbols, epsilon):
    """log p(symbols | w) per word, summing over pronunciation variants."""
    return np.array([word_log_likelihood(lexicon, w, symbols, epsilon)
                     for w in range(lexicon.n_words)])


def decode_word(lexicon, utterance, prior, epsilon):
    """Posterior over words given an utterance: prior times the channel
    likelihood summed over variants. Words of the wrong length get mass 0."""
    symbols = utterance.symbols if isinstance(utterance, Utterance) \
        else str(utterance)
    prior = rng.check_prob_vector(prior, "prior")
    if len(prior) != lexicon.n_words:
        raise InvalidParameterError("prior length must equal word count")
    loglik = word_log_likelihoods(lexicon, symbols, epsilon)
    with np.errstate(divide="ignore"):
        scores = np.log(prior) + loglik
    if np.all(np.isneginf(scores)):
        raise NoHypothesisError("no word is length-compatible with the input")
    post = np.exp(scores - logsumexp(scores))
    return post / post.sum()


@dataclass
class Segmentation:
    words: list
    boundaries: list  # end position of each segment; last equals len(stream)
    log_prob: float


def _segment_lattice(lexicon, stream, word_prior, epsilon):
    """Per-position arrays of (word, start, log term) arcs ending there."""
    word_prior = rng.check_prob_vector(word_prior, "word_prior")
    if len(word_prior) != lexicon.n_words:
        raise InvalidParameterError("word_prior length must equal word count")
    t_len = len(stream)
    arcs = [[] for _ in range(t_len + 1)]
    lengths = {lexicon.word_length(w) for w in range(lexicon.n_words)}
    with np.errstate(divide="ignore"):
        log_prior = np.log(word_prior)
    for end in range(1, t_len + 1):
        for length in lengths:
            start = end - length
            if start < 0:
                continue
            seg = stream[start:end]
            for w in range(lexicon.n_words):
                if lexicon.word_length(w) != length:
                    continue
                if word_prior[w] == 0.0:
                    continue
                ll = word_log_likelihood(lexicon, w, seg, epsilon)
                if ll > -math.inf:
                    arcs[end].append((w, start, log_prior[w] + ll))
    return arcs


def segment(lexicon, stream, word_prior, epsilon, mode="viterbi", gen=None):
    """Parse a symbol stream into words under a unigram word model.

    mode "viterbi" returns the maximum-probability parse; "ffbs" draws an
    exact posterior sample (forward filtering, backward sampling; gen
    required). Raises NoHypothesisError when no parse covers the stream.
    """
    if mode not in ("viterbi", "ffbs"):
        raise InvalidParameterError(f"unknown mode {mode!r}")
    if mode == "ffbs" and gen is None:
        raise InvalidParameterError("ffbs needs a generator")
    stream = str(stream)
    if not stream:
        return Segmentation(words=[], boundaries=[], log_prob=0.0)
    arcs = _segment_lattice(lexicon, stream, word_prior, epsilon)
    t_len = len(stream)

    if mode == "viterbi":
        best = np.full(t_len + 1, -np.inf)
        best[0] = 0.0
        back = [None] * (t_len + 1)
        for end in range(1, t_len + 1):
            for w, start, term in arcs[end]:
                cand = best[start] + term
                if cand > best[end]:
                    best[end] = cand
                    back[end] = (w, start)
        if back[t_len] is None or not np.isfinite(best[t_len]):
            raise NoHypothesisError("stream has no valid segmentation")
        words, bounds = [], []
        pos = t_len
        while pos > 0:
            w, start = back[pos]
            words.append(w)
            bounds.append(pos)
            pos = start
        return Segmentation(words=words[::-1], boundaries=bounds[::-1],
                            log_prob=float(best[t_len]))

    alpha = np.full(t_len + 1, -np.inf)
    alpha[0] = 0.0
    for end in range(1, t_len + 1):
        terms = [alpha[start] + term for _, start, term in arcs[end]
                 if alpha[start] > -np.inf]
        if terms:
            alpha[end] = logsumexp(terms)
    if not np.isfinite(alpha[t_len]):
        raise NoHypothesisError("stream has no valid segmentation")
    words, bounds = [], []
    pos = t_len
    logp = 0.0
    while pos > 0:
        options = [(w, start, term) for w, start, term in arcs[pos]
                   if alpha[start] > -np.inf]
        weights = np.array([alpha[start] + term for _, start, term in options])
        probs = np.exp(weights - logsumexp(weights))
        probs /= probs.sum()
        j = rng.sample_categorical(probs, gen)
        w, start, term = options[j]
        words.append(w)
        bounds.append(pos)
        logp += term
        pos = start
    return Segmentation(words=words[::-1], boundaries=bounds[::-1],
                        log_prob=float(logp))


def stream_log_evidence(lexicon, stream, word_prior, epsilon):
    """log of the total probability of the stream summed over all
    segmentations (forward algorithm). Empty stream gives 0."""
    stream = str(stream)
    if not stream:
        return 0.0
    arcs = _segment_lattice(lexicon, stream, word_prior, epsilon)
    t_len = len(stream)
    alpha = np.full(t_len + 1, -np.inf)
    alpha[0] = 0.0
    for end in range(1, t_len + 1):
        terms = [alpha[start] + term for _, start, term in arcs[end]
                 if alpha[start] > -np.inf]
        if terms:
            alpha[end] = logsumexp(terms)
    if not np.isfinite(alpha[t_len]):
        raise NoHypothesisError("stream has no valid segmentation")
    return float(alpha[t_len])


def default_lexicon(n_words, seed=0, word_length=4, alphabet="abcdefgh",
                    variant_prob=0.7):
    """Deterministic lexicon with distinct pronunciations; the first word
    carries two variants so the variant sum in decoding is exercised.
    word_length: one length for all words, or a sequence cycled over words."""
    gen = rng.stream(seed, rng.stream_id(8))
    lengths = ([int(word_length)] * n_words if np.isscalar(word_length)
               else [int(word_length[i % len(word_length)])
                     for i in range(n_words)])
    prons = set()
    words = []
    while len(words) < n_words:
        length = lengths[len(words)]
        pron = "".join(alphabet[int(gen.integers(0, len(alphabet)))]
                       for _ in range(length))
        if pron in prons:
            continue
        prons.add(pron)
        words.append([(pron, 1.0)])
    if n_words >= 1:
        base = words[0][0][0]
        alt = None
        for c in alphabet:
            cand = c + base[1:]
            if cand not in prons:
                alt = cand
                break
        if alt is not None:
            prons.add(alt)
            words[0] = [(base, variant_prob), (alt, 1.0 - variant_prob)]
    return Lexicon(alphabet=alphabet, words=words)
