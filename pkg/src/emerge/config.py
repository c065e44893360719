"""Experiment configuration: JSON schema and loading helpers."""

import json

import jsonschema

from . import artic, game, melody, perception
from .errors import InvalidParameterError

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "emerge experiment configuration",
    "type": "object",
    "properties": {
        "dataset": {
            "type": "object",
            "properties": {
                "k_true": {"type": "integer", "minimum": 1},
                "n_objects": {"type": "integer", "minimum": 1},
                "n_agents": {"type": "integer", "minimum": 1},
                "dims": {"type": "array",
                         "items": {"type": "integer", "minimum": 1},
                         "minItems": 1},
                "cluster_sep": {"type": "number", "minimum": 0},
                "noise_sd": {"type": "number", "minimum": 0},
                "scenario": {"enum": ["perceptual", "interoceptive"]},
                "seed": {"type": "integer", "minimum": 0},
            },
            "required": ["k_true", "n_objects", "n_agents", "dims",
                         "cluster_sep", "noise_sd"],
            "additionalProperties": False,
        },
        "agents": {
            "type": "object",
            "properties": {
                "n_categories": {"type": "integer", "minimum": 1},
                "n_signs": {"type": "integer", "minimum": 1},
                "hyper": {
                    "type": "object",
                    "properties": {
                        "alpha_pi": {"type": "number", "exclusiveMinimum": 0},
                        "alpha_phi": {"type": "number", "exclusiveMinimum": 0},
                        "mu0": {"type": "number"},
                        "tau2": {"type": "number", "exclusiveMinimum": 0},
                        "sigma2": {"type": "array",
                                   "items": {"type": "number",
                                             "exclusiveMinimum": 0}},
                    },
                    "additionalProperties": False,
                },
            },
            "required": ["n_categories", "n_signs"],
            "additionalProperties": False,
        },
        "game": {
            "type": "object",
            "properties": {
                "iterations": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "acceptance_mode": {"enum": ["mh", "always", "none"]},
                "resample_params_every": {
                    "oneOf": [{"type": "integer", "minimum": 1},
                              {"type": "null"}]},
                "agents_order": {"enum": ["fixed", "shuffled"]},
                "metrics_every": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "channel": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["plain", "articulated", "melodic"]},
                "epsilon": {"type": "number", "minimum": 0,
                            "exclusiveMaximum": 1},
                "lexicon_file": {"type": "string"},
                "motif_length": {"type": "integer", "minimum": 1},
                "note_alphabet": {"type": "string", "minLength": 2},
                "motif_seed": {"type": "integer", "minimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "oracle": {
            "type": "object",
            "properties": {
                "sweeps": {"type": "integer", "minimum": 1},
                "burn_in": {"type": "integer", "minimum": 0},
                "tv_threshold": {"type": "number", "exclusiveMinimum": 0},
                "mode": {"enum": ["mh", "always", "none"]},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "trace": {"type": "string"},
                "checkpoint": {"type": "string"},
                "metrics": {"type": "string"},
                "plot": {"type": "string"},
                "report": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def validate_config(doc):
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvalidParameterError(f"config schema violation: {exc.message}")
    return doc


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"config is not valid JSON: {exc}")
    return validate_config(doc)


def hyper_from_config(doc):
    h = doc.get("agents", {}).get("hyper", {})
    kwargs = {}
    for key in ("alpha_pi", "alpha_phi", "mu0", "tau2"):
        if key in h:
            kwargs[key] = h[key]
    if "sigma2" in h:
        kwargs["sigma2"] = tuple(h["sigma2"])
    return perception.Hyper(**kwargs)


def dataset_from_config(doc, seed=None):
    from . import datagen

    d = doc["dataset"]
    return datagen.generate_dataset(
        k_true=d["k_true"], n_objects=d["n_objects"], n_agents=d["n_agents"],
        dims=d["dims"], cluster_sep=d["cluster_sep"], noise_sd=d["noise_sd"],
        seed=d.get("seed", 0) if seed is None else seed,
        scenario=d.get("scenario", "perceptual"))


def game_config_from(doc, seed=None, mode=None):
    g = doc.get("game", {})
    return game.GameConfig(
        iterations=g.get("iterations", 100),
        seed=g.get("seed", 0) if seed is None else seed,
        acceptance_mode=g.get("acceptance_mode", "mh") if mode is None else mode,
        resample_params_every=g.get("resample_params_every", 1),
        agents_order=g.get("agents_order", "fixed"),
        metrics_every=g.get("metrics_every", 1),
        channel=None,
    )


def channel_from_config(doc, n_signs):
    c = doc.get("channel")
    if c is None or c.get("kind", "plain") == "plain":
        return None
    epsilon = c.get("epsilon", 0.0)
    if c["kind"] == "articulated":
        if "lexicon_file" in c:
            with open(c["lexicon_file"], "r", encoding="utf-8") as fh:
                lexicon = artic.Lexicon.from_json(fh.read())
        else:
            lexicon = artic.default_lexicon(n_signs)
        if lexicon.n_words != n_signs:
            raise InvalidParameterError(
                "lexicon word count must equal the sign inventory")
        return game.ArticulatedChannel(lexicon, epsilon)
    alphabet = c.get("note_alphabet", "ABCDEFG")
    length = c.get("motif_length", 5)
    model = melody.fit([], 2, 0.5, alphabet=alphabet)
    motifs = melody.motifs_from_model(model, n_signs, length,
                                      seed=c.get("motif_seed", 0))
    return game.MelodicChannel(motifs, alphabet, epsilon)
