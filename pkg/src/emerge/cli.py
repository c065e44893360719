"""Batch experiment driver.

Subcommands: gen-data, run-game, oracle-compare, metrics, artic-decode,
artic-segment, melody-fit, melody-sample, report.

Exit codes are a stable contract for CI: 0 success, 1 usage error,
2 invalid config or data, 3 internal invariant breach, 4 acceptance
threshold exceeded. EMERGE_LOG_LEVEL (error|warn|info|debug) controls
logging verbosity.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import jsonschema

from . import artic, config as config_mod, datagen, game, melody, metrics, \
    oracle, perception, rng, svgplot
from .errors import (InstanceTooLargeError, InvalidParameterError,
                     InvariantBreachError, NoHypothesisError)

log = logging.getLogger("emerge")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INVARIANT = 3
EXIT_THRESHOLD = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _setup_logging():
    level = os.environ.get("EMERGE_LOG_LEVEL", "warn").strip().lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_seeds(args):
    if args.seeds is not None:
        lo, _, hi = args.seeds.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise InvalidParameterError(f"bad --seeds range {args.seeds!r}")
    return [args.seed]


def cmd_gen_data(args):
    doc = config_mod.load_config(args.config)
    if "dataset" not in doc:
        raise InvalidParameterError("config has no dataset section")
    ds = config_mod.dataset_from_config(doc, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(ds.to_json())
    log.info("dataset written to %s", args.out)
    return EXIT_OK


def _load_dataset(args, doc):
    if args.data:
        with open(args.data, "r", encoding="utf-8") as fh:
            return datagen.Dataset.from_json(fh.read())
    if "dataset" not in doc:
        raise InvalidParameterError("no --data file and no dataset section")
    return config_mod.dataset_from_config(doc)


def _run_one_game(doc, ds, seed, out_dir, mode, svg):
    agents_doc = doc["agents"]
    hyper = config_mod.hyper_from_config(doc)
    agent_cfg = game.AgentConfig(agents_doc["n_categories"],
                                 agents_doc["n_signs"], hyper)
    cfg = config_mod.game_config_from(doc, seed=seed, mode=mode)
    cfg.channel = config_mod.channel_from_config(doc, agent_cfg.n_signs)
    trace = game.run_naming_game(ds, [agent_cfg] * ds.n_agents, cfg)

    paths = doc.get("output", {})
    trace_path = os.path.join(out_dir, paths.get("trace", "trace_seed{seed}.jsonl")
                              .format(seed=seed))
    ckpt_path = os.path.join(out_dir, paths.get("checkpoint",
                             "checkpoint_seed{seed}.json").format(seed=seed))
    csv_path = os.path.join(out_dir, paths.get("metrics",
                            "metrics_seed{seed}.csv").format(seed=seed))
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write(trace.records_jsonl())
    with open(ckpt_path, "w", encoding="utf-8") as fh:
        fh.write(trace.checkpoint_json())
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(metrics.CSV_HEADER + "\n")
        for r in trace.records:
            fh.write(f"{r['iteration']},{r['kappa']},{r['ari_per_agent'][0]},"
                     f"{r['ari_per_agent'][1]},{r['acceptance_rate']},"
                     f"{r['joint_log_score']}\n")
    if svg:
        svg_path = os.path.join(out_dir, paths.get("plot",
                                "plot_seed{seed}.svg").format(seed=seed))
        its = [r["iteration"] for r in trace.records]
        doc_svg = svgplot.line_plot(
            [("kappa", its, [r["kappa"] for r in trace.records]),
             ("acceptance_rate", its,
              [r["acceptance_rate"] for r in trace.records])],
            title=f"naming game (seed {seed})", y_range=(-0.1, 1.05))
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(doc_svg)
    return trace


def cmd_run_game(args):
    doc = config_mod.load_config(args.config)
    if "agents" not in doc:
        raise InvalidParameterError("config has no agents section")
    ds = _load_dataset(args, doc)
    seeds = _parse_seeds(args)
    os.makedirs(args.out, exist_ok=True)
    if len(seeds) == 1:
        _run_one_game(doc, ds, seeds[0], args.out, args.mode, args.svg)
    else:
        with ThreadPoolExecutor(max_workers=min(8, len(seeds))) as pool:
            futures = [pool.submit(_run_one_game, doc, ds, s, args.out,
                                   args.mode, args.svg) for s in seeds]
            for f in futures:
                f.result()
    log.info("game outputs written to %s", args.out)
    return EXIT_OK


def cmd_oracle_compare(args):
    doc = config_mod.load_config(args.config)
    o = doc.get("oracle", {})
    sweeps = o.get("sweeps", 100_000)
    burn_in = o.get("burn_in", 1000)
    threshold = o.get("tv_threshold", 0.05)
    mode = o.get("mode", "mh") if args.mode is None else args.mode
    seed = o.get("seed", 0) if args.seed is None else args.seed

    ds = config_mod.dataset_from_config(doc)
    agents_doc = doc["agents"]
    hyper = config_mod.hyper_from_config(doc)
    states = [perception.init_state(ds, a, agents_doc["n_categories"],
                                    agents_doc["n_signs"], hyper, seed)
              for a in range(ds.n_agents)]
    signs = game.init_shared_signs(ds.n_objects, agents_doc["n_signs"], seed)

    post = oracle.enumerate_posterior(states, marginal="w-only")
    hist = game.run_chain_fixed_params(states, signs, sweeps, seed,
                                       mode=mode, burn_in=burn_in)
    game_law = oracle.empirical_law(hist, post.support)
    central, _ = oracle.centralized_gibbs(states, signs, sweeps + burn_in,
                                          seed + 1)
    central_law = oracle.empirical_law(central[burn_in:], post.support)

    rows = [
        ("game_vs_exact", oracle.tv_distance(game_law, post)),
        ("centralized_vs_exact", oracle.tv_distance(central_law, post)),
        ("game_vs_centralized", oracle.tv_distance(game_law, central_law)),
    ]
    out = args.out or os.path.join(".", "oracle_compare.csv")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("comparison,tv,threshold,ok\n")
        for name, tv in rows:
            fh.write(f"{name},{tv},{threshold},{tv <= threshold}\n")
    worst = max(tv for _, tv in rows)
    for name, tv in rows:
        print(f"{name}: TV={tv:.4f} (threshold {threshold})")
    if worst > threshold:
        log.warning("TV threshold exceeded: %.4f > %s", worst, threshold)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_metrics(args):
    with open(args.checkpoint, "r", encoding="utf-8") as fh:
        ckpt = json.load(fh)
    with open(args.data, "r", encoding="utf-8") as fh:
        ds = datagen.Dataset.from_json(fh.read())
    states = [perception.InternalState.from_json(json.dumps(s))
              for s in ckpt["states"]]
    signs = np.asarray(ckpt["final_signs"], dtype=np.int64)
    acceptance = float("nan")
    if args.trace:
        with open(args.trace, "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if lines:
            acceptance = lines[-1]["acceptance_rate"]
    report = metrics.compute_report(states, signs, ds, acceptance)
    row = {
        "kappa": report.kappa,
        "kappa_sampled": report.kappa_sampled,
        "ari": report.ari,
        "acceptance_rate": report.acceptance_rate,
        "joint_log_score": report.joint_log_score,
    }
    text = json.dumps(row, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_artic_decode(args):
    with open(args.lexicon, "r", encoding="utf-8") as fh:
        lexicon = artic.Lexicon.from_json(fh.read())
    if args.prior:
        prior = np.asarray([float(x) for x in args.prior.split(",")])
    else:
        prior = np.full(lexicon.n_words, 1.0 / lexicon.n_words)
    post = artic.decode_word(lexicon, args.utterance, prior, args.epsilon)
    print(json.dumps({"posterior": [float(p) for p in post]}))
    return EXIT_OK


def cmd_artic_segment(args):
    with open(args.lexicon, "r", encoding="utf-8") as fh:
        lexicon = artic.Lexicon.from_json(fh.read())
    if args.text is not None:
        stream = args.text
    else:
        with open(args.stream, "r", encoding="utf-8") as fh:
            stream = fh.read().strip()
    if args.prior:
        prior = np.asarray([float(x) for x in args.prior.split(",")])
    else:
        prior = np.full(lexicon.n_words, 1.0 / lexicon.n_words)
    gen = rng.stream(args.seed, rng.stream_id(40))
    seg = artic.segment(lexicon, stream, prior, args.epsilon,
                        mode=args.mode, gen=gen)
    print(json.dumps({"words": seg.words, "boundaries": seg.boundaries,
                      "log_prob": seg.log_prob}))
    return EXIT_OK


def cmd_melody_fit(args):
    with open(args.corpus, "r", encoding="utf-8") as fh:
        sequences = [line.strip() for line in fh if line.strip()]
    model = melody.fit(sequences, args.order, args.delta,
                       alphabet=args.alphabet)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())
    log.info("model written to %s", args.out)
    return EXIT_OK


def cmd_melody_sample(args):
    with open(args.model, "r", encoding="utf-8") as fh:
        model = melody.NgramModel.from_json(fh.read())
    gen = rng.stream(args.seed, rng.stream_id(41))
    lines = []
    if args.constraint:
        with open(args.constraint, "r", encoding="utf-8") as fh:
            constraint = melody.MelodyConstraint.from_json(fh.read(),
                                                           model.alphabet)
        for _ in range(args.count):
            init = args.init or "".join(model.alphabet[min(s)]
                                        for s in constraint.allowed)
            lines.append(melody.gibbs_sample_constrained(
                model, constraint, args.sweeps, gen, init))
    else:
        for _ in range(args.count):
            lines.append(melody.sample_forward(model, args.length, gen))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_report(args):
    with open(args.metrics, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise InvalidParameterError("metrics CSV has no rows")
    its = [int(r["iteration"]) for r in rows]
    series = [("kappa", its, [float(r["kappa"]) for r in rows]),
              ("acceptance_rate", its,
               [float(r["acceptance_rate"]) for r in rows]),
              ("ari_A", its, [float(r["ari_A"]) for r in rows]),
              ("ari_B", its, [float(r["ari_B"]) for r in rows])]
    doc = svgplot.line_plot(series, title="naming game metrics",
                            y_range=(-0.1, 1.05))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(doc)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="emerge",
                     description="symbol emergence simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-data", help="generate a dataset JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run-game", help="run the naming game")
    p.add_argument("--config", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", default=None,
                   help="inclusive range a..b, fans out worker threads")
    p.add_argument("--mode", choices=["mh", "always", "none"], default=None)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_run_game)

    p = sub.add_parser("oracle-compare",
                       help="game vs enumeration vs centralized Gibbs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=["mh", "always", "none"], default=None)
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("metrics", help="recompute metrics from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--trace", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("artic-decode", help="posterior over words")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--utterance", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--prior", default=None)
    p.set_defaults(func=cmd_artic_decode)

    p = sub.add_parser("artic-segment", help="segment a phoneme stream")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--text", default=None)
    p.add_argument("--stream", default=None)
    p.add_argument("--mode", choices=["viterbi", "ffbs"], default="viterbi")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prior", default=None)
    p.set_defaults(func=cmd_artic_segment)

    p = sub.add_parser("melody-fit", help="fit an n-gram note model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--alphabet", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_melody_fit)

    p = sub.add_parser("melody-sample", help="sample melodies from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--length", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--constraint", default=None)
    p.add_argument("--sweeps", type=int, default=50)
    p.add_argument("--init", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_melody_sample)

    p = sub.add_parser("report", help="SVG plot from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "artic-segment" and args.text is None \
            and args.stream is None:
        print("artic-segment: one of --text/--stream is required",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (InvalidParameterError, NoHypothesisError, InstanceTooLargeError,
            jsonschema.ValidationError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvariantBreachError as exc:
        log.error("invariant breach: %s", exc)
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
