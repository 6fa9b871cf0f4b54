"""gapinfer command line: infer, score, calibrate, prune-stats, cluster-stats."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

from .config import CONFIG_ENV, ConfigError, RunConfig, dump_config, load_config
from .evaluate import IdMismatchError, bucketize, corpus_smatch, sentence_elements
from .gap import compute_gap
from .inference import InferenceError, cluster_beams, prune, run_pipeline
from .io import RecordError, prediction_record, read_beams, read_graphs, write_jsonl
from .metagraph import build_meta_graph

log = logging.getLogger("gapinfer")

EXIT_OK, EXIT_USAGE, EXIT_RECORD = 0, 1, 2

_DECISION_FLAGS = {
    "T": ("--T", float, "alpha temperature"),
    "b": ("--b", float, "alpha bias"),
    "t": ("--t", float, "beam aggregation temperature"),
    "logprob_floor": ("--logprob-floor", float, "log-probability floor"),
    "prune_threshold": ("--prune-threshold", float, "max-marginal pruning threshold (0 disables)"),
    "mixture_cut": ("--mixture-cut", float, "HAC cut distance"),
    "mixture_prior_sign": ("--mixture-prior-sign", int, "-1: log p0(m) = -Smatch (default), 1: +Smatch"),
    "alpha_mode": ("--alpha-mode", str, "'variable' (default) or 'candidate'"),
    "restarts": ("--restarts", int, "alignment restarts"),
    "iterations": ("--iterations", int, "hill-climbing rounds"),
    "seed": ("--seed", int, "alignment seed"),
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"TOML config file (default: ${CONFIG_ENV})")
    p.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    p.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    p.add_argument("--strict", action="store_true", default=None, help="fail on malformed records")
    g = p.add_argument_group("decision")
    for name, (flag, typ, help_) in _DECISION_FLAGS.items():
        g.add_argument(flag, dest=f"d_{name}", type=typ, help=help_)
    g.add_argument("--mixture", dest="d_mixture", action="store_true", default=None, help="enable mixture of GAP")
    g.add_argument("--no-mixture", dest="d_mixture", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapinfer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="neural-symbolic inference over beam outputs")
    p.add_argument("--beams")
    p.add_argument("--symbolic")
    p.add_argument("--out")
    p.add_argument("--no-symbolic", action="store_true", default=None)
    _add_common(p)

    p = sub.add_parser("score", help="corpus Smatch of predictions against gold")
    p.add_argument("--pred")
    p.add_argument("--gold")
    _add_common(p)

    p = sub.add_parser("calibrate", help="subgraph-level calibration buckets")
    p.add_argument("--beams")
    p.add_argument("--gold")
    p.add_argument("--symbolic")
    p.add_argument("--n-bins", type=int)
    p.add_argument("--out", help="output prefix for .json and .csv (default: JSON on stdout)")
    _add_common(p)

    p = sub.add_parser("prune-stats", help="meta-graph size before/after pruning")
    p.add_argument("--beams")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("cluster-stats", help="mixture components per sentence")
    p.add_argument("--beams")
    p.add_argument("--out")
    _add_common(p)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = load_config(path) if path else RunConfig()
    run_names = {f.name for f in fields(RunConfig)} - {"decision"}
    run = {k: v for k, v in vars(args).items() if k in run_names}
    decision = {k[2:]: v for k, v in vars(args).items() if k.startswith("d_")}
    return cfg.updated(run, decision)


def _require(cfg: RunConfig, *names, outputs=()):
    for n in names + tuple(outputs):
        if not getattr(cfg, n):
            raise FileNotFoundError(f"--{n.replace('_', '-')} is required")
    for n in names:
        if not os.path.exists(getattr(cfg, n)):
            raise FileNotFoundError(f"no such file: {getattr(cfg, n)}")


def _report_errors(errors) -> int:
    for e in errors:
        print(f"warning: skipped {e}", file=sys.stderr)
    return len(errors)


def _infer_one(job):
    key, beams, g0, config = job
    try:
        return key, prediction_record(key, run_pipeline(beams, g0, config)), None
    except (InferenceError, ValueError) as err:
        return key, None, str(err)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def cmd_infer(cfg: RunConfig) -> int:
    _require(cfg, "beams", outputs=["out"])
    beams = read_beams(cfg.beams, cfg.strict)
    _report_errors(beams.errors)
    symbolic = {}
    if cfg.symbolic and not cfg.no_symbolic:
        _require(cfg, "symbolic")
        res = read_graphs(cfg.symbolic, cfg.strict)
        _report_errors(res.errors)
        symbolic = res.items
    jobs = [(key, bs, symbolic.get(key), cfg.decision) for key, bs in beams.items.items()]
    results = _map(_infer_one, jobs, cfg.n_workers)
    failed = 0
    records = []
    for key, rec, err in results:
        if err is not None:
            failed += 1
            print(f"error: record {key}: {err}", file=sys.stderr)
            continue
        if rec["fallback"]:
            print(f"warning: record {key}: no valid beams, emitted the symbolic graph", file=sys.stderr)
        records.append(rec)
    write_jsonl(cfg.out, records)
    n = len(records)
    novel = sum(r["novel"] for r in records) / n if n else 0.0
    alphas = [r["mean_alpha"] for r in records if r["mean_alpha"] is not None]
    mean_alpha = sum(alphas) / len(alphas) if alphas else float("nan")
    print(f"sentences={n} novel_fraction={novel:.4f} mean_alpha={mean_alpha:.4f}")
    return EXIT_RECORD if failed else EXIT_OK


def cmd_score(cfg: RunConfig) -> int:
    _require(cfg, "pred", "gold")
    pred = read_graphs(cfg.pred, cfg.strict)
    gold = read_graphs(cfg.gold, cfg.strict)
    _report_errors(pred.errors + gold.errors)
    score = corpus_smatch(pred.items, gold.items, cfg.decision)
    print(json.dumps(score.to_json()))
    return EXIT_OK


def cmd_calibrate(cfg: RunConfig) -> int:
    _require(cfg, "beams", "gold")
    beams = read_beams(cfg.beams, cfg.strict)
    gold = read_graphs(cfg.gold, cfg.strict)
    errors = beams.errors + gold.errors
    symbolic = None
    if cfg.symbolic:
        _require(cfg, "symbolic")
        res = read_graphs(cfg.symbolic, cfg.strict)
        errors += res.errors
        symbolic = res.items
    _report_errors(errors)
    if set(beams.items) != set(gold.items):
        raise IdMismatchError("beam and gold ids differ")
    records = []
    for key, bs in beams.items.items():
        g0 = symbolic.get(key) if symbolic else None
        records += sentence_elements(bs, gold.items[key], g0, cfg.decision)
    report = bucketize(records, cfg.n_bins)
    if cfg.out:
        with open(cfg.out + ".json", "w") as fh:
            json.dump(report.to_json(), fh, indent=1)
        with open(cfg.out + ".csv", "w") as fh:
            fh.write(report.to_csv())
    else:
        print(json.dumps(report.to_json()))
    return EXIT_OK


def _stats_out(cfg: RunConfig, rows: list):
    if cfg.out:
        write_jsonl(cfg.out, rows)
    else:
        write_jsonl(sys.stdout, rows)


def cmd_prune_stats(cfg: RunConfig) -> int:
    _require(cfg, "beams")
    beams = read_beams(cfg.beams, cfg.strict)
    _report_errors(beams.errors)
    d = cfg.decision
    rows = []
    for key, bs in beams.items.items():
        if len(bs) == 0:
            continue
        meta = build_meta_graph(bs.graphs, d.restarts, d.iterations, d.seed)
        gap = compute_gap(meta, bs, d)
        pruned = prune(meta, gap, d.prune_threshold)
        rows.append({"id": key, "variables": len(meta), "kept": len(pruned),
                     "pruned": sorted(set(meta.by_id) - set(pruned.by_id))})
    _stats_out(cfg, rows)
    total = sum(r["variables"] for r in rows)
    kept = sum(r["kept"] for r in rows)
    print(f"sentences={len(rows)} variables={total} kept={kept}", file=sys.stderr)
    return EXIT_OK


def cmd_cluster_stats(cfg: RunConfig) -> int:
    _require(cfg, "beams")
    beams = read_beams(cfg.beams, cfg.strict)
    _report_errors(beams.errors)
    rows = []
    for key, bs in beams.items.items():
        if len(bs) == 0:
            continue
        mix = cluster_beams(bs, cfg.decision)
        rows.append({"id": key, "components": len(mix), "labels": mix.labels,
                     "weights": [c.weight for c in mix.components], "H": [c.H for c in mix.components]})
    _stats_out(cfg, rows)
    return EXIT_OK


COMMANDS = {
    "infer": cmd_infer,
    "score": cmd_score,
    "calibrate": cmd_calibrate,
    "prune-stats": cmd_prune_stats,
    "cluster-stats": cmd_cluster_stats,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError, TypeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    try:
        return COMMANDS[args.command](cfg)
    except RecordError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RECORD
    except (FileNotFoundError, IdMismatchError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
