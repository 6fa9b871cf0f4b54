#!/usr/bin/env python3
"""Compare top beam, symbolic parse, and the combined decision on a corpus.

Prints corpus Smatch for each system, the novel-graph share of the combined
predictions, and a calibration table of the neural MAP elements.

    python3 scripts/run_experiment.py --prefix data/synth [--b 0.25 --T 0.1 --t 0.1]
"""

import argparse

from gapinfer.config import DecisionConfig
from gapinfer.evaluate import calibration_report, corpus_smatch, novelty_report
from gapinfer.inference import run_pipeline
from gapinfer.io import read_beams, read_graphs


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--prefix", required=True, help="corpus prefix written by make_synthetic_corpus.py")
    ap.add_argument("--T", type=float, default=0.1)
    ap.add_argument("--b", type=float, default=0.25)
    ap.add_argument("--t", type=float, default=0.1)
    ap.add_argument("--prune-threshold", type=float, default=0.0)
    ap.add_argument("--mixture", action="store_true")
    ap.add_argument("--n-bins", type=int, default=10)
    args = ap.parse_args()

    cfg = DecisionConfig(T=args.T, b=args.b, t=args.t, prune_threshold=args.prune_threshold, mixture=args.mixture)
    beams = read_beams(f"{args.prefix}.beams.jsonl").items
    gold = read_graphs(f"{args.prefix}.gold.graphs").items
    symbolic = read_graphs(f"{args.prefix}.symbolic.graphs").items

    top = {k: bs.graphs[0] for k, bs in beams.items()}
    neural = {k: run_pipeline(bs, None, cfg).graph for k, bs in beams.items()}
    combined = {k: run_pipeline(bs, symbolic.get(k), cfg).graph for k, bs in beams.items()}

    print(f"{'system':<12} {'smatch':>8} {'node F1':>8} {'edge F1':>8}")
    for name, pred in [("top beam", top), ("symbolic", symbolic), ("neural MAP", neural), ("combined", combined)]:
        s = corpus_smatch(pred, gold, cfg)
        print(f"{name:<12} {s.score.f1:8.4f} {s.node_f1:8.4f} {s.edge_f1:8.4f}")

    nov = novelty_report(combined, beams, symbolic, gold, cfg)
    on_novel = "n/a" if nov.smatch_on_novel is None else f"{nov.smatch_on_novel:.4f}"
    print(f"\nnovel graphs: {nov.novel_count}/{nov.total} ({nov.novel_fraction:.2%}), smatch on novel {on_novel}")

    rep = calibration_report(beams, gold, symbolic, args.n_bins, cfg)
    print(f"\ncalibration ({rep.excluded_count} near-certain elements excluded)")
    print(f"{'p range':<17} {'n':>5} {'neural':>7} {'symbolic':>9}")
    for b in rep.buckets:
        sym = "" if b.symbolic_acc is None else f"{b.symbolic_acc:.3f}"
        print(f"{b.low:.3f}-{b.high:.3f}      {b.count:5d} {b.neural_acc:7.3f} {sym:>9}")


if __name__ == "__main__":
    main()
