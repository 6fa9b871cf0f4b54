#!/usr/bin/env python3
"""Write a synthetic beam/gold/symbolic corpus for exercising the pipeline end to end.

Each sentence gets a random gold DAG. Beams are noisy copies: a symbol is
corrupted with probability ``--beam-noise``; corrupted symbols draw low
confidence, intact ones high confidence, so the neural side is calibrated
by construction. The symbolic graph corrupts node labels independently at
``--symbolic-noise``.

    python3 scripts/make_synthetic_corpus.py --out data/synth --sentences 200
"""

import argparse
import json
import math
import random
from pathlib import Path

from gapinfer.graph import Edge, Node, SemanticGraph, parse_linearized, serialize

LABELS = [f"_{w}_{p}" for w in ("dog", "cat", "see", "give", "big", "red", "run", "tree") for p in ("n", "v")]
ROLES = ["ARG1", "ARG2", "ARG3", "BV", "L-INDEX", "R-INDEX"]


def random_gold(rng, n_nodes, reentrancy):
    nodes = [Node(i, rng.choice(LABELS)) for i in range(n_nodes)]
    edges, seen = [], set()
    for v in range(1, n_nodes):
        targets = [rng.randrange(v)]
        if v > 1 and rng.random() < reentrancy:
            targets.append(rng.randrange(v))
        for u in targets:
            role = rng.choice(ROLES)
            if (u, role, v) not in seen:
                seen.add((u, role, v))
                edges.append(Edge(u, v, role))
    return SemanticGraph(tuple(nodes), tuple(edges), 0)


def corrupt(rng, g, rate):
    """Relabel nodes/edges at ``rate``; returns the graph and per-element corruption flags."""
    nodes, node_bad = [], []
    for n in g.nodes:
        bad = rng.random() < rate
        nodes.append(Node(n.id, rng.choice([x for x in LABELS if x != n.label]) if bad else n.label))
        node_bad.append(bad)
    edges, edge_bad, seen = [], [], set()
    for e in g.edges:
        bad = rng.random() < rate
        role = rng.choice([r for r in ROLES if r != e.label]) if bad else e.label
        if (e.source, role, e.target) in seen:
            role, bad = e.label, False
        seen.add((e.source, role, e.target))
        edges.append(Edge(e.source, e.target, role))
        edge_bad.append(bad)
    return SemanticGraph(tuple(nodes), tuple(edges), g.root), node_bad, edge_bad


def beam_record(rng, gold, noise):
    g, node_bad, edge_bad = corrupt(rng, gold, noise)
    text = serialize(g)
    _, lin = parse_linearized(text)
    lps = []
    for s in lin.symbols:
        if s.kind.value == "ref":
            lps.append(0.0)
            continue
        bad = node_bad[s.element] if s.kind.value == "node" else edge_bad[s.element]
        p = rng.uniform(0.05, 0.6) if bad else rng.uniform(0.7, 1.0)
        lps.append(math.log(p))
    structure = sum(math.log(rng.uniform(0.98, 1.0)) for _ in range(text.count("(")))
    return {"graph": text, "symbol_logprobs": lps, "sequence_logprob": sum(lps) + structure}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", required=True, help="output prefix")
    ap.add_argument("--sentences", type=int, default=100)
    ap.add_argument("--beams", type=int, default=5)
    ap.add_argument("--max-nodes", type=int, default=8)
    ap.add_argument("--reentrancy", type=float, default=0.2)
    ap.add_argument("--beam-noise", type=float, default=0.15)
    ap.add_argument("--symbolic-noise", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{prefix}.beams.jsonl", "w") as fb, open(f"{prefix}.gold.graphs", "w") as fg, \
            open(f"{prefix}.symbolic.graphs", "w") as fs:
        for i in range(args.sentences):
            key = f"s{i:05d}"
            gold = random_gold(rng, rng.randint(2, args.max_nodes), args.reentrancy)
            beams = [beam_record(rng, gold, args.beam_noise) for _ in range(args.beams)]
            fb.write(json.dumps({"id": key, "input": f"sentence {i}", "beams": beams}) + "\n")
            fg.write(f"# ::id {key}\n{serialize(gold)}\n")
            sym, _, _ = corrupt(rng, gold, args.symbolic_noise)
            fs.write(f"# ::id {key}\n{serialize(sym)}\n")
    print(f"wrote {args.sentences} sentences to {prefix}.{{beams.jsonl,gold.graphs,symbolic.graphs}}")


if __name__ == "__main__":
    main()
