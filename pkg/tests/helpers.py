"""Shared builders for tests: random DAGs, beams from probabilities, Fixture F1."""

import math
import random

from gapinfer.gap import BeamSet, from_precomputed
from gapinfer.graph import Edge, Node, SemanticGraph, parse_linearized

F1_BEAM1 = "(_a_n :ARG1 (_b_n))"
F1_BEAM2 = "(_a_n :ARG1 (_c_n))"
F1_G0 = "(_a_n :ARG1 (_c_n))"


def beam(text, probs, seq_prob=None):
    """Precomputed beam from per-symbol probabilities (0 allowed)."""
    lps = [math.log(p) if p > 0 else -1e4 for p in probs]
    seq = None if seq_prob is None else math.log(seq_prob)
    return from_precomputed(text, lps, seq)


def f1_beams():
    return BeamSet((beam(F1_BEAM1, [1.0, 1.0, 0.9]), beam(F1_BEAM2, [1.0, 0.5, 0.8])), "f1")


def random_dag(rng: random.Random, n_nodes: int, reentrancy: float = 0.2,
               labels=("_a_n", "_b_v", "_c_q", "udef_q", "compound", "_the_q"),
               roles=("ARG1", "ARG2", "BV", "L-INDEX")) -> SemanticGraph:
    """Random rooted DAG: node v hangs under a random earlier node, plus extra in-edges at ``reentrancy`` rate."""
    nodes = [Node(i, rng.choice(labels)) for i in range(n_nodes)]
    edges, keys = [], set()
    for v in range(1, n_nodes):
        u = rng.randrange(v)
        r = rng.choice(roles)
        edges.append(Edge(u, v, r))
        keys.add((u, r, v))
        if v > 1 and rng.random() < reentrancy:
            u2, r2 = rng.randrange(v), rng.choice(roles)
            if (u2, r2, v) not in keys:
                edges.append(Edge(u2, v, r2))
                keys.add((u2, r2, v))
    rng.shuffle(edges)
    return SemanticGraph(tuple(nodes), tuple(edges), 0)


def random_beam_set(rng: random.Random, k: int, max_nodes: int = 4, labels=("_a_n", "_b_n", "_c_n"),
                    roles=("ARG1", "ARG2")) -> BeamSet:
    """K random beams with random symbol probabilities; sequence prob = product."""
    from gapinfer.graph import serialize

    cands = []
    for _ in range(k):
        g = random_dag(rng, rng.randint(1, max_nodes), 0.3, labels, roles)
        text = serialize(g)
        _, lin = parse_linearized(text)
        probs = [rng.uniform(0.05, 1.0) for _ in lin.symbols]
        cands.append(beam(text, probs))
    return BeamSet(tuple(cands), "rand")


def two_candidate_tables(p_high, p_low):
    """One variable with neural candidates 'high'/'low' at the given conditionals; 'low' is symbolic."""
    from gapinfer.gap import GapTables
    from gapinfer.inference import SymbolicPrior

    gap = GapTables(
        marginals={(0, "high"): p_high, (0, "low"): p_low},
        cond_loglik={(0, "high"): math.log(p_high), (0, "low"): math.log(p_low)},
        parent_cond={}, neural={0: {"high", "low"}}, fallback=set(), posterior=None,
    )
    return gap, SymbolicPrior(None, {0: {"low"}})


def novel_fixture():
    """Beam 1 has the right argument node, beam 2 the right sibling role; G0 supplies neither alone."""
    from gapinfer.graph import parse

    gold = parse("(_a_v :ARG1 (_b_n) :ARG2 (_c_n))")
    b1 = beam("(_a_v :ARG1 (_b_n) :ARG3 (_c_n))", [1.0, 1.0, 0.95, 0.3, 1.0], 0.2)
    b2 = beam("(_a_v :ARG1 (_x_n) :ARG2 (_c_n))", [1.0, 1.0, 0.3, 0.95, 1.0], 0.2)
    g0 = parse("(_a_v :ARG1 (_b_n) :ARG2 (_z_n))")
    return BeamSet((b1, b2), "novel"), g0, gold
