"""Smatch: triple-overlap F1 under a node alignment.

The hill climber works against a target whose nodes and edges carry *sets*
of admissible labels, so the same code aligns a beam graph onto a meta graph
(where each variable has several candidates) and one plain graph onto
another (singleton sets).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .graph import SemanticGraph

DEFAULT_RESTARTS = 4
DEFAULT_ITERATIONS = 5
EXHAUSTIVE_LIMIT = 8

UNMAPPED = -1


@dataclass(frozen=True)
class MatchScore:
    matched: int
    total_a: int
    total_b: int

    @property
    def precision(self) -> float:
        return self.matched / self.total_a if self.total_a else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.total_b if self.total_b else 0.0

    @property
    def f1(self) -> float:
        if self.matched == 0:
            return 0.0
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r)

    def __add__(self, other: "MatchScore") -> "MatchScore":
        return MatchScore(self.matched + other.matched, self.total_a + other.total_a,
                          self.total_b + other.total_b)

    def to_json(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "matched": self.matched, "total_pred": self.total_a, "total_gold": self.total_b}


@dataclass(frozen=True)
class Alignment:
    """Partial injective map from nodes of A to nodes of B.

    ``mapping[i]`` is the B node for A node ``i`` or ``UNMAPPED``.
    """

    mapping: tuple[int, ...]
    matched_triples: int
    score: MatchScore

    def get(self, i: int) -> int | None:
        j = self.mapping[i]
        return None if j == UNMAPPED else j

    def as_dict(self) -> dict[int, int]:
        return {i: j for i, j in enumerate(self.mapping) if j != UNMAPPED}


@dataclass
class LabelSetGraph:
    """Alignment target: node and edge label *sets*."""

    labels: list[frozenset]
    edges: list[tuple[int, frozenset, int]]
    root: int
    rel: dict = field(init=False)

    def __post_init__(self):
        self.rel = {}
        for s, labels, t in self.edges:
            for lab in labels:
                self.rel.setdefault(lab, set()).add((s, t))

    @classmethod
    def from_graph(cls, g: SemanticGraph) -> "LabelSetGraph":
        return cls([frozenset([n.label]) for n in g.nodes],
                   [(e.source, frozenset([e.label]), e.target) for e in g.edges], g.root)

    def n_triples(self) -> int:
        return len(self.labels) + len(self.edges) + 1


class _Problem:
    def __init__(self, a: SemanticGraph, b: LabelSetGraph):
        self.na = len(a.nodes)
        self.nb = len(b.labels)
        self.a_root = a.root
        self.b_root = b.root
        self.node_gain = [
            [int(a.nodes[i].label in b.labels[j]) + int(i == a.root and j == b.root)
             for j in range(self.nb)]
            for i in range(self.na)
        ]
        self.a_edges = [(e.source, e.label, e.target) for e in a.edges]
        self.rel = b.rel
        self.incident: list[list[int]] = [[] for _ in range(self.na)]
        for k, (s, _, t) in enumerate(self.a_edges):
            self.incident[s].append(k)
            self.incident[t].append(k)

    def edge_hit(self, m, k) -> int:
        s, lab, t = self.a_edges[k]
        ms, mt = m[s], m[t]
        if ms == UNMAPPED or mt == UNMAPPED:
            return 0
        pairs = self.rel.get(lab)
        return int(pairs is not None and (ms, mt) in pairs)

    def total(self, m) -> int:
        score = sum(self.node_gain[i][j] for i, j in enumerate(m) if j != UNMAPPED)
        return score + sum(self.edge_hit(m, k) for k in range(len(self.a_edges)))

    def local(self, m, nodes) -> int:
        score = sum(self.node_gain[i][m[i]] for i in nodes if m[i] != UNMAPPED)
        ks = set()
        for i in nodes:
            ks.update(self.incident[i])
        return score + sum(self.edge_hit(m, k) for k in ks)

    def greedy_init(self) -> list[int]:
        m = [UNMAPPED] * self.na
        used = set()
        order = [self.a_root] + [i for i in range(self.na) if i != self.a_root]
        for i in order:
            best = None
            for j in range(self.nb):
                if j in used or self.node_gain[i][j] == 0:
                    continue
                if best is None or self.node_gain[i][j] > self.node_gain[i][best]:
                    best = j
            if best is not None:
                m[i] = best
                used.add(best)
        free = iter(j for j in range(self.nb) if j not in used)
        for i in range(self.na):
            if m[i] == UNMAPPED:
                j = next(free, None)
                if j is None:
                    break
                m[i] = j
        return m

    def random_init(self, rng: random.Random) -> list[int]:
        pool = list(range(self.nb)) + [UNMAPPED] * max(0, self.na - self.nb)
        rng.shuffle(pool)
        return pool[: self.na]

    def climb(self, m: list[int], iterations: int) -> list[int]:
        owner = {j: i for i, j in enumerate(m) if j != UNMAPPED}
        for _ in range(iterations):
            improved = False
            for i in range(self.na):
                for j in range(self.nb):
                    old = m[i]
                    if j == old:
                        continue
                    i2 = owner.get(j)
                    touched = (i,) if i2 is None else (i, i2)
                    before = self.local(m, touched)
                    m[i] = j
                    if i2 is not None:
                        m[i2] = old
                    if self.local(m, touched) > before:
                        improved = True
                        owner[j] = i
                        if i2 is not None and old != UNMAPPED:
                            owner[old] = i2
                        elif old != UNMAPPED:
                            del owner[old]
                    else:
                        m[i] = old
                        if i2 is not None:
                            m[i2] = j
            if not improved:
                break
        return m


def _better(score, mapping, best_score, best_mapping) -> bool:
    return score > best_score or (score == best_score and mapping < best_mapping)


def align_labelsets(a: SemanticGraph, b: LabelSetGraph, restarts: int = DEFAULT_RESTARTS,
                    iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> tuple[tuple[int, ...], int]:
    """Hill-climbing alignment of ``a`` onto ``b``; returns (mapping, matched)."""
    if restarts < 1 or iterations < 1:
        raise ValueError("restarts and iterations must be >= 1")
    prob = _Problem(a, b)
    best_m: tuple[int, ...] | None = None
    best_s = -1
    for r in range(restarts):
        init = prob.greedy_init() if r == 0 else prob.random_init(random.Random(seed + r))
        m = tuple(prob.climb(init, iterations))
        s = prob.total(m)
        if best_m is None or _better(s, m, best_s, best_m):
            best_m, best_s = m, s
    return best_m, best_s


def _alignment(a: SemanticGraph, b: SemanticGraph, mapping, matched) -> Alignment:
    total_a = len(a.nodes) + len(a.edges) + 1
    total_b = len(b.nodes) + len(b.edges) + 1
    return Alignment(tuple(mapping), matched, MatchScore(matched, total_a, total_b))


def align(a: SemanticGraph, b: SemanticGraph, restarts: int = DEFAULT_RESTARTS,
          iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> Alignment:
    mapping, matched = align_labelsets(a, LabelSetGraph.from_graph(b), restarts, iterations, seed)
    return _alignment(a, b, mapping, matched)


def exhaustive_align(a: SemanticGraph, b: SemanticGraph) -> Alignment:
    """Globally optimal alignment by enumeration (at most 8 nodes per side)."""
    na, nb = len(a.nodes), len(b.nodes)
    if na > EXHAUSTIVE_LIMIT or nb > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive alignment limited to {EXHAUSTIVE_LIMIT} nodes, got {na} and {nb}")
    prob = _Problem(a, LabelSetGraph.from_graph(b))
    # sorted pool => permutations come out in lexicographic order, so the
    # first maximum is the lexicographically smallest optimal mapping
    pool = [UNMAPPED] * max(0, na - nb) + list(range(nb))
    best_m, best_s = None, -1
    seen = set()
    for m in itertools.permutations(pool, na):
        if m in seen:
            continue
        if na > nb:
            seen.add(m)
        s = prob.total(m)
        if s > best_s:
            best_m, best_s = m, s
    return _alignment(a, b, best_m, best_s)


def smatch_score(pred: SemanticGraph, gold: SemanticGraph, restarts: int = DEFAULT_RESTARTS,
                 iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> MatchScore:
    return align(pred, gold, restarts, iterations, seed).score


def _f1(matched: int, total_a: int, total_b: int) -> float:
    if total_a == 0 and total_b == 0:
        return 1.0
    return MatchScore(matched, total_a, total_b).f1


def element_matches(pred: SemanticGraph, gold: SemanticGraph, alignment: Alignment):
    """Per-element correctness of ``pred`` under ``alignment``: (nodes, edges) boolean lists."""
    gold_edges = {(e.source, e.label, e.target) for e in gold.edges}
    nodes = []
    for n in pred.nodes:
        j = alignment.get(n.id)
        nodes.append(j is not None and gold.nodes[j].label == n.label)
    edges = []
    for e in pred.edges:
        s, t = alignment.get(e.source), alignment.get(e.target)
        edges.append(s is not None and t is not None and (s, e.label, t) in gold_edges)
    return nodes, edges


def node_edge_counts(pred: SemanticGraph, gold: SemanticGraph, alignment: Alignment):
    nodes, edges = element_matches(pred, gold, alignment)
    return ((sum(nodes), len(pred.nodes), len(gold.nodes)),
            (sum(edges), len(pred.edges), len(gold.edges)))


def node_edge_f1(pred: SemanticGraph, gold: SemanticGraph, alignment: Alignment) -> tuple[float, float]:
    """Node F1 from instance triples and edge F1 from relation triples."""
    node_c, edge_c = node_edge_counts(pred, gold, alignment)
    return _f1(*node_c), _f1(*edge_c)


def is_isomorphic(a: SemanticGraph, b: SemanticGraph, seed: int = 0) -> bool:
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False
    if sorted(n.label for n in a.nodes) != sorted(n.label for n in b.nodes):
        return False
    if sorted(e.label for e in a.edges) != sorted(e.label for e in b.edges):
        return False
    total = len(a.nodes) + len(a.edges) + 1
    if len(a.nodes) <= EXHAUSTIVE_LIMIT:
        return exhaustive_align(a, b).matched_triples == total
    return align(a, b, seed=seed).matched_triples == total
