"""Corpus Smatch, subgraph-level calibration buckets, and the novel-graph report."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import DecisionConfig
from .gap import BeamSet, compute_gap
from .graph import SemanticGraph
from .inference import assemble
from .metagraph import EDGE, attach_symbolic, build_meta_graph
from .smatch import MatchScore, align, element_matches, is_isomorphic, node_edge_counts

CERTAIN_CUTOFF = -1e-5


class IdMismatchError(ValueError):
    pass


def _check_ids(*corpora: dict):
    keys = set(corpora[0])
    for c in corpora[1:]:
        if set(c) != keys:
            missing = sorted(keys ^ set(c))[:5]
            raise IdMismatchError(f"corpora ids differ, e.g. {missing}")


@dataclass
class CorpusScore:
    score: MatchScore
    node_f1: float
    edge_f1: float
    n: int

    def to_json(self) -> dict:
        d = self.score.to_json()
        d.update(node_f1=self.node_f1, edge_f1=self.edge_f1, sentences=self.n)
        return d


def corpus_smatch(predictions: dict, golds: dict, config: DecisionConfig = DecisionConfig()) -> CorpusScore:
    """Micro-averaged Smatch over id-aligned corpora (dicts id -> graph)."""
    if not predictions:
        raise ValueError("empty corpus")
    _check_ids(predictions, golds)
    total = MatchScore(0, 0, 0)
    node, edge = MatchScore(0, 0, 0), MatchScore(0, 0, 0)
    for key in predictions:
        al = align(predictions[key], golds[key], config.restarts, config.iterations, config.seed)
        total = total + al.score
        n_c, e_c = node_edge_counts(predictions[key], golds[key], al)
        node, edge = node + MatchScore(*n_c), edge + MatchScore(*e_c)
    edge_f1 = 1.0 if edge.total_a == 0 and edge.total_b == 0 else edge.f1
    return CorpusScore(total, node.f1, edge_f1, len(predictions))


@dataclass
class ElementRecord:
    sentence: str
    var: int
    kind: str
    value: str
    logprob: float
    neural_correct: bool
    symbolic_correct: bool | None


@dataclass
class Bucket:
    low: float  # probability range
    high: float
    count: int
    neural_correct: int
    symbolic_correct: int | None
    mean_log_prob: float

    @property
    def neural_acc(self) -> float:
        return self.neural_correct / self.count

    @property
    def symbolic_acc(self) -> float | None:
        return None if self.symbolic_correct is None else self.symbolic_correct / self.count


@dataclass
class CalibrationReport:
    buckets: list
    excluded_count: int

    @property
    def retained(self) -> int:
        return sum(b.count for b in self.buckets)

    def to_json(self) -> dict:
        return {
            "excluded_count": self.excluded_count,
            "buckets": [dict(asdict(b), neural_acc=b.neural_acc, symbolic_acc=b.symbolic_acc)
                        for b in self.buckets],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bucket_low", "bucket_high", "count", "neural_acc", "symbolic_acc"])
        for b in self.buckets:
            w.writerow([repr(b.low), repr(b.high), b.count, repr(b.neural_acc),
                        "" if b.symbolic_acc is None else repr(b.symbolic_acc)])
        return buf.getvalue()


def sentence_elements(beams: BeamSet, gold: SemanticGraph, g0: SemanticGraph | None,
                      config: DecisionConfig = DecisionConfig()) -> list:
    """Score every meta-graph variable's neural MAP value against the gold graph."""
    if len(beams) == 0:
        return []
    meta = build_meta_graph(beams.graphs, config.restarts, config.iterations, config.seed)
    if g0 is not None:
        meta = attach_symbolic(meta, g0, config.restarts, config.iterations, config.seed)
    gap = compute_gap(meta, beams, config)
    choice = {v.id: gap.map_value(v.id) for v in meta.variables}
    asm = assemble(meta, choice)
    al = align(asm.graph, gold, config.restarts, config.iterations, config.seed)
    n_ok, e_ok = element_matches(asm.graph, gold, al)
    sym_ok = None
    if g0 is not None:
        s_al = align(g0, gold, config.restarts, config.iterations, config.seed)
        sym_ok = element_matches(g0, gold, s_al)
    records = []
    for v in meta.variables:
        kind, el = asm.elements[v.id]
        neural_ok = (e_ok if kind == EDGE else n_ok)[el]
        symbolic = None
        if sym_ok is not None:
            real = meta.symbolic_realization.get(v.id)
            symbolic = real is not None and (sym_ok[1] if real[0] == EDGE else sym_ok[0])[real[1]]
        records.append(ElementRecord(beams.input_id, v.id, kind, choice[v.id],
                                     gap.cond_loglik[(v.id, choice[v.id])], bool(neural_ok),
                                     None if symbolic is None else bool(symbolic)))
    return records


def bucketize(records: list, n_bins: int = 10, cutoff: float = CERTAIN_CUTOFF) -> CalibrationReport:
    """Equal-count buckets by probability after dropping near-certain elements."""
    kept = [r for r in records if r.logprob <= cutoff]
    excluded = len(records) - len(kept)
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if n_bins > len(kept):
        raise ValueError(f"n_bins={n_bins} exceeds the {len(kept)} retained elements")
    kept.sort(key=lambda r: r.logprob)
    has_symbolic = any(r.symbolic_correct is not None for r in kept)
    buckets = []
    for chunk in np.array_split(np.arange(len(kept)), n_bins):
        rs = [kept[i] for i in chunk]
        lps = [r.logprob for r in rs]
        buckets.append(Bucket(
            low=math.exp(lps[0]), high=math.exp(lps[-1]), count=len(rs),
            neural_correct=sum(r.neural_correct for r in rs),
            symbolic_correct=sum(bool(r.symbolic_correct) for r in rs) if has_symbolic else None,
            mean_log_prob=float(np.mean(lps)),
        ))
    return CalibrationReport(buckets, excluded)


def calibration_report(beam_sets: dict, golds: dict, symbolic_graphs: dict | None = None, n_bins: int = 10,
                       config: DecisionConfig = DecisionConfig()) -> CalibrationReport:
    _check_ids(beam_sets, golds)
    records = []
    for key, beams in beam_sets.items():
        g0 = symbolic_graphs.get(key) if symbolic_graphs else None
        records += sentence_elements(beams, golds[key], g0, config)
    return bucketize(records, n_bins)


def label_breakdown(records: list) -> dict:
    """Per-value accuracy: value -> {count, neural_acc, symbolic_acc}."""
    groups: dict = {}
    for r in records:
        groups.setdefault(r.value, []).append(r)
    out = {}
    for value, rs in sorted(groups.items()):
        sym = [r.symbolic_correct for r in rs if r.symbolic_correct is not None]
        out[value] = {"count": len(rs), "neural_acc": sum(r.neural_correct for r in rs) / len(rs),
                      "symbolic_acc": sum(sym) / len(sym) if sym else None}
    return out


@dataclass
class NoveltyReport:
    total: int
    novel_count: int
    novel_fraction: float
    smatch_on_novel: float | None
    smatch_on_non_novel: float | None
    novel_ids: list

    def to_json(self) -> dict:
        return asdict(self)


def is_novel(pred: SemanticGraph, candidates: list, seed: int = 0) -> bool:
    return not any(is_isomorphic(pred, c, seed) for c in candidates)


def novelty_report(predictions: dict, beam_sets: dict, symbolic_graphs: dict | None, golds: dict,
                   config: DecisionConfig = DecisionConfig()) -> NoveltyReport:
    """Share of predictions matching no beam graph nor the symbolic graph, and their Smatch."""
    _check_ids(predictions, beam_sets, golds)
    novel, rest = [], []
    for key, pred in predictions.items():
        refs = list(beam_sets[key].graphs)
        if symbolic_graphs and symbolic_graphs.get(key) is not None:
            refs.append(symbolic_graphs[key])
        (novel if is_novel(pred, refs, config.seed) else rest).append(key)

    def f1(keys):
        if not keys:
            return None
        return corpus_smatch({k: predictions[k] for k in keys}, {k: golds[k] for k in keys}, config).score.f1

    n = len(predictions)
    return NoveltyReport(n, len(novel), len(novel) / n if n else 0.0, f1(novel), f1(rest), novel)
