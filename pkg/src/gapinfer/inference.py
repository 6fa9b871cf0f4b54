"""Uncertainty-driven neural-symbolic decisions over a meta graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform
from scipy.special import expit

from .config import DecisionConfig
from .gap import BeamSet, GapTables, compute_gap
from .graph import Edge, GraphError, Node, SemanticGraph
from .metagraph import EDGE, NODE, MetaGraph, attach_symbolic, build_meta_graph
from .smatch import is_isomorphic, smatch_score


class InferenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SymbolicPrior:
    """Indicator prior from the symbolic parse: log p0(v=s) = 1 if s is G_0's value at v, else 0."""

    graph: SemanticGraph | None = None
    indicators: dict = field(default_factory=dict)  # var id -> set of values

    @classmethod
    def from_meta(cls, meta: MetaGraph, g0: SemanticGraph | None) -> "SymbolicPrior":
        if g0 is None:
            return cls()
        return cls(g0, {v.id: v.symbolic_values for v in meta.variables if v.symbolic_values})

    def log_prior(self, var, value) -> float:
        return 1.0 if value in self.indicators.get(var, ()) else 0.0


def alpha(H: float, config: DecisionConfig = DecisionConfig()) -> float:
    """Trade-off coefficient sigmoid(-H/T + b); H is a negative log-likelihood."""
    if H < 0:
        raise ValueError("H must be >= 0")
    return float(expit(-H / config.T + config.b))


def variable_alpha(var, gap: GapTables, config: DecisionConfig) -> float:
    """alpha at the variable's neural MAP candidate."""
    values = gap.neural.get(var) or gap.candidates(var)
    best = max(gap.cond_loglik[(var, s)] for s in values)
    return alpha(max(0.0, -best), config)


def criterion(var, value, gap: GapTables, prior: SymbolicPrior, config: DecisionConfig = DecisionConfig(),
              alpha_v: float | None = None) -> float:
    """R(v=s) = alpha * log p(s | pa(v), x) + (1 - alpha) * log p0(s)."""
    if (var, value) not in gap.cond_loglik:
        raise KeyError(f"unknown candidate {value!r} for variable {var}")
    ll = gap.cond_loglik[(var, value)]
    if config.alpha_mode == "candidate":
        a = alpha(max(0.0, -ll), config)
    else:
        a = variable_alpha(var, gap, config) if alpha_v is None else alpha_v
    return a * ll + (1.0 - a) * prior.log_prior(var, value)


@dataclass
class Decision:
    value: str
    alpha: float
    scores: dict  # candidate -> R


def decide(meta: MetaGraph, gap: GapTables, prior: SymbolicPrior,
           config: DecisionConfig = DecisionConfig()) -> dict:
    """Pick argmax R for every variable, visiting depth-first from the root."""
    decisions: dict = {}

    def visit(var_id):
        v = meta[var_id]
        a = variable_alpha(var_id, gap, config)
        scores = {s: criterion(var_id, s, gap, prior, config, a) for s in v.candidates}
        best = min(scores, key=lambda s: (-scores[s], -gap.marginals.get((var_id, s), 0.0), s))
        decisions[var_id] = Decision(best, a, scores)
        for c in v.children:
            if c not in decisions:
                visit(c)

    visit(meta.root_var)
    return decisions


@dataclass
class Assembly:
    graph: SemanticGraph
    elements: dict  # var id -> ("node", node id) | ("edge", edge index)
    dropped: list  # edge variables duplicating an emitted edge


def assemble(meta: MetaGraph, choice: dict) -> Assembly:
    """Build the output graph from one chosen value per variable.

    Nodes and edges are numbered in depth-first order from the root
    variable. An edge variable whose (source, label, target) was already
    emitted is dropped and points at the surviving edge.
    """
    order: list = []
    seen = set()

    def visit(var_id):
        seen.add(var_id)
        order.append(var_id)
        for c in meta[var_id].children:
            if c not in seen:
                visit(c)

    visit(meta.root_var)
    nodes, edges, elements, dropped = [], [], {}, []
    for var_id in order:
        if meta[var_id].kind == NODE:
            elements[var_id] = (NODE, len(nodes))
            nodes.append(Node(len(nodes), choice[var_id]))
    emitted: dict = {}
    for var_id in order:
        v = meta[var_id]
        if v.kind != EDGE:
            continue
        key = (elements[v.source][1], choice[var_id], elements[v.target][1])
        if key in emitted:
            dropped.append(var_id)
        else:
            emitted[key] = len(edges)
            edges.append(Edge(key[0], key[2], key[1]))
        elements[var_id] = (EDGE, emitted[key])
    try:
        g = SemanticGraph(tuple(nodes), tuple(edges), elements[meta.root_var][1])
    except GraphError as err:
        raise InferenceError(f"assembled graph is invalid: {err}") from err
    return Assembly(g, elements, dropped)


def infer(meta: MetaGraph, gap: GapTables, prior: SymbolicPrior,
          config: DecisionConfig = DecisionConfig()) -> SemanticGraph:
    decisions = decide(meta, gap, prior, config)
    return assemble(meta, {v: d.value for v, d in decisions.items()}).graph


def prune(meta: MetaGraph, gap: GapTables, threshold: float) -> MetaGraph:
    """Drop low-marginal variables while the meta graph stays connected.

    Variables are visited from weakest to strongest max-marginal. Removing
    a node variable also removes its incident edge variables, so the move
    is taken only if all of them are below ``threshold`` too.
    """
    if threshold <= 0:
        return meta
    strength = {v.id: gap.max_marginal(v.id) for v in meta.variables}
    current = meta
    for var_id in sorted(strength, key=lambda i: (strength[i], i)):
        if var_id not in current.by_id or strength[var_id] >= threshold or var_id == current.root_var:
            continue
        v = current[var_id]
        drop = {var_id}
        if v.kind == NODE:
            drop |= {e.id for e in current.edge_vars if var_id in (e.source, e.target)}
        if any(strength[d] >= threshold for d in drop):
            continue
        candidate = current.without(drop)
        if candidate.is_connected():
            current = candidate
    return current


def lcs_length(a, b) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def lcs_distance(a, b) -> float:
    """1 - |LCS| / max length; 0 for two empty sequences."""
    n = max(len(a), len(b))
    return 0.0 if n == 0 else 1.0 - lcs_length(a, b) / n


@dataclass
class MixtureComponent:
    beams: tuple  # indices into the beam set, ascending
    weight: float  # p(m|x)
    H: float  # mean negative sequence log-likelihood
    graph: SemanticGraph  # highest-likelihood member


@dataclass
class MixtureModel:
    components: list
    labels: list  # component index per beam

    def __len__(self):
        return len(self.components)


def cluster_beams(beam_set: BeamSet, config: DecisionConfig = DecisionConfig()) -> MixtureModel:
    """Average-linkage HAC over LCS distances between symbol sequences, cut at ``mixture_cut``."""
    K = len(beam_set)
    if K == 0:
        raise ValueError("empty beam set")
    if K == 1:
        raw = np.array([1])
    else:
        seqs = [c.symbol_sequence() for c in beam_set.candidates]
        D = np.zeros((K, K))
        for i in range(K):
            for j in range(i + 1, K):
                D[i, j] = D[j, i] = lcs_distance(seqs[i], seqs[j])
        raw = fcluster(linkage(squareform(D, checks=False), method="average"),
                       t=config.mixture_cut, criterion="distance")
    # relabel so component 0 holds the top beam, then by first member
    relabel: dict = {}
    for lab in raw:
        relabel.setdefault(int(lab), len(relabel))
    labels = [relabel[int(lab)] for lab in raw]
    comps = []
    for m in range(len(relabel)):
        members = tuple(k for k in range(K) if labels[k] == m)
        H = float(np.mean([-beam_set[k].sequence_logprob for k in members]))
        comps.append(MixtureComponent(members, len(members) / K, H, beam_set[members[0]].graph))
    return MixtureModel(comps, labels)


def mixture_scores(mixture: MixtureModel, prior: SymbolicPrior,
                   config: DecisionConfig = DecisionConfig()) -> list:
    """R(m|x) per component; log p0(m) = sign * Smatch(G_m, G_0), 0 without a symbolic graph."""
    out = []
    for comp in mixture.components:
        a = alpha(max(0.0, comp.H), config)
        if prior.graph is None:
            log_p0 = 0.0
        else:
            f1 = smatch_score(comp.graph, prior.graph, config.restarts, config.iterations, config.seed).f1
            log_p0 = config.mixture_prior_sign * f1
        out.append(a * math.log(comp.weight) + (1 - a) * log_p0)
    return out


def mixture_select(mixture: MixtureModel, prior: SymbolicPrior, config: DecisionConfig = DecisionConfig()) -> int:
    scores = mixture_scores(mixture, prior, config)
    return min(range(len(scores)), key=lambda m: (-scores[m], -mixture.components[m].weight, m))


@dataclass
class PipelineResult:
    graph: SemanticGraph
    gap: GapTables | None
    diagnostics: dict


def run_pipeline(beam_set: BeamSet, g0: SemanticGraph | None,
                 config: DecisionConfig = DecisionConfig()) -> PipelineResult:
    """Cluster (optional) -> merge -> attach symbolic -> GAP -> prune (optional) -> infer."""
    diag: dict = {"component": None, "fallback": False, "n_invalid": beam_set.n_invalid}
    if len(beam_set) == 0:
        if g0 is None:
            raise InferenceError("no valid beams and no symbolic graph")
        diag.update(fallback=True, novel=False, variables=[], pruned=[], dropped=[], mean_alpha=None)
        return PipelineResult(g0, None, diag)
    prior_probe = SymbolicPrior(g0)
    beams = beam_set
    if config.mixture:
        mixture = cluster_beams(beam_set, config)
        m = mixture_select(mixture, prior_probe, config)
        diag["component"] = m
        diag["mixture"] = [{"beams": list(c.beams), "weight": c.weight, "H": c.H}
                           for c in mixture.components]
        beams = beam_set.subset(mixture.components[m].beams)
    meta = build_meta_graph(beams.graphs, config.restarts, config.iterations, config.seed)
    if g0 is not None:
        meta = attach_symbolic(meta, g0, config.restarts, config.iterations, config.seed)
    gap = compute_gap(meta, beams, config)
    pruned = prune(meta, gap, config.prune_threshold)
    diag["pruned"] = sorted(set(meta.by_id) - set(pruned.by_id))
    prior = SymbolicPrior.from_meta(pruned, g0)
    decisions = decide(pruned, gap, prior, config)
    assembly = assemble(pruned, {v: d.value for v, d in decisions.items()})
    graph = assembly.graph
    diag["dropped"] = assembly.dropped
    diag["variables"] = [
        {"id": v.id, "kind": v.kind, "chosen": decisions[v.id].value, "alpha": decisions[v.id].alpha,
         "candidates": {s: {"beams": sorted(info.beams), "symbolic": info.symbolic,
                            "marginal": gap.marginals[(v.id, s)], "cond_loglik": gap.cond_loglik[(v.id, s)],
                            "R": decisions[v.id].scores[s]}
                        for s, info in v.candidates.items()}}
        for v in pruned.variables
    ]
    alphas = [d.alpha for d in decisions.values()]
    diag["mean_alpha"] = sum(alphas) / len(alphas)
    diag["graph_loglik"] = gap.graph_loglik({v: d.value for v, d in decisions.items()})
    references = list(beam_set.graphs) + ([g0] if g0 is not None else [])
    diag["novel"] = not any(is_isomorphic(graph, r, config.seed) for r in references)
    return PipelineResult(graph, gap, diag)
