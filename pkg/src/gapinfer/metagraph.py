"""Merge K beam graphs (and the symbolic graph) into one meta graph.

Each variable is a node or an edge slot; its candidates are the labels the
beams (or the symbolic parser) put there. Node variables have the edge
variables pointing into them as parents; an edge variable's parent is its
source node variable.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

from .gap import BeamSet, Realization
from .graph import SemanticGraph
from .smatch import DEFAULT_ITERATIONS, DEFAULT_RESTARTS, UNMAPPED, LabelSetGraph, align_labelsets

NODE = "node"
EDGE = "edge"


@dataclass
class CandidateInfo:
    beams: set = field(default_factory=set)
    symbolic: bool = False

    def to_json(self) -> dict:
        return {"beams": sorted(self.beams), "symbolic": self.symbolic}


@dataclass
class MetaVariable:
    id: int
    kind: str
    candidates: dict  # label -> CandidateInfo, insertion ordered
    source: int | None = None  # endpoint node variables (edge variables only)
    target: int | None = None
    parents: list = field(default_factory=list)
    children: list = field(default_factory=list)

    def add(self, label: str, beam: int | None = None, symbolic: bool = False):
        info = self.candidates.setdefault(label, CandidateInfo())
        if beam is not None:
            info.beams.add(beam)
        info.symbolic = info.symbolic or symbolic

    @property
    def symbolic_values(self) -> set:
        return {s for s, info in self.candidates.items() if info.symbolic}

    @property
    def neural_values(self) -> set:
        return {s for s, info in self.candidates.items() if info.beams}


@dataclass
class MetaGraph:
    variables: list
    root_var: int
    beam_realizations: list  # per beam: var id -> ("node", node id) | ("edge", edge index)
    symbolic_realization: dict | None = None
    symbolic_unattached: int = 0

    def __post_init__(self):
        self._relink()

    def _relink(self):
        self.by_id = {v.id: v for v in self.variables}
        for v in self.variables:
            v.parents, v.children = [], []
        for v in self.variables:
            if v.kind == EDGE:
                v.parents.append(v.source)
                v.children.append(v.target)
                self.by_id[v.source].children.append(v.id)
                self.by_id[v.target].parents.append(v.id)

    def __getitem__(self, var_id) -> MetaVariable:
        return self.by_id[var_id]

    def __len__(self):
        return len(self.variables)

    @property
    def var_edges(self) -> list:
        return [(p, v.id) for v in self.variables for p in v.parents]

    @property
    def node_vars(self) -> list:
        return [v for v in self.variables if v.kind == NODE]

    @property
    def edge_vars(self) -> list:
        return [v for v in self.variables if v.kind == EDGE]

    def is_connected(self) -> bool:
        """Every variable reachable from the root and every edge variable has both endpoints."""
        if self.root_var not in self.by_id:
            return False
        for v in self.edge_vars:
            if v.source not in self.by_id or v.target not in self.by_id:
                return False
        seen = {self.root_var}
        stack = [self.root_var]
        while stack:
            for c in self.by_id[stack.pop()].children:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return len(seen) == len(self.variables)

    def is_acyclic(self) -> bool:
        indeg = {v.id: len(v.parents) for v in self.variables}
        queue = [i for i, d in indeg.items() if d == 0]
        n = 0
        while queue:
            u = queue.pop()
            n += 1
            for c in self.by_id[u].children:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return n == len(self.variables)

    def labelset_graph(self) -> tuple[LabelSetGraph, list]:
        """Alignment target over node variables; returns it with index -> var id."""
        nodes = self.node_vars
        index = {v.id: i for i, v in enumerate(nodes)}
        target = LabelSetGraph(
            [frozenset(v.candidates) for v in nodes],
            [(index[e.source], frozenset(e.candidates), index[e.target]) for e in self.edge_vars],
            index[self.root_var],
        )
        return target, [v.id for v in nodes]

    def realization_table(self, beam_set: BeamSet) -> list:
        """Per beam: var id -> Realization(value, symbol log-prob, symbol position)."""
        if len(beam_set) != len(self.beam_realizations):
            raise ValueError("beam set does not match the meta graph")
        table = []
        for cand, real in zip(beam_set.candidates, self.beam_realizations):
            node_spans = cand.linearized.node_spans()
            edge_spans = cand.linearized.edge_spans()
            row = {}
            for var_id, (kind, el) in real.items():
                if var_id not in self.by_id:
                    continue  # pruned
                if kind == NODE:
                    span, value = node_spans[el], cand.graph.nodes[el].label
                else:
                    span, value = edge_spans[el], cand.graph.edges[el].label
                row[var_id] = Realization(value, cand.symbol_logprobs[span], span)
            table.append(row)
        return table

    def realization_count(self) -> int:
        return sum(len(r) for r in self.beam_realizations)

    def without(self, var_ids) -> "MetaGraph":
        drop = set(var_ids)
        if self.root_var in drop:
            raise ValueError("cannot remove the root variable")
        out = copy.deepcopy(self)
        out.variables = [v for v in out.variables if v.id not in drop]
        out.beam_realizations = [{k: x for k, x in r.items() if k not in drop} for r in out.beam_realizations]
        if out.symbolic_realization is not None:
            out.symbolic_realization = {k: x for k, x in out.symbolic_realization.items() if k not in drop}
        out._relink()
        return out

    def to_json(self, gap=None) -> dict:
        out = []
        for v in self.variables:
            d = {"id": v.id, "kind": v.kind, "parents": list(v.parents), "children": list(v.children),
                 "candidates": {s: info.to_json() for s, info in v.candidates.items()}}
            if v.kind == EDGE:
                d["source"], d["target"] = v.source, v.target
            if gap is not None:
                for s in v.candidates:
                    d["candidates"][s]["marginal"] = gap.marginals.get((v.id, s))
                    d["candidates"][s]["cond_loglik"] = gap.cond_loglik.get((v.id, s))
            out.append(d)
        return {"root": self.root_var, "variables": out}


def _preorder(g: SemanticGraph) -> list:
    """Elements of ``g`` in linearization order: ("node", id) / ("edge", index)."""
    out = g.out_edges()
    order, seen = [], set()

    def visit(u):
        seen.add(u)
        order.append((NODE, u))
        for ei in out[u]:
            order.append((EDGE, ei))
            if g.edges[ei].target not in seen:
                visit(g.edges[ei].target)

    visit(g.root)
    return order


class _Builder:
    def __init__(self):
        self.variables: list[MetaVariable] = []
        self.realizations: list[dict] = []
        self.root_var = 0

    def new_var(self, kind, source=None, target=None) -> MetaVariable:
        v = MetaVariable(len(self.variables), kind, {}, source, target)
        self.variables.append(v)
        return v

    def meta(self) -> MetaGraph:
        return MetaGraph(self.variables, self.root_var, self.realizations)

    def add_anchor(self, g: SemanticGraph):
        real, node_var = {}, {}
        for kind, el in _preorder(g):
            if kind == NODE:
                v = self.new_var(NODE)
                v.add(g.nodes[el].label, 0)
                node_var[el] = v.id
            else:
                e = g.edges[el]
                # edge appears before its target's first occurrence; patch target below
                v = self.new_var(EDGE, node_var[e.source], None)
                v.add(e.label, 0)
            real[v.id] = (kind, el)
        for var_id, (kind, el) in real.items():
            if kind == EDGE:
                self.variables[var_id].target = node_var[g.edges[el].target]
        self.root_var = node_var[g.root]
        self.realizations.append(real)

    def node_mapping(self, g: SemanticGraph, restarts, iterations, seed, force_root=True) -> dict:
        target, var_ids = self.meta().labelset_graph()
        mapping, _ = align_labelsets(g, target, restarts, iterations, seed)
        node_map = {i: (None if j == UNMAPPED else var_ids[j]) for i, j in enumerate(mapping)}
        if force_root and node_map[g.root] != self.root_var:
            holder = next((i for i, v in node_map.items() if v == self.root_var), None)
            if holder is not None:
                node_map[holder] = node_map[g.root]
            node_map[g.root] = self.root_var
        return node_map

    def break_cycles(self, g: SemanticGraph, node_map: dict):
        """Unmap beam nodes until merging ``g`` keeps the variable graph acyclic."""
        while True:
            cycle_nodes = self._cycle(g, node_map)
            if not cycle_nodes:
                return
            victim = max(i for i in cycle_nodes if i != g.root)
            node_map[victim] = None

    def _cycle(self, g: SemanticGraph, node_map: dict) -> set:
        adj: dict = {}
        for v in self.variables:
            if v.kind == EDGE:
                adj.setdefault(("v", v.source), set()).add(("v", v.target))
        key = {i: ("v", m) if m is not None else ("b", i) for i, m in node_map.items()}
        owner: dict = {}
        for e in g.edges:
            s, t = key[e.source], key[e.target]
            adj.setdefault(s, set()).add(t)
            owner.setdefault((s, t), set()).update({e.source, e.target})
        color: dict = {}
        path: list = []

        def dfs(u):
            color[u] = 1
            path.append(u)
            for w in sorted(adj.get(u, ()), key=repr):
                if color.get(w) == 1:
                    cyc = path[path.index(w):] + [w]
                    found = set()
                    for a, b in zip(cyc, cyc[1:]):
                        found |= {i for i in owner.get((a, b), ()) if node_map[i] is not None}
                    return found or {0}
                if w not in color:
                    r = dfs(w)
                    if r:
                        return r
            color[u] = 2
            path.pop()
            return None

        for u in sorted(adj, key=repr):
            if u not in color:
                r = dfs(u)
                if r:
                    return r
        return set()

    def merge(self, g: SemanticGraph, k: int, node_map: dict, symbolic: bool = False) -> dict:
        real = {}
        for i, var_id in sorted(node_map.items()):
            if var_id is None:
                if symbolic:
                    continue
                var_id = self.new_var(NODE).id
                node_map[i] = var_id
            v = self.variables[var_id]
            v.add(g.nodes[i].label, None if symbolic else k, symbolic)
            real[var_id] = (NODE, i)
        groups: dict = {}
        for ei, e in enumerate(g.edges):
            s, t = node_map[e.source], node_map[e.target]
            if s is None or t is None:
                continue
            groups.setdefault((s, t), []).append(ei)
        existing: dict = {}
        for v in self.variables:
            if v.kind == EDGE:
                existing.setdefault((v.source, v.target), []).append(v.id)
        for (s, t), eis in groups.items():
            free = list(existing.get((s, t), []))
            pending = []
            for ei in eis:
                label = g.edges[ei].label
                hit = next((vid for vid in free if label in self.variables[vid].candidates), None)
                if hit is None:
                    pending.append(ei)
                else:
                    free.remove(hit)
                    real[hit] = (EDGE, ei)
            for ei in pending:
                if free:
                    vid = free.pop(0)
                elif symbolic:
                    continue
                else:
                    vid = self.new_var(EDGE, s, t).id
                real[vid] = (EDGE, ei)
            for vid, (kind, ei) in real.items():
                if kind == EDGE and ei in eis:
                    self.variables[vid].add(g.edges[ei].label, None if symbolic else k, symbolic)
        return real


def build_meta_graph(graphs: Sequence[SemanticGraph], restarts: int = DEFAULT_RESTARTS,
                     iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> MetaGraph:
    """Incrementally merge ``graphs`` (highest-likelihood first) into a meta graph.

    The first graph is the scaffold. Every later graph is aligned against
    the union built so far; aligned elements add their label to the
    matching variable, the rest become new variables. A later graph's root
    is always merged into the root variable, and alignments that would
    close a cycle among variables are undone node by node.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    b = _Builder()
    b.add_anchor(graphs[0])
    for k, g in enumerate(graphs[1:], start=1):
        node_map = b.node_mapping(g, restarts, iterations, seed)
        b.break_cycles(g, node_map)
        b.realizations.append(b.merge(g, k, node_map))
    return b.meta()


def attach_symbolic(meta: MetaGraph, g0: SemanticGraph, restarts: int = DEFAULT_RESTARTS,
                    iterations: int = DEFAULT_ITERATIONS, seed: int = 0) -> MetaGraph:
    """Flag candidates found in the symbolic graph ``g0``; add its labels missing from a variable.

    Elements of ``g0`` that align to no variable are counted in
    ``symbolic_unattached`` but not added.
    """
    b = _Builder()
    out = copy.deepcopy(meta)
    b.variables, b.realizations, b.root_var = out.variables, out.beam_realizations, out.root_var
    for v in b.variables:
        for info in v.candidates.values():
            info.symbolic = False
    node_map = b.node_mapping(g0, restarts, iterations, seed)
    real = b.merge(g0, -1, node_map, symbolic=True)
    out.symbolic_realization = real
    out.symbolic_unattached = len(g0.nodes) + len(g0.edges) - len(real)
    out._relink()
    return out
