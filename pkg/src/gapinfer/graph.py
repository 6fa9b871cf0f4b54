"""Semantic graph data model and the variable-free top-down linearization.

Grammar (whitespace separates tokens and is otherwise ignored)::

    graph        := '(' node-label [decl] (':' role graph-or-ref)* ')'
    decl         := '*' integer
    graph-or-ref := graph | '*' integer

A ``*k`` right after a node label declares the node as reentrant with id
``k``; a bare ``*k`` in argument position refers back to it.
"""

from __future__ import annotations

import enum
from collections import namedtuple
from dataclasses import dataclass

STRUCTURAL = frozenset("():* \t\r\n")
_LABEL_STOP = frozenset("()* \t\r\n")
_ROLE_STOP = frozenset("()*: \t\r\n")

Triple = namedtuple("Triple", "relation source target")


class GraphError(ValueError):
    """A graph violates the DAG invariants."""


class ParseError(GraphError):
    """Malformed linearization. ``offset`` is 0-based, ``column`` 1-based."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        self.column = offset + 1
        super().__init__(f"{message} at column {self.column} (offset {offset})")


class DanglingReferenceError(ParseError):
    pass


class CyclicReferenceError(ParseError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    label: str


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    label: str


def valid_node_label(label: str) -> bool:
    return bool(label) and not label.startswith(":") and not any(c in _LABEL_STOP for c in label)


def valid_role(label: str) -> bool:
    return bool(label) and not any(c in _ROLE_STOP for c in label)


@dataclass(frozen=True)
class SemanticGraph:
    """Rooted, connected DAG with labeled nodes and labeled edges.

    Node ids are dense: ``nodes[i].id == i``. Edge ids are positions in
    ``edges``. Validation happens on construction.
    """

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    root: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        self._validate()

    def _validate(self):
        n = len(self.nodes)
        if n == 0:
            raise GraphError("graph has no nodes")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise GraphError(f"node ids must be dense, got {node.id} at position {i}")
            if not valid_node_label(node.label):
                raise GraphError(f"invalid node label {node.label!r}")
        if not 0 <= self.root < n:
            raise GraphError(f"root {self.root} is not a node")
        seen = set()
        for e in self.edges:
            if not (0 <= e.source < n and 0 <= e.target < n):
                raise GraphError(f"edge {e} references a missing node")
            if e.source == e.target:
                raise GraphError(f"self-loop on node {e.source}")
            if not valid_role(e.label):
                raise GraphError(f"invalid edge label {e.label!r}")
            key = (e.source, e.label, e.target)
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        out = self.out_edges()
        # iterative DFS with colors for reachability and cycle detection
        color = [0] * n
        color[self.root] = 1
        stack = [(self.root, iter(out[self.root]))]
        while stack:
            u, it = stack[-1]
            for ei in it:
                v = self.edges[ei].target
                if color[v] == 1:
                    raise GraphError(f"cycle through node {v}")
                if color[v] == 0:
                    color[v] = 1
                    stack.append((v, iter(out[v])))
                    break
            else:
                color[u] = 2
                stack.pop()
        missing = [i for i in range(n) if color[i] == 0]
        if missing:
            raise GraphError(f"nodes {missing} unreachable from root")

    def out_edges(self) -> list[list[int]]:
        """Edge indices leaving each node, in stored order."""
        out: list[list[int]] = [[] for _ in self.nodes]
        for i, e in enumerate(self.edges):
            out[e.source].append(i)
        return out

    def in_degree(self) -> list[int]:
        deg = [0] * len(self.nodes)
        for e in self.edges:
            deg[e.target] += 1
        return deg

    def label(self, node_id: int) -> str:
        return self.nodes[node_id].label

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": n.id, "label": n.label} for n in self.nodes],
            "edges": [{"src": e.source, "tgt": e.target, "label": e.label} for e in self.edges],
            "root": self.root,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SemanticGraph":
        nodes = sorted((Node(int(n["id"]), n["label"]) for n in obj["nodes"]), key=lambda n: n.id)
        edges = [Edge(int(e["src"]), int(e["tgt"]), e["label"]) for e in obj["edges"]]
        return cls(tuple(nodes), tuple(edges), int(obj["root"]))

    def __str__(self):
        return serialize(self)


class SymbolKind(str, enum.Enum):
    NODE = "node"
    EDGE = "edge"
    REF = "ref"


@dataclass(frozen=True)
class SymbolSpan:
    start: int
    end: int
    kind: SymbolKind
    element: int  # node id for NODE/REF, edge index for EDGE


@dataclass(frozen=True)
class LinearizedGraph:
    text: str
    symbols: tuple[SymbolSpan, ...]

    def symbol_text(self, i: int) -> str:
        s = self.symbols[i]
        return self.text[s.start:s.end]

    def symbol_texts(self) -> list[str]:
        return [self.text[s.start:s.end] for s in self.symbols]

    def node_spans(self) -> dict[int, int]:
        """Node id -> index of the span carrying its label."""
        return {s.element: i for i, s in enumerate(self.symbols) if s.kind is SymbolKind.NODE}

    def edge_spans(self) -> dict[int, int]:
        return {s.element: i for i, s in enumerate(self.symbols) if s.kind is SymbolKind.EDGE}

    def span_at(self, offset: int) -> int | None:
        """Index of the span containing character ``offset``, if any."""
        # spans are few and ordered; bisect would be premature here
        for i, s in enumerate(self.symbols):
            if s.start <= offset < s.end:
                return i
            if s.start > offset:
                return None
        return None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.nodes: list[Node] = []
        self.edges: list[Edge] = []
        self.edge_keys: set = set()
        self.spans: list[SymbolSpan] = []
        self.declared: dict[int, int] = {}
        self.open: set[int] = set()

    def error(self, msg, cls=ParseError, offset=None):
        raise cls(msg, self.pos if offset is None else offset)

    def skip_ws(self):
        t = self.text
        while self.pos < len(t) and t[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error("unexpected end of input")
        return self.text[self.pos]

    def read_while(self, stop) -> tuple[int, int]:
        start = self.pos
        t = self.text
        while self.pos < len(t) and t[self.pos] not in stop:
            self.pos += 1
        return start, self.pos

    def read_int(self) -> int:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer after '*'")
        return int(self.text[start:self.pos])

    def parse(self):
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error("empty input")
        root = self.graph()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing characters after graph")
        return root

    def graph(self) -> int:
        if self.peek() != "(":
            self.error("expected '('")
        self.pos += 1
        self.peek()
        start, end = self.read_while(_LABEL_STOP)
        label = self.text[start:end]
        if not label or label.startswith(":"):
            self.error("expected node label", offset=start)
        nid = len(self.nodes)
        self.nodes.append(Node(nid, label))
        self.spans.append(SymbolSpan(start, end, SymbolKind.NODE, nid))
        self.open.add(nid)
        if self.peek() == "*":
            at = self.pos
            self.pos += 1
            k = self.read_int()
            if k in self.declared:
                self.error(f"reentrancy id *{k} declared twice", offset=at)
            self.declared[k] = nid
        while True:
            c = self.peek()
            if c == ")":
                self.pos += 1
                break
            if c != ":":
                self.error("expected ':role' or ')'")
            self.pos += 1
            start, end = self.read_while(_ROLE_STOP)
            role = self.text[start:end]
            if not role:
                self.error("expected role label", offset=start)
            edge_span = len(self.spans)
            self.spans.append(SymbolSpan(start, end, SymbolKind.EDGE, -1))
            c = self.peek()
            if c == "(":
                target = self.graph()
            elif c == "*":
                at = self.pos
                self.pos += 1
                k = self.read_int()
                if k not in self.declared:
                    self.error(f"dangling reference *{k}", DanglingReferenceError, at)
                target = self.declared[k]
                if target in self.open:
                    self.error(f"reference *{k} creates a cycle", CyclicReferenceError, at)
                self.spans.append(SymbolSpan(at, self.pos, SymbolKind.REF, target))
            else:
                self.error("expected '(' or '*k'")
            key = (nid, role, target)
            if key in self.edge_keys:
                self.error(f"duplicate edge :{role}", offset=start)
            self.edge_keys.add(key)
            eid = len(self.edges)
            self.edges.append(Edge(nid, target, role))
            self.spans[edge_span] = SymbolSpan(start, end, SymbolKind.EDGE, eid)
        self.open.discard(nid)
        return nid


def parse_linearized(text: str) -> tuple[SemanticGraph, LinearizedGraph]:
    """Parse ``text`` into a graph and the symbol span map.

    Node ids follow first-occurrence (preorder) order; edges follow the
    order their roles appear in the text.
    """
    p = _Parser(text)
    root = p.parse()
    graph = SemanticGraph(tuple(p.nodes), tuple(p.edges), root)
    return graph, LinearizedGraph(text, tuple(p.spans))


def parse(text: str) -> SemanticGraph:
    return parse_linearized(text)[0]


def serialize(graph: SemanticGraph) -> str:
    """Canonical linearization: stored edge order, ``*k`` numbered by first occurrence."""
    out = graph.out_edges()
    reentrant = [d > 1 for d in graph.in_degree()]
    markers: dict[int, int] = {}
    parts: list[str] = []

    def emit(u):
        parts.append("(" + graph.nodes[u].label)
        if reentrant[u]:
            markers[u] = len(markers) + 1
            parts.append(f" *{markers[u]}")
        for ei in out[u]:
            e = graph.edges[ei]
            parts.append(f" :{e.label} ")
            if e.target in markers:
                parts.append(f"*{markers[e.target]}")
            else:
                emit(e.target)
        parts.append(")")

    emit(graph.root)
    return "".join(parts)


def triples(graph: SemanticGraph) -> frozenset:
    """Instance, relation and top triples over node ids."""
    ts = {Triple("instance", n.id, n.label) for n in graph.nodes}
    ts.update(Triple(e.label, e.source, e.target) for e in graph.edges)
    ts.add(Triple("TOP", graph.root, "top"))
    return frozenset(ts)
