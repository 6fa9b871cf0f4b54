"""Readers and writers for beam JSONL, graph corpora and prediction JSONL."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .gap import BeamSet, from_precomputed, segment_symbols
from .graph import GraphError, SemanticGraph, parse, serialize

log = logging.getLogger(__name__)


class RecordError(ValueError):
    """A malformed input record."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def parse_beam(obj: dict):
    """One beam entry: token form ``{"tokens": [[text, logprob], ...]}`` or precomputed form."""
    if "tokens" in obj:
        return segment_symbols(obj["tokens"])
    if "graph" in obj:
        return from_precomputed(obj["graph"], obj["symbol_logprobs"], obj.get("sequence_logprob"))
    raise KeyError("beam needs 'tokens' or 'graph'")


def beam_set_from_json(obj: dict) -> BeamSet:
    if "id" not in obj or "beams" not in obj:
        raise KeyError("record needs 'id' and 'beams'")
    cands, invalid = [], 0
    for b in obj["beams"]:
        try:
            cands.append(parse_beam(b))
        except (GraphError, KeyError, TypeError, ValueError) as err:
            invalid += 1
            log.debug("record %s: dropping beam: %s", obj["id"], err)
    return BeamSet(tuple(cands), str(obj["id"]), obj.get("input", ""), invalid)


@dataclass
class ReadResult:
    items: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)


def read_beams(path, strict: bool = False) -> ReadResult:
    """Beam JSONL, one sentence per line. Malformed records raise if ``strict`` else are collected."""
    res = ReadResult()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                bs = beam_set_from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as err:
                e = RecordError(str(err), lineno)
                if strict:
                    raise e from err
                res.errors.append(e)
                continue
            if bs.input_id in res.items:
                e = RecordError(f"duplicate id {bs.input_id!r}", lineno)
                if strict:
                    raise e
                res.errors.append(e)
                continue
            res.items[bs.input_id] = bs
    return res


def _graph_from(value) -> SemanticGraph:
    return SemanticGraph.from_json(value) if isinstance(value, dict) else parse(value)


def read_graphs(path, strict: bool = False) -> ReadResult:
    """Graph corpus keyed by id.

    ``.jsonl``/``.json``: records ``{"id": ..., "graph": "(...)" | {json form}}``.
    Otherwise the ``.graphs`` text form: one graph per line, ``#`` comments,
    and an optional ``# ::id X`` comment naming the next graph; unnamed
    graphs get their 0-based ordinal as id.
    """
    res = ReadResult()
    json_lines = Path(path).suffix in (".jsonl", ".json")
    pending_id = None
    ordinal = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                if json_lines:
                    obj = json.loads(text)
                    key, graph = str(obj["id"]), _graph_from(obj["graph"])
                else:
                    if text.startswith("#"):
                        if text.startswith("# ::id"):
                            pending_id = text[len("# ::id"):].strip()
                        continue
                    key = pending_id if pending_id is not None else str(ordinal)
                    pending_id = None
                    ordinal += 1
                    graph = parse(text)
                if key in res.items:
                    raise ValueError(f"duplicate id {key!r}")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                e = RecordError(str(err), lineno)
                if strict:
                    raise e from err
                res.errors.append(e)
                continue
            res.items[key] = graph
    return res


def write_graphs(path, graphs: dict):
    with open(path, "w", encoding="utf-8") as fh:
        for key, g in graphs.items():
            fh.write(f"# ::id {key}\n{serialize(g)}\n")


def prediction_record(key: str, result) -> dict:
    d = result.diagnostics
    return {"id": key, "graph": serialize(result.graph), "novel": d.get("novel", False),
            "component": d.get("component"), "fallback": d.get("fallback", False),
            "mean_alpha": d.get("mean_alpha"), "pruned": d.get("pruned", []),
            "variables": d.get("variables", [])}


def write_jsonl(path_or_fh, records):
    close = False
    fh = path_or_fh
    if isinstance(path_or_fh, (str, Path)):
        fh = open(path_or_fh, "w", encoding="utf-8")
        close = True
    try:
        for r in records:
            fh.write(json.dumps(r, sort_keys=False) + "\n")
    finally:
        if close:
            fh.close()
