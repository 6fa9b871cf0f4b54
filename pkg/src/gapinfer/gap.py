"""Graph Autoregressive Process: symbol-level probabilities from beam outputs.

Token log-probabilities are grouped into symbols (node labels, edge roles),
beams are weighted by a tempered posterior, and graph-element marginals and
conditionals are estimated by importance sampling over the beams. Graph
elements are addressed through meta-graph variables: for every beam, a
realization table maps variable id -> (value, symbol log-prob, position).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .config import LOG_FLOOR, DecisionConfig
from .graph import STRUCTURAL, LinearizedGraph, SemanticGraph, parse_linearized

_LOGPROB_TOL = 1e-9

Event = tuple  # (variable id, value)


class UnobservedConditionError(ValueError):
    """The conditioning symbols occur in no beam."""


@dataclass(frozen=True)
class BeamCandidate:
    tokens: tuple
    sequence_logprob: float
    linearized: LinearizedGraph
    graph: SemanticGraph
    symbol_logprobs: tuple
    structure_logprob: float = 0.0

    def __post_init__(self):
        if len(self.symbol_logprobs) != len(self.linearized.symbols):
            raise ValueError(f"{len(self.symbol_logprobs)} symbol log-probs for "
                             f"{len(self.linearized.symbols)} symbols")
        if any(lp > _LOGPROB_TOL for lp in self.symbol_logprobs) or self.sequence_logprob > _LOGPROB_TOL:
            raise ValueError("log-probabilities must be <= 0")
        # structural tokens only lower the sequence total
        if self.sequence_logprob > sum(self.symbol_logprobs) + 1e-6:
            raise ValueError("sequence log-prob exceeds the sum of its symbol log-probs")

    @property
    def text(self) -> str:
        return self.linearized.text

    def symbol_sequence(self) -> list[str]:
        return self.linearized.symbol_texts()


def segment_symbols(tokens: Sequence) -> BeamCandidate:
    """Group decoded tokens into graph symbols.

    Each token is credited to the symbol span containing its first
    character; tokens starting on a structural character (or empty) go to
    a discarded structure bucket. Raises ``ParseError`` when the
    detokenized text is not a valid graph.
    """
    tokens = tuple((str(txt), float(lp)) for txt, lp in tokens)
    text = "".join(txt for txt, _ in tokens)
    graph, lin = parse_linearized(text)
    sym = [0.0] * len(lin.symbols)
    structure = 0.0
    offset = 0
    for txt, lp in tokens:
        idx = None
        if txt and txt[0] not in STRUCTURAL:
            idx = lin.span_at(offset)
        if idx is None:
            structure += lp
        else:
            sym[idx] += lp
        offset += len(txt)
    seq = sum(lp for _, lp in tokens)
    return BeamCandidate(tokens, seq, lin, graph, tuple(sym), structure)


def from_precomputed(graph_text: str, symbol_logprobs: Sequence[float],
                     sequence_logprob: float | None = None) -> BeamCandidate:
    graph, lin = parse_linearized(graph_text)
    sym = tuple(float(x) for x in symbol_logprobs)
    seq = sum(sym) if sequence_logprob is None else float(sequence_logprob)
    return BeamCandidate((), seq, lin, graph, sym, seq - sum(sym))


@dataclass(frozen=True)
class BeamSet:
    candidates: tuple
    input_id: str = ""
    input_text: str = ""
    n_invalid: int = 0

    def __post_init__(self):
        cands = tuple(sorted(self.candidates, key=lambda c: -c.sequence_logprob))
        object.__setattr__(self, "candidates", cands)

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, k) -> BeamCandidate:
        return self.candidates[k]

    @property
    def graphs(self) -> list[SemanticGraph]:
        return [c.graph for c in self.candidates]

    def subset(self, indices: Iterable[int]) -> "BeamSet":
        return BeamSet(tuple(self.candidates[k] for k in indices), self.input_id, self.input_text)


@dataclass(frozen=True)
class BeamPosterior:
    weights: tuple
    temperature: float
    log_weights: tuple = ()

    def renormalized(self, support: Sequence[int]) -> dict:
        """Weights restricted to ``support`` and renormalized (computed in log space)."""
        lw = np.array([self.log_weights[k] for k in support])
        w = np.exp(lw - lw.max())
        w /= w.sum()
        return {k: float(x) for k, x in zip(support, w)}

    def __len__(self):
        return len(self.weights)


def beam_posterior(beams, t: float) -> BeamPosterior:
    """Importance weights: softmax of sequence log-likelihoods divided by ``t``.

    ``beams`` is a BeamSet or a sequence of sequence log-probabilities.
    """
    if not t > 0:
        raise ValueError("temperature must be > 0")
    if isinstance(beams, BeamSet):
        lps = [c.sequence_logprob for c in beams.candidates]
    else:
        lps = list(beams)
    z = np.asarray(lps, dtype=float) / t
    log_w = z - logsumexp(z)
    w = np.exp(z - z.max())
    w /= w.sum()
    return BeamPosterior(tuple(float(x) for x in w), t, tuple(float(x) for x in log_w))


@dataclass(frozen=True)
class Realization:
    """How one beam realizes one variable."""

    value: str
    logprob: float
    position: int  # symbol index in the beam's linearization


RealizationTable = Sequence  # per beam: dict[var id, Realization]


def _local(real: dict, events) -> float:
    """Product of the beam's local symbol probabilities for ``events`` (0 if any is absent)."""
    p = 1.0
    for var, value in events:
        r = real.get(var)
        if r is None or r.value != value:
            return 0.0
        p *= math.exp(r.logprob)
    return p


def _contains(real: dict, events) -> bool:
    for var, value in events:
        r = real.get(var)
        if r is None or r.value != value:
            return False
    return True


def marginal(var, value, realizations: RealizationTable, posterior: BeamPosterior) -> float:
    """p(v = value | x): posterior-weighted local probability, 0 for beams lacking it."""
    return joint_marginal([(var, value)], realizations, posterior)


def joint_marginal(events, realizations: RealizationTable, posterior: BeamPosterior) -> float:
    return sum(w * _local(real, events) for w, real in zip(posterior.weights, realizations))


def conditional(target, given, realizations: RealizationTable, posterior: BeamPosterior) -> float:
    """p(target | given, x) with weights renormalized over beams containing ``given``.

    ``target``/``given`` are sequences of (variable, value) events. A beam
    contributes only when every target symbol follows every given symbol in
    its linearization. Targets already among the givens contribute a factor 1.
    """
    given = list(given)
    target = [e for e in target if e not in given]
    support = [k for k, real in enumerate(realizations) if _contains(real, given)]
    if not support:
        raise UnobservedConditionError(f"conditioning events {given} observed in no beam")
    if not target:
        return 1.0
    weights = posterior.renormalized(support)
    acc = 0.0
    for k in support:
        real = realizations[k]
        p = _local(real, target)
        if p == 0.0:
            continue
        if given:
            last_given = max(real[v].position for v, _ in given)
            if min(real[v].position for v, _ in target) <= last_given:
                continue
        acc += weights[k] * p
    return acc


def reverse_conditional(earlier, later, realizations: RealizationTable, posterior: BeamPosterior) -> float:
    """p(earlier | later, x) via Bayes' rule, clamped to [0, 1]."""
    denom = joint_marginal(later, realizations, posterior)
    if denom == 0.0:
        raise ZeroDivisionError(f"zero marginal for {list(later)}")
    num = conditional(later, earlier, realizations, posterior) * joint_marginal(earlier, realizations, posterior)
    return min(1.0, max(0.0, num / denom))


def _safe_log(p: float, floor: float) -> float:
    return max(floor, math.log(p)) if p > 0.0 else floor


@dataclass
class LocalLikelihood:
    loglik: float
    by_assignment: dict = field(default_factory=dict)  # parent assignment -> conditional prob
    fallback: bool = False


def graphical_likelihood_detail(var, value, parents: Sequence, realizations: RealizationTable,
                                posterior: BeamPosterior, floor: float = LOG_FLOOR) -> LocalLikelihood:
    event = [(var, value)]
    by_assignment: dict = {}
    logs = []
    for real in realizations:
        c = tuple((p, real[p].value) for p in sorted(parents) if p in real)
        if not c:
            continue
        own = real.get(var)
        reverse = own is not None and own.position < max(real[p].position for p, _ in c)
        key = (c, reverse)
        if key not in by_assignment:
            try:
                if reverse:
                    prob = reverse_conditional(event, c, realizations, posterior)
                else:
                    prob = conditional(event, c, realizations, posterior)
            except (UnobservedConditionError, ZeroDivisionError):
                prob = 0.0
            by_assignment[key] = prob
        logs.append(_safe_log(by_assignment[key], floor))
    if not logs:
        p = marginal(var, value, realizations, posterior)
        return LocalLikelihood(_safe_log(p, floor), {}, fallback=bool(parents))
    return LocalLikelihood(sum(logs) / len(logs), by_assignment)


def graphical_likelihood(var, value, parents: Sequence, realizations: RealizationTable,
                         posterior: BeamPosterior, floor: float = LOG_FLOOR) -> float:
    """log p(v = value | pa(v), x), averaged over the beams' parent assignments.

    Beam k contributes log p(value | c_k), c_k being the values its parents
    take in beam k; beams realizing none of the parents are skipped. When
    the variable precedes one of its parents in beam k's linearization the
    Bayes-reversed estimate is used. With no parent assignment at all the
    log marginal is returned.
    """
    return graphical_likelihood_detail(var, value, parents, realizations, posterior, floor).loglik


@dataclass
class GapTables:
    marginals: dict  # (var, value) -> p(v=value|x)
    cond_loglik: dict  # (var, value) -> log p(v=value|pa(v),x)
    parent_cond: dict  # (var, value, parent assignment, reversed) -> prob
    neural: dict  # var -> set of beam-realized values
    fallback: set
    posterior: BeamPosterior

    def max_marginal(self, var) -> float:
        return max((p for (v, _), p in self.marginals.items() if v == var), default=0.0)

    def candidates(self, var) -> list:
        return [s for (v, s) in self.cond_loglik if v == var]

    def map_value(self, var):
        """Neural MAP candidate of ``var`` (ties broken by marginal, then lexicographically)."""
        vals = sorted(self.neural.get(var, ())) or sorted(self.candidates(var))
        return min(vals, key=lambda s: (-self.cond_loglik[(var, s)], -self.marginals.get((var, s), 0.0), s))

    def graph_loglik(self, assignment: dict) -> float:
        return sum(self.cond_loglik[(v, s)] for v, s in assignment.items())


def compute_gap(meta, beam_set: BeamSet, config: DecisionConfig = DecisionConfig()) -> GapTables:
    """Marginals and graphical-model conditionals for every candidate of every variable."""
    posterior = beam_posterior(beam_set, config.t)
    realizations = meta.realization_table(beam_set)
    marginals, cond, parent_cond, neural = {}, {}, {}, {}
    fallback = set()
    for var in meta.variables:
        realized = {real[var.id].value for real in realizations if var.id in real}
        neural[var.id] = realized
        for value in var.candidates:
            marginals[(var.id, value)] = marginal(var.id, value, realizations, posterior)
            if value not in realized:
                cond[(var.id, value)] = config.logprob_floor
                continue
            ll = graphical_likelihood_detail(var.id, value, var.parents, realizations, posterior,
                                             config.logprob_floor)
            cond[(var.id, value)] = ll.loglik
            for (assign, rev), p in ll.by_assignment.items():
                parent_cond[(var.id, value, assign, rev)] = p
            if ll.fallback:
                fallback.add(var.id)
    return GapTables(marginals, cond, parent_cond, neural, fallback, posterior)
