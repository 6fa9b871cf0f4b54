"""Calibrated subgraph-level uncertainty and neural-symbolic inference for seq2seq graph parsers."""

from .config import DecisionConfig, RunConfig
from .evaluate import calibration_report, corpus_smatch, novelty_report
from .gap import BeamSet, beam_posterior, compute_gap, from_precomputed, segment_symbols
from .graph import SemanticGraph, parse, parse_linearized, serialize, triples
from .inference import SymbolicPrior, alpha, cluster_beams, criterion, infer, mixture_select, prune, run_pipeline
from .metagraph import attach_symbolic, build_meta_graph
from .smatch import align, exhaustive_align, smatch_score

__version__ = "0.1.0"

__all__ = [
    "BeamSet", "DecisionConfig", "RunConfig", "SemanticGraph", "SymbolicPrior",
    "align", "alpha", "attach_symbolic", "beam_posterior", "build_meta_graph", "calibration_report",
    "cluster_beams", "compute_gap", "corpus_smatch", "criterion", "exhaustive_align", "from_precomputed",
    "infer", "mixture_select", "novelty_report", "parse", "parse_linearized", "prune", "run_pipeline",
    "segment_symbols", "serialize", "smatch_score", "triples",
]
