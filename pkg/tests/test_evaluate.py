import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapinfer.evaluate import (
    ElementRecord,
    IdMismatchError,
    bucketize,
    calibration_report,
    corpus_smatch,
    label_breakdown,
    novelty_report,
    sentence_elements,
)
from gapinfer.graph import parse
from gapinfer.inference import run_pipeline
from helpers import F1_BEAM1, F1_BEAM2, F1_G0, f1_beams, novel_fixture

A, B = parse(F1_BEAM1), parse(F1_BEAM2)


def rec(p, ok, sym=None):
    return ElementRecord("s", 0, "node", "x", math.log(p), ok, sym)


def test_corpus_identical():
    assert corpus_smatch({"1": A, "2": B}, {"1": A, "2": B}).score.f1 == 1.0


def test_corpus_0875():
    s = corpus_smatch({"1": A, "2": A}, {"1": B, "2": A})
    assert (s.score.matched, s.score.total_a, s.score.total_b) == (7, 8, 8)
    assert s.score.f1 == pytest.approx(0.875)
    assert s.node_f1 == pytest.approx(0.75) and s.edge_f1 == 1.0


def test_corpus_errors():
    with pytest.raises(ValueError):
        corpus_smatch({}, {})
    with pytest.raises(IdMismatchError):
        corpus_smatch({"1": A}, {"2": A})


def test_excludes_near_certain():
    records = [rec(math.exp(-1e-6), True)] + [rec(0.5, True) for _ in range(10)]
    report = bucketize(records, 2)
    assert report.excluded_count == 1 and report.retained == 10


def test_equal_count_bins():
    rng = random.Random(0)
    records = [rec(rng.uniform(0.01, 0.99), True) for _ in range(100)]
    assert [b.count for b in bucketize(records, 10).buckets] == [10] * 10


def test_separable_step():
    rng = random.Random(1)
    records = []
    for _ in range(200):
        p = rng.uniform(0.01, 0.99)
        records.append(rec(p, p >= 0.5))
    records += [rec(0.49, False), rec(0.51, True)]
    buckets = bucketize(records, 2).buckets
    accs = [b.neural_acc for b in buckets]
    assert accs[0] < 0.1 and accs[-1] > 0.9
    for b in bucketize(records, 10).buckets:
        assert b.neural_acc in (0.0, 1.0) or b.low < 0.5 <= b.high


def test_too_many_bins():
    with pytest.raises(ValueError):
        bucketize([rec(0.5, True)] * 3, 4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_bins=st.integers(1, 30))
def test_bucket_bookkeeping(seed, n_bins):
    rng = random.Random(seed)
    records = [rec(rng.choice([1.0, rng.uniform(1e-4, 1.0)]), rng.random() < 0.6, rng.random() < 0.5)
               for _ in range(300)]
    report = bucketize(records, n_bins)
    counts = [b.count for b in report.buckets]
    kept = [r for r in records if r.logprob <= -1e-5]
    assert sum(counts) == len(kept) and report.excluded_count == len(records) - len(kept)
    assert max(counts) - min(counts) <= 1
    assert sum(b.neural_correct for b in report.buckets) == sum(r.neural_correct for r in kept)
    lows = [b.low for b in report.buckets]
    assert lows == sorted(lows)


def test_csv_and_json():
    report = bucketize([rec(0.3, True, False), rec(0.6, False, True)], 2)
    lines = report.to_csv().splitlines()
    assert lines[0] == "bucket_low,bucket_high,count,neural_acc,symbolic_acc"
    assert len(lines) == 3
    assert report.to_json()["buckets"][1]["symbolic_acc"] == 1.0


def test_sentence_elements_f1():
    records = sentence_elements(f1_beams(), parse(F1_G0), parse(F1_G0))
    by_var = {r.var: r for r in records}
    assert by_var[2].value == "_b_n" and not by_var[2].neural_correct
    assert by_var[2].symbolic_correct
    assert by_var[0].neural_correct and by_var[1].neural_correct


def test_calibration_report_ids():
    with pytest.raises(IdMismatchError):
        calibration_report({"a": f1_beams()}, {"b": A})
    report = calibration_report({"a": f1_beams()}, {"a": A}, n_bins=1)
    assert report.retained + report.excluded_count == 3


def test_label_breakdown():
    out = label_breakdown([rec(0.5, True), rec(0.5, False)])
    assert out["x"]["count"] == 2 and out["x"]["neural_acc"] == 0.5


def test_novelty_top_beam_not_novel():
    bs = f1_beams()
    r = novelty_report({"1": bs.graphs[0]}, {"1": bs}, None, {"1": A})
    assert r.novel_count == 0 and r.smatch_on_novel is None and r.smatch_on_non_novel == 1.0


def test_novelty_fixture():
    bs, g0, gold = novel_fixture()
    pred = run_pipeline(bs, g0).graph
    r = novelty_report({"n": pred}, {"n": bs}, {"n": g0}, {"n": gold})
    assert r.novel_count == 1 and r.novel_ids == ["n"]
    assert r.smatch_on_novel == 1.0
    assert r.novel_count <= r.total
