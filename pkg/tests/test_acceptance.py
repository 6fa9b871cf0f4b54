"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from gapinfer.config import DecisionConfig  # noqa: E402
from gapinfer.evaluate import ElementRecord, bucketize, novelty_report  # noqa: E402
from gapinfer.gap import (  # noqa: E402
    BeamSet,
    UnobservedConditionError,
    beam_posterior,
    compute_gap,
    conditional,
    graphical_likelihood,
    marginal,
    reverse_conditional,
)
from gapinfer.graph import parse, serialize  # noqa: E402
from gapinfer.inference import (  # noqa: E402
    alpha,
    cluster_beams,
    criterion,
    lcs_distance,
    prune,
    run_pipeline,
)
from gapinfer.metagraph import build_meta_graph  # noqa: E402
from gapinfer.smatch import align, exhaustive_align, is_isomorphic, smatch_score  # noqa: E402
from helpers import (  # noqa: E402
    F1_BEAM1,
    F1_G0,
    beam,
    f1_beams,
    novel_fixture,
    random_beam_set,
    random_dag,
    two_candidate_tables,
)


def report(n, name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {n:>2} {name}: {detail}")
    return ok


def _estimator_errors(bs, t):
    """Largest absolute difference between the package estimators and the brute-force oracle."""
    meta = build_meta_graph(bs.graphs)
    real, post = meta.realization_table(bs), beam_posterior(bs, t)
    ob, seq = oracles.tables_from(meta, bs)
    floor = math.log(1e-10)
    events = sorted({(v, r.value) for row in real for v, r in row.items()})
    worst, checks = 0.0, 0
    for var, value in events:
        ev = [(var, value)]
        worst = max(worst, abs(marginal(var, value, real, post) - oracles.marginal(ob, seq, t, ev)))
        parents = meta[var].parents
        worst = max(worst, abs(graphical_likelihood(var, value, parents, real, post)
                               - oracles.graphical(ob, seq, t, var, value, parents, floor)))
        checks += 2
        for g in events:
            if g[0] == var:
                continue
            try:
                mine = conditional(ev, [g], real, post)
            except UnobservedConditionError:
                continue
            worst = max(worst, abs(mine - oracles.conditional(ob, seq, t, ev, [g])))
            checks += 1
            try:
                mine = reverse_conditional(ev, [g], real, post)
            except ZeroDivisionError:
                continue
            worst = max(worst, abs(mine - oracles.reverse(ob, seq, t, ev, [g])))
            checks += 1
    return worst, checks


def test_01_estimator_oracle():
    start = time.perf_counter()
    rng = random.Random(2024)
    sets = [f1_beams()]
    while len(sets) < 21:
        bs = random_beam_set(rng, rng.randint(1, 4), max_nodes=3)
        if max(len(c.symbol_logprobs) for c in bs.candidates) <= 6:
            sets.append(bs)
    worst, checks = 0.0, 0
    for bs in sets:
        w, c = _estimator_errors(bs, 1.0)
        worst, checks = max(worst, w), checks + c
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 1.0
    assert report(1, "estimator oracle", ok, f"max |diff|={worst:.2e} over {checks} checks, {elapsed:.2f}s")


def test_02_f1_end_to_end():
    cfg = DecisionConfig(t=1.0)
    g0 = parse(F1_G0)
    outs = {b: run_pipeline(f1_beams(), g0, cfg.with_(b=b)).graph for b in (0.25, 50.0, -50.0)}
    ok = (is_isomorphic(outs[0.25], g0) and is_isomorphic(outs[50.0], parse(F1_BEAM1))
          and is_isomorphic(outs[-50.0], g0))
    detail = ", ".join(f"b={b:g} -> {serialize(g)}" for b, g in outs.items())
    assert report(2, "fixture F1 end-to-end", ok, detail)


def test_03_confidence_switching():
    cfg = DecisionConfig()
    picks = []
    for probs in ((0.999, 0.001), (0.62, 0.25)):
        gap, prior = two_candidate_tables(*probs)
        scores = {s: criterion(0, s, gap, prior, cfg) for s in ("high", "low")}
        picks.append(max(scores, key=scores.get))
    ok = picks == ["high", "low"]
    assert report(3, "confidence switching", ok, f"confident -> {picks[0]}, uncertain -> {picks[1]}")


def test_04_smatch_oracle():
    rng = random.Random(99)
    start = time.perf_counter()
    equal, exceed = 0, 0
    for _ in range(200):
        a, b = random_dag(rng, rng.randint(1, 6)), random_dag(rng, rng.randint(1, 6))
        hc, ex = align(a, b, restarts=4, iterations=5), exhaustive_align(a, b)
        equal += hc.score.f1 == ex.score.f1
        exceed += hc.matched_triples > ex.matched_triples
    elapsed = time.perf_counter() - start
    ok = equal >= 190 and exceed == 0 and elapsed < 10
    assert report(4, "smatch oracle", ok, f"{equal}/200 equal, {exceed} exceed, {elapsed:.2f}s")


def test_05_temperature_limits():
    cold_max, dev = 1.0, 0.0
    for lps in ([math.log(0.9), math.log(0.4)], [math.log(0.9), math.log(0.4), math.log(0.35)]):
        cold_max = min(cold_max, max(beam_posterior(lps, 1e-6).weights))
        dev = max(dev, max(abs(w - 1 / len(lps)) for w in beam_posterior(lps, 1e6).weights))
    ok = cold_max > 1 - 1e-6 and dev < 1e-6
    assert report(5, "temperature limits", ok, f"t=1e-6 max weight {cold_max:.9f}; t=1e6 max dev {dev:.1e}")


def test_06_alpha_curve():
    cfg = DecisionConfig(T=0.1, b=0.25)
    values = [alpha(h / 10, cfg) for h in range(101)]
    decreasing = all(x > y for x, y in zip(values, values[1:]))
    ok = abs(values[0] - 0.56217) <= 1e-5 and decreasing
    assert report(6, "alpha curve", ok, f"alpha(0)={values[0]:.6f}, strictly decreasing={decreasing}")


def _reachable(meta):
    seen, stack = {meta.root_var}, [meta.root_var]
    while stack:
        for c in meta[stack.pop()].children:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def test_07_pruning_safety():
    rng = random.Random(7)
    threshold = 0.3
    bad, removed = 0, 0
    for _ in range(50):
        bs = random_beam_set(rng, rng.randint(1, 4), max_nodes=5)
        meta = build_meta_graph(bs.graphs)
        gap = compute_gap(meta, bs, DecisionConfig(t=1.0))
        kept = prune(meta, gap, threshold)
        gone = set(meta.by_id) - set(kept.by_id)
        removed += len(gone)
        endpoints_ok = all(e.source in kept.by_id and e.target in kept.by_id for e in kept.edge_vars)
        if any(gap.max_marginal(v) >= threshold for v in gone) or _reachable(kept) != set(kept.by_id) \
                or not endpoints_ok:
            bad += 1
    ok = bad == 0 and removed > 0
    assert report(7, "pruning safety", ok, f"{removed} variables pruned over 50 meta graphs, {bad} violations")


def test_08_clustering():
    group_a = [beam("(a :R (b))", [0.9, 0.9, 0.9]) for _ in range(3)]
    group_b = [beam("(c :S (d))", [0.5, 0.5, 0.5]) for _ in range(2)]
    mix = cluster_beams(BeamSet(tuple(group_a + group_b)), DecisionConfig(mixture_cut=0.5))
    fractions = sorted(c.weight for c in mix.components)
    d = lcs_distance(["A", "B", "C"], ["A", "C"])
    ok = len(mix) == 2 and fractions == [0.4, 0.6] and abs(d - 1 / 3) <= 1e-12
    assert report(8, "clustering", ok, f"M={len(mix)}, fractions={fractions}, LCS distance={d:.15f}")


def test_09_calibration_bookkeeping():
    rng = random.Random(9)
    records = []
    for i in range(1000):
        logp = -rng.uniform(0, 1e-5) if i % 10 == 0 else math.log(rng.uniform(0.01, 0.99999))
        records.append(ElementRecord("s", i, "node", "x", logp, rng.random() < math.exp(logp), None))
    rep = bucketize(records, 10)
    kept = [r for r in records if r.logprob <= -1e-5]
    counts = [b.count for b in rep.buckets]
    weighted = sum(Fraction(b.neural_correct, b.count) * b.count for b in rep.buckets) / sum(counts)
    overall = Fraction(sum(r.neural_correct for r in kept), len(kept))
    ok = (max(counts) - min(counts) <= 1 and rep.excluded_count == len(records) - len(kept)
          and sum(counts) == len(kept) and weighted == overall)
    assert report(9, "calibration bookkeeping", ok,
                  f"counts {min(counts)}..{max(counts)}, excluded={rep.excluded_count}, "
                  f"weighted acc {float(weighted):.4f} == overall {float(overall):.4f}")


def test_10_novel_synthesis():
    bs, g0, gold = novel_fixture()
    pred = run_pipeline(bs, g0).graph
    refs = bs.graphs + [g0]
    novel = not any(is_isomorphic(pred, r) for r in refs)
    nov = novelty_report({"n": pred}, {"n": bs}, {"n": g0}, {"n": gold})
    pred_f1 = smatch_score(pred, gold).f1
    best_ref = max(smatch_score(r, gold).f1 for r in refs)
    ok = novel and nov.novel_count == 1 and pred_f1 > best_ref
    assert report(10, "novel graph synthesis", ok,
                  f"{serialize(pred)} novel={novel}, novel_count={nov.novel_count}, "
                  f"smatch {pred_f1:.3f} vs best candidate {best_ref:.3f}")


def test_11_round_trip():
    rng = random.Random(11)
    failures = 0
    for _ in range(500):
        g = random_dag(rng, rng.randint(1, 12), reentrancy=0.2)
        first = serialize(g)
        if serialize(parse(first)) != first:
            failures += 1
    assert report(11, "round-trip", failures == 0, f"{500 - failures}/500 byte-identical")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError as err:
            failed += 1
            if not str(err).startswith("assert report"):
                print(f"[FAIL] {fn.__name__}: {err!r}")
    sys.exit(1 if failed else 0)
