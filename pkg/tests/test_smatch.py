import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapinfer.graph import parse
from gapinfer.smatch import (
    MatchScore,
    align,
    exhaustive_align,
    is_isomorphic,
    node_edge_f1,
    smatch_score,
)
from helpers import random_dag

A = parse("(_a_n :ARG1 (_b_n))")
B = parse("(_a_n :ARG1 (_c_n))")


def test_three_of_four():
    al = align(A, B)
    assert al.score == MatchScore(3, 4, 4)
    assert al.score.f1 == pytest.approx(0.75)
    assert exhaustive_align(A, B).score == al.score


def test_node_edge_f1():
    al = exhaustive_align(A, B)
    assert node_edge_f1(A, B, al) == pytest.approx((0.5, 1.0))
    assert node_edge_f1(A, A, exhaustive_align(A, A)) == (1.0, 1.0)


def test_micro_corpus():
    total = smatch_score(A, B) + smatch_score(A, A)
    assert (total.matched, total.total_a, total.total_b) == (7, 8, 8)
    assert total.f1 == pytest.approx(0.875)


def test_disjoint_labels_still_match_structure():
    a = parse("(x :R (y))")
    b = parse("(p :R (q :S (r)))")
    # top + the R edge under the root-to-root mapping
    assert exhaustive_align(a, b).matched_triples == 2
    assert align(a, b).matched_triples == 2


def test_exhaustive_size_limit():
    big = random_dag(random.Random(0), 9)
    with pytest.raises(ValueError):
        exhaustive_align(big, big)


def test_match_score_zero_division():
    assert MatchScore(0, 0, 0).f1 == 0.0


def test_isomorphic():
    assert is_isomorphic(parse("(a :R (b) :S (c))"), parse("(a :S (c) :R (b))"))
    assert not is_isomorphic(A, B)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_identity(seed, n):
    g = random_dag(random.Random(seed), n)
    s = align(g, g).score
    assert s.matched == len(g.nodes) + len(g.edges) + 1 and s.f1 == 1.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_never_exceeds_oracle_and_symmetric_oracle(seed):
    rng = random.Random(seed)
    a, b = random_dag(rng, rng.randint(1, 6)), random_dag(rng, rng.randint(1, 6))
    ex = exhaustive_align(a, b)
    assert align(a, b).matched_triples <= ex.matched_triples
    assert exhaustive_align(b, a).matched_triples == ex.matched_triples


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mapping_injective_and_consistent(seed):
    rng = random.Random(seed)
    a, b = random_dag(rng, rng.randint(1, 8)), random_dag(rng, rng.randint(1, 8))
    al = align(a, b, seed=seed % 100)
    used = [j for j in al.mapping if j >= 0]
    assert len(used) == len(set(used))
    assert al.score.total_a == len(a.nodes) + len(a.edges) + 1


def test_oracle_agreement_rate():
    rng = random.Random(1234)
    start = time.perf_counter()
    same = 0
    for _ in range(200):
        a, b = random_dag(rng, rng.randint(1, 6)), random_dag(rng, rng.randint(1, 6))
        same += align(a, b).score.f1 == exhaustive_align(a, b).score.f1
    assert same >= 190
    assert time.perf_counter() - start < 10
