import random

import pytest

from aisaudit.consistency import iou, pairwise_consistency
from aisaudit.corpus import PredictionSet
from aisaudit.errors import CoverageMismatch

from conftest import make_corpus, make_record


def test_iou_fractions():
    assert iou({"a", "b"}, {"b", "c"}) == 1 / 3
    assert iou({"a"}, {"a"}) == 1.0
    assert iou({"a"}, {"b"}) == 0.0
    assert iou(set(), {"a"}) == 0.0


def test_iou_undefined_when_both_empty():
    assert iou(set(), set()) is None


def test_iou_matches_brute_force():
    rng = random.Random(23)
    universe = [f"id{i}" for i in range(20)]
    for _ in range(300):
        a = {x for x in universe if rng.random() < 0.4}
        b = {x for x in universe if rng.random() < 0.4}
        inter = sum(1 for x in universe if x in a and x in b)
        union = sum(1 for x in universe if x in a or x in b)
        expected = None if union == 0 else inter / union
        assert iou(a, b) == expected


def test_adding_shared_element_never_decreases_iou():
    rng = random.Random(5)
    for _ in range(200):
        a = {f"x{i}" for i in range(rng.randint(0, 8)) if rng.random() < 0.7}
        b = {f"x{i}" for i in range(rng.randint(0, 8)) if rng.random() < 0.7}
        before = iou(a, b)
        after = iou(a | {"new"}, b | {"new"})
        if before is not None:
            assert after >= before


def _three_evaluator_fixture():
    # zero-sets by construction: e1 -> {a, b}, e2 -> {b, c}, e3 -> {a, b, c}
    corpus = make_corpus([make_record(cid, label=1) for cid in "abcdef"])
    low, high = 0.1, 0.9
    sets = {"e1": {"a", "b"}, "e2": {"b", "c"}, "e3": {"a", "b", "c"}}
    preds = [
        PredictionSet(
            evaluator=name,
            scores={cid: (low if cid in zero_set else high) for cid in "abcdef"},
        )
        for name, zero_set in sorted(sets.items())
    ]
    return corpus, preds


def test_pairwise_matrix_matches_hand_computation():
    corpus, preds = _three_evaluator_fixture()
    matrix = pairwise_consistency(preds, corpus, target_label=0)
    assert matrix.evaluators == ("e1", "e2", "e3")
    assert matrix.pair("e1", "e2") == 1 / 3
    assert matrix.pair("e1", "e3") == 2 / 3
    assert matrix.pair("e2", "e3") == 2 / 3


def test_matrix_is_symmetric_with_unit_diagonal():
    corpus, preds = _three_evaluator_fixture()
    for target in (0, 1):
        matrix = pairwise_consistency(preds, corpus, target_label=target)
        n = len(matrix.evaluators)
        for i in range(n):
            assert matrix.values[i][i] == 1.0
            for j in range(n):
                assert matrix.values[i][j] == matrix.values[j][i]


def test_diagonal_undefined_for_empty_target_set():
    corpus = make_corpus([make_record("a", label=1)])
    pred = PredictionSet(evaluator="e", scores={"a": 0.9})
    matrix = pairwise_consistency([pred], corpus, target_label=0)
    assert matrix.values[0][0] is None


def test_slice_restricts_to_dataset():
    corpus = make_corpus(
        [make_record("a", dataset="d1"), make_record("b", dataset="d2")]
    )
    pred = PredictionSet(evaluator="e", scores={"a": 0.1})
    matrix = pairwise_consistency([pred], corpus, target_label=0, dataset="d1")
    assert matrix.values[0][0] == 1.0


def test_coverage_mismatch():
    corpus = make_corpus([make_record("a"), make_record("b")])
    pred = PredictionSet(evaluator="e", scores={"a": 0.5})
    with pytest.raises(CoverageMismatch):
        pairwise_consistency([pred], corpus, target_label=0)


def test_target_label_validated():
    corpus = make_corpus([make_record("a")])
    pred = PredictionSet(evaluator="e", scores={"a": 0.5})
    with pytest.raises(ValueError):
        pairwise_consistency([pred], corpus, target_label=2)
