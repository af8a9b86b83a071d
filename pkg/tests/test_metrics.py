"""Confusion tabulation and metric math.

Expected values for the published-matrix cases are frozen from exact
fractions tabulated by hand from the 140-observation test split counts:

    P2 matrix {tp:48, fp:10, fn:22, tn:60}
        accuracy        = 108/140
        conflict    P/R = 48/58, 48/70     F1 = 96/128
        no-conflict P/R = 60/82, 60/70     F1 = 120/152
    P1 matrix {tp:28, fp:4, fn:42, tn:66}
        accuracy        = 94/140
        conflict    P/R = 28/32, 28/70     F1 = 56/102
        no-conflict P/R = 66/108, 66/70    F1 = 132/178
"""

import pytest
from hypothesis import given, strategies as st

from conflictlab.errors import EmptyInput, EmptyMatrix
from conflictlab.metrics import (
    CONFLICT,
    NO_CONFLICT,
    ConfusionMatrix,
    compute_metrics,
    confusion_from_pairs,
)
from conflictlab.model import ConflictLabel

C = ConflictLabel.CONFLICT
N = ConflictLabel.NO_CONFLICT

P2_MATRIX = ConfusionMatrix(tp=48, fp=10, fn=22, tn=60)
P1_MATRIX = ConfusionMatrix(tp=28, fp=4, fn=42, tn=66)

P2_EXPECTED = {
    "accuracy": 108 / 140,
    "macro_precision": (48 / 58 + 60 / 82) / 2,
    "macro_recall": (48 / 70 + 60 / 70) / 2,
    "macro_f1": (96 / 128 + 120 / 152) / 2,
}
P1_EXPECTED = {
    "accuracy": 94 / 140,
    "macro_precision": (28 / 32 + 66 / 108) / 2,
    "macro_recall": (28 / 70 + 66 / 70) / 2,
    "macro_f1": (56 / 102 + 132 / 178) / 2,
}


def test_confusion_single_correct_positive():
    assert confusion_from_pairs([(C, C)]) == ConfusionMatrix(tp=1, fp=0, fn=0, tn=0)


def test_confusion_single_false_positive():
    assert confusion_from_pairs([(N, C)]) == ConfusionMatrix(tp=0, fp=1, fn=0, tn=0)


def test_confusion_published_counts():
    pairs = [(C, C)] * 48 + [(C, N)] * 22 + [(N, C)] * 10 + [(N, N)] * 60
    cm = confusion_from_pairs(pairs)
    assert cm == P2_MATRIX
    assert cm.total == 140


def test_confusion_empty_rejected():
    with pytest.raises(EmptyInput):
        confusion_from_pairs([])


def test_metrics_p2_matrix():
    report = compute_metrics(P2_MATRIX)
    for key, want in P2_EXPECTED.items():
        assert getattr(report, key) == pytest.approx(want, abs=1e-12)
    assert report.per_class[CONFLICT].precision == pytest.approx(48 / 58)
    assert report.per_class[CONFLICT].recall == pytest.approx(48 / 70)
    assert report.per_class[CONFLICT].f1 == pytest.approx(96 / 128)
    assert report.per_class[NO_CONFLICT].f1 == pytest.approx(120 / 152)
    assert report.n == 140
    assert report.degenerate == ()


def test_metrics_p1_matrix():
    report = compute_metrics(P1_MATRIX)
    for key, want in P1_EXPECTED.items():
        assert getattr(report, key) == pytest.approx(want, abs=1e-12)


def test_metrics_perfect_classifier():
    report = compute_metrics(ConfusionMatrix(tp=70, fp=0, fn=0, tn=70))
    assert report.accuracy == 1.0
    assert report.macro_precision == 1.0
    assert report.macro_recall == 1.0
    assert report.macro_f1 == 1.0


def test_metrics_empty_matrix_rejected():
    with pytest.raises(EmptyMatrix):
        compute_metrics(ConfusionMatrix(0, 0, 0, 0))


def test_zero_denominator_reports_zero_and_flags():
    # Never predicts positive and has no positive truth: conflict row is
    # fully degenerate.
    report = compute_metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=5))
    assert report.per_class[CONFLICT].precision == 0.0
    assert report.per_class[CONFLICT].recall == 0.0
    assert report.per_class[CONFLICT].f1 == 0.0
    assert "conflict:precision" in report.degenerate
    assert "conflict:recall" in report.degenerate
    assert "conflict:f1" in report.degenerate
    assert report.accuracy == 1.0


counts = st.integers(min_value=0, max_value=500)


@given(tp=counts, fp=counts, fn=counts, tn=counts)
def test_accuracy_exact_and_swap_invariance(tp, fp, fn, tn):
    if tp + fp + fn + tn == 0:
        return
    cm = ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
    report = compute_metrics(cm)
    assert abs(report.accuracy - (tp + tn) / cm.total) < 1e-12

    # Swapping the positive-class convention swaps the per-class rows and
    # leaves accuracy and every macro value unchanged.
    swapped = compute_metrics(ConfusionMatrix(tp=tn, fp=fn, fn=fp, tn=tp))
    assert swapped.accuracy == pytest.approx(report.accuracy, abs=1e-12)
    assert swapped.macro_precision == pytest.approx(report.macro_precision, abs=1e-12)
    assert swapped.macro_recall == pytest.approx(report.macro_recall, abs=1e-12)
    assert swapped.macro_f1 == pytest.approx(report.macro_f1, abs=1e-12)
    assert swapped.per_class[CONFLICT] == report.per_class[NO_CONFLICT]
    assert swapped.per_class[NO_CONFLICT] == report.per_class[CONFLICT]


@given(tp=counts, fp=counts, fn=counts, tn=counts)
def test_balanced_truth_macro_recall_equals_accuracy(tp, fp, fn, tn):
    # Force class balance: tp+fn == tn+fp.
    if tp + fn != tn + fp or tp + fp + fn + tn == 0:
        return
    report = compute_metrics(ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn))
    if tp + fn == 0:
        return
    assert report.macro_recall == pytest.approx(report.accuracy, abs=1e-12)


def test_balanced_property_on_published_matrices():
    for cm in (P2_MATRIX, P1_MATRIX):
        report = compute_metrics(cm)
        assert report.macro_recall == pytest.approx(report.accuracy, abs=1e-12)


def test_compute_metrics_is_pure():
    a = compute_metrics(P2_MATRIX)
    b = compute_metrics(P2_MATRIX)
    assert a == b
