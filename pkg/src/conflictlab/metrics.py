"""Binary-classification counts and reports.

Conflict ("yes") is the positive class everywhere. Macro averages are the
canonical headline numbers; micro and support-weighted variants ride along
as extra report fields. Ratios with a zero denominator are reported as 0.0
and flagged in ``degenerate`` instead of going NaN, so reports stay
serializable and comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import EmptyInput, EmptyMatrix
from .model import ConflictLabel

CONFLICT = "conflict"
NO_CONFLICT = "no_conflict"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    n: int
    degenerate: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["degenerate"] = list(self.degenerate)
        return d


def confusion_from_pairs(
    pairs: list[tuple[ConflictLabel, ConflictLabel]],
) -> ConfusionMatrix:
    """Tabulate (truth, prediction) pairs with Conflict as the positive class."""
    if not pairs:
        raise EmptyInput("cannot tabulate an empty pair list")
    tp = fp = fn = tn = 0
    for truth, pred in pairs:
        if truth is ConflictLabel.CONFLICT:
            if pred is ConflictLabel.CONFLICT:
                tp += 1
            else:
                fn += 1
        else:
            if pred is ConflictLabel.CONFLICT:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int, tag: str, degenerate: list[str]) -> float:
    if den == 0:
        degenerate.append(tag)
        return 0.0
    return num / den


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy plus per-class and averaged precision/recall/F1.

    Macro values are the unweighted means over the two classes; per-class F1
    is 2PR/(P+R) when P+R > 0 and 0 (flagged) otherwise.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no entries")

    degenerate: list[str] = []
    accuracy = (cm.tp + cm.tn) / cm.total

    # Per-class rows: the NoConflict row is the matrix with roles swapped.
    rows = {
        CONFLICT: (cm.tp, cm.fp, cm.fn),
        NO_CONFLICT: (cm.tn, cm.fn, cm.fp),
    }
    per_class: dict[str, ClassMetrics] = {}
    for cls, (hit, false_pos, miss) in rows.items():
        precision = _ratio(hit, hit + false_pos, f"{cls}:precision", degenerate)
        recall = _ratio(hit, hit + miss, f"{cls}:recall", degenerate)
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            degenerate.append(f"{cls}:f1")
            f1 = 0.0
        per_class[cls] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=hit + miss
        )

    c = per_class[CONFLICT]
    nc = per_class[NO_CONFLICT]
    macro_precision = (c.precision + nc.precision) / 2
    macro_recall = (c.recall + nc.recall) / 2
    macro_f1 = (c.f1 + nc.f1) / 2

    # Micro-averaging over both classes counts every item once per class
    # view, which for a single-label task collapses to accuracy.
    micro = accuracy

    total = cm.total
    weighted_precision = (c.precision * c.support + nc.precision * nc.support) / total
    weighted_recall = (c.recall * c.support + nc.recall * nc.support) / total
    weighted_f1 = (c.f1 * c.support + nc.f1 * nc.support) / total

    return MetricsReport(
        accuracy=accuracy,
        per_class=per_class,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
        micro_precision=micro,
        micro_recall=micro,
        micro_f1=micro,
        weighted_precision=weighted_precision,
        weighted_recall=weighted_recall,
        weighted_f1=weighted_f1,
        n=total,
        degenerate=tuple(degenerate),
    )
