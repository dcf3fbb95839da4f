"""Macro/Weighted F1 evaluation harness: confusion matrices, per-class
precision/recall/F1, per-group breakdowns, leakage filtering, and the
random-predictor baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import CodeSample, Corpus, LabelScheme
from .errors import ValidationError

# Which classes enter the macro average: classes seen in gold or predictions
# ("present", the default) or the whole scheme ("full").
CLASS_SET_POLICIES = ("present", "full")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[g][p] = samples with gold class g predicted as p."""

    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        k = len(self.classes)
        if self.counts.shape != (k, k):
            raise ValidationError(f"confusion counts must be {k}x{k}")
        if np.any(self.counts < 0):
            raise ValidationError("negative confusion count")
        self.counts.setflags(write=False)

    def support(self, c: str) -> int:
        return int(self.counts[self.classes.index(c)].sum())

    def predicted_count(self, c: str) -> int:
        return int(self.counts[:, self.classes.index(c)].sum())

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    matrix: ConfusionMatrix
    per_class: tuple[ClassMetrics, ...]
    macro_f1: float
    weighted_f1: float
    missing_classes: tuple[str, ...] = ()
    groups: dict | None = None
    leakage_removed: int = 0

    def to_dict(self) -> dict:
        d = {
            "classes": list(self.matrix.classes),
            "confusion": self.matrix.counts.tolist(),
            "per_class": [
                {
                    "class": m.name,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in self.per_class
            ],
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "missing_classes": list(self.missing_classes),
            "leakage_removed": self.leakage_removed,
        }
        if self.groups is not None:
            d["groups"] = {k: v.to_dict() for k, v in self.groups.items()}
        return d


def confusion(
    golds: Sequence[str], preds: Sequence[str], scheme: LabelScheme
) -> ConfusionMatrix:
    if len(golds) != len(preds):
        raise ValidationError(f"{len(golds)} gold labels vs {len(preds)} predictions")
    k = len(scheme.classes)
    index = {c: i for i, c in enumerate(scheme.classes)}
    counts = np.zeros((k, k), dtype=np.int64)
    for g, p in zip(golds, preds):
        if g not in index:
            raise ValidationError(f"unknown gold label {g!r}")
        if p not in index:
            raise ValidationError(f"unknown predicted label {p!r}")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(tuple(scheme.classes), counts)


def prf(matrix: ConfusionMatrix, c: str) -> tuple[float, float, float]:
    """Precision, recall, F1 for one class; every 0/0 counts as 0."""
    i = matrix.classes.index(c)
    tp = float(matrix.counts[i, i])
    fp = float(matrix.counts[:, i].sum() - tp)
    fn = float(matrix.counts[i].sum() - tp)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def _class_set(matrix: ConfusionMatrix, policy: str) -> list[str]:
    if policy not in CLASS_SET_POLICIES:
        raise ValidationError(f"unknown class-set policy {policy!r}")
    if policy == "full":
        return list(matrix.classes)
    return [
        c for c in matrix.classes if matrix.support(c) > 0 or matrix.predicted_count(c) > 0
    ]


def macro_f1(matrix: ConfusionMatrix, class_set_policy: str = "present") -> float:
    """Unweighted mean of per-class F1 over the chosen class set."""
    chosen = _class_set(matrix, class_set_policy)
    if not chosen:
        raise ValidationError("macro F1 over an empty class set")
    return float(np.mean([prf(matrix, c)[2] for c in chosen]))


def weighted_f1(matrix: ConfusionMatrix) -> float:
    """Gold-support-weighted mean of per-class F1."""
    n = matrix.total
    if n == 0:
        raise ValidationError("weighted F1 needs at least one gold sample")
    return float(sum(matrix.support(c) / n * prf(matrix, c)[2] for c in matrix.classes))


def random_baseline(k: int) -> float:
    """Expected macro F1 of a uniform-random predictor on balanced gold: 1/K."""
    if k < 2:
        raise ValidationError("need at least 2 classes")
    return 1.0 / k


def leakage_filter(test: Corpus, reference: set[str]) -> tuple[Corpus, int]:
    """Drop test samples whose digest appears in the reference set."""
    kept = tuple(s for s in test.samples if s.digest not in reference)
    return test.with_samples(kept, provenance=f"{test.provenance} [leakage-filtered]"), len(
        test.samples
    ) - len(kept)


def build_report(
    golds: Sequence[str],
    preds: Sequence[str],
    scheme: LabelScheme,
    class_set_policy: str = "present",
    leakage_removed: int = 0,
) -> EvaluationReport:
    matrix = confusion(golds, preds, scheme)
    per_class = tuple(
        ClassMetrics(c, *prf(matrix, c), matrix.support(c)) for c in scheme.classes
    )
    missing = tuple(c for c in scheme.classes if matrix.support(c) == 0)
    return EvaluationReport(
        matrix=matrix,
        per_class=per_class,
        macro_f1=macro_f1(matrix, class_set_policy),
        weighted_f1=weighted_f1(matrix),
        missing_classes=missing,
        leakage_removed=leakage_removed,
    )


def breakdown(
    pairs: Iterable[tuple[CodeSample, str]],
    dim: str,
    scheme: LabelScheme,
    class_set_policy: str = "present",
) -> dict[str, EvaluationReport]:
    """Partition (sample, predicted label) pairs by dim and report per group.

    Groups missing gold classes are flagged in their report; under the
    full-scheme policy those classes pull the group macro down by design.
    """
    if dim not in ("language", "family"):
        raise ValidationError(f"breakdown dimension must be language or family, got {dim!r}")
    grouped: dict[str, list[tuple[str, str]]] = {}
    for sample, pred in pairs:
        grouped.setdefault(getattr(sample, dim), []).append((sample.label, pred))
    reports = {}
    for key in sorted(grouped):
        golds = [g for g, _ in grouped[key]]
        preds = [p for _, p in grouped[key]]
        reports[key] = build_report(golds, preds, scheme, class_set_policy)
    return reports


def evaluate_predictions(
    corpus: Corpus,
    predicted: dict[str, str],
    class_set_policy: str = "present",
    by: Sequence[str] = (),
    leakage_removed: int = 0,
) -> EvaluationReport:
    """Full report for a corpus against an id -> predicted-label map."""
    missing = [s.id for s in corpus if s.id not in predicted]
    if missing:
        shown = ", ".join(missing[:10])
        raise ValidationError(
            f"predictions missing for {len(missing)} gold ids (first: {shown})"
        )
    golds = [s.label for s in corpus]
    preds = [predicted[s.id] for s in corpus]
    report = build_report(golds, preds, corpus.scheme, class_set_policy, leakage_removed)
    if by:
        groups = {}
        pairs = [(s, predicted[s.id]) for s in corpus]
        for dim in by:
            for key, sub in breakdown(pairs, dim, corpus.scheme, class_set_policy).items():
                groups[f"{dim}={key}"] = sub
        report = EvaluationReport(
            matrix=report.matrix,
            per_class=report.per_class,
            macro_f1=report.macro_f1,
            weighted_f1=report.weighted_f1,
            missing_classes=report.missing_classes,
            groups=groups,
            leakage_removed=leakage_removed,
        )
    return report


def render_bar_chart(
    scores: dict[str, tuple[float, float]], title: str = ""
) -> str:
    """Self-contained SVG: per group, Macro and Weighted F1 bars side by side."""
    groups = sorted(scores)
    bar_w, gap, group_gap, height, margin = 28, 4, 26, 260, 40
    chart_h = height - 2 * margin
    width = margin * 2 + len(groups) * (2 * bar_w + gap + group_gap)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 60}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2}" y="16" text-anchor="middle" font-size="13">{title}</text>',
    ]
    # y axis gridlines at 0.25 steps
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin + chart_h * (1 - frac)
        parts.append(
            f'<line x1="{margin}" y1="{y:.1f}" x2="{width - 10}" y2="{y:.1f}" '
            f'stroke="#ddd"/>'
            f'<text x="{margin - 6}" y="{y + 4:.1f}" text-anchor="end">{frac:.2f}</text>'
        )
    x = float(margin)
    for g in groups:
        macro, weighted = scores[g]
        for value, color, dx in ((macro, "#4878a8", 0), (weighted, "#e49444", bar_w + gap)):
            h = chart_h * max(0.0, min(1.0, value))
            parts.append(
                f'<rect x="{x + dx:.1f}" y="{margin + chart_h - h:.1f}" '
                f'width="{bar_w}" height="{h:.1f}" fill="{color}"/>'
                f'<text x="{x + dx + bar_w / 2:.1f}" y="{margin + chart_h - h - 3:.1f}" '
                f'text-anchor="middle" font-size="9">{value:.3f}</text>'
            )
        parts.append(
            f'<text x="{x + bar_w + gap / 2:.1f}" y="{margin + chart_h + 14:.1f}" '
            f'text-anchor="middle">{g}</text>'
        )
        x += 2 * bar_w + gap + group_gap
    legend_y = height + 20
    parts.append(
        f'<rect x="{margin}" y="{legend_y}" width="12" height="12" fill="#4878a8"/>'
        f'<text x="{margin + 16}" y="{legend_y + 10}">Macro F1</text>'
        f'<rect x="{margin + 110}" y="{legend_y}" width="12" height="12" fill="#e49444"/>'
        f'<text x="{margin + 126}" y="{legend_y + 10}">Weighted F1</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
