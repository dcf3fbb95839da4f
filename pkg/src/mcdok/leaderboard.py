"""Import external systems' predictions and rank them by Macro F1 against a
gold corpus, leaderboard style."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import ValidationError
from .evaluation import confusion, macro_f1
from .model import DecisionPolicy, decide

PROB_SUM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ExternalPredictionSet:
    """One system's predictions: hard labels, per-class probabilities, or both."""

    system_name: str
    ids: tuple[str, ...]
    labels: dict[str, str] | None
    probs: dict[str, np.ndarray] | None
    classes: tuple[str, ...] | None  # column order of the p_<class> fields

    def decisions(self, classes: tuple[str, ...], policy: DecisionPolicy | None = None) -> dict[str, str]:
        """id -> predicted label. A policy needs probabilities to act on."""
        if policy is None:
            if self.labels is not None:
                return dict(self.labels)
            policy = DecisionPolicy(kind="argmax")
        if self.probs is None:
            raise ValidationError(
                f"prediction set {self.system_name!r} has labels only; "
                "probability-based decision policies are unavailable"
            )
        if self.classes != classes:
            raise ValidationError(
                f"prediction set {self.system_name!r} covers classes {self.classes}, "
                f"expected {classes}"
            )
        return {i: decide(self.probs[i], policy, classes) for i in self.ids}


def import_predictions(path: str | Path, classes: tuple[str, ...] | None = None) -> ExternalPredictionSet:
    """Load a predictions CSV: an id column plus a label column and/or
    p_<class> probability columns. Probability rows off unit sum by more
    than 1e-6 are rejected; smaller drift is renormalized."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty predictions file") from None
        if "id" not in header:
            raise ValidationError(f"{path}: missing id column")
        id_col = header.index("id")
        label_col = header.index("label") if "label" in header else None
        prob_cols = [(i, h[2:]) for i, h in enumerate(header) if h.startswith("p_")]
        if label_col is None and not prob_cols:
            raise ValidationError(f"{path}: need a label column or p_<class> columns")
        if classes is not None:
            unknown = [c for _, c in prob_cols if c not in classes]
            if unknown:
                raise ValidationError(f"{path}: unknown class columns: {unknown}")
        col_classes = tuple(c for _, c in prob_cols) if prob_cols else None
        ids: list[str] = []
        labels: dict[str, str] = {}
        probs: dict[str, np.ndarray] = {}
        seen: set[str] = set()
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            row_id = row[id_col]
            if row_id in seen:
                raise ValidationError(f"{path}: duplicate id {row_id!r}")
            seen.add(row_id)
            ids.append(row_id)
            if label_col is not None:
                labels[row_id] = row[label_col]
            if prob_cols:
                try:
                    p = np.array([float(row[i]) for i, _ in prob_cols])
                except ValueError:
                    raise ValidationError(
                        f"{path}: line {row_no}: non-numeric probability"
                    ) from None
                total = float(p.sum())
                if abs(total - 1.0) > PROB_SUM_TOL:
                    raise ValidationError(
                        f"{path}: line {row_no}: probabilities sum to {total!r} "
                        f"(id {row_id!r}, tolerance {PROB_SUM_TOL})"
                    )
                probs[row_id] = p / total
    return ExternalPredictionSet(
        system_name=path.stem,
        ids=tuple(ids),
        labels=labels if label_col is not None else None,
        probs=probs if prob_cols else None,
        classes=col_classes,
    )


def compare(sets: list[ExternalPredictionSet], gold: Corpus) -> list[tuple[str, float]]:
    """Macro F1 per system, sorted best first; ties break by system name.

    Every set must cover every gold id.
    """
    classes = tuple(gold.scheme.classes)
    results = []
    for pred_set in sets:
        decided = pred_set.decisions(classes)
        missing = [s.id for s in gold if s.id not in decided]
        if missing:
            shown = ", ".join(missing[:10])
            raise ValidationError(
                f"prediction set {pred_set.system_name!r} misses {len(missing)} "
                f"gold ids (first: {shown})"
            )
        golds = [s.label for s in gold]
        preds = [decided[s.id] for s in gold]
        results.append((pred_set.system_name, macro_f1(confusion(golds, preds, gold.scheme))))
    return sorted(results, key=lambda item: (-item[1], item[0]))
