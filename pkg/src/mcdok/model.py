"""Linear softmax classifier over hashed code features, decision policies
(argmax and the saturated-probability binary threshold), and model I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import Corpus
from .errors import ValidationError
from .features import FeatureVector, FeaturizerConfig, featurize

MODEL_MAGIC = b"MCDOK1"

PROBS_SUM_TOL = 1e-9


@dataclass(eq=False)
class ModelState:
    """Dense K x D weight matrix plus per-class bias.

    Mutated only by the training loop; inference treats it as read-only.
    """

    weights: np.ndarray
    bias: np.ndarray
    classes: tuple[str, ...]
    featurizer: FeaturizerConfig

    def __post_init__(self):
        k = len(self.classes)
        if self.weights.shape != (k, self.featurizer.hash_dim):
            raise ValidationError(
                f"weights shape {self.weights.shape} does not match "
                f"{k} classes x hash_dim {self.featurizer.hash_dim}"
            )
        if self.bias.shape != (k,):
            raise ValidationError(f"bias shape {self.bias.shape} != ({k},)")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValidationError("non-finite model parameters")

    @classmethod
    def zeros(cls, classes: Iterable[str], featurizer: FeaturizerConfig) -> "ModelState":
        classes = tuple(classes)
        return cls(
            weights=np.zeros((len(classes), featurizer.hash_dim)),
            bias=np.zeros(len(classes)),
            classes=classes,
            featurizer=featurizer,
        )

    def copy(self) -> "ModelState":
        return ModelState(self.weights.copy(), self.bias.copy(), self.classes, self.featurizer)

    @property
    def num_classes(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class DecisionPolicy:
    """How probabilities become a class call.

    binary_threshold emulates the saturated confidence-1.0 rule: predict the
    positive class iff its probability reaches theta - epsilon. Exact p = 1
    is unreachable in double-precision softmax, hence the epsilon slack.
    """

    kind: str = "argmax"
    theta: float = 1.0
    epsilon: float = 1e-6
    positive_class: str = "machine"

    def __post_init__(self):
        if self.kind not in ("argmax", "binary_threshold"):
            raise ValidationError(f"unknown decision policy {self.kind!r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValidationError("theta must be in (0, 1]")
        if not 0.0 <= self.epsilon < 0.01:
            raise ValidationError("epsilon must be in [0, 0.01)")


def logits(state: ModelState, v: FeatureVector) -> np.ndarray:
    """bias + W v, accumulated over the sparse entries only."""
    if v.dim != state.featurizer.hash_dim:
        raise ValidationError(
            f"feature dim {v.dim} does not match model dim {state.featurizer.hash_dim}"
        )
    if v.nnz == 0:
        return state.bias.copy()
    return state.bias + state.weights[:, v.indices] @ v.values


def softmax(z: np.ndarray) -> np.ndarray:
    """Max-shifted softmax; stable for |z| up to ~1e6."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValidationError("non-finite logits")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def decide(p: np.ndarray, policy: DecisionPolicy, classes: tuple[str, ...]) -> str:
    """Pick a class name. Argmax ties go to the lowest class index."""
    p = np.asarray(p, dtype=np.float64)
    if len(p) != len(classes):
        raise ValidationError("probability vector length does not match class list")
    if abs(float(p.sum()) - 1.0) > PROBS_SUM_TOL:
        raise ValidationError(f"probabilities sum to {p.sum()!r}, not 1")
    if policy.kind == "argmax":
        return classes[int(np.argmax(p))]
    if len(classes) != 2:
        raise ValidationError("binary_threshold policy needs a 2-class scheme")
    if policy.positive_class not in classes:
        raise ValidationError(f"positive class {policy.positive_class!r} not in scheme")
    pos = classes.index(policy.positive_class)
    if p[pos] >= policy.theta - policy.epsilon:
        return classes[pos]
    return classes[1 - pos]


def predict_proba(state: ModelState, code: str) -> np.ndarray:
    return softmax(logits(state, featurize(code, state.featurizer)))


def predict_corpus(
    state: ModelState, corpus: Corpus, policy: DecisionPolicy
) -> list[tuple[str, np.ndarray, str]]:
    """(id, probabilities, decided label) per sample, in corpus order."""
    if tuple(corpus.scheme.classes) != tuple(state.classes):
        raise ValidationError(
            "corpus scheme classes do not match model classes: "
            f"{corpus.scheme.classes} vs {state.classes}"
        )
    rows = []
    for sample in corpus:
        p = predict_proba(state, sample.code)
        rows.append((sample.id, p, decide(p, policy, state.classes)))
    return rows


def write_predictions(
    rows: Iterable[tuple[str, np.ndarray, str]], classes: tuple[str, ...], path: str | Path
) -> None:
    """Predictions CSV: header id, p_<class>..., label."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"p_{c}" for c in classes] + ["label"])
        for sample_id, p, label in rows:
            writer.writerow([sample_id] + [f"{x:.12g}" for x in p] + [label])


def save_model(state: ModelState, path: str | Path) -> None:
    """Self-describing container: magic, JSON header, raw float64 arrays."""
    header = json.dumps(
        {
            "classes": list(state.classes),
            "featurizer": state.featurizer.to_dict(),
            "dtype": "float64",
        }
    ).encode("utf-8")
    weights = np.ascontiguousarray(state.weights, dtype=np.float64)
    bias = np.ascontiguousarray(state.bias, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC + b"\n")
        fh.write(len(header).to_bytes(8, "big"))
        fh.write(header)
        fh.write(weights.tobytes())
        fh.write(bias.tobytes())


def load_model(path: str | Path) -> ModelState:
    with open(path, "rb") as fh:
        magic = fh.read(len(MODEL_MAGIC) + 1)
        if magic != MODEL_MAGIC + b"\n":
            raise ValidationError(f"{path}: not a model file (bad magic)")
        header_len = int.from_bytes(fh.read(8), "big")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        featurizer = FeaturizerConfig.from_dict(header["featurizer"])
        classes = tuple(header["classes"])
        k, d = len(classes), featurizer.hash_dim
        weights = np.frombuffer(fh.read(k * d * 8), dtype=np.float64).reshape(k, d).copy()
        bias = np.frombuffer(fh.read(k * 8), dtype=np.float64).copy()
        if fh.read(1):
            raise ValidationError(f"{path}: trailing bytes after model payload")
    return ModelState(weights, bias, classes, featurizer)
