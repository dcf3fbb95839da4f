"""Training loop: inverse-class-distribution weighted cross-entropy,
one optimizer step per sample, linear warmup into cosine decay, periodic
validation, and best-checkpoint selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, LabelScheme
from .curation import SplitBundle
from .errors import ValidationError
from .evaluation import confusion, macro_f1
from .features import FeatureVector, FeaturizerConfig, featurize
from .model import ModelState, logits, softmax

SELECTION_METRICS = ("macro_f1", "loss")

P_FLOOR = 1e-30  # clamp for log of vanishing gold-class probability


@dataclass(frozen=True)
class TrainingConfig:
    lr_max: float = 2e-5
    warmup_ratio: float = 0.03
    epochs: int = 3
    eval_interval: int = 100
    selection_metric: str = "macro_f1"
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.lr_max <= 0:
            raise ValidationError("lr_max must be positive")
        if not 0.0 <= self.warmup_ratio < 1.0:
            raise ValidationError("warmup_ratio must be in [0, 1)")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.eval_interval < 1:
            raise ValidationError("eval_interval must be >= 1")
        if self.selection_metric not in SELECTION_METRICS:
            raise ValidationError(f"selection_metric must be one of {SELECTION_METRICS}")


def preset_training(subtask: str, profile: str = "paper", seed: int = 0) -> TrainingConfig:
    """Published knobs per subtask; the desk profile swaps in a learning
    rate suited to the linear model instead of LoRA fine-tuning."""
    key = subtask.upper()
    if key not in ("A", "B", "C"):
        raise ValidationError(f"unknown subtask {subtask!r}; expected A, B, or C")
    if profile not in ("paper", "desk"):
        raise ValidationError(f"unknown profile {profile!r}; expected paper or desk")
    cfg = TrainingConfig(
        eval_interval=100 if key == "A" else 1000,
        selection_metric="macro_f1" if key == "A" else "loss",
        seed=seed,
    )
    if profile == "desk":
        cfg = replace(cfg, lr_max=0.05)
    return cfg


@dataclass(frozen=True, eq=False)
class ClassWeights:
    """Per-class loss weights, normalized to mean exactly 1.

    Raw weights are the inverse class frequencies 1/p_c; dividing by their
    mean decouples the effective learning rate from the class count. On a
    balanced set every weight is 1 and the loss reduces to plain CE.
    """

    classes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.classes):
            raise ValidationError("one weight per class required")
        if np.any(self.values <= 0):
            raise ValidationError("class weights must be positive")
        self.values.setflags(write=False)

    @classmethod
    def uniform(cls, classes: Sequence[str]) -> "ClassWeights":
        classes = tuple(classes)
        return cls(classes, np.ones(len(classes)))


def class_weights(labels: Sequence[str], scheme: LabelScheme) -> ClassWeights:
    """Inverse-class-distribution weights over the training labels."""
    counter: dict[str, int] = {c: 0 for c in scheme.classes}
    for label in labels:
        if label not in counter:
            raise ValidationError(f"label {label!r} not in scheme {scheme.name}")
        counter[label] += 1
    counts = np.array([counter[c] for c in scheme.classes], dtype=np.float64)
    if np.any(counts == 0):
        empty = [c for c, n in counter.items() if n == 0]
        raise ValidationError(f"classes with no samples: {', '.join(empty)}")
    raw = counts.sum() / counts  # 1 / p_c
    return ClassWeights(tuple(scheme.classes), raw / raw.mean())


def weighted_ce(p: np.ndarray, gold: int, w: ClassWeights) -> float:
    """-w[gold] * log p[gold], with p clamped away from zero."""
    if not 0 <= gold < len(w.values):
        raise ValidationError(f"gold index {gold} out of range")
    return float(-w.values[gold] * math.log(max(float(p[gold]), P_FLOOR)))


@dataclass(frozen=True, eq=False)
class Gradient:
    """Sparse weighted-CE gradient: d_logits fans out over the feature columns."""

    d_logits: np.ndarray          # (K,) = w[gold] * (p - onehot[gold]); also the bias gradient
    indices: np.ndarray           # feature columns with nonzero weight gradient
    weight_cols: np.ndarray       # (K, nnz) = outer(d_logits, v.values)

    @property
    def d_bias(self) -> np.ndarray:
        return self.d_logits


def gradient(state: ModelState, v: FeatureVector, gold: int, w: ClassWeights) -> Gradient:
    """Analytic softmax cross-entropy gradient, scaled by the gold weight."""
    p = softmax(logits(state, v))
    return _gradient_from_probs(p, v, gold, w)


def _gradient_from_probs(p: np.ndarray, v: FeatureVector, gold: int, w: ClassWeights) -> Gradient:
    d_logits = w.values[gold] * p
    d_logits[gold] -= w.values[gold]
    return Gradient(
        d_logits=d_logits,
        indices=v.indices,
        weight_cols=d_logits[:, None] * v.values[None, :],
    )


def lr_at(step: int, total_steps: int, cfg: TrainingConfig) -> float:
    """Learning rate at a (0-based) step: linear warmup, then cosine decay.

    Warmup spans ceil(warmup_ratio * total_steps) steps rising from 0 to
    lr_max; the cosine then falls to 0 at step = total_steps.
    """
    if total_steps < 1:
        raise ValidationError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    t_w = math.ceil(cfg.warmup_ratio * total_steps)
    if step < t_w:
        return cfg.lr_max * step / t_w
    if total_steps == t_w:
        return cfg.lr_max
    progress = (step - t_w) / (total_steps - t_w)
    return cfg.lr_max * 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass(eq=False)
class OptimizerMoments:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "OptimizerMoments":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def optimizer_update(
    params: list[np.ndarray],
    grads: Sequence[np.ndarray],
    moments: OptimizerMoments,
    step: int,
    lr: float,
    cfg: TrainingConfig,
) -> tuple[list[np.ndarray], OptimizerMoments]:
    """One adaptive-moment update with bias correction and decoupled decay.

    step is the 1-based update count. Arrays are updated in place (the
    training loop is the single writer) and returned for convenience.
    """
    if step < 1:
        raise ValidationError("optimizer step count is 1-based")
    c1 = 1.0 - cfg.beta1**step
    c2 = 1.0 - cfg.beta2**step
    for p, g, m, v in zip(params, grads, moments.m, moments.v):
        if p.shape != g.shape:
            raise ValidationError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.isfinite(g).all():
            raise ValidationError(f"non-finite gradient at step {step}")
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)
        update = (m / c1) / (np.sqrt(v / c2) + cfg.eps_opt)
        if cfg.weight_decay:
            update = update + cfg.weight_decay * p
        p -= lr * update
    return params, moments


@dataclass(frozen=True, eq=False)
class Checkpoint:
    """Validation score and a snapshot immune to later training steps."""

    step: int
    score: float
    snapshot: ModelState


def validate(state: ModelState, val: Corpus, metric: str, w: ClassWeights) -> float:
    """Validation macro F1 (argmax decisions) or mean weighted CE loss."""
    if len(val) == 0:
        raise ValidationError("validation corpus is empty")
    vectors = [featurize(s.code, state.featurizer) for s in val]
    gold_idx = [val.scheme.index(s.label) for s in val]
    return score_validation(state, vectors, gold_idx, metric, w, val.scheme)


def score_validation(
    state: ModelState,
    vectors: Sequence[FeatureVector],
    gold_idx: Sequence[int],
    metric: str,
    w: ClassWeights,
    scheme: LabelScheme,
) -> float:
    if metric not in SELECTION_METRICS:
        raise ValidationError(f"unknown validation metric {metric!r}")
    probs = [softmax(logits(state, v)) for v in vectors]
    if metric == "loss":
        return float(np.mean([weighted_ce(p, g, w) for p, g in zip(probs, gold_idx)]))
    golds = [scheme.classes[g] for g in gold_idx]
    preds = [scheme.classes[int(np.argmax(p))] for p in probs]
    return macro_f1(confusion(golds, preds, scheme))


def _better(score: float, best: float, metric: str) -> bool:
    return score > best if metric == "macro_f1" else score < best


def train(
    bundle: SplitBundle,
    cfg: TrainingConfig,
    scheme: LabelScheme,
    featurizer: FeaturizerConfig | None = None,
    log_sink: Callable[[dict], None] | None = None,
) -> Checkpoint:
    """Run the full recipe over a curated bundle and return the best checkpoint.

    Each epoch walks the training set in a fresh seeded shuffle, taking one
    optimizer step per sample (batch size 1, no accumulation). Validation
    runs every cfg.eval_interval steps and once more at the end; the
    checkpoint with the best validation score wins, earlier step on ties.
    """
    featurizer = featurizer or FeaturizerConfig()
    train_corpus, val_corpus = bundle.train, bundle.validation
    if len(train_corpus) == 0:
        raise ValidationError("empty training corpus")
    if len(val_corpus) == 0:
        raise ValidationError("empty validation corpus")
    w = class_weights(train_corpus.labels(), scheme)

    train_vectors = [featurize(s.code, featurizer) for s in train_corpus]
    train_gold = [scheme.index(s.label) for s in train_corpus]
    val_vectors = [featurize(s.code, featurizer) for s in val_corpus]
    val_gold = [scheme.index(s.label) for s in val_corpus]

    state = ModelState.zeros(scheme.classes, featurizer)
    params = [state.weights, state.bias]
    moments = OptimizerMoments.zeros_like(params)
    grad_w = np.zeros_like(state.weights)  # persistent buffer, zero outside touched columns
    grad_b = np.zeros_like(state.bias)

    n = len(train_corpus)
    total_steps = cfg.epochs * n
    step = 0
    best: Checkpoint | None = None

    def run_validation() -> Checkpoint:
        score = score_validation(state, val_vectors, val_gold, cfg.selection_metric, w, scheme)
        return Checkpoint(step=step, score=score, snapshot=state.copy())

    for epoch in range(cfg.epochs):
        order = np.random.default_rng((cfg.seed, epoch)).permutation(n)
        for i in order.tolist():
            v, gold = train_vectors[i], train_gold[i]
            lr = lr_at(step, total_steps, cfg)  # lr of the upcoming (step+1)-th update
            step += 1
            p = softmax(logits(state, v))
            loss = weighted_ce(p, gold, w)
            if not math.isfinite(loss):
                raise ValidationError(
                    f"non-finite loss at step {step} (sample {train_corpus.samples[i].id!r})"
                )
            g = _gradient_from_probs(p, v, gold, w)
            grad_w[:, g.indices] = g.weight_cols
            grad_b[:] = g.d_bias
            optimizer_update(params, [grad_w, grad_b], moments, step, lr, cfg)
            grad_w[:, g.indices] = 0.0
            entry = {"step": step, "lr": lr, "loss": loss}
            if step % cfg.eval_interval == 0:
                candidate = run_validation()
                entry["val_score"] = candidate.score
                if best is None or _better(candidate.score, best.score, cfg.selection_metric):
                    best = candidate
            if log_sink is not None:
                log_sink(entry)
    if step % cfg.eval_interval != 0 or best is None:
        candidate = run_validation()
        if log_sink is not None:
            log_sink({"step": step, "lr": lr_at(step, total_steps, cfg),
                      "loss": None, "val_score": candidate.score})
        if best is None or _better(candidate.score, best.score, cfg.selection_metric):
            best = candidate
    return best
