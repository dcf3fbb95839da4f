"""Data-selection procedures: deduplication, capped stratified subsampling,
class balancing, and the per-subtask preset recipes that bundle them into
train/validation splits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import Corpus, CodeSample, stratum_key
from .errors import ValidationError
from .hashing import derive_seed, seeded_priority


@dataclass(frozen=True)
class CurationRecipe:
    train_stratum_dims: tuple[str, ...]
    train_stratum_cap: int
    train_class_cap: int
    val_stratum_dims: tuple[str, ...]
    val_stratum_cap: int
    val_class_cap: int
    seed: int = 0

    def __post_init__(self):
        for cap in (
            self.train_stratum_cap,
            self.train_class_cap,
            self.val_stratum_cap,
            self.val_class_cap,
        ):
            if cap < 1:
                raise ValidationError("caps must be >= 1")

    def to_dict(self) -> dict:
        return {
            "train_stratum_dims": list(self.train_stratum_dims),
            "train_stratum_cap": self.train_stratum_cap,
            "train_class_cap": self.train_class_cap,
            "val_stratum_dims": list(self.val_stratum_dims),
            "val_stratum_cap": self.val_stratum_cap,
            "val_class_cap": self.val_class_cap,
            "seed": self.seed,
        }


# Per-subtask constants: (train dims, train stratum cap, train class cap,
#                         val dims, val stratum cap, val class cap)
_PRESETS = {
    "A": (("language", "generator"), 10_000, 20_000, ("language", "generator"), 1_000, 1_000),
    "B": (("generator",), 10_000, 2_000, ("generator",), 1_000, 500),
    "C": (("generator", "language"), 10_000, 10_000, ("generator", "language"), 1_000, 500),
}


def preset_recipe(subtask: str, seed: int = 0) -> CurationRecipe:
    """The published curation constants for subtask A, B, or C."""
    key = subtask.upper()
    if key not in _PRESETS:
        raise ValidationError(f"unknown subtask {subtask!r}; expected A, B, or C")
    t_dims, t_strat, t_class, v_dims, v_strat, v_class = _PRESETS[key]
    return CurationRecipe(t_dims, t_strat, t_class, v_dims, v_strat, v_class, seed)


def deduplicate(corpus: Corpus) -> Corpus:
    """Keep the first occurrence (input order) of each content digest."""
    seen: set[str] = set()
    kept: list[CodeSample] = []
    for sample in corpus:
        if sample.digest not in seen:
            seen.add(sample.digest)
            kept.append(sample)
    return corpus.with_samples(kept)


def _capped_select(
    corpus: Corpus, group_of, cap: int, seed: int
) -> Corpus:
    """Keep at most cap samples per group, ranked by a seeded hash priority.

    A sample's priority depends only on (seed, digest), so the selection is
    a fixed uniform draw independent of grouping order or scheduling; the
    output is globally ordered by that priority.
    """
    ranked = sorted(
        enumerate(corpus.samples),
        key=lambda item: (seeded_priority(seed, item[1].digest), item[0]),
    )
    taken: dict[object, int] = {}
    kept = []
    for _, sample in ranked:
        group = group_of(sample)
        if taken.get(group, 0) < cap:
            taken[group] = taken.get(group, 0) + 1
            kept.append(sample)
    return corpus.with_samples(kept)


def cap_per_stratum(corpus: Corpus, dims: Sequence[str], cap: int, seed: int) -> Corpus:
    """Uniformly subsample every stratum down to at most cap samples."""
    if cap < 1:
        raise ValidationError("cap must be >= 1")
    dims = tuple(dims)
    return _capped_select(corpus, lambda s: stratum_key(s, dims), cap, seed)


def cap_per_class(corpus: Corpus, cap: int, seed: int) -> Corpus:
    """Uniformly subsample every class label down to at most cap samples."""
    if cap < 1:
        raise ValidationError("cap must be >= 1")
    return _capped_select(corpus, lambda s: s.label, cap, seed)


def _stage_counts(corpus: Corpus, dims: tuple[str, ...]) -> dict:
    per_stratum: dict[str, int] = {}
    for sample in corpus:
        key = "|".join(stratum_key(sample, dims)) if dims else "(all)"
        per_stratum[key] = per_stratum.get(key, 0) + 1
    return {
        "total": len(corpus),
        "per_class": corpus.class_counts(),
        "per_stratum": dict(sorted(per_stratum.items())),
    }


@dataclass(frozen=True, eq=False)
class SplitBundle:
    train: Corpus
    validation: Corpus
    recipe: CurationRecipe
    report: dict

    def __post_init__(self):
        if self.train.digests() & self.validation.digests():
            raise ValidationError("train and validation share content digests")


def _concat(corpora: Sequence[Corpus]) -> Corpus:
    if not corpora:
        raise ValidationError("no validation sources given")
    scheme = corpora[0].scheme
    for c in corpora[1:]:
        if c.scheme != scheme:
            raise ValidationError("validation sources use different label schemes")
    samples = tuple(s for c in corpora for s in c.samples)
    return Corpus(samples, scheme, provenance="+".join(c.provenance for c in corpora))


def apply_recipe(
    train_source: Corpus, val_sources: Sequence[Corpus], recipe: CurationRecipe
) -> SplitBundle:
    """Build a train/validation bundle with the fixed stage order.

    Validation: concatenate sources, dedup, stratum cap, class cap.
    Train: dedup, stratum cap, class cap, then drop any sample whose digest
    appears in validation (validation is the checkpoint-selection authority
    and stays intact). Stage-by-stage counts land in the report.
    """
    val_stages = []
    val = _concat(val_sources)
    if train_source.scheme != val.scheme:
        raise ValidationError("train and validation sources use different label schemes")
    val_stages.append({"stage": "concat", **_stage_counts(val, recipe.val_stratum_dims)})
    val = deduplicate(val)
    seen_ids: set[str] = set()
    for s in val:
        if s.id in seen_ids:
            raise ValidationError(f"duplicate id {s.id!r} across validation sources")
        seen_ids.add(s.id)
    val_stages.append({"stage": "dedup", **_stage_counts(val, recipe.val_stratum_dims)})
    val = cap_per_stratum(
        val, recipe.val_stratum_dims, recipe.val_stratum_cap, derive_seed(recipe.seed, "val-stratum")
    )
    val_stages.append({"stage": "stratum_cap", **_stage_counts(val, recipe.val_stratum_dims)})
    val = cap_per_class(val, recipe.val_class_cap, derive_seed(recipe.seed, "val-class"))
    val_stages.append({"stage": "class_cap", **_stage_counts(val, recipe.val_stratum_dims)})

    train_stages = []
    train = train_source
    train_stages.append({"stage": "input", **_stage_counts(train, recipe.train_stratum_dims)})
    train = deduplicate(train)
    train_stages.append({"stage": "dedup", **_stage_counts(train, recipe.train_stratum_dims)})
    train = cap_per_stratum(
        train,
        recipe.train_stratum_dims,
        recipe.train_stratum_cap,
        derive_seed(recipe.seed, "train-stratum"),
    )
    train_stages.append({"stage": "stratum_cap", **_stage_counts(train, recipe.train_stratum_dims)})
    train = cap_per_class(train, recipe.train_class_cap, derive_seed(recipe.seed, "train-class"))
    train_stages.append({"stage": "class_cap", **_stage_counts(train, recipe.train_stratum_dims)})

    val_digests = val.digests()
    train = train.with_samples(s for s in train if s.digest not in val_digests)
    train_stages.append(
        {"stage": "overlap_removed", **_stage_counts(train, recipe.train_stratum_dims)}
    )

    for cls, count in train.class_counts().items():
        if count == 0:
            raise ValidationError(
                f"class {cls!r} has no training samples after curation; "
                "class weights would be undefined"
            )

    report = {
        "recipe": recipe.to_dict(),
        "dedup_policy": "normalized code text (line endings unified, per-line "
        "trailing whitespace stripped), global across classes",
        "train": train_stages,
        "validation": val_stages,
    }
    return SplitBundle(train=train, validation=val, recipe=recipe, report=report)
