"""Labeled code corpora: JSONL ingestion, validation, content digests,
and stratum addressing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ValidationError
from .hashing import hash128_hex

STRATUM_DIMENSIONS = ("language", "generator", "family")

REQUIRED_KEYS = ("id", "code", "language", "generator", "label")

BINARY_CLASSES = ("human", "machine")
HYBRID4_CLASSES = ("human", "machine", "hybrid", "adversarial")

# Ten generator families used by fixtures and demos when the corpus does not
# dictate its own; human is always class index 0.
DEFAULT_FAMILIES = (
    "01-ai",
    "bigcode",
    "codellama",
    "deepseek",
    "gemma",
    "ibm-granite",
    "llama",
    "mistralai",
    "openai",
    "qwen",
)


def content_digest(code: str) -> str:
    """128-bit hex digest of code after line-ending normalization.

    CRLF and lone CR become LF and trailing whitespace is stripped from each
    line before hashing, so trivially re-encoded copies collide on purpose.
    The code is never lowercased and comments are kept: transformations that
    would change what the program means are off limits.
    """
    unified = code.replace("\r\n", "\n").replace("\r", "\n")
    normalized = "\n".join(line.rstrip() for line in unified.split("\n"))
    return hash128_hex(normalized.encode("utf-8"))


@dataclass(frozen=True)
class LabelScheme:
    """Named, ordered set of class labels. Class index = list position."""

    name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        expected = {"binary": 2, "family11": 11, "hybrid4": 4}
        if self.name not in expected:
            raise ValidationError(f"unknown label scheme {self.name!r}")
        if len(self.classes) != expected[self.name]:
            raise ValidationError(
                f"scheme {self.name} needs {expected[self.name]} classes, "
                f"got {len(self.classes)}"
            )
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("duplicate class names in scheme")

    @classmethod
    def binary(cls) -> "LabelScheme":
        return cls("binary", BINARY_CLASSES)

    @classmethod
    def hybrid4(cls) -> "LabelScheme":
        return cls("hybrid4", HYBRID4_CLASSES)

    @classmethod
    def family11(cls, families: Iterable[str] = DEFAULT_FAMILIES) -> "LabelScheme":
        """Human plus ten generator families, human first."""
        fams = tuple(families)
        if "human" in fams:
            raise ValidationError("families must not include 'human'; it is implicit")
        return cls("family11", ("human",) + fams)

    @classmethod
    def by_name(cls, name: str) -> "LabelScheme":
        if name == "binary":
            return cls.binary()
        if name == "hybrid4":
            return cls.hybrid4()
        if name == "family11":
            return cls.family11()
        raise ValidationError(f"unknown label scheme {name!r}")

    def index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise ValidationError(f"label {label!r} not in scheme {self.name}") from None


@dataclass(frozen=True)
class CodeSample:
    """One labeled source-code record."""

    id: str
    code: str
    language: str
    generator: str
    family: str
    label: str
    domain: str = ""
    digest: str = ""
    extra: Mapping[str, object] = field(default_factory=dict)

    def value_for(self, dim: str) -> str:
        if dim not in STRATUM_DIMENSIONS:
            raise ValidationError(
                f"unknown stratum dimension {dim!r}; expected one of {STRATUM_DIMENSIONS}"
            )
        return getattr(self, dim)


def stratum_key(sample: CodeSample, dims: Iterable[str]) -> tuple[str, ...]:
    """Project a sample onto the given dimensions, in order.

    dims=[] yields the empty key: every sample lands in one stratum.
    """
    return tuple(sample.value_for(d) for d in dims)


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered collection of samples under one label scheme."""

    samples: tuple[CodeSample, ...]
    scheme: LabelScheme
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def digests(self) -> set[str]:
        return {s.digest for s in self.samples}

    def labels(self) -> list[str]:
        return [s.label for s in self.samples]

    def class_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in self.scheme.classes}
        for s in self.samples:
            counts[s.label] += 1
        return counts

    def with_samples(self, samples: Iterable[CodeSample], provenance: str = "") -> "Corpus":
        return Corpus(tuple(samples), self.scheme, provenance or self.provenance)


def _build_sample(
    record: dict, line_no: int, scheme: LabelScheme, family_map: Mapping[str, str] | None
) -> CodeSample:
    for key in REQUIRED_KEYS:
        if key not in record:
            raise ValidationError(f"line {line_no}: missing required field {key!r}")
        if not isinstance(record[key], str):
            raise ValidationError(f"line {line_no}: field {key!r} must be a string")
    if not record["id"]:
        raise ValidationError(f"line {line_no}: empty id")
    if not record["code"]:
        raise ValidationError(f"line {line_no}: empty code")
    label = record["label"]
    if label not in scheme.classes:
        raise ValidationError(
            f"line {line_no}: label {label!r} not in scheme {scheme.name} "
            f"(classes: {', '.join(scheme.classes)})"
        )
    generator = record["generator"]
    if "family" in record:
        family = record["family"]
    elif family_map is not None and generator in family_map:
        family = family_map[generator]
    else:
        family = generator
    known = set(REQUIRED_KEYS) | {"family", "domain"}
    extra = {k: v for k, v in record.items() if k not in known}
    return CodeSample(
        id=record["id"],
        code=record["code"],
        language=record["language"],
        generator=generator,
        family=family,
        label=label,
        domain=record.get("domain", ""),
        digest=content_digest(record["code"]),
        extra=extra,
    )


def load_corpus(
    path: str | Path,
    scheme: LabelScheme,
    family_map: Mapping[str, str] | None = None,
) -> Corpus:
    """Load a JSONL corpus, validating records and computing digests.

    One JSON object per line; required keys id, code, language, generator,
    label; optional family (defaults to family_map[generator], else the
    generator itself) and domain. Unknown keys ride along untouched.
    Record order follows file order. Errors name the offending line.
    """
    path = Path(path)
    samples: list[CodeSample] = []
    seen_ids: set[str] = set()
    with open(path, "rb") as fh:
        for line_no, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ValidationError(f"line {line_no}: malformed UTF-8 ({exc})") from None
            try:
                record = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise ValidationError(f"line {line_no}: record must be a JSON object")
            sample = _build_sample(record, line_no, scheme, family_map)
            if sample.id in seen_ids:
                raise ValidationError(f"line {line_no}: duplicate id {sample.id!r}")
            seen_ids.add(sample.id)
            samples.append(sample)
    return Corpus(tuple(samples), scheme, provenance=str(path))


def sample_to_record(sample: CodeSample) -> dict:
    record = {
        "id": sample.id,
        "code": sample.code,
        "language": sample.language,
        "generator": sample.generator,
        "family": sample.family,
        "label": sample.label,
    }
    if sample.domain:
        record["domain"] = sample.domain
    record.update(sample.extra)
    return record


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to JSONL in its current order."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for sample in corpus.samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False) + "\n")
