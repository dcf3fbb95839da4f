"""Hashed byte n-gram features: fixed-dimension sparse vectors over raw
code bytes, the desk-scale stand-in for a learned encoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hashing import fold, hash128

MAX_NGRAM = 8  # n-grams are packed into uint64 words during counting

# hash128 results per distinct n-gram, shared across calls; code reuses the
# same short token vocabulary heavily, so hits dominate after warm-up
_HASH_CACHE: dict[bytes, int] = {}
_HASH_CACHE_LIMIT = 1 << 22


def _gram_hash(gram: bytes) -> int:
    h = _HASH_CACHE.get(gram)
    if h is None:
        h = hash128(gram)
        if len(_HASH_CACHE) < _HASH_CACHE_LIMIT:
            _HASH_CACHE[gram] = h
    return h


@dataclass(frozen=True)
class FeaturizerConfig:
    ngram_min: int = 1
    ngram_max: int = 4
    hash_dim: int = 1 << 20
    max_code_bytes: int = 8192
    l2_normalize: bool = True

    def __post_init__(self):
        if not (1 <= self.ngram_min <= self.ngram_max <= MAX_NGRAM):
            raise ValidationError(
                f"need 1 <= ngram_min <= ngram_max <= {MAX_NGRAM}, "
                f"got [{self.ngram_min}, {self.ngram_max}]"
            )
        if self.hash_dim & (self.hash_dim - 1) or not (1 << 12) <= self.hash_dim <= (1 << 24):
            raise ValidationError("hash_dim must be a power of two in [2^12, 2^24]")
        if self.max_code_bytes < 64:
            raise ValidationError("max_code_bytes must be >= 64")

    def to_dict(self) -> dict:
        return {
            "ngram_min": self.ngram_min,
            "ngram_max": self.ngram_max,
            "hash_dim": self.hash_dim,
            "max_code_bytes": self.max_code_bytes,
            "l2_normalize": self.l2_normalize,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturizerConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse vector: sorted unique indices with float weights."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        self.indices.setflags(write=False)
        self.values.setflags(write=False)
        if len(self.indices) != len(self.values):
            raise ValidationError("indices and values must align")
        if len(self.indices) and int(self.indices.max()) >= self.dim:
            raise ValidationError("feature index out of range")

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(w) for i, w in zip(self.indices, self.values)}

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def _ngram_counts(data: bytes, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct n-grams of data as packed uint64 codes, with counts."""
    arr = np.frombuffer(data, dtype=np.uint8).astype(np.uint64)
    m = len(arr) - n + 1
    codes = np.zeros(m, dtype=np.uint64)
    for j in range(n):
        codes |= arr[j : j + m] << np.uint64(8 * j)
    return np.unique(codes, return_counts=True)


def featurize(code: str | bytes, cfg: FeaturizerConfig) -> FeatureVector:
    """Map code bytes to a hashed n-gram count vector.

    Bytes beyond cfg.max_code_bytes are dropped first. Every n-gram for
    n in [ngram_min, ngram_max] is hashed and folded into hash_dim buckets,
    with colliding grams summing. Empty code gives the zero vector.
    """
    data = code.encode("utf-8") if isinstance(code, str) else bytes(code)
    data = data[: cfg.max_code_bytes]
    bucket_counts: dict[int, float] = {}
    for n in range(cfg.ngram_min, cfg.ngram_max + 1):
        if len(data) < n:
            break
        codes, counts = _ngram_counts(data, n)
        for packed, count in zip(codes.tolist(), counts.tolist()):
            gram = packed.to_bytes(n, "little")
            idx = fold(_gram_hash(gram), cfg.hash_dim)
            bucket_counts[idx] = bucket_counts.get(idx, 0.0) + count
    if not bucket_counts:
        vec = FeatureVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), cfg.hash_dim)
    else:
        indices = np.array(sorted(bucket_counts), dtype=np.int64)
        values = np.array([bucket_counts[i] for i in indices.tolist()], dtype=np.float64)
        vec = FeatureVector(indices, values, cfg.hash_dim)
    if cfg.l2_normalize:
        vec = l2_normalize(vec)
    return vec


def l2_normalize(v: FeatureVector) -> FeatureVector:
    """Scale to unit L2 norm; the zero vector stays zero."""
    if len(v.values) and not np.all(np.isfinite(v.values)):
        raise ValidationError("non-finite feature weight")
    norm = np.linalg.norm(v.values)
    if norm == 0.0:
        return v
    return FeatureVector(v.indices, v.values / norm, v.dim)
