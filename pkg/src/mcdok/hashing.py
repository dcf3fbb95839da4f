"""128-bit content hashing, the single primitive behind content digests,
feature hashing, and seeded subsampling priorities."""

from __future__ import annotations

import hashlib

DIGEST_BITS = 128
DIGEST_BYTES = DIGEST_BITS // 8


def hash128(data: bytes) -> int:
    """128-bit hash of raw bytes as a nonnegative int."""
    return int.from_bytes(hashlib.blake2b(data, digest_size=DIGEST_BYTES).digest(), "big")


def hash128_hex(data: bytes) -> str:
    """128-bit hash as a 32-char lowercase hex string."""
    return hashlib.blake2b(data, digest_size=DIGEST_BYTES).hexdigest()


def fold(h: int, dim: int) -> int:
    """Fold a hash value into [0, dim). dim must be a power of two."""
    return h & (dim - 1)


def seeded_priority(seed: int, token: str) -> int:
    """Deterministic pseudo-random priority for (seed, token).

    Used to rank samples for subsampling: sorting by priority gives a fixed
    uniform permutation per seed, reproducible across runs and platforms.
    """
    return hash128(seed.to_bytes(8, "big", signed=True) + token.encode("utf-8"))


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent 63-bit stage seed from a base seed and a label."""
    return hash128(seed.to_bytes(8, "big", signed=True) + label.encode("utf-8")) >> 65
