"""Synthetic labeled-code generators for demos and test fixtures.

Programs are assembled from language-flavored line templates plus
class-specific identifier styles (derived from the class name's hash), so
each class carries a learnable stylistic signal without any real data.
"""

from __future__ import annotations

import numpy as np

from .corpus import CodeSample, Corpus, LabelScheme, content_digest
from .hashing import hash128_hex

DEFAULT_LANGUAGES = ("C++", "Python", "Java")
EXTENDED_LANGUAGES = DEFAULT_LANGUAGES + ("Go", "PHP", "Rust", "C#")

_COMMON_IDENTS = ("count", "items", "total", "index", "buffer", "node", "value", "state")
_COMMON_CALLS = ("size", "next", "update", "push", "read", "emit")


def style_tokens(label: str) -> tuple[str, str, str]:
    """Three identifier fragments characteristic of one class."""
    h = hash128_hex(label.encode("utf-8"))
    return f"v{h[:4]}", f"fn_{h[4:8]}", f"acc_{h[8:12]}"


def generators_for(label: str) -> tuple[str, ...]:
    if label == "human":
        return ("human",)
    return (f"{label}-m1", f"{label}-m2")


def _line(rng: np.random.Generator, language: str, idents: list[str]) -> str:
    a, b = rng.choice(idents), rng.choice(idents)
    call = rng.choice(_COMMON_CALLS)
    k = int(rng.integers(0, 100))
    templates_c = (
        f"int {a} = {b}.{call}({k});",
        f"for (int i = 0; i < {k}; ++i) {{ {a} += {b}[i]; }}",
        f"if ({a} > {k}) return {b};",
        f"{a} = {call}({b}, {k});",
    )
    templates_py = (
        f"{a} = {b}.{call}({k})",
        f"for i in range({k}): {a} += {b}[i]",
        f"if {a} > {k}: return {b}",
        f"{a} = {call}({b}, {k})",
    )
    if language == "Python":
        return str(rng.choice(templates_py))
    return str(rng.choice(templates_c))


def make_sample(
    sample_id: str,
    label: str,
    language: str,
    generator: str,
    rng: np.random.Generator,
    scheme: LabelScheme,
    noise: float = 0.05,
) -> CodeSample:
    """One program whose identifiers lean heavily on the label's style."""
    own = list(style_tokens(label))
    idents = own * 3 + list(_COMMON_IDENTS)
    if noise > 0 and rng.random() < noise:
        other = str(rng.choice([c for c in scheme.classes if c != label]))
        idents += list(style_tokens(other))
    n_lines = int(rng.integers(6, 14))
    header = f"def {own[1]}(x):" if language == "Python" else f"static int {own[1]}(int x) {{"
    body = [("    " if language == "Python" else "  ") + _line(rng, language, idents)
            for _ in range(n_lines)]
    footer = "" if language == "Python" else "}"
    code = "\n".join([header] + body + ([footer] if footer else []))
    return CodeSample(
        id=sample_id,
        code=code,
        language=language,
        generator=generator,
        family=label if label != "human" else "human",
        label=label,
        domain="algorithmic",
        digest=content_digest(code),
    )


def make_corpus(
    scheme: LabelScheme,
    n: int,
    seed: int,
    languages: tuple[str, ...] = DEFAULT_LANGUAGES,
    id_prefix: str = "s",
    noise: float = 0.05,
) -> Corpus:
    """Balanced synthetic corpus: classes round-robin over languages and
    per-class generators, ids unique under the given prefix."""
    rng = np.random.default_rng(seed)
    samples = []
    classes = scheme.classes
    for i in range(n):
        label = classes[i % len(classes)]
        language = languages[(i // len(classes)) % len(languages)]
        gens = generators_for(label)
        generator = gens[(i // (len(classes) * len(languages))) % len(gens)]
        samples.append(
            make_sample(f"{id_prefix}{i:06d}", label, language, generator, rng, scheme, noise)
        )
    return Corpus(tuple(samples), scheme, provenance=f"synthetic(seed={seed}, n={n})")
