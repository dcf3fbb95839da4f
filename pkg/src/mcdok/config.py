"""Run configuration: TOML config file, per-module sections, and the
flag > file > default precedence rule."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ValidationError
from .features import FeaturizerConfig
from .model import DecisionPolicy
from .training import TrainingConfig, preset_training

CONFIG_ENV_VAR = "MCDOK_CONFIG"

# The desk profile trades the published learning rate and feature width for
# ones that converge fast with the linear model on a laptop.
PROFILE_FEATURIZER = {
    "paper": {},
    "desk": {"hash_dim": 1 << 16},
}


@dataclass(frozen=True)
class RunConfig:
    """Raw per-module config sections, plus builders that apply overrides."""

    featurizer: Mapping[str, Any] = field(default_factory=dict)
    training: Mapping[str, Any] = field(default_factory=dict)
    decision: Mapping[str, Any] = field(default_factory=dict)
    curation: Mapping[str, Any] = field(default_factory=dict)
    corpus: Mapping[str, Any] = field(default_factory=dict)
    source_path: str = ""

    def featurizer_config(self, profile: str = "paper", **cli_overrides: Any) -> FeaturizerConfig:
        values: dict[str, Any] = dict(PROFILE_FEATURIZER.get(profile, {}))
        values.update(self.featurizer)
        values.update({k: v for k, v in cli_overrides.items() if v is not None})
        allowed = {f.name for f in fields(FeaturizerConfig)}
        unknown = set(values) - allowed
        if unknown:
            raise ValidationError(f"unknown featurizer config keys: {sorted(unknown)}")
        return FeaturizerConfig(**values)

    def training_config(
        self, subtask: str, profile: str = "paper", **cli_overrides: Any
    ) -> TrainingConfig:
        cfg = preset_training(subtask, profile)
        allowed = {f.name for f in fields(TrainingConfig)}
        file_values = {k: v for k, v in self.training.items() if k not in ("profile",)}
        unknown = set(file_values) - allowed
        if unknown:
            raise ValidationError(f"unknown training config keys: {sorted(unknown)}")
        cfg = replace(cfg, **file_values)
        cfg = replace(cfg, **{k: v for k, v in cli_overrides.items() if v is not None})
        return cfg

    def decision_policy(self, **cli_overrides: Any) -> DecisionPolicy:
        values: dict[str, Any] = dict(self.decision)
        values.update({k: v for k, v in cli_overrides.items() if v is not None})
        allowed = {f.name for f in fields(DecisionPolicy)}
        unknown = set(values) - allowed
        if unknown:
            raise ValidationError(f"unknown decision config keys: {sorted(unknown)}")
        return DecisionPolicy(**values)

    def curation_seed(self, cli_seed: int | None) -> int:
        if cli_seed is not None:
            return cli_seed
        return int(self.curation.get("seed", 0))

    def family_map(self) -> dict[str, str] | None:
        mapping = self.corpus.get("family_map")
        if mapping is None:
            return None
        if not isinstance(mapping, dict):
            raise ValidationError("[corpus.family_map] must be a table of generator = family")
        return {str(k): str(v) for k, v in mapping.items()}


def load_config(path: str | Path | None = None) -> RunConfig:
    """Read the TOML config named by `path`, else $MCDOK_CONFIG, else defaults."""
    if path is None:
        env = os.environ.get(CONFIG_ENV_VAR)
        path = env if env else None
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: invalid TOML ({exc})") from None
    known = {"featurizer", "training", "decision", "curation", "corpus"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"{path}: unknown config sections: {sorted(unknown)}")
    return RunConfig(
        featurizer=data.get("featurizer", {}),
        training=data.get("training", {}),
        decision=data.get("decision", {}),
        curation=data.get("curation", {}),
        corpus=data.get("corpus", {}),
        source_path=str(path),
    )
