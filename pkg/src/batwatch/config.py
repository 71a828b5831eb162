"""Pipeline configuration.

Defaults are the published operating point: 1000-sample windows with 50%
overlap, lr 0.001, batch 32, 32 epochs, threshold at mean + 3 std,
3 clusters.  A config file is plain key=value lines ('#' comments);
command-line flags override file values, and the test profile shrinks
the window and network sizes so the full pipeline runs in seconds.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError

# 2021-01-01T00:00:00Z: training data is 2020, test data 2021
DEFAULT_BOUNDARY_MS = 1_609_459_200_000


@dataclass
class PipelineConfig:
    window_size: int = 1000
    overlap: float = 0.5
    architecture: str = "mlp"
    mlp_hidden: int = 200
    mlp_embedding: int = 40
    gru_hidden: int = 1024
    learning_rate: float = 0.001
    batch_size: int = 32
    epochs: int = 32
    optimizer: str = "adam"
    clip_norm: float | None = None
    threshold_k: float = 3.0
    threshold_override: float | None = None
    cluster_k: int = 3
    seed: int = 0
    gap_tolerance_ms: int = 5000
    max_interp: int = 4
    soc_start_low: float = 70.0
    soc_start_high: float = 80.0
    soc_end: float = 90.0
    boundary_ms: int = DEFAULT_BOUNDARY_MS
    validation_fraction: float = 0.2

    def apply_profile(self, profile: str) -> None:
        if profile == "paper":
            return
        if profile == "test":
            self.window_size = 200
            self.mlp_hidden = 40
            self.mlp_embedding = 10
            self.gru_hidden = 8
            return
        raise ConfigError(f"unknown profile {profile!r}")

    def to_kv(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name}={'none' if value is None else value}")
        return "\n".join(lines) + "\n"

    def apply_kv(self, text: str) -> None:
        fields = {f.name: f for f in dataclasses.fields(self)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno} is not key=value: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(self, key, _parse_value(key, value))

    def apply_overrides(self, **overrides) -> None:
        """Set only the entries whose value is not None."""
        names = {f.name for f in dataclasses.fields(self)}
        for key, value in overrides.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                setattr(self, key, value)


_FIELD_PARSERS = {
    "window_size": int,
    "overlap": float,
    "architecture": str,
    "mlp_hidden": int,
    "mlp_embedding": int,
    "gru_hidden": int,
    "learning_rate": float,
    "batch_size": int,
    "epochs": int,
    "optimizer": str,
    "clip_norm": float,
    "threshold_k": float,
    "threshold_override": float,
    "cluster_k": int,
    "seed": int,
    "gap_tolerance_ms": int,
    "max_interp": int,
    "soc_start_low": float,
    "soc_start_high": float,
    "soc_end": float,
    "boundary_ms": int,
    "validation_fraction": float,
}


def _parse_value(key: str, value: str):
    if value.lower() in ("none", ""):
        return None
    try:
        return _FIELD_PARSERS[key](value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def load_config_file(path) -> PipelineConfig:
    cfg = PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        cfg.apply_kv(fh.read())
    return cfg
