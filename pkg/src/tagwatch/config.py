from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import Optional

INVESTIGATORS = ("outage", "blackhole", "valley")


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    dictionary: Optional[str] = None
    input: Optional[str] = None  # path, or "-" for standard input
    output_dir: str = "out"
    bin_width: int = 60
    init_window: int = 3600
    min_observations: int = 2
    threshold: float = 10
    threshold_fraction: Optional[float] = None
    reorder_slack: int = 30
    path_change: bool = False
    outage_concentration: float = 0.5
    outage_attributed_min: int = 10
    blackhole_period: int = 86400
    investigators: list = field(default_factory=lambda: list(INVESTIGATORS))
    baseline_in: Optional[str] = None

    def validate(self) -> "Config":
        for name in ("bin_width", "init_window", "blackhole_period"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.reorder_slack, bool) or not isinstance(self.reorder_slack, int) or self.reorder_slack < 0:
            raise ConfigError(f"reorder_slack must be a non-negative integer, got {self.reorder_slack!r}")
        if not isinstance(self.min_observations, int) or self.min_observations < 1:
            raise ConfigError("min_observations must be at least 1")
        if not isinstance(self.threshold, (int, float)) or math.isnan(self.threshold) or self.threshold < 1:
            raise ConfigError(f"threshold must be at least 1, got {self.threshold!r}")
        if self.threshold_fraction is not None and not 0 < self.threshold_fraction <= 1:
            raise ConfigError("threshold_fraction must be in (0, 1]")
        if not 0 < self.outage_concentration <= 1:
            raise ConfigError("outage_concentration must be in (0, 1]")
        if not isinstance(self.outage_attributed_min, int) or self.outage_attributed_min < 1:
            raise ConfigError("outage_attributed_min must be at least 1")
        unknown = set(self.investigators) - set(INVESTIGATORS)
        if unknown:
            raise ConfigError(f"unknown investigators: {sorted(unknown)}")
        if not self.dictionary:
            raise ConfigError("a dictionary path is required")
        if not self.input:
            raise ConfigError("an input path (or '-') is required")
        return self

    @classmethod
    def from_dict(cls, obj: dict) -> "Config":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_file(cls, path) -> "Config":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(obj)
