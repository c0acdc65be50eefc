"""Diffing live updates against the baseline and raising per-bin signals."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .baseline import Baseline, with_state
from .core import AsPath, BgpUpdate, RouteKey, bin_index, collapse_prepending, sorted_communities
from .dictionary import Dictionary, annotate, sorted_meanings

DEFAULT_BIN_WIDTH = 60
DEFAULT_THRESHOLD = 10


class DeviationKind(str, enum.Enum):
    WITHDRAWAL = "withdrawal"
    COMMUNITY_CHANGE = "community-change"
    PATH_CHANGE = "path-change"


@dataclass(frozen=True)
class Deviation:
    key: RouteKey
    bin: int
    kind: DeviationKind
    timestamp: int
    old_communities: frozenset
    new_communities: frozenset
    removed_meanings: frozenset
    added_meanings: frozenset
    old_path: Optional[AsPath] = None
    new_path: Optional[AsPath] = None

    def to_dict(self) -> dict:
        return {
            "peer_asn": self.key.peer.asn,
            "peer_addr": self.key.peer.addr,
            "prefix": str(self.key.prefix),
            "kind": self.kind.value,
            "timestamp": self.timestamp,
            "old_communities": sorted_communities(self.old_communities),
            "new_communities": sorted_communities(self.new_communities),
            "removed_meanings": sorted_meanings(self.removed_meanings),
            "added_meanings": sorted_meanings(self.added_meanings),
            "old_path": None if self.old_path is None else list(self.old_path),
            "new_path": None if self.new_path is None else list(self.new_path),
        }


@dataclass(frozen=True)
class Signal:
    bin: int
    bin_start: int
    bin_end: int
    deviations: Tuple[Deviation, ...]
    count: int
    threshold: int

    def to_dict(self) -> dict:
        return {
            "bin": self.bin,
            "bin_start": self.bin_start,
            "bin_end": self.bin_end,
            "count": self.count,
            "threshold": self.threshold,
            "deviations": [d.to_dict() for d in self.deviations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class DetectorConfig:
    bin_width: int = DEFAULT_BIN_WIDTH
    threshold: float = DEFAULT_THRESHOLD
    threshold_fraction: Optional[float] = None
    reorder_slack: int = 30
    path_change: bool = False

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if self.threshold < 1:
            raise ValueError("threshold must be at least 1")
        if self.threshold_fraction is not None and not 0 < self.threshold_fraction <= 1:
            raise ValueError("threshold_fraction must be in (0, 1]")
        if self.reorder_slack < 0:
            raise ValueError("reorder_slack must be non-negative")


class Detector:
    """Single-writer detection state over one update stream.

    ``monitored`` starts as a copy of the finalized baseline and is updated at
    each bin close with the latest state of every key that deviated in it.
    """

    def __init__(self, baseline: Baseline, dictionary: Dictionary, config: DetectorConfig = DetectorConfig()):
        self.monitored = baseline.copy()
        self.dictionary = dictionary
        self.config = config
        if config.threshold_fraction is not None:
            self.threshold = max(1, math.ceil(config.threshold_fraction * len(baseline)))
        else:
            self.threshold = config.threshold
        # bin -> key -> (latest deviation, latest update)
        self._open: Dict[int, Dict[RouteKey, Tuple[Deviation, BgpUpdate]]] = {}
        self.closed_through: Optional[int] = None
        self.deviation_counts: Dict[int, int] = {}

    def _deviation(self, u: BgpUpdate, b: int) -> Optional[Deviation]:
        entry = self.monitored.get(u.key)
        if entry is None:
            return None
        old_meanings = annotate(self.dictionary, entry.communities)
        if not u.is_announcement:
            return Deviation(u.key, b, DeviationKind.WITHDRAWAL, u.timestamp, entry.communities,
                             frozenset(), old_meanings, frozenset(), entry.path, None)
        if u.communities != entry.communities:
            new_meanings = annotate(self.dictionary, u.communities)
            return Deviation(u.key, b, DeviationKind.COMMUNITY_CHANGE, u.timestamp, entry.communities,
                             u.communities, old_meanings - new_meanings, new_meanings - old_meanings,
                             entry.path, u.path)
        if self.config.path_change and collapse_prepending(u.path) != collapse_prepending(entry.path):
            return Deviation(u.key, b, DeviationKind.PATH_CHANGE, u.timestamp, entry.communities,
                             u.communities, frozenset(), frozenset(), entry.path, u.path)
        return None

    def process_update(self, u: BgpUpdate) -> Optional[Deviation]:
        b = bin_index(u.timestamp, self.config.bin_width)
        if self.closed_through is not None and b <= self.closed_through:
            raise ValueError(f"update at {u.timestamp} falls in closed bin {b}")
        dev = self._deviation(u, b)
        pending = self._open.get(b)
        if dev is not None:
            self._open.setdefault(b, {})[u.key] = (dev, u)
        elif pending is not None and u.key in pending:
            # keep the deviation, track the latest state for re-admission
            pending[u.key] = (pending[u.key][0], u)
        return dev

    def close_bin(self, b: int) -> Optional[Signal]:
        if self.closed_through is not None and b <= self.closed_through:
            raise ValueError(f"bin {b} already closed")
        earlier = [ob for ob in self._open if ob < b]
        if earlier:
            raise ValueError(f"bins {sorted(earlier)} must be closed before bin {b}")
        pending = self._open.pop(b, {})
        self.closed_through = b
        signal = None
        if pending:
            self.deviation_counts[b] = len(pending)
            if len(pending) >= self.threshold:
                w = self.config.bin_width
                devs = tuple(pending[k][0] for k in sorted(pending))
                signal = Signal(b, b * w, (b + 1) * w, devs, len(devs), int(self.threshold))
        for key, (_, latest) in sorted(pending.items()):
            if latest.is_announcement:
                entry = self.monitored.get(key)
                if entry is not None:
                    self.monitored.put(with_state(entry, latest))
            else:
                self.monitored.discard(key)
        return signal

    def advance(self, ts: int) -> List[Signal]:
        """Close every open bin whose end plus the reorder slack is at or before ``ts``."""
        w = self.config.bin_width
        signals = []
        for b in sorted(self._open):
            if (b + 1) * w + self.config.reorder_slack > ts:
                break
            s = self.close_bin(b)
            if s is not None:
                signals.append(s)
        return signals

    def flush(self) -> List[Signal]:
        """Close all open bins (end of stream)."""
        signals = []
        for b in sorted(self._open):
            s = self.close_bin(b)
            if s is not None:
                signals.append(s)
        return signals


def process_update(state: Detector, u: BgpUpdate) -> Optional[Deviation]:
    return state.process_update(u)


def close_bin(state: Detector, b: int) -> Optional[Signal]:
    return state.close_bin(b)


def detect(baseline: Baseline, dictionary: Dictionary, updates, config: DetectorConfig = DetectorConfig()) -> List[Signal]:
    """Run detection over an already-ordered update sequence."""
    det = Detector(baseline, dictionary, config)
    signals = []
    for u in updates:
        signals.extend(det.advance(u.timestamp))
        det.process_update(u)
    signals.extend(det.flush())
    return signals
