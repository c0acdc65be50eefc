"""Classifying blackholing requests and aggregating them over time."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .baseline import Baseline
from .core import BgpUpdate, Community, Peer, Prefix, sorted_communities
from .dictionary import Blackhole, Dictionary, lookup

DAY = 86400


@dataclass(frozen=True)
class BlackholeEvent:
    timestamp: int
    prefix: Prefix
    requester_asn: int
    peer: Peer
    covered_by_baseline: bool
    communities: Tuple[Community, ...]  # every blackhole-resolving community, sorted

    @property
    def prefix_length(self) -> int:
        return self.prefix.length

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "prefix": str(self.prefix),
            "prefix_length": self.prefix_length,
            "requester_asn": self.requester_asn,
            "peer_asn": self.peer.asn,
            "peer_addr": self.peer.addr,
            "covered_by_baseline": self.covered_by_baseline,
            "communities": sorted_communities(self.communities),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def blackhole_communities(u: BgpUpdate, d: Dictionary) -> List[Community]:
    return sorted(c for c in u.communities if Blackhole() in lookup(d, c))


def classify_blackhole(u: BgpUpdate, d: Dictionary, baseline: Optional[Baseline] = None) -> Optional[BlackholeEvent]:
    if not u.is_announcement:
        return None
    tagged = blackhole_communities(u, d)
    if not tagged:
        return None
    covered = baseline is not None and baseline.covering(u.peer, u.prefix)
    return BlackholeEvent(u.timestamp, u.prefix, tagged[0].asn, u.peer, covered, tuple(tagged))


@dataclass
class BlackholeSeries:
    period: int
    points: List[Tuple[int, int, int]] = field(default_factory=list)  # (period index, distinct prefixes, events)
    cumulative: List[int] = field(default_factory=list)  # distinct prefixes seen up to each period


class SeriesAccumulator:
    """Incremental form of :func:`blackhole_series`."""

    def __init__(self, period: int = DAY):
        if period <= 0:
            raise ValueError("period must be positive")
        self.period = period
        self._prefixes: Dict[int, Set[Prefix]] = defaultdict(set)
        self._events: Counter = Counter()

    def add(self, ev: BlackholeEvent):
        p = ev.timestamp // self.period
        self._prefixes[p].add(ev.prefix)
        self._events[p] += 1

    def series(self) -> BlackholeSeries:
        out = BlackholeSeries(self.period)
        if not self._events:
            return out
        seen: Set[Prefix] = set()
        for p in range(min(self._events), max(self._events) + 1):
            prefixes = self._prefixes.get(p, set())
            seen |= prefixes
            out.points.append((p, len(prefixes), self._events.get(p, 0)))
            out.cumulative.append(len(seen))
        return out


def blackhole_series(events: Iterable[BlackholeEvent], period: int = DAY) -> BlackholeSeries:
    acc = SeriesAccumulator(period)
    for ev in events:
        acc.add(ev)
    return acc.series()


def blackhole_prefix_length_histogram(events: Iterable[BlackholeEvent]) -> Dict[int, int]:
    return dict(sorted(Counter(ev.prefix_length for ev in events).items()))


def write_series_csv(series: BlackholeSeries, fh):
    fh.write("period_start,distinct_prefixes,events,cumulative_distinct_prefixes\n")
    for (p, distinct, n), cum in zip(series.points, series.cumulative):
        fh.write(f"{p * series.period},{distinct},{n},{cum}\n")


def write_histogram_csv(hist: Dict[int, int], fh):
    fh.write("prefix_length,count\n")
    for length, n in sorted(hist.items()):
        fh.write(f"{length},{n}\n")
