"""Attributing signals to infrastructure locations via geolocation communities."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .core import BgpUpdate, RouteKey, bin_index
from .detector import Signal
from .dictionary import Dictionary, Geolocation, annotate, meaning_to_dict

DEFAULT_CONCENTRATION_MIN = 0.5
DEFAULT_ATTRIBUTED_MIN = 10


@dataclass(frozen=True)
class OutageConfig:
    concentration_min: float = DEFAULT_CONCENTRATION_MIN
    attributed_min: int = DEFAULT_ATTRIBUTED_MIN

    def __post_init__(self):
        if not 0 < self.concentration_min <= 1:
            raise ValueError("concentration_min must be in (0, 1]")
        if self.attributed_min < 1:
            raise ValueError("attributed_min must be at least 1")


@dataclass(frozen=True)
class OutageReport:
    bin: int
    location: Geolocation
    attributed: int
    total: int
    concentration: float
    verdict: str  # "outage" | "inconclusive"

    def to_dict(self) -> dict:
        return {
            "bin": self.bin,
            "location": meaning_to_dict(self.location),
            "attributed": self.attributed,
            "total": self.total,
            "concentration": self.concentration,
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def investigate_outage(signal: Signal, d: Optional[Dictionary] = None,
                       cfg: OutageConfig = OutageConfig()) -> List[OutageReport]:
    """One report per geolocation removed by any deviation, most concentrated first.

    Both withdrawals and community changes contribute: a route that survives
    but loses its location tag was still moved off that infrastructure.
    With ``d`` the removed meanings are resolved again from the deviation's
    community sets; without it the meanings recorded at detection are used.
    """
    total = signal.count
    attributed = Counter()
    for dev in signal.deviations:
        removed = dev.removed_meanings if d is None else \
            annotate(d, dev.old_communities) - annotate(d, dev.new_communities)
        for m in removed:
            if isinstance(m, Geolocation):
                attributed[m] += 1
    reports = []
    for loc, n in attributed.items():
        conc = n / total if total else 0.0
        ok = conc >= cfg.concentration_min and n >= cfg.attributed_min
        reports.append(OutageReport(signal.bin, loc, n, total, conc, "outage" if ok else "inconclusive"))
    reports.sort(key=lambda r: (-r.concentration, r.location.scope, r.location.location))
    return reports


class LocationSeries:
    """Streaming per-bin announcement/withdrawal counts, overall and per location.

    Withdrawals carry no communities, so they are attributed to the locations
    of the last community set announced for the same route.
    """

    def __init__(self, dictionary: Dictionary, bin_width: int):
        if bin_width <= 0:
            raise ValueError("bin_width must be positive")
        self.dictionary = dictionary
        self.bin_width = bin_width
        self.total: Dict[int, List[int]] = defaultdict(lambda: [0, 0])
        self.by_location: Dict[Geolocation, Dict[int, List[int]]] = defaultdict(lambda: defaultdict(lambda: [0, 0]))
        self._last_locations: Dict[RouteKey, frozenset] = {}
        self.first_bin: Optional[int] = None
        self.last_bin: Optional[int] = None

    def _locations(self, communities) -> frozenset:
        return frozenset(m for m in annotate(self.dictionary, communities) if isinstance(m, Geolocation))

    def add(self, u: BgpUpdate):
        b = bin_index(u.timestamp, self.bin_width)
        self.first_bin = b if self.first_bin is None else min(self.first_bin, b)
        self.last_bin = b if self.last_bin is None else max(self.last_bin, b)
        slot = 0 if u.is_announcement else 1
        self.total[b][slot] += 1
        if u.is_announcement:
            locs = self._locations(u.communities)
            if locs:
                self._last_locations[u.key] = locs
            else:
                self._last_locations.pop(u.key, None)
        else:
            locs = self._last_locations.get(u.key, frozenset())
        for loc in locs:
            self.by_location[loc][b][slot] += 1

    def series(self, location: Optional[Geolocation] = None) -> List[Tuple[int, int, int]]:
        if self.first_bin is None:
            return []
        counts = self.total if location is None else self.by_location.get(location, {})
        out = []
        for b in range(self.first_bin, self.last_bin + 1):
            a, w = counts.get(b, (0, 0))
            out.append((b, a, w))
        return out

    def locations(self) -> List[Geolocation]:
        return sorted(self.by_location, key=lambda g: (g.scope, g.location))


def location_timeseries(updates: Iterable[BgpUpdate], d: Dictionary,
                        location_filter: Optional[Geolocation] = None,
                        bin_width: int = 60) -> List[Tuple[int, int, int]]:
    """Dense ``(bin, announcements, withdrawals)`` series from the first to the last active bin."""
    acc = LocationSeries(d, bin_width)
    for u in updates:
        acc.add(u)
    return acc.series(location_filter)


def write_series_csv(series, bin_width: int, fh):
    fh.write("bin_start,announcements,withdrawals\n")
    for b, a, w in series:
        fh.write(f"{b * bin_width},{a},{w}\n")
