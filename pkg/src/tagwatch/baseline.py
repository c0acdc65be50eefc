"""Learning the reference set of stably-tagged routes."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, Optional, Tuple

from .core import (
    AsPath,
    BgpUpdate,
    Peer,
    Prefix,
    RouteKey,
    parse_community,
    parse_prefix,
    sorted_communities,
)

DEFAULT_INIT_WINDOW = 3600
DEFAULT_MIN_OBSERVATIONS = 2


@dataclass(frozen=True)
class BaselineEntry:
    key: RouteKey
    path: AsPath
    communities: frozenset
    observations: int
    first_seen: int
    last_seen: int


class Baseline:
    """RouteKey -> BaselineEntry, with a per-peer index for covering lookups."""

    def __init__(self, entries: Iterable[BaselineEntry] = (), window: Tuple[int, int] = (0, 0)):
        self.window = window
        self._entries: Dict[RouteKey, BaselineEntry] = {}
        self._index = defaultdict(set)  # (peer, version, length, network)
        for e in entries:
            self.put(e)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def __iter__(self) -> Iterator[BaselineEntry]:
        return iter(self._entries.values())

    def get(self, key: RouteKey) -> Optional[BaselineEntry]:
        return self._entries.get(key)

    def keys(self):
        return self._entries.keys()

    def put(self, entry: BaselineEntry):
        if entry.key in self._entries:
            self.discard(entry.key)
        self._entries[entry.key] = entry
        p = entry.key.prefix
        self._index[entry.key.peer].add((p.version, p.length, p.network))

    def discard(self, key: RouteKey):
        if self._entries.pop(key, None) is not None:
            p = key.prefix
            self._index[key.peer].discard((p.version, p.length, p.network))

    def copy(self) -> "Baseline":
        return Baseline(self._entries.values(), self.window)

    def covering(self, peer: Peer, prefix: Prefix) -> bool:
        """True if some route of ``peer`` covers ``prefix`` (including equality)."""
        idx = self._index.get(peer)
        if not idx:
            return False
        for length in range(prefix.length + 1):
            p = prefix.truncate(length)
            if (p.version, p.length, p.network) in idx:
                return True
        return False

    def sorted_entries(self) -> list:
        return sorted(self._entries.values(), key=lambda e: e.key)


@dataclass
class _KeyState:
    communities: Optional[frozenset] = None
    path: AsPath = ()
    observations: int = 0
    first_seen: Optional[int] = None
    last_seen: Optional[int] = None
    last_announce: Optional[int] = None
    last_withdraw: Optional[int] = None
    unstable: bool = False

    @property
    def withdrawn(self) -> bool:
        # an announce and a withdraw at the same timestamp: the announce wins
        if self.last_withdraw is None:
            return False
        return self.last_announce is None or self.last_withdraw > self.last_announce


@dataclass
class BaselineBuilder:
    """Accumulates observations over ``[start, end)``."""

    start: int
    end: int
    min_observations: int = DEFAULT_MIN_OBSERVATIONS
    keys: Dict[RouteKey, _KeyState] = field(default_factory=dict)

    def __post_init__(self):
        if self.min_observations < 1:
            raise ValueError("min_observations must be at least 1")

    def observe(self, u: BgpUpdate) -> "BaselineBuilder":
        return observe(self, u)

    def finalize(self) -> Baseline:
        return finalize(self)


def observe(state: BaselineBuilder, u: BgpUpdate) -> BaselineBuilder:
    if not state.start <= u.timestamp < state.end:
        raise ValueError(
            f"update at {u.timestamp} outside initialization window [{state.start}, {state.end})"
        )
    ks = state.keys.setdefault(u.key, _KeyState())
    ts = u.timestamp
    if not u.is_announcement:
        if ks.last_withdraw is None or ts > ks.last_withdraw:
            ks.last_withdraw = ts
        return state
    if ks.communities is None:
        ks.communities = u.communities
    elif u.communities != ks.communities:
        ks.unstable = True
    ks.observations += 1
    if ks.first_seen is None or ts < ks.first_seen:
        ks.first_seen = ts
    if ks.last_seen is None or ts >= ks.last_seen:
        ks.path = u.path
        ks.last_seen = ts
    if ks.last_announce is None or ts > ks.last_announce:
        ks.last_announce = ts
    return state


def finalize(state: BaselineBuilder) -> Baseline:
    entries = [
        BaselineEntry(key, ks.path, ks.communities, ks.observations, ks.first_seen, ks.last_seen)
        for key, ks in state.keys.items()
        if not ks.unstable and not ks.withdrawn and ks.observations >= state.min_observations
    ]
    entries.sort(key=lambda e: e.key)
    return Baseline(entries, (state.start, state.end))


def build_baseline(updates: Iterable[BgpUpdate], start: int, end: int,
                   min_observations: int = DEFAULT_MIN_OBSERVATIONS) -> Baseline:
    b = BaselineBuilder(start, end, min_observations)
    for u in updates:
        b.observe(u)
    return b.finalize()


def entry_to_json(e: BaselineEntry, window: Tuple[int, int]) -> str:
    return json.dumps({
        "peer_asn": e.key.peer.asn,
        "peer_addr": e.key.peer.addr,
        "prefix": str(e.key.prefix),
        "communities": sorted_communities(e.communities),
        "path": list(e.path),
        "observations": e.observations,
        "first_seen": e.first_seen,
        "last_seen": e.last_seen,
        "window": list(window),
    }, separators=(",", ":"))


def dump_baseline(baseline: Baseline, fh):
    for e in baseline.sorted_entries():
        fh.write(entry_to_json(e, baseline.window) + "\n")


def load_baseline(fh) -> Baseline:
    entries = []
    window = (0, 0)
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            key = RouteKey(Peer(int(obj["peer_asn"]), str(obj["peer_addr"])), parse_prefix(obj["prefix"]))
            entries.append(BaselineEntry(
                key,
                tuple(int(a) for a in obj["path"]),
                frozenset(parse_community(c) for c in obj["communities"]),
                int(obj["observations"]),
                int(obj["first_seen"]),
                int(obj["last_seen"]),
            ))
            window = tuple(obj["window"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"baseline line {lineno}: {exc}") from None
    return Baseline(entries, window)


def with_state(entry: BaselineEntry, u: BgpUpdate) -> BaselineEntry:
    """The entry re-admitted with the announcement's current state."""
    return replace(entry, path=u.path, communities=u.communities, last_seen=u.timestamp,
                   observations=entry.observations + 1)
