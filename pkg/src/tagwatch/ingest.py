"""NDJSON update-record parsing and time-ordered delivery.

One record per line::

    {"ts": 1519862460, "peer_asn": 64496, "peer_addr": "203.0.113.1",
     "type": "A", "prefix": "192.0.2.0/24", "as_path": [64496, 64501],
     "communities": ["64501:100"]}

Withdrawals (``"type": "W"``) carry neither ``as_path`` nor ``communities``.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .core import (
    MAX32,
    BgpUpdate,
    CommunityError,
    Peer,
    PrefixError,
    UpdateKind,
    format_community,
    parse_community,
    parse_prefix,
)

log = logging.getLogger(__name__)

DEFAULT_REORDER_SLACK = 30


class RecordError(ValueError):
    pass


def _int_field(obj: dict, name: str, lo: int = 0, hi: int = MAX32) -> int:
    if name not in obj:
        raise RecordError(f"missing required field {name!r}")
    v = obj[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise RecordError(f"field {name!r} must be an integer")
    if not lo <= v <= hi:
        raise RecordError(f"field {name!r} out of range: {v}")
    return v


def _str_field(obj: dict, name: str) -> str:
    if name not in obj:
        raise RecordError(f"missing required field {name!r}")
    v = obj[name]
    if not isinstance(v, str) or not v:
        raise RecordError(f"field {name!r} must be a non-empty string")
    return v


def _parse_path(raw) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise RecordError("as_path must be a non-empty array")
    hops = []
    for hop in raw:
        if isinstance(hop, (list, dict)) or (isinstance(hop, str) and hop.lstrip().startswith("{")):
            raise RecordError("AS-set in as_path is not supported")
        if isinstance(hop, bool) or not isinstance(hop, int) or not 0 <= hop <= MAX32:
            raise RecordError(f"invalid ASN in as_path: {hop!r}")
        hops.append(hop)
    return tuple(hops)


def parse_record(line: str) -> BgpUpdate:
    """Parse and validate one NDJSON record. Raises RecordError on any defect."""
    try:
        obj = json.loads(line)
    except (ValueError, RecursionError) as exc:
        raise RecordError(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise RecordError("record must be a JSON object")

    ts = _int_field(obj, "ts", lo=-(2**63), hi=2**63 - 1)
    peer = Peer(_int_field(obj, "peer_asn"), _str_field(obj, "peer_addr"))
    kind_text = _str_field(obj, "type")
    try:
        kind = UpdateKind(kind_text)
    except ValueError:
        raise RecordError(f"unknown record type {kind_text!r}") from None
    prefix_text = _str_field(obj, "prefix")
    try:
        prefix = parse_prefix(prefix_text)
    except PrefixError as exc:
        raise RecordError(str(exc)) from None

    if kind is UpdateKind.WITHDRAW:
        if obj.get("as_path") or obj.get("communities"):
            raise RecordError("withdrawal carries path or communities")
        return BgpUpdate(ts, peer, kind, prefix)

    if "as_path" not in obj:
        raise RecordError("missing required field 'as_path'")
    path = _parse_path(obj["as_path"])
    raw_comms = obj.get("communities", [])
    if raw_comms is None:
        raw_comms = []
    if not isinstance(raw_comms, list):
        raise RecordError("communities must be an array")
    comms = set()
    for text in raw_comms:
        if not isinstance(text, str):
            raise RecordError(f"community must be a string: {text!r}")
        try:
            comms.add(parse_community(text))
        except CommunityError as exc:
            raise RecordError(str(exc)) from None
    return BgpUpdate(ts, peer, kind, prefix, path, frozenset(comms))


def format_record(u: BgpUpdate) -> str:
    obj = {
        "ts": u.timestamp,
        "peer_asn": u.peer.asn,
        "peer_addr": u.peer.addr,
        "type": u.kind.value,
        "prefix": str(u.prefix),
    }
    if u.is_announcement:
        obj["as_path"] = list(u.path)
        obj["communities"] = [format_community(c) for c in sorted(u.communities)]
    return json.dumps(obj, separators=(",", ":"))


@dataclass
class StreamCursor:
    """Read position over a record stream.

    ``last_ts`` is the high-water mark of accepted timestamps; records older
    than ``last_ts - slack`` are dropped as stale.
    """

    slack: int = DEFAULT_REORDER_SLACK
    consumed: int = 0
    accepted: int = 0
    last_ts: Optional[int] = None
    dropped: Counter = field(default_factory=Counter)

    @property
    def dropped_total(self) -> int:
        return sum(self.dropped.values())

    def next_update(self, source: Iterator[str]) -> Optional[BgpUpdate]:
        return next_update(self, source)


def next_update(cursor: StreamCursor, source: Iterator[str]) -> Optional[BgpUpdate]:
    """Return the next acceptable update from ``source``, or None at end of stream.

    Blank lines are not records and are skipped without being counted.
    """
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        if not line.strip():
            continue
        cursor.consumed += 1
        try:
            u = parse_record(line)
        except RecordError as exc:
            cursor.dropped["malformed"] += 1
            log.debug("dropping malformed record %d: %s", cursor.consumed, exc)
            continue
        if cursor.last_ts is not None and u.timestamp < cursor.last_ts - cursor.slack:
            cursor.dropped["stale"] += 1
            log.debug("dropping stale record %d at ts=%d", cursor.consumed, u.timestamp)
            continue
        cursor.accepted += 1
        if cursor.last_ts is None or u.timestamp > cursor.last_ts:
            cursor.last_ts = u.timestamp
        return u
    return None


def read_updates(source: Iterable[str], cursor: Optional[StreamCursor] = None) -> Iterator[BgpUpdate]:
    cursor = cursor if cursor is not None else StreamCursor()
    it = iter(source)
    while True:
        u = next_update(cursor, it)
        if u is None:
            return
        yield u
