"""Routing primitives: communities, prefixes, AS paths, updates and time bins."""

from __future__ import annotations

import enum
import ipaddress
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple

MAX16 = 0xFFFF
MAX32 = 0xFFFFFFFF

_COMMUNITY_RE = re.compile(r"^(\d+):(\d+)$")
_PREFIX_LEN_RE = re.compile(r"^\d{1,3}$")


class CommunityError(ValueError):
    """Raised for community text that cannot be parsed."""


class UnsupportedCommunityForm(CommunityError):
    """Raised for extended or large community forms (more than one colon)."""


class PrefixError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Community:
    """A standard 32-bit community split into tagging ASN and value halves."""

    asn: int
    value: int

    def __post_init__(self):
        for name in ("asn", "value"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= MAX16:
                raise CommunityError(f"community {name} out of 16-bit range: {v!r}")

    def __str__(self) -> str:
        return format_community(self)


def parse_community(text: str) -> Community:
    if not text:
        raise CommunityError("empty community")
    if text.count(":") > 1:
        raise UnsupportedCommunityForm(f"unsupported community form: {text!r}")
    m = _COMMUNITY_RE.match(text)
    if m is None:
        raise CommunityError(f"malformed community: {text!r}")
    asn, value = int(m.group(1)), int(m.group(2))
    if asn > MAX16 or value > MAX16:
        raise CommunityError(f"community half exceeds 16 bits: {text!r}")
    return Community(asn, value)


def format_community(c: Community) -> str:
    return f"{c.asn}:{c.value}"


@dataclass(frozen=True, order=True)
class Prefix:
    """A canonical CIDR prefix. ``network`` is the address as an integer."""

    version: int
    network: int
    length: int

    def __post_init__(self):
        if self.version not in (4, 6):
            raise PrefixError(f"unknown address family: {self.version}")
        if not 0 <= self.length <= self.bits:
            raise PrefixError(f"prefix length {self.length} out of range for v{self.version}")
        host_mask = (1 << (self.bits - self.length)) - 1
        if not 0 <= self.network <= (1 << self.bits) - 1 or self.network & host_mask:
            raise PrefixError("prefix has nonzero host bits")

    @property
    def bits(self) -> int:
        return 32 if self.version == 4 else 128

    @property
    def network_bytes(self) -> bytes:
        return self.network.to_bytes(self.bits // 8, "big")

    def truncate(self, length: int) -> "Prefix":
        """The covering prefix of the given (shorter or equal) length."""
        shift = self.bits - length
        return Prefix(self.version, (self.network >> shift) << shift, length)

    def __str__(self) -> str:
        addr = ipaddress.ip_address(self.network) if self.version == 4 else ipaddress.IPv6Address(self.network)
        return f"{addr}/{self.length}"


def parse_prefix(text: str) -> Prefix:
    """Parse CIDR text. Host bits must already be zero."""
    if not isinstance(text, str) or "/" not in text:
        raise PrefixError(f"not CIDR notation: {text!r}")
    addr_text, _, len_text = text.partition("/")
    if not _PREFIX_LEN_RE.match(len_text):
        raise PrefixError(f"malformed prefix length: {text!r}")
    try:
        addr = ipaddress.ip_address(addr_text)
    except ValueError as exc:
        raise PrefixError(f"malformed address: {text!r}") from exc
    length = int(len_text)
    if length > addr.max_prefixlen:
        raise PrefixError(f"prefix length out of range: {text!r}")
    return Prefix(addr.version, int(addr), length)


def prefix_covers(covering: Prefix, covered: Prefix) -> bool:
    if covering.version != covered.version or covering.length > covered.length:
        return False
    shift = covering.bits - covering.length
    return (covering.network >> shift) == (covered.network >> shift)


AsPath = Tuple[int, ...]


def collapse_prepending(path: AsPath) -> AsPath:
    """Merge adjacent duplicate ASNs (prepending)."""
    out = []
    for asn in path:
        if not out or out[-1] != asn:
            out.append(asn)
    return tuple(out)


def bin_index(timestamp: int, bin_width: int) -> int:
    if bin_width <= 0:
        raise ValueError(f"bin width must be positive, got {bin_width}")
    return timestamp // bin_width


@dataclass(frozen=True, order=True)
class Peer:
    """Observing collector peer."""

    asn: int
    addr: str


@dataclass(frozen=True, order=True)
class RouteKey:
    peer: Peer
    prefix: Prefix

    def __str__(self) -> str:
        return f"AS{self.peer.asn}/{self.peer.addr} {self.prefix}"


class UpdateKind(str, enum.Enum):
    ANNOUNCE = "A"
    WITHDRAW = "W"


@dataclass(frozen=True)
class BgpUpdate:
    timestamp: int
    peer: Peer
    kind: UpdateKind
    prefix: Prefix
    path: AsPath = ()
    communities: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind is UpdateKind.WITHDRAW:
            if self.path or self.communities:
                raise ValueError("withdrawal cannot carry a path or communities")
        elif not self.path:
            raise ValueError("announcement requires a non-empty AS path")

    @property
    def key(self) -> RouteKey:
        return RouteKey(self.peer, self.prefix)

    @property
    def is_announcement(self) -> bool:
        return self.kind is UpdateKind.ANNOUNCE


def announce(ts: int, peer: Peer, prefix: Prefix | str, path, communities=()) -> BgpUpdate:
    """Convenience constructor accepting text prefixes and communities."""
    if isinstance(prefix, str):
        prefix = parse_prefix(prefix)
    comms = frozenset(parse_community(c) if isinstance(c, str) else c for c in communities)
    return BgpUpdate(ts, peer, UpdateKind.ANNOUNCE, prefix, tuple(path), comms)


def withdraw(ts: int, peer: Peer, prefix: Prefix | str) -> BgpUpdate:
    if isinstance(prefix, str):
        prefix = parse_prefix(prefix)
    return BgpUpdate(ts, peer, UpdateKind.WITHDRAW, prefix)


def sorted_communities(cs) -> list:
    return [format_community(c) for c in sorted(cs)]


def optional_path(path: Optional[AsPath]) -> Optional[list]:
    return None if path is None else list(path)
