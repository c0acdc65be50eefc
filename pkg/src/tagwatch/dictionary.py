"""Dictionary of interpreted communities.

The on-disk format is a flat CSV::

    asn,value_spec,category,subtype,location,description
    3356,2003,geolocation,city,"Frankfurt","provider docs"
    100,600-700,blackhole,,,""

``#``-prefixed lines are comments.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Union

from .core import MAX16, Community

GEO_SCOPES = ("ixp", "facility", "city", "country")
ROLES = ("customer", "peer", "provider")
ACTIONS = ("selective-advertisement", "local-preference", "prepend")
CATEGORIES = ("geolocation", "relationship", "blackhole", "action")
HEADER = ["asn", "value_spec", "category", "subtype", "location", "description"]


class DictionaryError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, order=True)
class Geolocation:
    scope: str
    location: str
    category = "geolocation"

    def __post_init__(self):
        if self.scope not in GEO_SCOPES:
            raise DictionaryError(f"unknown geolocation scope {self.scope!r}")
        if not self.location:
            raise DictionaryError("geolocation requires a non-empty location label")


@dataclass(frozen=True, order=True)
class Relationship:
    role: str
    category = "relationship"

    def __post_init__(self):
        if self.role not in ROLES:
            raise DictionaryError(f"unknown relationship role {self.role!r}")


@dataclass(frozen=True, order=True)
class Blackhole:
    category = "blackhole"


@dataclass(frozen=True, order=True)
class RoutingAction:
    action: str
    category = "action"

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise DictionaryError(f"unknown routing action {self.action!r}")


Meaning = Union[Geolocation, Relationship, Blackhole, RoutingAction]


def meaning_sort_key(m: Meaning) -> tuple:
    return (m.category, meaning_to_dict(m).get("scope", ""), meaning_label(m))


def meaning_label(m: Meaning) -> str:
    if isinstance(m, Geolocation):
        return m.location
    if isinstance(m, Relationship):
        return m.role
    if isinstance(m, RoutingAction):
        return m.action
    return ""


def meaning_to_dict(m: Meaning) -> dict:
    if isinstance(m, Geolocation):
        return {"category": m.category, "scope": m.scope, "location": m.location}
    if isinstance(m, Relationship):
        return {"category": m.category, "role": m.role}
    if isinstance(m, RoutingAction):
        return {"category": m.category, "action": m.action}
    return {"category": m.category}


def meaning_from_dict(obj: dict) -> Meaning:
    cat = obj.get("category")
    if cat == "geolocation":
        return Geolocation(obj["scope"], obj["location"])
    if cat == "relationship":
        return Relationship(obj["role"])
    if cat == "action":
        return RoutingAction(obj["action"])
    if cat == "blackhole":
        return Blackhole()
    raise DictionaryError(f"unknown meaning category {cat!r}")


def sorted_meanings(ms: Iterable[Meaning]) -> list:
    return [meaning_to_dict(m) for m in sorted(ms, key=meaning_sort_key)]


@dataclass(frozen=True, order=True)
class ValueSpec:
    """Inclusive range of 16-bit values; an exact value is ``lo == hi``."""

    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= MAX16 and 0 <= self.hi <= MAX16):
            raise DictionaryError(f"value spec out of 16-bit range: {self.lo}-{self.hi}")
        if self.lo > self.hi:
            raise DictionaryError(f"empty value range: {self.lo}-{self.hi}")

    @classmethod
    def exact(cls, v: int) -> "ValueSpec":
        return cls(v, v)

    @classmethod
    def parse(cls, text: str) -> "ValueSpec":
        lo, sep, hi = text.strip().partition("-")
        if not lo.isdigit() or (sep and not hi.isdigit()):
            raise DictionaryError(f"malformed value spec {text!r}")
        return cls(int(lo), int(hi) if sep else int(lo))

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def overlaps(self, other: "ValueSpec") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __str__(self) -> str:
        return str(self.lo) if self.is_exact else f"{self.lo}-{self.hi}"


@dataclass(frozen=True)
class DictionaryEntry:
    asn: int
    spec: ValueSpec
    meaning: Meaning
    description: str = ""

    def __post_init__(self):
        if not 0 <= self.asn <= MAX16:
            raise DictionaryError(f"asn out of 16-bit range: {self.asn}")


class Dictionary:
    """Immutable collection of entries with lookup by community.

    Overlapping entries of the same asn and category must agree on meaning.
    With ``allow_exact_overrides`` an exact entry may sit inside a range entry
    of the same category with a different meaning; lookup then prefers the
    exact entry.
    """

    def __init__(self, entries: Iterable[DictionaryEntry] = (), *, allow_exact_overrides: bool = False):
        self.entries = tuple(entries)
        self.allow_exact_overrides = allow_exact_overrides
        self._by_asn = defaultdict(list)
        for e in self.entries:
            self._by_asn[e.asn].append(e)
        self._validate()

    def _validate(self):
        for asn, entries in self._by_asn.items():
            for i, a in enumerate(entries):
                for b in entries[i + 1:]:
                    if a.meaning.category != b.meaning.category or a.meaning == b.meaning:
                        continue
                    if not a.spec.overlaps(b.spec):
                        continue
                    if self.allow_exact_overrides and a.spec.is_exact != b.spec.is_exact:
                        continue
                    raise DictionaryError(
                        f"conflicting {a.meaning.category} entries for asn {asn}: "
                        f"{a.spec} vs {b.spec}"
                    )

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def lookup(self, c: Community) -> frozenset:
        return lookup(self, c)

    def annotate(self, cs: Iterable[Community]) -> frozenset:
        return annotate(self, cs)

    def candidates(self, asn: int) -> list:
        return self._by_asn.get(asn, [])


def lookup(d: Dictionary, c: Community) -> frozenset:
    matches = [e for e in d.candidates(c.asn) if c.value in e.spec]
    exact_categories = {e.meaning.category for e in matches if e.spec.is_exact}
    return frozenset(
        e.meaning for e in matches
        if e.spec.is_exact or e.meaning.category not in exact_categories
    )


def annotate(d: Dictionary, cs: Iterable[Community]) -> frozenset:
    out = set()
    for c in cs:
        out |= lookup(d, c)
    return frozenset(out)


def _row_to_entry(row: list, line: int) -> DictionaryEntry:
    if len(row) != 6:
        raise DictionaryError(f"expected 6 fields, got {len(row)}", line)
    asn_text, spec_text, category, subtype, location, description = (f.strip() for f in row)
    try:
        if not asn_text.isdigit():
            raise DictionaryError(f"malformed asn {asn_text!r}")
        asn = int(asn_text)
        spec = ValueSpec.parse(spec_text)
        if category == "geolocation":
            meaning = Geolocation(subtype, location)
        elif category == "relationship":
            meaning = Relationship(subtype)
        elif category == "action":
            meaning = RoutingAction(subtype)
        elif category == "blackhole":
            if subtype:
                raise DictionaryError("blackhole entries take no subtype")
            meaning = Blackhole()
        else:
            raise DictionaryError(f"unknown category {category!r}")
        if category != "geolocation" and location:
            raise DictionaryError("location is only valid for geolocation entries")
        return DictionaryEntry(asn, spec, meaning, description)
    except DictionaryError as exc:
        if exc.line is not None:
            raise
        raise DictionaryError(str(exc), line) from None


def load_dictionary(source, *, allow_exact_overrides: bool = False) -> Dictionary:
    """Load a dictionary from a binary or text stream of CSV records."""
    data = source.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DictionaryError(f"dictionary is not UTF-8: {exc}") from None
    entries = []
    header_seen = False
    for lineno, raw in enumerate(io.StringIO(data), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            row = next(csv.reader([raw]))
        except csv.Error as exc:
            raise DictionaryError(f"CSV syntax error: {exc}", lineno) from None
        if not header_seen:
            if [f.strip() for f in row] != HEADER:
                raise DictionaryError(f"expected header {','.join(HEADER)}", lineno)
            header_seen = True
            continue
        entries.append(_row_to_entry(row, lineno))
    return Dictionary(entries, allow_exact_overrides=allow_exact_overrides)


def load_dictionary_path(path, **kwargs) -> Dictionary:
    with open(path, "rb") as fh:
        return load_dictionary(fh, **kwargs)


def entry_to_row(e: DictionaryEntry) -> list:
    m = e.meaning
    subtype = {"geolocation": getattr(m, "scope", ""), "relationship": getattr(m, "role", ""),
               "action": getattr(m, "action", ""), "blackhole": ""}[m.category]
    location = m.location if isinstance(m, Geolocation) else ""
    return [e.asn, str(e.spec), m.category, subtype, location, e.description]


def dump_dictionary(d: Dictionary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for e in d:
        writer.writerow(entry_to_row(e))
    return buf.getvalue()


@dataclass(frozen=True)
class DictStats:
    counts: dict
    total: int

    @property
    def fractions(self) -> dict:
        if not self.total:
            return {c: 0.0 for c in self.counts}
        return {c: n / self.total for c, n in self.counts.items()}

    def fraction_of(self, *categories: str) -> float:
        if not self.total:
            return 0.0
        return sum(self.counts[c] for c in categories) / self.total


def dictionary_stats(d: Dictionary) -> DictStats:
    counts = {c: 0 for c in CATEGORIES}
    for e in d:
        counts[e.meaning.category] += 1
    return DictStats(counts, len(d))
