"""Valley-free checking from relationship-tagging communities.

A relationship community ``X:v`` meaning "customer" says AS X learned the
route from a customer, i.e. the neighbour of X one hop toward the origin is
X's customer. Reading edges from the origin toward the collector, a path is
valley-free iff its label word matches ``customer* peer? provider*``.
"""

from __future__ import annotations

import enum
import itertools
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .core import AsPath, BgpUpdate, Community, collapse_prepending, format_community
from .dictionary import Dictionary, Relationship, lookup


class Role(str, enum.Enum):
    CUSTOMER = "customer"
    PEER = "peer"
    PROVIDER = "provider"
    UNKNOWN = "unknown"


KNOWN_ROLES = (Role.CUSTOMER, Role.PEER, Role.PROVIDER)
_UPHILL_DONE = (Role.PEER, Role.PROVIDER)  # after one of these, no customer/peer edge may follow
_NEEDS_UPHILL = (Role.CUSTOMER, Role.PEER)


@dataclass(frozen=True)
class EdgeLabel:
    """Role of hop ``position + 1`` relative to hop ``position`` (hop 0 nearest the collector)."""

    position: int
    role: Role
    evidence: Optional[Community] = None
    conflict: bool = False
    ambiguous: bool = False

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "role": self.role.value,
            "evidence": None if self.evidence is None else format_community(self.evidence),
            "conflict": self.conflict,
            "ambiguous": self.ambiguous,
        }


def label_edges(u: BgpUpdate, d: Dictionary) -> List[EdgeLabel]:
    path = collapse_prepending(u.path)
    n_edges = max(len(path) - 1, 0)
    positions = defaultdict(list)
    for i, asn in enumerate(path):
        positions[asn].append(i)

    roles = defaultdict(set)
    evidence = defaultdict(list)
    ambiguous = set()
    for c in sorted(u.communities):
        rels = [m for m in lookup(d, c) if isinstance(m, Relationship)]
        if not rels or c.asn not in positions:
            continue
        occ = positions[c.asn]
        i = occ[0]  # collector-nearest occurrence
        if i >= n_edges:
            continue  # the tagging AS is the origin: nothing learned
        if len(occ) > 1:
            ambiguous.add(i)
        for m in rels:
            roles[i].add(Role(m.role))
        evidence[i].append(c)

    labels = []
    for i in range(n_edges):
        rs = roles.get(i, set())
        if len(rs) == 1:
            labels.append(EdgeLabel(i, next(iter(rs)), evidence[i][0], False, i in ambiguous))
        else:
            labels.append(EdgeLabel(i, Role.UNKNOWN, None, len(rs) > 1, i in ambiguous))
    return labels


def check_valley_free(labels: Sequence[Role]) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Check a label word ordered from the origin-side edge to the collector-side edge.

    Returns ``(violating, witness)``; the witness is the lexicographically
    smallest ``(i, j)`` with ``i < j``, ``labels[i]`` in {peer, provider} and
    ``labels[j]`` in {customer, peer}.
    """
    labels = [Role(r) for r in labels]
    last_needs_uphill = max((j for j, r in enumerate(labels) if r in _NEEDS_UPHILL), default=-1)
    for i, r in enumerate(labels):
        if i >= last_needs_uphill:
            break
        if r in _UPHILL_DONE:
            j = next(j for j in range(i + 1, len(labels)) if labels[j] in _NEEDS_UPHILL)
            return True, (i, j)
    return False, None


_PATTERN = re.compile(r"c*p?v*")
_LETTER = {Role.CUSTOMER: "c", Role.PEER: "p", Role.PROVIDER: "v"}


def completion_oracle(labels: Sequence[Role]) -> bool:
    """Brute force: violating iff no completion of the unknowns matches the pattern."""
    labels = [Role(r) for r in labels]
    choices = [KNOWN_ROLES if r is Role.UNKNOWN else (r,) for r in labels]
    for completion in itertools.product(*choices):
        if _PATTERN.fullmatch("".join(_LETTER[r] for r in completion)):
            return False
    return True


def all_label_words(max_len: int) -> Iterable[Tuple[Role, ...]]:
    alphabet = KNOWN_ROLES + (Role.UNKNOWN,)
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


@dataclass
class OracleAgreement:
    checked: int = 0
    disagreements: List[Tuple[Role, ...]] = field(default_factory=list)
    full_length_checked: int = 0

    @property
    def agreement(self) -> float:
        return 1.0 if not self.checked else 1 - len(self.disagreements) / self.checked


def exhaustive_agreement(max_len: int = 6) -> OracleAgreement:
    out = OracleAgreement()
    for word in all_label_words(max_len):
        out.checked += 1
        if len(word) == max_len:
            out.full_length_checked += 1
        if check_valley_free(word)[0] != completion_oracle(word):
            out.disagreements.append(word)
    return out


@dataclass(frozen=True)
class ValleyVerdict:
    path: AsPath
    labels: Tuple[EdgeLabel, ...]
    violating: bool
    witness: Optional[Tuple[int, int]]  # edge positions, origin-side edge first
    update: Optional[BgpUpdate] = None

    @property
    def known_labels(self) -> int:
        return sum(1 for lb in self.labels if lb.role is not Role.UNKNOWN)

    @property
    def ambiguous(self) -> bool:
        return any(lb.ambiguous for lb in self.labels)

    @property
    def conflicts(self) -> int:
        return sum(1 for lb in self.labels if lb.conflict)

    def to_dict(self) -> dict:
        out = {}
        if self.update is not None:
            out.update({
                "timestamp": self.update.timestamp,
                "peer_asn": self.update.peer.asn,
                "peer_addr": self.update.peer.addr,
                "prefix": str(self.update.prefix),
            })
        out.update({
            "path": list(self.path),
            "labels": [lb.to_dict() for lb in self.labels],
            "violating": self.violating,
            "witness": None if self.witness is None else list(self.witness),
            "ambiguous": self.ambiguous,
            "evidence_communities": sorted({format_community(lb.evidence) for lb in self.labels if lb.evidence},
                                           key=lambda s: tuple(int(x) for x in s.split(":"))),
        })
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def valley_verdict(u: BgpUpdate, d: Dictionary) -> ValleyVerdict:
    labels = label_edges(u, d)
    n = len(labels)
    word = [lb.role for lb in reversed(labels)]
    violating, witness = check_valley_free(word)
    if witness is not None:
        witness = (n - 1 - witness[0], n - 1 - witness[1])
    return ValleyVerdict(collapse_prepending(u.path), tuple(labels), violating, witness, u)


@dataclass
class ValleyReport:
    paths_checked: int = 0
    labeled_paths: int = 0
    violating_paths: int = 0
    ambiguous_paths: int = 0
    conflicting_paths: int = 0
    verdicts: List[ValleyVerdict] = field(default_factory=list)

    @property
    def unlabeled_paths(self) -> int:
        return self.paths_checked - self.labeled_paths

    @property
    def violation_fraction(self) -> float:
        return self.violating_paths / self.labeled_paths if self.labeled_paths else 0.0

    @property
    def violation_fraction_all(self) -> float:
        return self.violating_paths / self.paths_checked if self.paths_checked else 0.0

    def add(self, v: ValleyVerdict, keep: bool = True):
        self.paths_checked += 1
        if v.known_labels:
            self.labeled_paths += 1
        if v.violating:
            self.violating_paths += 1
            if keep:
                self.verdicts.append(v)
        self.ambiguous_paths += v.ambiguous
        self.conflicting_paths += bool(v.conflicts)

    def summary(self) -> dict:
        return {
            "paths_checked": self.paths_checked,
            "labeled_paths": self.labeled_paths,
            "unlabeled_paths": self.unlabeled_paths,
            "no_labeled_paths": self.labeled_paths == 0,
            "violating_paths": self.violating_paths,
            "violation_fraction": self.violation_fraction,
            "violation_fraction_all_paths": self.violation_fraction_all,
            "ambiguous_paths": self.ambiguous_paths,
            "conflicting_paths": self.conflicting_paths,
        }


def valley_report(stream: Iterable[BgpUpdate], d: Dictionary) -> ValleyReport:
    report = ValleyReport()
    for u in stream:
        if u.is_announcement:
            report.add(valley_verdict(u, d))
    return report
