"""Deterministic synthetic update streams with known ground truth.

Ground truth comes from the generator's own bookkeeping of what it injected,
never from running the detection engine.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

START_2018_03_01 = 1519862400

PEER_ASNS = (64496, 64497, 64498, 64499)
TRANSITS = tuple(range(64510, 64520))
GEO_AS = 64500
BLACKHOLE_AS = 64501
ORIGIN_BASE = 4200000000
ROLE_VALUES = {"customer": 100, "peer": 200, "provider": 300}
BACKGROUND_LOCATIONS = (
    ("ixp", "AMS-IX"), ("ixp", "DE-CIX-Frankfurt"), ("ixp", "LINX-London"),
    ("facility", "Equinix-PA2"), ("facility", "Telehouse-North"), ("city", "Madrid"),
    ("city", "Milan"), ("country", "PT"), ("ixp", "NL-ix"), ("facility", "Interxion-FRA1"),
)
KINDS = ("ixp-outage", "blackhole-burst", "valley-violation", "noise-flaps")
_WORD = re.compile(r"c*p?v*")
_LETTER = {"customer": "c", "peer": "p", "provider": "v"}


class ScenarioError(ValueError):
    pass


@dataclass
class Injection:
    kind: str
    at: int
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    seed: int = 1
    start: int = START_2018_03_01
    baseline_routes: int = 1000
    announcements_per_route: int = 2
    relationship_tagged_every: int = 2  # every n-th baseline route carries a customer tag
    init_window: int = 3600
    bin_width: int = 60
    threshold: int = 10
    outage_concentration: float = 0.5
    outage_attributed_min: int = 10
    malformed_lines: int = 0
    injections: List[Injection] = field(default_factory=list)

    @classmethod
    def from_dict(cls, obj: dict) -> "Scenario":
        obj = dict(obj)
        injections = [Injection(i["kind"], int(i["at"]), dict(i.get("params", {})))
                      for i in obj.pop("injections", [])]
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(injections=injections, **obj)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def detection_start(self) -> int:
        return self.start + self.init_window


@dataclass
class Generated:
    records: List[str]
    dictionary_csv: str
    ground_truth: dict

    def stream_text(self) -> str:
        return "".join(line + "\n" for line in self.records)

    def write(self, outdir) -> Dict[str, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "updates": out / "updates.ndjson",
            "dictionary": out / "dictionary.csv",
            "ground_truth": out / "ground_truth.json",
        }
        paths["updates"].write_text(self.stream_text())
        paths["dictionary"].write_text(self.dictionary_csv)
        paths["ground_truth"].write_text(json.dumps(self.ground_truth, indent=2, sort_keys=True) + "\n")
        return paths


def _csv_row(asn, spec, category, subtype="", location="", description="synthetic") -> str:
    loc = f'"{location}"' if location else ""
    return f'{asn},{spec},{category},{subtype},{loc},"{description}"'


def fixture_dictionary(locations) -> str:
    """The scenario dictionary: geolocations for ``locations`` plus fixed relationship/blackhole/action entries."""
    rows = ["asn,value_spec,category,subtype,location,description"]
    for i, (scope, label) in enumerate(locations):
        rows.append(_csv_row(GEO_AS, 1000 + i, "geolocation", scope, label))
    for t in TRANSITS:
        for role, v in ROLE_VALUES.items():
            rows.append(_csv_row(t, v, "relationship", role))
    rows.append(_csv_row(BLACKHOLE_AS, 666, "blackhole"))
    rows.append(_csv_row(65535, 666, "blackhole", description="RFC 7999 BLACKHOLE"))
    rows.append(_csv_row(GEO_AS, "5000-5099", "action", "selective-advertisement"))
    rows.append(_csv_row(GEO_AS, "6000-6099", "action", "local-preference"))
    rows.append(_csv_row(GEO_AS, "7000-7009", "action", "prepend"))
    return "\n".join(rows) + "\n"


def _record(ts, peer_asn, kind, prefix, path=None, communities=None) -> dict:
    rec = {"ts": ts, "peer_asn": peer_asn, "peer_addr": _peer_addr(peer_asn), "type": kind, "prefix": prefix}
    if kind == "A":
        rec["as_path"] = list(path)
        rec["communities"] = sorted(communities, key=lambda s: tuple(int(x) for x in s.split(":")))
    return rec


def _peer_addr(peer_asn: int) -> str:
    return f"203.0.113.{peer_asn - PEER_ASNS[0] + 1}" if peer_asn in PEER_ASNS else "198.51.100.1"


def _malformed(rng: random.Random, i: int) -> str:
    variants = [
        '{"ts": 1519866000, "peer_asn": 64496, "peer_addr": "203.0.113.1", "type": "A"',
        '{"ts":1519866000,"peer_asn":64496,"peer_addr":"203.0.113.1","type":"A","prefix":"192.0.2.0/24",'
        '"as_path":[64496,64501],"communities":["64501:100:1"]}',
        '{"ts":1519866000,"peer_asn":64496,"peer_addr":"203.0.113.1","type":"A","prefix":"192.0.2.1/24",'
        '"as_path":[64496,64501]}',
        '{"ts":1519866000,"peer_asn":64496,"peer_addr":"203.0.113.1","type":"A","prefix":"192.0.2.0/24",'
        '"as_path":[64496,[64501,64502]]}',
        '{"ts":1519866000,"peer_asn":64496,"type":"W","prefix":"192.0.2.0/24"}',
        "not json at all %d" % i,
        '{"ts":"soon","peer_asn":64496,"peer_addr":"203.0.113.1","type":"W","prefix":"192.0.2.0/24"}',
        '[1, 2, 3]',
    ]
    return rng.choice(variants)


class _Builder:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.rng = random.Random(sc.seed)
        self.events = []  # (ts, seq, record dict)
        self.seq = 0
        self.deviations = defaultdict(dict)  # bin -> route id -> kind
        self.bh_events = []
        self.valley = Counter()
        self.reserved = set()
        self.withdrawn = set()
        self.locations = list(BACKGROUND_LOCATIONS)
        self.route_location: Dict[int, int] = {}

    def emit(self, ts, rec, labeled=False, violating=False):
        self.events.append((ts, self.seq, rec))
        self.seq += 1
        if rec["type"] == "A":
            self.valley["paths_checked"] += 1
            self.valley["labeled_paths"] += labeled
            self.valley["violating_paths"] += violating

    def bin(self, ts):
        return ts // self.sc.bin_width

    # baseline routes ------------------------------------------------------

    def route(self, i):
        peer = PEER_ASNS[i % len(PEER_ASNS)]
        prefix = f"10.{(i >> 8) & 255}.{i & 255}.0/24"
        transit = TRANSITS[i % len(TRANSITS)]
        origin = ORIGIN_BASE + i
        path = [peer, transit, origin] + ([origin] if i % 7 == 0 else [])
        comms = [f"{GEO_AS}:{1000 + self.route_location[i]}"]
        labeled = self.sc.relationship_tagged_every > 0 and i % self.sc.relationship_tagged_every == 0
        if labeled:
            comms.append(f"{transit}:{ROLE_VALUES['customer']}")
        return peer, prefix, path, comms, labeled

    def location_index(self, scope, label):
        key = (scope, label)
        if key not in self.locations:
            self.locations.append(key)
        return self.locations.index(key)

    def free_routes(self, n, what):
        pool = [i for i in range(self.sc.baseline_routes) if i not in self.reserved]
        if n > len(pool):
            raise ScenarioError(f"{what} needs {n} routes but only {len(pool)} baseline routes are free")
        picked = sorted(self.rng.sample(pool, n))
        self.reserved.update(picked)
        return picked

    def plan_locations(self):
        outage_routes = {}
        for k, inj in enumerate(self.sc.injections):
            if inj.kind != "ixp-outage":
                continue
            size = int(inj.params.get("size", 100))
            scope = inj.params.get("scope", "ixp")
            loc = self.location_index(scope, inj.params.get("location", "FranceIX"))
            if (scope, inj.params.get("location", "FranceIX")) in BACKGROUND_LOCATIONS:
                raise ScenarioError("outage location must not be a background location")
            routes = self.free_routes(size, "ixp-outage")
            for r in routes:
                self.route_location[r] = loc
            outage_routes[k] = routes
        for i in range(self.sc.baseline_routes):
            self.route_location.setdefault(i, self.rng.randrange(len(BACKGROUND_LOCATIONS)))
        return outage_routes

    def init_phase(self):
        sc = self.sc
        span = sc.init_window - 2 * sc.bin_width
        for i in range(sc.baseline_routes):
            peer, prefix, path, comms, labeled = self.route(i)
            for n in range(sc.announcements_per_route):
                ts = sc.start if (i == 0 and n == 0) else sc.start + self.rng.randrange(span)
                self.emit(ts, _record(ts, peer, "A", prefix, path, comms), labeled=labeled)

    # injections -----------------------------------------------------------

    def in_bin(self, at, lo_frac=0.0, hi_frac=1.0):
        w = self.sc.bin_width
        b0 = self.bin(at) * w
        lo = max(at, b0 + int(w * lo_frac))
        hi = b0 + int(w * hi_frac)
        return self.rng.randrange(lo, max(hi, lo + 1))

    def ixp_outage(self, inj, routes):
        for r in routes:
            peer, prefix, *_ = self.route(r)
            ts = self.in_bin(inj.at)
            self.emit(ts, _record(ts, peer, "W", prefix))
            self.deviations[self.bin(ts)][r] = "withdrawal"
            self.withdrawn.add(r)

    def noise_flaps(self, inj):
        per_bin = int(inj.params.get("per_bin", 3))
        bins = int(inj.params.get("bins", 5))
        w = self.sc.bin_width
        pool = [i for i in range(self.sc.baseline_routes) if i not in self.reserved]
        if per_bin > len(pool):
            raise ScenarioError("noise-flaps per_bin exceeds free baseline routes")
        for m in range(bins):
            at = (self.bin(inj.at) + m) * w
            for r in sorted(self.rng.sample(pool, per_bin)):
                peer, prefix, path, comms, labeled = self.route(r)
                t_w = self.in_bin(at, 0.0, 0.5)
                t_a = self.in_bin(t_w, 0.5, 1.0)
                self.emit(t_w, _record(t_w, peer, "W", prefix))
                self.emit(t_a, _record(t_a, peer, "A", prefix, path, comms), labeled=labeled)
                self.deviations[self.bin(t_w)][r] = "withdrawal"

    def blackhole_burst(self, inj):
        count = int(inj.params.get("count", 50))
        untagged = int(inj.params.get("untagged", 500))
        days = int(inj.params.get("days", 1))
        requester = int(inj.params.get("requester", BLACKHOLE_AS))
        if requester not in (BLACKHOLE_AS, 65535):
            raise ScenarioError(f"requester {requester} has no blackhole community in the fixture")
        if days < 1:
            raise ScenarioError("days must be at least 1")
        pool = [i for i in range(self.sc.baseline_routes) if i not in self.reserved]
        if not pool:
            raise ScenarioError("blackhole-burst needs at least one free baseline route")
        if count > 254 * len(pool):
            raise ScenarioError("too many blackhole events for the free baseline routes")
        hosts = self.rng.sample(range(254 * len(pool)), count)
        for k, h in enumerate(hosts):
            r = pool[h // 254]
            peer, prefix, path, _, _ = self.route(r)
            host = prefix.replace(".0/24", f".{h % 254 + 1}/32")
            ts = inj.at + (k % days) * 86400 + self.rng.randrange(3600)
            comms = [f"{requester}:666"]
            if k % 3 == 0:
                comms.append(f"{GEO_AS}:{5000 + k % 100}")
            self.emit(ts, _record(ts, peer, "A", host, path, comms))
            self.bh_events.append({"timestamp": ts, "prefix": host, "requester_asn": requester,
                                   "peer_asn": peer, "covered_by_baseline": True, "prefix_length": 32})
        for k in range(untagged):
            peer = PEER_ASNS[k % len(PEER_ASNS)]
            prefix = f"172.{16 + ((k >> 16) & 15)}.{(k >> 8) & 255}.{k & 255}/32"
            path = [peer, TRANSITS[k % len(TRANSITS)], ORIGIN_BASE + 100000 + k]
            comms = [f"{GEO_AS}:{5000 + k % 100}"] if k % 2 else [f"{BLACKHOLE_AS}:667"]
            ts = inj.at + (k % days) * 86400 + self.rng.randrange(3600)
            self.emit(ts, _record(ts, peer, "A", prefix, path, comms))

    def valley_paths(self, inj, counter):
        roles = list(inj.params.get("roles", ["provider", "customer"]))
        count = int(inj.params.get("count", 1))
        if not roles or len(roles) > len(TRANSITS) or any(r not in ROLE_VALUES for r in roles):
            raise ScenarioError(f"invalid valley roles {roles!r}")
        violating = _WORD.fullmatch("".join(_LETTER[r] for r in roles)) is None
        n = len(roles)
        for k in range(count):
            idx = counter["valley"]
            counter["valley"] += 1
            peer = PEER_ASNS[idx % len(PEER_ASNS)]
            hops = [TRANSITS[(idx + j) % len(TRANSITS)] for j in range(n)]
            path = [peer] + hops + [ORIGIN_BASE + 200000 + idx]
            # edge position p (collector side 0) is tagged by path[p]; roles run origin->collector
            comms = [f"{path[n - k_]}:{ROLE_VALUES[r]}" for k_, r in enumerate(roles)]
            prefix = f"198.18.{(idx >> 8) & 255}.{idx & 255}/32"
            ts = inj.at + k
            self.emit(ts, _record(ts, peer, "A", prefix, path, comms), labeled=True, violating=violating)


def generate(sc: Scenario) -> Generated:
    if sc.baseline_routes < 0 or sc.baseline_routes > 65536:
        raise ScenarioError("baseline_routes must be in [0, 65536]")
    if sc.bin_width <= 0 or sc.init_window <= 2 * sc.bin_width:
        raise ScenarioError("init_window must exceed two bins")
    if sc.announcements_per_route < 1:
        raise ScenarioError("announcements_per_route must be at least 1")
    b = _Builder(sc)
    for inj in sc.injections:
        if inj.kind not in KINDS:
            raise ScenarioError(f"unknown injection kind {inj.kind!r}")
        if inj.at < sc.detection_start + sc.bin_width:
            raise ScenarioError(f"injection {inj.kind} at {inj.at} precedes detection start + one bin")
    outage_routes = b.plan_locations()
    b.init_phase()
    counter = Counter()
    for k, inj in enumerate(sc.injections):
        if inj.kind == "ixp-outage":
            b.ixp_outage(inj, outage_routes[k])
        elif inj.kind == "noise-flaps":
            b.noise_flaps(inj)
        elif inj.kind == "blackhole-burst":
            b.blackhole_burst(inj)
        else:
            b.valley_paths(inj, counter)

    b.events.sort(key=lambda e: (e[0], e[1]))
    records = [json.dumps(rec, separators=(",", ":")) for _, _, rec in b.events]
    for i in range(sc.malformed_lines):
        pos = b.rng.randrange(len(records) + 1)
        records.insert(pos, _malformed(b.rng, i))

    truth = _ground_truth(b, records)
    return Generated(records, fixture_dictionary(b.locations), truth)


def _ground_truth(b: _Builder, records) -> dict:
    sc = b.sc
    w = sc.bin_width
    signals, verdicts, deviations = [], [], []
    for bin_, routes in sorted(b.deviations.items()):
        for r, kind in sorted(routes.items()):
            peer, prefix, *_ = b.route(r)
            deviations.append({"bin": bin_, "peer_asn": peer, "prefix": prefix, "kind": kind})
        n = len(routes)
        if n < sc.threshold:
            continue
        signals.append({"bin": bin_, "bin_start": bin_ * w, "count": n})
        per_loc = Counter(b.route_location[r] for r in routes)
        for loc, hits in sorted(per_loc.items()):
            scope, label = b.locations[loc]
            outage = hits >= sc.outage_attributed_min and hits / n >= sc.outage_concentration
            verdicts.append({"bin": bin_, "scope": scope, "location": label, "attributed": hits,
                             "total": n, "verdict": "outage" if outage else "inconclusive"})

    bh = sorted(b.bh_events, key=lambda e: (e["timestamp"], e["prefix"]))
    series = []
    if bh:
        days = defaultdict(lambda: [set(), 0])
        for e in bh:
            d = days[e["timestamp"] // 86400]
            d[0].add(e["prefix"])
            d[1] += 1
        for day in range(min(days), max(days) + 1):
            prefixes, n = days.get(day, (set(), 0))
            series.append([day * 86400, len(prefixes), n])

    return {
        "scenario": sc.to_dict(),
        "records": len(records),
        "malformed": sc.malformed_lines,
        "baseline_size": sc.baseline_routes,
        "deviations": deviations,
        "deviations_per_bin": {str(k): len(v) for k, v in sorted(b.deviations.items())},
        "signals": signals,
        "outage_reports": verdicts,
        "blackhole_events": bh,
        "blackhole_series": series,
        "blackhole_prefix_lengths": {str(k): v for k, v in sorted(Counter(e["prefix_length"] for e in bh).items())},
        "valley": dict(sorted(b.valley.items())),
    }


def preset(name: str, seed: int = 1) -> Scenario:
    """Named scenarios used by the tests and experiment scripts."""
    sc = Scenario(seed=seed)
    t0 = sc.detection_start + 20 * sc.bin_width + 5
    if name == "ixp-outage":
        sc.injections = [Injection("ixp-outage", t0, {"location": "FranceIX", "size": 100})]
    elif name == "threshold-boundary":
        sc.injections = [Injection("ixp-outage", t0, {"location": "FranceIX", "size": 10})]
    elif name == "blackhole-burst":
        sc.injections = [Injection("blackhole-burst", t0, {"count": 50, "untagged": 500, "days": 3})]
    elif name == "valley-violation":
        sc.injections = [Injection("valley-violation", t0, {"roles": ["provider", "customer"], "count": 1})]
    elif name == "noise-flaps":
        sc.injections = [Injection("noise-flaps", t0, {"per_bin": 3, "bins": 10})]
    elif name == "mixed":
        sc.injections = [
            Injection("noise-flaps", t0 - 10 * sc.bin_width, {"per_bin": 4, "bins": 30}),
            Injection("ixp-outage", t0, {"location": "FranceIX", "size": 100}),
            Injection("blackhole-burst", t0 + 600, {"count": 50, "untagged": 500, "days": 2}),
            Injection("valley-violation", t0 + 900, {"roles": ["customer", "peer", "provider"], "count": 20}),
            Injection("valley-violation", t0 + 960, {"roles": ["provider", "customer"], "count": 3}),
        ]
    else:
        raise ScenarioError(f"unknown preset {name!r}")
    return sc


PRESETS = ("ixp-outage", "threshold-boundary", "blackhole-burst", "valley-violation", "noise-flaps", "mixed")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))
