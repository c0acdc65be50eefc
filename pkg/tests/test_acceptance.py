"""Acceptance gate.

Each test carries a ``criterion`` marker. The terminal summary prints one
PASS/FAIL line per criterion; run with ``pytest tests/test_acceptance.py``.
"""

import csv
import ipaddress
import json
import random
import time
from pathlib import Path

import pytest

from tagwatch.baseline import build_baseline
from tagwatch.blackhole import classify_blackhole
from tagwatch.cli import main
from tagwatch.core import (
    Community,
    Peer,
    Prefix,
    announce,
    bin_index,
    collapse_prepending,
    format_community,
    parse_community,
    prefix_covers,
    withdraw,
)
from tagwatch.dictionary import load_dictionary_path
from tagwatch.ingest import StreamCursor, read_updates
from tagwatch.synthgen import Scenario, generate, preset
from tagwatch.valley import exhaustive_agreement, valley_report

FIXTURES = Path(__file__).parent / "fixtures"


def write_scenario(sc, outdir):
    gen = generate(sc)
    gen.write(outdir)
    return gen


def run_cli(indir, outdir, *extra):
    return main(["run", "--dictionary", str(indir / "dictionary.csv"), "--input", str(indir / "updates.ndjson"),
                 "--output-dir", str(outdir), *extra])


def ndjson(path):
    return [json.loads(l) for l in path.read_text().splitlines()]


@pytest.mark.criterion("valley-free oracle equivalence")
def test_valley_oracle_equivalence():
    t0 = time.perf_counter()
    res = exhaustive_agreement(6)
    elapsed = time.perf_counter() - t0
    assert res.full_length_checked == 4096
    assert res.checked == sum(4 ** n for n in range(7))
    assert res.disagreements == []
    assert elapsed < 5


@pytest.mark.criterion("ixp-outage scenario")
def test_ixp_outage_scenario(tmp_path):
    sc = preset("ixp-outage")
    assert sc.baseline_routes == 1000 and sc.threshold == 10
    (inj,) = sc.injections
    assert inj.params["size"] == 100
    write_scenario(sc, tmp_path / "in")
    assert run_cli(tmp_path / "in", tmp_path / "out", "--threshold", "10") == 0
    out = tmp_path / "out"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["baseline"]["size"] == 1000
    signals = ndjson(out / "signals.ndjson")
    assert len(signals) == 1
    assert signals[0]["bin"] == inj.at // 60 and signals[0]["count"] == 100
    outages = [r for r in ndjson(out / "outages.ndjson") if r["verdict"] == "outage"]
    assert len(outages) == 1
    assert outages[0]["location"] == {"category": "geolocation", "scope": "ixp", "location": "FranceIX"}
    assert outages[0]["concentration"] >= 0.95


@pytest.mark.criterion("threshold boundary k=10")
@pytest.mark.parametrize("threshold,fires", [(10, True), (11, False)])
def test_threshold_boundary(tmp_path, threshold, fires):
    sc = preset("threshold-boundary")
    gen = write_scenario(sc, tmp_path / "in")
    (k,) = set(gen.ground_truth["deviations_per_bin"].values())
    assert k == 10
    assert run_cli(tmp_path / "in", tmp_path / "out", "--threshold", str(threshold)) == 0
    signals = ndjson(tmp_path / "out" / "signals.ndjson")
    assert len(signals) == (1 if fires else 0)
    if fires:
        assert signals[0]["count"] == 10


@pytest.mark.criterion("blackhole exactness")
def test_blackhole_exactness(tmp_path):
    gen = write_scenario(preset("blackhole-burst"), tmp_path / "in")
    (inj,) = preset("blackhole-burst").injections
    assert (inj.params["count"], inj.params["untagged"]) == (50, 500)
    d = load_dictionary_path(tmp_path / "in" / "dictionary.csv")
    truth = {(e["timestamp"], e["prefix"]) for e in gen.ground_truth["blackhole_events"]}
    assert len(truth) == 50
    with open(tmp_path / "in" / "updates.ndjson") as fh:
        updates = list(read_updates(fh, StreamCursor()))
    found = set()
    for u in updates:
        ev = classify_blackhole(u, d)
        if ev is not None:
            found.add((ev.timestamp, str(ev.prefix)))
    tp = len(found & truth)
    assert tp / len(found) == 1.0 and tp / len(truth) == 1.0
    # the untagged part of the burst is present and produced nothing
    burst = [u for u in updates if u.timestamp >= inj.at and u.prefix.length == 32]
    assert len(burst) == 550

    assert run_cli(tmp_path / "in", tmp_path / "out") == 0
    with open(tmp_path / "out" / "blackhole_series.csv") as fh:
        rows = [[int(x) for x in r] for r in list(csv.reader(fh))[1:]]
    assert [r[:3] for r in rows] == [list(p) for p in gen.ground_truth["blackhole_series"]]


@pytest.mark.criterion("dictionary mirror fixture")
def test_dictionary_mirror(capsys):
    assert main(["dict-stats", "--dictionary", str(FIXTURES / "dictionary_mirror.csv"), "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    fr = obj["fractions"]
    assert obj["total"] == 100
    assert abs(fr["geolocation"] - 0.48) <= 1e-9
    assert abs(fr["relationship"] - 0.21) <= 1e-9
    assert abs(fr["blackhole"] + fr["action"] - 0.31) <= 1e-9


@pytest.mark.criterion("valley fraction mirror")
def test_valley_fraction_mirror():
    d = load_dictionary_path(FIXTURES / "valley_dictionary.csv")
    with open(FIXTURES / "valley_mirror.ndjson") as fh:
        rep = valley_report(read_updates(fh, StreamCursor()), d)
    assert rep.labeled_paths == 100 and rep.violating_paths == 3
    assert rep.violation_fraction == 0.03


@pytest.mark.criterion("determinism")
def test_run_twice_byte_identical(tmp_path):
    write_scenario(preset("mixed"), tmp_path / "in")
    assert run_cli(tmp_path / "in", tmp_path / "a") == 0
    assert run_cli(tmp_path / "in", tmp_path / "b") == 0
    a = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert a == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert len(a) >= 10
    for name in a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


@pytest.mark.criterion("robust ingestion")
def test_robust_ingestion(tmp_path):
    sc = Scenario(baseline_routes=4950, announcements_per_route=2, malformed_lines=100)
    write_scenario(sc, tmp_path / "in")
    text = (tmp_path / "in" / "updates.ndjson").read_text()
    assert len(text.splitlines()) == 10_000
    assert run_cli(tmp_path / "in", tmp_path / "out") == 0
    records = json.loads((tmp_path / "out" / "summary.json").read_text())["records"]
    assert records["consumed"] == 10_000
    assert records["dropped"]["malformed"] == 100
    assert records["dropped"]["stale"] == 0


# property suites, bundled at their stated sample sizes -----------------------

def bitwise_covers(a: Prefix, b: Prefix) -> bool:
    if a.version != b.version or a.length > b.length:
        return False
    shift = a.bits - a.length
    return (a.network >> shift) == (b.network >> shift)


def random_prefix(rng, version):
    bits = 32 if version == 4 else 128
    length = rng.randint(0, bits)
    net = rng.getrandbits(bits) >> (bits - length) << (bits - length) if length else 0
    return Prefix(version, net, length)


@pytest.mark.criterion("property suites")
def test_property_suites():
    rng = random.Random(20180301)

    for _ in range(10_000):
        c = Community(rng.randint(0, 65535), rng.randint(0, 65535))
        text = format_community(c)
        assert parse_community(text) == c and format_community(parse_community(text)) == text

    for _ in range(10_000):
        w = rng.randint(1, 3600)
        t1 = rng.randint(0, 2 ** 33)
        t2 = t1 + rng.randint(0, 10 ** 6)
        assert bin_index(t1, w) <= bin_index(t2, w)

    for _ in range(1000):
        v = rng.choice((4, 6))
        a = random_prefix(rng, v)
        # half the pairs are derived from a so that coverage actually occurs
        b = random_prefix(rng, v) if rng.random() < 0.5 else Prefix(
            v, a.network | (rng.getrandbits(a.bits - a.length) if a.length < a.bits else 0), a.bits)
        cls = ipaddress.IPv4Network if v == 4 else ipaddress.IPv6Network
        net, sub = cls((a.network, a.length)), cls((b.network, b.length))
        assert prefix_covers(a, b) == bitwise_covers(a, b) == sub.subnet_of(net)

    peers = [Peer(64496, "203.0.113.1"), Peer(64497, "203.0.113.2")]
    prefixes = ["192.0.2.0/24", "198.51.100.0/24", "203.0.113.0/24"]
    for _ in range(300):
        ups = []
        for _ in range(rng.randint(0, 30)):
            ts, p, x = rng.randint(0, 5), rng.choice(peers), rng.choice(prefixes)
            if rng.random() < 0.7:
                ups.append(announce(ts, p, x, [p.asn, 64501], rng.choice([(), ("64501:100",), ("64501:200",)])))
            else:
                ups.append(withdraw(ts, p, x))
        ups.sort(key=lambda u: u.timestamp)
        shuffled = sorted(ups, key=lambda u: (u.timestamp, rng.random()))
        m = rng.randint(1, 3)
        assert set(build_baseline(ups, 0, 10, m).keys()) == set(build_baseline(shuffled, 0, 10, m).keys())

    for _ in range(1000):
        path = tuple(rng.choice((1, 2, 3)) for _ in range(rng.randint(0, 12)))
        once = collapse_prepending(path)
        assert collapse_prepending(once) == once
        assert all(x != y for x, y in zip(once, once[1:]))
