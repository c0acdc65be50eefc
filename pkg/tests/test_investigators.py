"""Outage and blackhole investigators."""

import io

import pytest
from hypothesis import given, strategies as st

from tagwatch.baseline import Baseline, BaselineEntry
from tagwatch.blackhole import (
    BlackholeEvent,
    blackhole_prefix_length_histogram,
    blackhole_series,
    classify_blackhole,
)
from tagwatch.core import Community, Peer, RouteKey, announce, parse_prefix, prefix_covers, withdraw
from tagwatch.detector import Deviation, DeviationKind, Signal
from tagwatch.dictionary import Blackhole, Geolocation, annotate, load_dictionary
from tagwatch.outage import OutageConfig, investigate_outage, location_timeseries

from .conftest import BASIC_DICT, P, Q

DICT = load_dictionary(io.StringIO(BASIC_DICT))
FRANCEIX = Geolocation("ixp", "FranceIX")


def dev(i, removed=frozenset()):
    key = RouteKey(P, parse_prefix(f"10.0.{i}.0/24"))
    return Deviation(key, 1, DeviationKind.WITHDRAWAL, 60, frozenset(), frozenset(), frozenset(removed), frozenset())


def signal(devs):
    return Signal(1, 60, 120, tuple(devs), len(devs), 10)


def test_outage_concentrated():
    devs = [dev(i, {FRANCEIX} if i < 96 else {Geolocation("city", "Paris")}) for i in range(100)]
    reports = investigate_outage(signal(devs))
    # independent count of the fixture
    assert sum(FRANCEIX in d.removed_meanings for d in devs) == 96
    top = reports[0]
    assert top.location == FRANCEIX and top.attributed == 96 and top.total == 100
    assert top.concentration == pytest.approx(0.96) and top.verdict == "outage"
    assert [r.verdict for r in reports[1:]] == ["inconclusive"]


def test_outage_spread_is_inconclusive():
    devs = [dev(i, {Geolocation("ixp", f"L{i}")}) for i in range(12)]
    reports = investigate_outage(signal(devs))
    assert len(reports) == 12 and all(r.verdict == "inconclusive" and r.attributed == 1 for r in reports)


def test_outage_resolves_with_dictionary():
    key = RouteKey(P, parse_prefix("10.0.0.0/24"))
    old = frozenset({Community(64501, 100), Community(3356, 2003)})
    devs = [Deviation(key, 1, DeviationKind.COMMUNITY_CHANGE, 60, old, frozenset({Community(3356, 2003)}),
                      frozenset(), frozenset())] * 10
    (rep,) = investigate_outage(signal(devs), DICT)
    assert rep.location == FRANCEIX and rep.attributed == 10 and rep.verdict == "outage"
    # without the dictionary only the recorded (empty) meanings are used
    assert investigate_outage(signal(devs)) == []


def test_outage_no_geolocation():
    assert investigate_outage(signal([dev(i, {Blackhole()}) for i in range(12)])) == []


def test_outage_thresholds_configurable():
    devs = [dev(i, {FRANCEIX} if i < 6 else set()) for i in range(10)]
    assert investigate_outage(signal(devs))[0].verdict == "inconclusive"
    assert investigate_outage(signal(devs), cfg=OutageConfig(0.5, 5))[0].verdict == "outage"


@given(st.lists(st.sets(st.sampled_from(["A", "B", "C"])), min_size=1, max_size=40))
def test_outage_report_invariants(locsets):
    devs = [dev(i, {Geolocation("ixp", l) for l in ls}) for i, ls in enumerate(locsets)]
    cfg = OutageConfig()
    for r in investigate_outage(signal(devs), None, cfg):
        assert 0 <= r.concentration <= 1 and r.attributed <= r.total
        if r.verdict == "outage":
            assert r.concentration >= cfg.concentration_min and r.attributed >= cfg.attributed_min


def test_timeseries_filtered_and_unfiltered(basic_dict):
    ups = [announce(i, P, f"10.0.{i}.0/24", [64496], ["64501:200"]) for i in range(10)]
    assert location_timeseries(ups, basic_dict, None, 60) == [(0, 10, 0)]
    assert location_timeseries(ups, basic_dict, Geolocation("ixp", "X"), 60) == [(0, 0, 0)]


def test_timeseries_withdrawal_attribution(basic_dict):
    x = Geolocation("ixp", "FranceIX")
    ups = [announce(i, P, f"10.0.{i}.0/24", [64496], ["64501:100"]) for i in range(5)]
    ups += [withdraw(120 + i, P, f"10.0.{i}.0/24") for i in range(5)]
    series = location_timeseries(ups, basic_dict, x, 60)
    assert series == [(0, 5, 0), (1, 0, 0), (2, 0, 5)]


def test_timeseries_empty(basic_dict):
    assert location_timeseries([], basic_dict, None, 60) == []


@given(st.lists(st.tuples(st.integers(0, 600), st.integers(0, 5), st.booleans(),
                          st.sampled_from(["64501:100", "64501:200", "3356:2003"])), max_size=50))
def test_filtered_never_exceeds_unfiltered(items):
    d = DICT
    ups = [announce(t, P, f"10.0.{i}.0/24", [64496], [c]) if a else withdraw(t, P, f"10.0.{i}.0/24")
           for t, i, a, c in sorted(items)]
    total = location_timeseries(ups, d, None, 60)
    for loc in (FRANCEIX, Geolocation("ixp", "AMS-IX"), Geolocation("city", "Frankfurt")):
        filt = location_timeseries(ups, d, loc, 60)
        assert len(filt) == len(total)
        for (b1, a1, w1), (b2, a2, w2) in zip(filt, total):
            assert b1 == b2 and a1 <= a2 and w1 <= w2


# blackhole ------------------------------------------------------------------

def baseline_with(prefix, peer=P):
    return Baseline([BaselineEntry(RouteKey(peer, parse_prefix(prefix)), (peer.asn,), frozenset(), 2, 0, 1)])


def test_classify_blackhole_event(basic_dict):
    u = announce(100, P, "192.0.2.66/32", [64496, 64501], ["64501:666"])
    ev = classify_blackhole(u, basic_dict, Baseline())
    assert ev.prefix_length == 32 and ev.requester_asn == 64501 and not ev.covered_by_baseline


def test_classify_no_blackhole(basic_dict):
    u = announce(100, P, "192.0.2.66/32", [64496, 64501], ["64501:100", "64501:668"])
    assert classify_blackhole(u, basic_dict, Baseline()) is None


def test_covered_by_baseline_same_peer_only(basic_dict):
    u = announce(100, P, "192.0.2.66/32", [64496, 64501], ["64501:666"])
    assert prefix_covers(parse_prefix("192.0.2.0/24"), u.prefix)
    assert classify_blackhole(u, basic_dict, baseline_with("192.0.2.0/24")).covered_by_baseline
    assert not classify_blackhole(u, basic_dict, baseline_with("192.0.2.0/24", Q)).covered_by_baseline


def test_requester_tie_break(basic_dict):
    u = announce(1, P, "192.0.2.66/32", [64496], ["65535:666", "64501:667", "64501:666"])
    ev = classify_blackhole(u, basic_dict)
    assert ev.requester_asn == 64501
    assert [str(c) for c in ev.communities] == ["64501:666", "64501:667", "65535:666"]


@given(st.sets(st.builds(Community, st.sampled_from([64501, 65535, 3356, 64500]),
                         st.sampled_from([100, 666, 667, 2003, 5000]))))
def test_classify_iff_blackhole_meaning(comms):
    d = DICT
    u = announce(1, P, "192.0.2.66/32", [64496], comms)
    # brute-force scan of every dictionary entry
    scan = any(e.meaning == Blackhole() and e.asn == c.asn and e.spec.lo <= c.value <= e.spec.hi
               for c in comms for e in d.entries)
    assert (classify_blackhole(u, d) is not None) == scan == (Blackhole() in annotate(d, comms))


def ev(ts, prefix):
    return BlackholeEvent(ts, parse_prefix(prefix), 64501, P, False, ())


def test_series_dedup_and_dense():
    day = 86400
    s = blackhole_series([ev(10, "192.0.2.1/32"), ev(20, "192.0.2.1/32"), ev(30, "192.0.2.1/32")], day)
    assert s.points == [(0, 1, 3)]
    s = blackhole_series([ev(10, "192.0.2.1/32"), ev(2 * day + 5, "192.0.2.2/32")], day)
    assert s.points == [(0, 1, 1), (1, 0, 0), (2, 1, 1)]
    assert s.cumulative == [1, 1, 2]
    assert blackhole_series([], day).points == []
    with pytest.raises(ValueError):
        blackhole_series([], 0)


@given(st.lists(st.tuples(st.integers(0, 3 * 86400), st.integers(1, 20)), max_size=40), st.randoms(use_true_random=False))
def test_series_reorder_invariant(items, rnd):
    events = [ev(t, f"192.0.2.{h}/32") for t, h in items]
    shuffled = list(events)
    rnd.shuffle(shuffled)
    a, b = blackhole_series(events), blackhole_series(shuffled)
    assert a.points == b.points
    assert all(distinct <= n for _, distinct, n in a.points)


def test_histogram():
    assert blackhole_prefix_length_histogram([ev(1, "192.0.2.1/32"), ev(2, "192.0.2.2/32"), ev(3, "192.0.2.0/24")]) == {24: 1, 32: 2}
    assert blackhole_prefix_length_histogram([]) == {}


@given(st.lists(st.integers(8, 32), max_size=30))
def test_histogram_total(lengths):
    events = [ev(1, f"10.0.0.0/{n}") for n in lengths]
    assert sum(blackhole_prefix_length_histogram(events).values()) == len(events)
