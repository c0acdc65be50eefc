import io

import pytest
from hypothesis import given, strategies as st

from tagwatch.core import Community
from tagwatch.dictionary import (
    Blackhole,
    Dictionary,
    DictionaryEntry,
    DictionaryError,
    Geolocation,
    Relationship,
    RoutingAction,
    ValueSpec,
    annotate,
    dictionary_stats,
    dump_dictionary,
    load_dictionary,
    lookup,
)

HEADER = "asn,value_spec,category,subtype,location,description\n"


def load(text, **kw):
    return load_dictionary(io.BytesIO((HEADER + text).encode()), **kw)


def test_load_single_record():
    d = load('3356,2003,geolocation,city,"Frankfurt","provider docs"\n')
    assert len(d) == 1
    e = d.entries[0]
    assert e.meaning == Geolocation("city", "Frankfurt")
    assert e.description == "provider docs"


def test_non_conflicting_overlap_loads():
    d = load('100,666,blackhole,,,""\n100,600-700,blackhole,,,""\n')
    assert len(d) == 2
    assert lookup(d, Community(100, 650)) == {Blackhole()}


def test_conflicting_overlap_rejected():
    with pytest.raises(DictionaryError, match="conflicting"):
        load('100,666,relationship,customer,,""\n100,600-700,relationship,peer,,""\n')


def test_cross_category_overlap_permitted():
    d = load('100,666,blackhole,,,""\n100,600-700,geolocation,ixp,"X",""\n')
    assert lookup(d, Community(100, 666)) == {Blackhole(), Geolocation("ixp", "X")}


@pytest.mark.parametrize("body,line", [
    ('3356,2003,geolocation,city,,"no location"\n', 2),
    ('# comment\n3356,70000,blackhole,,,""\n', 3),
    ('3356,20-10,blackhole,,,""\n', 2),
    ('70000,1,blackhole,,,""\n', 2),
    ('1,1,weather,,,""\n', 2),
    ('1,1,relationship,sibling,,""\n', 2),
    ('1,1,blackhole,,,""\n1,2,blackhole\n', 3),
    ('1,1,action,prepend,"Paris",""\n', 2),
    ('1,x,blackhole,,,""\n', 2),
])
def test_syntax_errors_carry_line_numbers(body, line):
    with pytest.raises(DictionaryError) as exc:
        load(body)
    assert exc.value.line == line


def test_missing_header():
    with pytest.raises(DictionaryError):
        load_dictionary(io.StringIO('1,1,blackhole,,,""\n'))


def test_comments_and_blank_lines_skipped():
    d = load('# generated\n\n1,1,blackhole,,,"a, b"\n  # indented comment\n')
    assert len(d) == 1 and d.entries[0].description == "a, b"


def test_lookup_examples():
    d = load('3356,2003,geolocation,city,"Frankfurt","provider docs"\n')
    assert lookup(d, Community(3356, 2003)) == {Geolocation("city", "Frankfurt")}
    assert lookup(d, Community(3356, 9999)) == frozenset()


def test_exact_over_range_precedence():
    d = Dictionary([
        DictionaryEntry(100, ValueSpec.exact(50), Geolocation("ixp", "A")),
        DictionaryEntry(100, ValueSpec(0, 100), Geolocation("ixp", "B")),
    ], allow_exact_overrides=True)
    assert lookup(d, Community(100, 50)) == {Geolocation("ixp", "A")}
    assert lookup(d, Community(100, 51)) == {Geolocation("ixp", "B")}


def test_exact_override_still_rejected_by_default():
    with pytest.raises(DictionaryError):
        Dictionary([
            DictionaryEntry(100, ValueSpec.exact(50), Geolocation("ixp", "A")),
            DictionaryEntry(100, ValueSpec(0, 100), Geolocation("ixp", "B")),
        ])


def test_overrides_do_not_allow_range_range_conflicts():
    with pytest.raises(DictionaryError):
        Dictionary([
            DictionaryEntry(100, ValueSpec(0, 60), Geolocation("ixp", "A")),
            DictionaryEntry(100, ValueSpec(50, 100), Geolocation("ixp", "B")),
        ], allow_exact_overrides=True)


def test_exact_precedence_is_per_category():
    d = Dictionary([
        DictionaryEntry(100, ValueSpec.exact(50), Blackhole()),
        DictionaryEntry(100, ValueSpec(0, 100), Geolocation("ixp", "B")),
    ])
    assert lookup(d, Community(100, 50)) == {Blackhole(), Geolocation("ixp", "B")}


def test_annotate_examples():
    d = load('3356,2003,geolocation,city,"Frankfurt",""\n100,666,blackhole,,,""\n100,667,blackhole,,,""\n')
    assert annotate(d, set()) == frozenset()
    assert annotate(d, {Community(3356, 2003)}) == {Geolocation("city", "Frankfurt")}
    assert annotate(d, {Community(100, 666), Community(100, 667)}) == {Blackhole()}


def test_dictionary_stats_mirror_fixture():
    rows = [f'{i},1,geolocation,ixp,"L{i}",""' for i in range(48)]
    rows += [f'{100 + i},1,relationship,customer,,""' for i in range(21)]
    rows += [f'{200 + i},666,blackhole,,,""' for i in range(11)]
    rows += [f'{300 + i},1,action,prepend,,""' for i in range(20)]
    stats = dictionary_stats(load("\n".join(rows) + "\n"))
    assert stats.total == 100
    assert stats.fractions["geolocation"] == pytest.approx(0.48, abs=1e-9)
    assert stats.fractions["relationship"] == pytest.approx(0.21, abs=1e-9)
    assert stats.fraction_of("blackhole", "action") == pytest.approx(0.31, abs=1e-9)
    assert sum(stats.counts.values()) == 100
    assert sum(stats.fractions.values()) == pytest.approx(1.0, abs=1e-9)


def test_dictionary_stats_small_cases():
    s = dictionary_stats(load('1,666,blackhole,,,""\n'))
    assert s.fractions["blackhole"] == 1.0
    empty = dictionary_stats(Dictionary())
    assert empty.total == 0 and all(v == 0 for v in empty.counts.values())
    assert all(v == 0 for v in empty.fractions.values())


def test_dump_roundtrip(basic_dict):
    again = load_dictionary(io.StringIO(dump_dictionary(basic_dict)))
    assert again.entries == basic_dict.entries


# properties ---------------------------------------------------------------

meanings = st.one_of(
    st.builds(Geolocation, st.sampled_from(["ixp", "city"]), st.sampled_from(["A", "B", "C"])),
    st.builds(Relationship, st.sampled_from(["customer", "peer", "provider"])),
    st.just(Blackhole()),
    st.builds(RoutingAction, st.sampled_from(["prepend", "local-preference"])),
)
exact_entries = st.lists(
    st.builds(DictionaryEntry, st.integers(0, 4), st.builds(ValueSpec.exact, st.integers(0, 8)), meanings),
    max_size=20,
    unique_by=lambda e: (e.asn, e.spec),
)
communities = st.builds(Community, st.integers(0, 5), st.integers(0, 9))


@given(exact_entries, communities)
def test_lookup_matches_linear_scan(entries, c):
    d = Dictionary(entries)
    scan = {e.meaning for e in entries if e.asn == c.asn and e.spec.lo <= c.value <= e.spec.hi}
    assert lookup(d, c) == scan


@given(exact_entries, communities)
def test_lookup_never_invents_meanings(entries, c):
    d = Dictionary(entries)
    assert lookup(d, c) <= {e.meaning for e in entries if e.asn == c.asn}


@given(exact_entries, st.sets(communities, max_size=6), st.sets(communities, max_size=6))
def test_annotate_monotone(entries, a, b):
    d = Dictionary(entries)
    assert annotate(d, a) <= annotate(d, a | b)
