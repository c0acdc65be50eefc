import io

import pytest

from tagwatch.core import Peer
from tagwatch.dictionary import load_dictionary

P = Peer(64496, "203.0.113.1")
Q = Peer(64497, "203.0.113.2")

BASIC_DICT = """\
asn,value_spec,category,subtype,location,description
3356,2003,geolocation,city,"Frankfurt","provider docs"
64501,100,geolocation,ixp,"FranceIX","fixture"
64501,200,geolocation,ixp,"AMS-IX","fixture"
64501,666,blackhole,,,"rtbh"
64501,667,blackhole,,,"rtbh alt"
65535,666,blackhole,,,"RFC 7999"
64500,100,relationship,customer,,""
64500,200,relationship,peer,,""
64500,300,relationship,provider,,""
64496,100,relationship,customer,,""
64496,200,relationship,peer,,""
64496,300,relationship,provider,,""
64500,5000-5099,action,selective-advertisement,,""
"""


@pytest.fixture
def basic_dict():
    return load_dictionary(io.StringIO(BASIC_DICT))


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_criteria = {}  # name -> all runs passed, in first-seen order


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        name = marker.args[0]
        _criteria[name] = _criteria.get(name, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, passed in _criteria.items():
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
