"""Routing anomaly detection driven by BGP community semantics."""

from .core import (
    BgpUpdate,
    Community,
    Peer,
    Prefix,
    RouteKey,
    UpdateKind,
    bin_index,
    collapse_prepending,
    format_community,
    parse_community,
    parse_prefix,
    prefix_covers,
)
from .dictionary import Dictionary, annotate, dictionary_stats, load_dictionary, lookup

__version__ = "0.1.0"
