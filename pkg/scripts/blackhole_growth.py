"""Blackholing activity over time on a synthetic multi-day burst.

Prints the per-period distinct-prefix counts, the cumulative distinct
prefixes, and the prefix-length histogram of the classified requests.

    python3 scripts/blackhole_growth.py --count 200 --days 7
"""

import argparse
import io
import sys

from tagwatch.blackhole import blackhole_prefix_length_histogram, blackhole_series, classify_blackhole
from tagwatch.dictionary import load_dictionary
from tagwatch.ingest import StreamCursor, read_updates
from tagwatch.synthgen import Injection, Scenario, generate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200, help="tagged blackhole announcements")
    ap.add_argument("--untagged", type=int, default=500)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--period", type=int, default=86400)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    sc = Scenario(seed=args.seed)
    sc.injections = [Injection("blackhole-burst", sc.detection_start + 2 * sc.bin_width,
                               {"count": args.count, "untagged": args.untagged, "days": args.days})]
    gen = generate(sc)
    d = load_dictionary(io.StringIO(gen.dictionary_csv))
    events = [ev for ev in (classify_blackhole(u, d) for u in read_updates(gen.records, StreamCursor()))
              if ev is not None]
    series = blackhole_series(events, args.period)
    print(f"events: {len(events)} (ground truth {len(gen.ground_truth['blackhole_events'])})")
    print(f"{'period_start':>12} {'distinct':>9} {'events':>7} {'cumulative':>11}")
    for (idx, distinct, n), cum in zip(series.points, series.cumulative):
        print(f"{idx * series.period:>12} {distinct:>9} {n:>7} {cum:>11}")
    print("\nprefix lengths:")
    for length, n in sorted(blackhole_prefix_length_histogram(events).items()):
        print(f"  /{length}: {n}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
