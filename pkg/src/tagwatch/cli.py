"""Command-line entry point: ``tagwatch <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import synthgen
from .baseline import load_baseline
from .blackhole import (
    blackhole_prefix_length_histogram,
    blackhole_series,
    classify_blackhole,
    write_histogram_csv,
)
from .blackhole import write_series_csv as write_blackhole_csv
from .config import Config, ConfigError
from .dictionary import CATEGORIES, DictionaryError, Geolocation, dictionary_stats, load_dictionary_path
from .ingest import StreamCursor, read_updates
from .outage import location_timeseries, write_series_csv
from .pipeline import InputError, open_input, run_pipeline
from .valley import exhaustive_agreement, valley_report

log = logging.getLogger("tagwatch")

_OVERRIDES = {
    "dictionary": str, "input": str, "output_dir": str, "bin_width": int, "init_window": int,
    "min_observations": int, "threshold": float, "threshold_fraction": float, "reorder_slack": int,
    "outage_concentration": float, "outage_attributed_min": int, "blackhole_period": int,
    "baseline_in": str,
}


def _dictionary(path):
    try:
        return load_dictionary_path(path)
    except (OSError, DictionaryError) as exc:
        raise ConfigError(f"dictionary {path}: {exc}") from None


def cmd_run(args) -> int:
    try:
        cfg = Config.from_file(args.config) if args.config else Config()
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    for name in _OVERRIDES:
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if cfg.threshold != float("inf") and float(cfg.threshold).is_integer():
        cfg.threshold = int(cfg.threshold)
    if args.path_change:
        cfg.path_change = True
    if args.investigators is not None:
        cfg.investigators = [s for s in args.investigators.split(",") if s]
    return run_pipeline(cfg)


def cmd_generate(args) -> int:
    if args.scenario:
        sc = synthgen.load_scenario(args.scenario)
    else:
        sc = synthgen.preset(args.preset)
    if args.seed is not None:
        sc.seed = args.seed
    gen = synthgen.generate(sc)
    paths = gen.write(args.output_dir)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


def cmd_dict_stats(args) -> int:
    stats = dictionary_stats(_dictionary(args.dictionary))
    fr = stats.fractions
    if args.json:
        print(json.dumps({"total": stats.total, "counts": stats.counts, "fractions": fr}, sort_keys=True))
        return 0
    print(f"entries: {stats.total}")
    for cat in CATEGORIES:
        print(f"{cat:<14}{stats.counts[cat]:>8}  {100 * fr[cat]:6.2f}%")
    other = stats.fraction_of("blackhole", "action")
    print(f"{'other':<14}{stats.counts['blackhole'] + stats.counts['action']:>8}  {100 * other:6.2f}%  (blackhole+action)")
    return 0


def _updates(path, slack):
    cursor = StreamCursor(slack)
    with open_input(path) as fh:
        yield from read_updates(fh, cursor)
    if cursor.dropped_total:
        log.warning("dropped %d records (%s)", cursor.dropped_total, dict(cursor.dropped))


def cmd_blackhole_scan(args) -> int:
    d = _dictionary(args.dictionary)
    baseline = None
    if args.baseline:
        with open(args.baseline) as fh:
            baseline = load_baseline(fh)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    events = []
    with open(out / "blackhole_events.ndjson", "w", encoding="utf-8", newline="\n") as fh:
        for u in _updates(args.input, args.reorder_slack):
            ev = classify_blackhole(u, d, baseline)
            if ev is not None:
                events.append(ev)
                fh.write(ev.to_json() + "\n")
    with open(out / "blackhole_series.csv", "w", encoding="utf-8", newline="\n") as fh:
        write_blackhole_csv(blackhole_series(events, args.period), fh)
    with open(out / "blackhole_prefix_lengths.csv", "w", encoding="utf-8", newline="\n") as fh:
        write_histogram_csv(blackhole_prefix_length_histogram(events), fh)
    print(f"blackhole events: {len(events)}")
    return 0


def cmd_valley_check(args) -> int:
    if args.exhaustive is not None:
        t0 = time.perf_counter()
        res = exhaustive_agreement(args.exhaustive)
        elapsed = time.perf_counter() - t0
        print(f"sequences checked: {res.checked} (length {args.exhaustive}: {res.full_length_checked})")
        print(f"disagreements: {len(res.disagreements)}")
        print(f"oracle agreement: {100 * res.agreement:.2f}%")
        print(f"elapsed: {elapsed:.3f}s")
        return 0 if not res.disagreements else 1
    if not args.dictionary or not args.input:
        log.error("valley-check needs --dictionary and --input (or --exhaustive)")
        return 2
    d = _dictionary(args.dictionary)
    report = valley_report(_updates(args.input, args.reorder_slack), d)
    summary = report.summary()
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "valley_verdicts.ndjson", "w", encoding="utf-8", newline="\n") as fh:
            for v in report.verdicts:
                fh.write(v.to_json() + "\n")
        (out / "valley_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_timeseries(args) -> int:
    d = _dictionary(args.dictionary)
    loc = None
    if args.location:
        scope, _, label = args.location.partition(":")
        try:
            loc = Geolocation(scope, label)
        except DictionaryError as exc:
            raise ConfigError(f"--location: {exc}") from None
    series = location_timeseries(_updates(args.input, args.reorder_slack), d, loc, args.bin_width)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            write_series_csv(series, args.bin_width, fh)
    else:
        write_series_csv(series, args.bin_width, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tagwatch", description="Community-driven BGP anomaly detection")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline: baseline, detection and investigators")
    run.add_argument("--config")
    for name, typ in _OVERRIDES.items():
        run.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    run.add_argument("--path-change", action="store_true")
    run.add_argument("--investigators", help="comma-separated subset of outage,blackhole,valley ('' for none)")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("generate", help="write a synthetic scenario")
    src = gen.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--preset", choices=synthgen.PRESETS)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--output-dir", required=True)
    gen.set_defaults(func=cmd_generate)

    ds = sub.add_parser("dict-stats", help="category breakdown of a dictionary")
    ds.add_argument("--dictionary", required=True)
    ds.add_argument("--json", action="store_true")
    ds.set_defaults(func=cmd_dict_stats)

    bh = sub.add_parser("blackhole-scan", help="classify blackholing requests in a stream")
    bh.add_argument("--dictionary", required=True)
    bh.add_argument("--input", required=True)
    bh.add_argument("--baseline", help="baseline NDJSON for covered_by_baseline")
    bh.add_argument("--period", type=int, default=86400)
    bh.add_argument("--reorder-slack", type=int, default=30)
    bh.add_argument("--output-dir", required=True)
    bh.set_defaults(func=cmd_blackhole_scan)

    vc = sub.add_parser("valley-check", help="valley-free verdicts from relationship communities")
    vc.add_argument("--dictionary")
    vc.add_argument("--input")
    vc.add_argument("--output-dir")
    vc.add_argument("--reorder-slack", type=int, default=30)
    vc.add_argument("--exhaustive", type=int, metavar="MAXLEN",
                    help="compare the checker with the brute-force oracle on all label words up to MAXLEN")
    vc.set_defaults(func=cmd_valley_check)

    ts = sub.add_parser("timeseries", help="per-bin routing activity, optionally filtered by location")
    ts.add_argument("--dictionary", required=True)
    ts.add_argument("--input", required=True)
    ts.add_argument("--location", help="scope:label, e.g. ixp:FranceIX")
    ts.add_argument("--bin-width", type=int, default=60)
    ts.add_argument("--reorder-slack", type=int, default=30)
    ts.add_argument("--output")
    ts.set_defaults(func=cmd_timeseries)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, synthgen.ScenarioError) as exc:
        log.error("%s", exc)
        return 2
    except (InputError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
