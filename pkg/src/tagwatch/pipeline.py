"""End-to-end run: ingest -> baseline -> detect -> investigate -> report.

The run is streaming: it keeps the baseline, open detection bins and the
aggregate counters, never the full update stream.
"""

from __future__ import annotations

import contextlib
import json
import logging
import re
import sys
from collections import Counter
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .baseline import Baseline, BaselineBuilder, dump_baseline, load_baseline
from .blackhole import SeriesAccumulator, classify_blackhole
from .blackhole import write_histogram_csv, write_series_csv as write_blackhole_csv
from .config import Config, ConfigError
from .detector import Detector, DetectorConfig
from .dictionary import DictionaryError, load_dictionary_path, meaning_from_dict, meaning_to_dict
from .ingest import StreamCursor, read_updates
from .outage import LocationSeries, OutageConfig, investigate_outage, write_series_csv
from .valley import ValleyReport, valley_verdict

log = logging.getLogger(__name__)


class InputError(RuntimeError):
    pass


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-").lower() or "x"


@contextlib.contextmanager
def open_input(path: str):
    if path == "-":
        yield sys.stdin
        return
    try:
        fh = open(path, encoding="utf-8", errors="replace")
    except OSError as exc:
        raise InputError(f"cannot read input {path}: {exc}") from None
    with fh:
        yield fh


def load_inputs(cfg: Config):
    try:
        d = load_dictionary_path(cfg.dictionary)
    except OSError as exc:
        raise ConfigError(f"cannot read dictionary {cfg.dictionary}: {exc}") from None
    except DictionaryError as exc:
        raise ConfigError(f"invalid dictionary {cfg.dictionary}: {exc}") from None
    baseline = None
    if cfg.baseline_in:
        try:
            with open(cfg.baseline_in) as fh:
                baseline = load_baseline(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load baseline {cfg.baseline_in}: {exc}") from None
    return d, baseline


def execute(cfg: Config) -> dict:
    """Run the pipeline and write reports. Raises ConfigError / InputError."""
    cfg.validate()
    d, baseline = load_inputs(cfg)
    det_cfg = DetectorConfig(cfg.bin_width, cfg.threshold, cfg.threshold_fraction,
                             cfg.reorder_slack, cfg.path_change)
    out_cfg = OutageConfig(cfg.outage_concentration, cfg.outage_attributed_min)
    enabled = set(cfg.investigators)

    with open_input(cfg.input) as source:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with contextlib.ExitStack() as stack:
            def writer(name):
                return stack.enter_context(open(out / name, "w", encoding="utf-8", newline="\n"))

            signals_fh = writer("signals.ndjson")
            outages_fh = writer("outages.ndjson") if "outage" in enabled else None
            bh_fh = writer("blackhole_events.ndjson") if "blackhole" in enabled else None
            valley_fh = writer("valley_verdicts.ndjson") if "valley" in enabled else None

            cursor = StreamCursor(cfg.reorder_slack)
            builder: Optional[BaselineBuilder] = None
            detector = Detector(baseline, d, det_cfg) if baseline is not None else None
            series = LocationSeries(d, cfg.bin_width)
            bh_series = SeriesAccumulator(cfg.blackhole_period)
            bh_hist: Counter = Counter()
            bh_count = 0
            valley = ValleyReport()
            signal_bins, outage_verdicts = [], []

            def emit(signals):
                for s in signals:
                    signal_bins.append({"bin": s.bin, "bin_start": s.bin_start, "count": s.count})
                    signals_fh.write(s.to_json() + "\n")
                    if outages_fh is None:
                        continue
                    for rep in investigate_outage(s, d, out_cfg):
                        outages_fh.write(rep.to_json() + "\n")
                        if rep.verdict == "outage":
                            outage_verdicts.append({"bin": rep.bin, "location": meaning_to_dict(rep.location),
                                                    "concentration": rep.concentration})

            try:
                for u in read_updates(source, cursor):
                    if detector is None:
                        if builder is None:
                            builder = BaselineBuilder(u.timestamp - cfg.reorder_slack,
                                                      u.timestamp + cfg.init_window, cfg.min_observations)
                        if u.timestamp >= builder.end:
                            baseline = builder.finalize()
                            detector = Detector(baseline, d, det_cfg)
                            log.info("baseline finalized with %d routes", len(baseline))
                        else:
                            builder.observe(u)
                    if detector is not None:
                        emit(detector.advance(u.timestamp))
                        detector.process_update(u)
                    if u.is_announcement and bh_fh is not None:
                        ev = classify_blackhole(u, d, detector.monitored if detector else None)
                        if ev is not None:
                            bh_fh.write(ev.to_json() + "\n")
                            bh_series.add(ev)
                            bh_hist[ev.prefix_length] += 1
                            bh_count += 1
                    if u.is_announcement and valley_fh is not None:
                        v = valley_verdict(u, d)
                        valley.add(v, keep=False)
                        if v.violating:
                            valley_fh.write(v.to_json() + "\n")
                    series.add(u)
            except OSError as exc:
                raise InputError(f"input read failure: {exc}") from None

            if detector is not None:
                emit(detector.flush())
            elif baseline is None:
                baseline = builder.finalize() if builder is not None else Baseline()

        with open(out / "baseline.ndjson", "w", encoding="utf-8", newline="\n") as fh:
            dump_baseline(baseline, fh)
        with open(out / "timeseries_all.csv", "w", encoding="utf-8", newline="\n") as fh:
            write_series_csv(series.series(), cfg.bin_width, fh)
        ts_files = ["timeseries_all.csv"]
        seen_locations = []
        for v in outage_verdicts:
            loc = v["location"]
            if loc not in seen_locations:
                seen_locations.append(loc)
        for loc in seen_locations:
            name = f"timeseries_{loc['scope']}_{_slug(loc['location'])}.csv"
            with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
                write_series_csv(series.series(meaning_from_dict(loc)), cfg.bin_width, fh)
            ts_files.append(name)
        blackhole_summary = None
        if "blackhole" in enabled:
            bs = bh_series.series()
            with open(out / "blackhole_series.csv", "w", encoding="utf-8", newline="\n") as fh:
                write_blackhole_csv(bs, fh)
            with open(out / "blackhole_prefix_lengths.csv", "w", encoding="utf-8", newline="\n") as fh:
                write_histogram_csv(dict(bh_hist), fh)
            blackhole_summary = {
                "events": bh_count,
                "prefix_lengths": {str(k): v for k, v in sorted(bh_hist.items())},
                "series": [list(p) for p in bs.points],
            }

        config_echo = asdict(cfg)
        config_echo.pop("output_dir")
        summary = {
            "records": {
                "consumed": cursor.consumed,
                "accepted": cursor.accepted,
                "dropped": {"malformed": cursor.dropped["malformed"], "stale": cursor.dropped["stale"]},
            },
            "baseline": {"size": len(baseline), "window": list(baseline.window)},
            "detection": {
                "ran": detector is not None,
                "threshold": None if detector is None else detector.threshold,
                "signals": signal_bins,
                "deviations_per_bin": {} if detector is None else
                {str(k): v for k, v in sorted(detector.deviation_counts.items())},
            },
            "outages": outage_verdicts if "outage" in enabled else None,
            "blackhole": blackhole_summary,
            "valley": valley.summary() if "valley" in enabled else None,
            "timeseries": ts_files,
            "config": config_echo,
        }
        if cursor.consumed == 0:
            summary["note"] = "zero records"
        with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return summary


def run_pipeline(cfg: Config) -> int:
    """Exit status: 0 on a clean run, 2 on configuration errors, 1 on input failures."""
    try:
        execute(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except InputError as exc:
        log.error("%s", exc)
        return 1
    return 0
