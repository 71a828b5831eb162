"""Telemetry ingestion: cleaning, recharge segmentation, windowing,
normalization and time-based splitting.

Samples arrive on a nominal 250 ms grid.  Cleaning is total: bad records
are dropped and counted, short gaps are linearly interpolated, long gaps
split the stream.  All downstream stages work per vehicle on the
resulting contiguous streams.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ShapeError

SAMPLE_PERIOD_MS = 250
TEMPERATURE_BAND_C = (-20.0, 120.0)
SOC_BAND_PCT = (0.0, 100.0)

CSV_FIELDS = ("timestamp_ms", "vehicle_id", "temperature_c", "current_a", "soc_pct", "status")


@dataclass
class SampleRecord:
    """One telemetry reading; current < 0 means the battery is charging."""

    timestamp_ms: int
    vehicle_id: str
    temperature_c: float
    current_a: float
    soc_pct: float
    status: str = ""


@dataclass
class CleanStream:
    """A gap-free, sorted, single-vehicle run of cleaned records."""

    vehicle_id: str
    records: list


@dataclass
class CleaningReport:
    input_records: int = 0
    output_records: int = 0
    duplicates_dropped: int = 0
    out_of_band_dropped: int = 0
    interpolated: int = 0
    stream_splits: int = 0

    def as_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class RechargeSegment:
    vehicle_id: str
    records: list
    usable: bool = True

    @property
    def start_ms(self) -> int:
        return self.records[0].timestamp_ms

    @property
    def end_ms(self) -> int:
        return self.records[-1].timestamp_ms

    @property
    def n_samples(self) -> int:
        return len(self.records)


@dataclass
class Window:
    """Fixed-length temperature sequence, the unit of classification."""

    values: np.ndarray
    vehicle_id: str
    start_ms: int
    index: int
    soc_start: float = float("nan")

    @property
    def end_ms(self) -> int:
        return self.start_ms + len(self.values) * SAMPLE_PERIOD_MS


@dataclass
class NormStats:
    """Global z-score statistics fitted on the training windows."""

    mean: float
    std: float


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    policy: dict = field(default_factory=dict)


def _in_band(rec: SampleRecord) -> bool:
    return (
        rec.timestamp_ms > 0
        and TEMPERATURE_BAND_C[0] <= rec.temperature_c <= TEMPERATURE_BAND_C[1]
        and SOC_BAND_PCT[0] <= rec.soc_pct <= SOC_BAND_PCT[1]
    )


def clean(records, gap_tolerance_ms: int = 5000, max_interp: int = 4):
    """Sort, deduplicate, band-filter, interpolate short gaps and split on
    long ones.  Returns (streams, report); streams are per-vehicle and
    ordered by (vehicle, start time)."""
    report = CleaningReport(input_records=len(records))
    by_vehicle = {}
    for rec in records:
        by_vehicle.setdefault(rec.vehicle_id, []).append(rec)

    streams = []
    for vehicle_id in sorted(by_vehicle):
        seq = sorted(by_vehicle[vehicle_id], key=lambda r: r.timestamp_ms)
        kept = []
        for rec in seq:
            if kept and rec.timestamp_ms == kept[-1].timestamp_ms:
                report.duplicates_dropped += 1
                continue
            if not _in_band(rec):
                report.out_of_band_dropped += 1
                continue
            kept.append(rec)
        if not kept:
            continue

        current = [kept[0]]
        for rec in kept[1:]:
            prev = current[-1]
            dt = rec.timestamp_ms - prev.timestamp_ms
            missing = round(dt / SAMPLE_PERIOD_MS) - 1
            if 1 <= missing <= max_interp:
                for k in range(1, missing + 1):
                    frac = k / (missing + 1)
                    current.append(
                        SampleRecord(
                            timestamp_ms=prev.timestamp_ms + k * SAMPLE_PERIOD_MS,
                            vehicle_id=vehicle_id,
                            temperature_c=prev.temperature_c
                            + frac * (rec.temperature_c - prev.temperature_c),
                            current_a=prev.current_a + frac * (rec.current_a - prev.current_a),
                            soc_pct=prev.soc_pct + frac * (rec.soc_pct - prev.soc_pct),
                            status=prev.status,
                        )
                    )
                    report.interpolated += 1
            elif dt > gap_tolerance_ms:
                streams.append(CleanStream(vehicle_id=vehicle_id, records=current))
                report.stream_splits += 1
                current = []
            current.append(rec)
        streams.append(CleanStream(vehicle_id=vehicle_id, records=current))

    report.output_records = sum(len(s.records) for s in streams)
    return streams, report


def segment_recharges(
    stream: CleanStream,
    soc_start_band=(70.0, 80.0),
    soc_end: float = 90.0,
    gap_tolerance_ms: int = 5000,
    min_samples: int = 1000,
):
    """Cut one cleaned stream into recharge segments.

    A segment opens when current turns negative with SOC at or below the
    start band's upper edge, and closes when SOC reaches soc_end or when
    charging current stays non-negative for longer than gap_tolerance_ms
    (the segment is then truncated at the last charging sample).
    Segments shorter than min_samples are kept but flagged unusable.
    """
    segments = []
    records = stream.records
    open_idx = None
    last_charging = None
    i = 0
    while i < len(records):
        rec = records[i]
        if open_idx is None:
            if rec.current_a < 0 and rec.soc_pct <= soc_start_band[1]:
                open_idx = i
                last_charging = i
        else:
            if rec.current_a < 0:
                last_charging = i
            if rec.soc_pct >= soc_end:
                segments.append(_make_segment(stream, records[open_idx : i + 1], min_samples))
                open_idx = None
            elif (
                rec.current_a >= 0
                and rec.timestamp_ms - records[last_charging].timestamp_ms > gap_tolerance_ms
            ):
                segments.append(
                    _make_segment(stream, records[open_idx : last_charging + 1], min_samples)
                )
                open_idx = None
        i += 1
    if open_idx is not None:
        segments.append(_make_segment(stream, records[open_idx : last_charging + 1], min_samples))
    return segments


def _make_segment(stream, records, min_samples):
    return RechargeSegment(
        vehicle_id=stream.vehicle_id,
        records=list(records),
        usable=len(records) >= min_samples,
    )


def window_stride(window_size: int, overlap: float) -> int:
    """Stride implied by a window size and fractional overlap."""
    if not 0 <= overlap < 1:
        raise ConfigError(f"overlap must be in [0, 1), got {overlap}")
    if window_size < 2:
        raise ConfigError(f"window_size must be at least 2, got {window_size}")
    stride = round(window_size * (1 - overlap))
    if stride < 1:
        raise ConfigError(
            f"overlap {overlap} leaves no stride for window_size {window_size}"
        )
    return stride


def windowize(segment: RechargeSegment, window_size: int = 1000, overlap: float = 0.5):
    """Cut a segment into overlapping raw-temperature windows; trailing
    samples that do not fill a window are discarded."""
    stride = window_stride(window_size, overlap)
    temps = np.array([r.temperature_c for r in segment.records], dtype=np.float64)
    windows = []
    offset = 0
    index = 0
    while offset + window_size <= len(temps):
        first = segment.records[offset]
        windows.append(
            Window(
                values=temps[offset : offset + window_size].copy(),
                vehicle_id=segment.vehicle_id,
                start_ms=first.timestamp_ms,
                index=index,
                soc_start=first.soc_pct,
            )
        )
        offset += stride
        index += 1
    return windows


def fit_normalizer(windows) -> NormStats:
    """Population mean/std of every value in the training windows; std is
    floored at 1e-9 so constant data stays finite."""
    if not windows:
        raise ConfigError("cannot fit a normalizer on an empty window set")
    values = np.concatenate([np.asarray(w.values, dtype=np.float64) for w in windows])
    return NormStats(mean=float(values.mean()), std=float(max(values.std(), 1e-9)))


def normalize_windows(windows, stats: NormStats):
    """Z-score window values with the training statistics."""
    return [
        replace(w, values=(np.asarray(w.values, dtype=np.float64) - stats.mean) / stats.std)
        for w in windows
    ]


def denormalize_values(values, stats: NormStats) -> np.ndarray:
    return np.asarray(values, dtype=np.float64) * stats.std + stats.mean


def _window_order(w: Window):
    return (w.start_ms, w.vehicle_id, w.index)


def split_by_time(windows, boundary_ms: int, validation_fraction: float = 0.2) -> DatasetSplit:
    """Time-based split: windows before the boundary form the train pool,
    the rest the test set.  The chronological tail of the pool becomes
    validation; train windows overlapping a validation window (same
    vehicle, intersecting sample span) are dropped to stop leakage
    through the 50% window overlap."""
    if not 0 <= validation_fraction < 1:
        raise ConfigError(f"validation_fraction must be in [0, 1), got {validation_fraction}")
    pool = sorted((w for w in windows if w.start_ms < boundary_ms), key=_window_order)
    test = sorted((w for w in windows if w.start_ms >= boundary_ms), key=_window_order)
    if not pool:
        raise ConfigError("no windows fall before the split boundary")

    n_val = int(round(len(pool) * validation_fraction))
    dropped = 0
    if n_val == 0:
        train, validation = pool, []
    else:
        cut = len(pool) - n_val
        # equal start timestamps at the cut go to validation, keeping
        # max(train starts) strictly below min(validation starts)
        while cut > 0 and pool[cut - 1].start_ms >= pool[cut].start_ms:
            cut -= 1
        if cut == 0:
            raise ConfigError("validation_fraction leaves no training windows")
        validation = pool[cut:]
        by_vehicle = {}
        for w in validation:
            by_vehicle.setdefault(w.vehicle_id, []).append((w.start_ms, w.end_ms))
        train = []
        for w in pool[:cut]:
            spans = by_vehicle.get(w.vehicle_id, ())
            if any(w.start_ms < end and start < w.end_ms for start, end in spans):
                dropped += 1
            else:
                train.append(w)
    policy = {
        "boundary_ms": boundary_ms,
        "validation_fraction": validation_fraction,
        "dropped_overlap": dropped,
    }
    return DatasetSplit(train=train, validation=validation, test=test, policy=policy)


def read_samples(path) -> list:
    """Load telemetry from a .csv or .jsonl file (shared field names)."""
    path = str(path)
    records = []
    if path.endswith(".jsonl"):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                records.append(_record_from_dict(json.loads(line)))
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
            if missing:
                raise ShapeError(f"CSV is missing fields: {sorted(missing)}")
            for row in reader:
                records.append(_record_from_dict(row))
    return records


def _record_from_dict(d) -> SampleRecord:
    return SampleRecord(
        timestamp_ms=int(d["timestamp_ms"]),
        vehicle_id=str(d["vehicle_id"]),
        temperature_c=float(d["temperature_c"]),
        current_a=float(d["current_a"]),
        soc_pct=float(d["soc_pct"]),
        status=str(d.get("status", "")),
    )


def write_samples(path, records) -> None:
    """Write telemetry as CSV or JSONL depending on the file suffix."""
    path = str(path)
    if path.endswith(".jsonl"):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(
                    json.dumps(
                        {
                            "timestamp_ms": rec.timestamp_ms,
                            "vehicle_id": rec.vehicle_id,
                            "temperature_c": rec.temperature_c,
                            "current_a": rec.current_a,
                            "soc_pct": rec.soc_pct,
                            "status": rec.status,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_FIELDS)
            for rec in records:
                writer.writerow(
                    [
                        rec.timestamp_ms,
                        rec.vehicle_id,
                        repr(rec.temperature_c),
                        repr(rec.current_a),
                        repr(rec.soc_pct),
                        rec.status,
                    ]
                )
