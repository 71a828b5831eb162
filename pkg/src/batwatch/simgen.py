"""Synthetic LGV-battery telemetry with labeled fault injection.

Each vehicle-day interleaves idle blocks (positive current, SOC drifting
down, temperature relaxing to ambient) with recharge blocks (negative
current, SOC climbing from the 70-80% band to 90%, temperature ramping
up).  Three anomaly archetypes can be injected per recharge:

  drop           sudden mid-recharge temperature step down (~5 C) with a
                 few seconds of zero current, a ~10% SOC step down, then
                 recovery back to the thermal baseline
  end-of-charge  temperature step down in the final stretch of a
                 recharge with a short current pause and no recovery
  rise           sharp temperature rise (4-8 C) in the first moments of
                 a recharge, before current absorption begins, decaying
                 away once charging runs

Ground-truth intervals are padded by LABEL_PAD_SAMPLES on each side so
any window containing anomalous samples meets the default labeling
overlap of ground_truth_windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import json
import math

import numpy as np

from .errors import ConfigError, ProvenanceError
from .ingest import SAMPLE_PERIOD_MS, SampleRecord

ARCHETYPES = ("drop", "end-of-charge", "rise")

# matches the default overlap_min of ground_truth_windows
LABEL_PAD_SAMPLES = 50

_MS_PER_DAY = 86_400_000
_SAMPLES_PER_MIN = 60_000 // SAMPLE_PERIOD_MS


@dataclass
class ScenarioConfig:
    seed: int
    vehicles: int = 2
    days: int = 3
    recharges_per_day: int = 4
    start_ms: int = 1_577_836_800_000  # 2020-01-01T00:00:00Z
    base_temperature_c: float = 30.0
    charge_rise_slope_c_per_min: float = 0.8
    soc_rate_pct_per_min: float = 2.0
    noise_std_c: float = 0.15
    drop_rate: float = 0.0
    end_of_charge_rate: float = 0.0
    rise_rate: float = 0.0

    def __post_init__(self):
        for name in ("drop_rate", "end_of_charge_rate", "rise_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {rate}")
        for name in ("vehicles", "days", "recharges_per_day"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.noise_std_c < 0:
            raise ConfigError("noise_std_c cannot be negative")
        if self.charge_rise_slope_c_per_min <= 0 or self.soc_rate_pct_per_min <= 0:
            raise ConfigError("slopes must be positive")


@dataclass
class AnomalyInterval:
    vehicle_id: str
    start_ms: int
    end_ms: int
    archetype: str


@dataclass
class LabeledStream:
    records: list
    intervals: list


def generate(config: ScenarioConfig) -> LabeledStream:
    """Deterministic stream for a config; per-vehicle derived RNG streams."""
    records = []
    intervals = []
    for v in range(config.vehicles):
        vehicle_id = f"lgv-{v:02d}"
        rng = np.random.default_rng([config.seed, v])
        for day in range(config.days):
            t = config.start_ms + day * _MS_PER_DAY
            soc = float(rng.uniform(82.0, 88.0))
            temp = config.base_temperature_c + float(rng.normal(0.0, 0.3))
            for _ in range(config.recharges_per_day):
                # keep a margin below the band edge so the first charging
                # sample still satisfies soc <= 80
                target_soc = float(rng.uniform(70.0, 79.5))
                idle_recs, t, temp = _gen_idle(rng, config, vehicle_id, t, soc, temp, target_soc)
                records.extend(idle_recs)
                soc = target_soc
                charge_recs, charge_ivals, t, soc, temp = _gen_recharge(
                    rng, config, vehicle_id, t, soc, temp
                )
                records.extend(charge_recs)
                intervals.extend(charge_ivals)
    return LabeledStream(records=records, intervals=intervals)


def _gen_idle(rng, cfg, vehicle_id, t0, soc0, temp0, target_soc):
    n = int(rng.uniform(2.0, 4.0) * _SAMPLES_PER_MIN)
    i = np.arange(n)
    soc = soc0 + (target_soc - soc0) * (i + 1) / n
    tau_samples = 60.0 * 1000.0 / SAMPLE_PERIOD_MS
    temp = (
        cfg.base_temperature_c
        + (temp0 - cfg.base_temperature_c) * np.exp(-(i + 1) / tau_samples)
        + rng.normal(0.0, cfg.noise_std_c, n)
    )
    current = rng.uniform(15.0, 25.0) + rng.normal(0.0, 0.5, n)
    recs = _records(vehicle_id, t0, temp, current, soc, "idle")
    return recs, t0 + n * SAMPLE_PERIOD_MS, float(temp[-1])


def _gen_recharge(rng, cfg, vehicle_id, t0, soc0, temp0):
    rate_ps = cfg.soc_rate_pct_per_min / _SAMPLES_PER_MIN
    slope_ps = cfg.charge_rise_slope_c_per_min / _SAMPLES_PER_MIN
    soc_end = 90.0

    has_rise = rng.random() < cfg.rise_rate
    has_drop = rng.random() < cfg.drop_rate
    has_eoc = rng.random() < cfg.end_of_charge_rate

    lead = 0
    rise_len = decay_len = 0
    rise_delta = 0.0
    if has_rise:
        rise_delta = float(rng.uniform(4.0, 8.0))
        rise_len = int(rng.integers(6, 13))
        decay_len = int(rng.integers(100, 161))
        lead = rise_len

    drop_delta = soc_drop = 0.0
    drop_hold = drop_recovery = 0
    soc_at_drop = 0.0
    if has_drop:
        drop_delta = float(rng.uniform(4.0, 6.0))
        soc_drop = float(rng.uniform(8.0, 12.0))
        drop_hold = int(rng.integers(8, 17))
        drop_recovery = int(rng.integers(48, 81))
        soc_at_drop = float(rng.uniform(soc0 + 2.0, 85.0))

    eoc_delta = 0.0
    eoc_hold = 0
    if has_eoc:
        eoc_delta = float(rng.uniform(4.0, 6.0))
        eoc_hold = int(rng.integers(8, 17))

    charge_samples = math.ceil((soc_end - soc0 + soc_drop) / rate_ps)
    n = lead + charge_samples + drop_hold + eoc_hold

    # holds pause charging (and heating)
    charging = np.ones(n, dtype=bool)
    charging[:lead] = False
    drop_edge = eoc_edge = -1
    if has_drop:
        drop_edge = lead + int((soc_at_drop - soc0) / rate_ps)
        charging[drop_edge : drop_edge + drop_hold] = False
    if has_eoc:
        eoc_edge = int(n * rng.uniform(0.90, 0.95))
        eoc_edge = min(eoc_edge, n - eoc_hold - 60)
        if has_drop:
            eoc_edge = max(eoc_edge, drop_edge + drop_hold + drop_recovery + 60)
        charging[eoc_edge : eoc_edge + eoc_hold] = False

    idx = np.arange(n)
    charged = np.cumsum(charging)
    soc = soc0 + rate_ps * charged
    if has_drop:
        soc = soc - soc_drop * (idx >= drop_edge)
    temp = temp0 + slope_ps * charged + rng.normal(0.0, cfg.noise_std_c, n)
    if has_rise:
        temp += _rise_profile(n, rise_len, decay_len, rise_delta)
    if has_drop:
        temp += _drop_profile(n, drop_edge, drop_hold, drop_recovery, drop_delta)
    if has_eoc:
        temp -= eoc_delta * (idx >= eoc_edge)

    amps = float(rng.uniform(70.0, 90.0))
    current = np.where(charging, -(amps + rng.normal(0.0, 0.5, n)), 0.0)

    recs = _records(vehicle_id, t0, temp, current, soc, "charging")
    t_end = t0 + (n - 1) * SAMPLE_PERIOD_MS
    pad = LABEL_PAD_SAMPLES * SAMPLE_PERIOD_MS
    ivals = []
    if has_drop:
        ivals.append(
            AnomalyInterval(
                vehicle_id=vehicle_id,
                start_ms=max(t0, _ts(t0, drop_edge) - pad),
                end_ms=min(t_end, _ts(t0, drop_edge + drop_hold + drop_recovery) + pad),
                archetype="drop",
            )
        )
    if has_eoc:
        ivals.append(
            AnomalyInterval(
                vehicle_id=vehicle_id,
                start_ms=max(t0, _ts(t0, eoc_edge) - pad),
                end_ms=t_end,
                archetype="end-of-charge",
            )
        )
    if has_rise:
        ivals.append(
            AnomalyInterval(
                vehicle_id=vehicle_id,
                start_ms=t0,
                end_ms=min(t_end, _ts(t0, rise_len + decay_len) + pad),
                archetype="rise",
            )
        )
    ivals.sort(key=lambda iv: iv.start_ms)
    return recs, ivals, t0 + n * SAMPLE_PERIOD_MS, float(soc[-1]), float(temp[-1])


def _ts(t0, sample_index):
    return t0 + sample_index * SAMPLE_PERIOD_MS


def _rise_profile(n, rise_len, decay_len, delta):
    dev = np.zeros(n)
    up = np.arange(1, rise_len + 1) / rise_len
    dev[:rise_len] = delta * up
    end = min(n, rise_len + decay_len)
    down = 1.0 - (np.arange(end - rise_len) + 1) / decay_len
    dev[rise_len:end] = delta * down
    return dev


def _drop_profile(n, edge, hold, recovery, delta):
    dev = np.zeros(n)
    hold_end = min(n, edge + hold)
    dev[edge:hold_end] = -delta
    rec_end = min(n, edge + hold + recovery)
    back = 1.0 - (np.arange(rec_end - hold_end) + 1) / recovery
    dev[hold_end:rec_end] = -delta * back
    return dev


def _records(vehicle_id, t0, temp, current, soc, status):
    return [
        SampleRecord(
            timestamp_ms=_ts(t0, i),
            vehicle_id=vehicle_id,
            temperature_c=float(temp[i]),
            current_a=float(current[i]),
            soc_pct=float(min(soc[i], 100.0)),
            status=status,
        )
        for i in range(len(temp))
    ]


_ARCHETYPE_RANK = {name: i for i, name in enumerate(ARCHETYPES)}


def ground_truth_windows(stream: LabeledStream, windows, overlap_min: int = 50):
    """Label each window with the archetype whose interval it overlaps by
    at least overlap_min samples, or "normal".  Ties go to the larger
    overlap, then to the earlier archetype in drop, end-of-charge, rise
    order."""
    bounds = {}
    for rec in stream.records:
        lo, hi = bounds.get(rec.vehicle_id, (rec.timestamp_ms, rec.timestamp_ms))
        bounds[rec.vehicle_id] = (min(lo, rec.timestamp_ms), max(hi, rec.timestamp_ms))
    by_vehicle = {}
    for iv in stream.intervals:
        by_vehicle.setdefault(iv.vehicle_id, []).append(iv)

    labels = []
    for w in windows:
        if w.vehicle_id not in bounds:
            raise ProvenanceError(f"window vehicle {w.vehicle_id!r} absent from stream")
        lo, hi = bounds[w.vehicle_id]
        last_sample_ms = w.start_ms + (len(w.values) - 1) * SAMPLE_PERIOD_MS
        if w.start_ms < lo or last_sample_ms > hi:
            raise ProvenanceError(
                f"window [{w.start_ms}, {last_sample_ms}] outside stream span of {w.vehicle_id}"
            )
        best = None
        for iv in by_vehicle.get(w.vehicle_id, ()):
            overlap = _overlap_samples(w.start_ms, len(w.values), iv.start_ms, iv.end_ms)
            if overlap >= overlap_min:
                key = (-overlap, _ARCHETYPE_RANK[iv.archetype])
                if best is None or key < best[0]:
                    best = (key, iv.archetype)
        labels.append(best[1] if best else "normal")
    return labels


def _overlap_samples(window_start_ms, window_len, interval_start_ms, interval_end_ms):
    lo = max(0, math.ceil((interval_start_ms - window_start_ms) / SAMPLE_PERIOD_MS))
    hi = min(window_len - 1, (interval_end_ms - window_start_ms) // SAMPLE_PERIOD_MS)
    return max(0, hi - lo + 1)


def intervals_to_json(intervals) -> str:
    doc = [
        {
            "vehicle_id": iv.vehicle_id,
            "start_ms": iv.start_ms,
            "end_ms": iv.end_ms,
            "archetype": iv.archetype,
        }
        for iv in sorted(intervals, key=lambda iv: (iv.vehicle_id, iv.start_ms, iv.archetype))
    ]
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def intervals_from_json(text: str):
    return [
        AnomalyInterval(
            vehicle_id=d["vehicle_id"],
            start_ms=int(d["start_ms"]),
            end_ms=int(d["end_ms"]),
            archetype=d["archetype"],
        )
        for d in json.loads(text)
    ]
