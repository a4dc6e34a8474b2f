"""Event, tract, and census ingestion, plus hashtag extraction.

Events arrive as CSV (RFC 4180 quoting) with header
``user_id,lat,lon,timestamp,text`` or as JSONL with the same keys;
timestamps are ISO-8601 and must carry an explicit UTC offset. Tract
boundaries are a GeoJSON FeatureCollection with a ``tract_id`` property;
census indicators a CSV keyed by ``tract_id``.

Event parsing is skip-and-count: a bad record is tallied under its error
kind and the stream continues. Multi-million-row exports always contain
some noise, and one broken line must never abort a run. Tract and census
files are small and authoritative, so they fail fast instead.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterator

import numpy as np

from .errors import (
    BadTimestamp,
    DuplicateTractId,
    MalformedRecord,
    MissingTractId,
    NonNumericValue,
    NonPolygonGeometry,
    OutOfRangeCoordinate,
    RateOutOfRange,
    UnclosedRing,
)

EVENT_COLUMNS = ("user_id", "lat", "lon", "timestamp", "text")

# A hashtag is '#' followed by a maximal run of word characters (Unicode
# letters, digits, underscore); tags are casefolded so #NYC == #nyc.
TAG_PATTERN = re.compile(r"#(\w+)")

_TS_RE = re.compile(
    r"(\d{4}-\d{2}-\d{2})T(\d{2}):(\d{2}):(\d{2})(Z|[+-]\d{2}:?\d{2})$"
)

Ring = tuple[tuple[float, float], ...]
Polygon = tuple[Ring, ...]  # exterior ring first, holes after


@dataclass(slots=True)
class GeoEvent:
    """One geo-tagged post: who, where, when, and the raw text."""

    user_id: str
    lat: float
    lon: float
    timestamp: datetime  # timezone-aware; original UTC offset preserved
    text: str


@dataclass(frozen=True)
class RawTractFeature:
    """A tract boundary as parsed: one or more polygons with their holes."""

    tract_id: str
    polygons: tuple[Polygon, ...]
    properties: dict

    @property
    def rings(self) -> Iterator[Ring]:
        for poly in self.polygons:
            yield from poly


@dataclass(frozen=True)
class CensusRecord:
    tract_id: str
    median_income: float | None = None
    median_rent: float | None = None
    unemployment_rate: float | None = None
    extra: dict[str, float] = field(default_factory=dict)


@dataclass
class ParseStats:
    """Skip-and-count bookkeeping for one parse run."""

    records_ok: int = 0
    records_skipped: int = 0
    errors: Counter = field(default_factory=Counter)

    @property
    def records_total(self) -> int:
        return self.records_ok + self.records_skipped

    def count_error(self, kind: str) -> None:
        self.records_skipped += 1
        self.errors[kind] += 1

    def merge(self, other: "ParseStats") -> None:
        self.records_ok += other.records_ok
        self.records_skipped += other.records_skipped
        self.errors.update(other.errors)


@dataclass
class EventBatch:
    """Columnar view of parsed events (the pipeline's fast path).

    Produced by the same row pipeline as :func:`parse_events`, so both
    views see identical validation and error accounting.
    """

    user_ids: list[str]
    lats: np.ndarray
    lons: np.ndarray
    epochs: np.ndarray  # seconds since the Unix epoch (UTC)
    offsets: np.ndarray  # original UTC offsets, in seconds
    texts: list[str]

    def __len__(self) -> int:
        return len(self.user_ids)

    def take(self, indices: np.ndarray) -> "EventBatch":
        if len(indices) == len(self.user_ids):
            return self  # nothing filtered out
        idx = indices.tolist()
        return EventBatch(
            [self.user_ids[i] for i in idx],
            self.lats[indices],
            self.lons[indices],
            self.epochs[indices],
            self.offsets[indices],
            [self.texts[i] for i in idx],
        )

    def to_events(self) -> Iterator[GeoEvent]:
        tzs: dict[int, timezone] = {}
        for i in range(len(self.user_ids)):
            off = int(self.offsets[i])
            tz = tzs.get(off)
            if tz is None:
                tz = tzs.setdefault(off, timezone(timedelta(seconds=off)))
            ts = datetime.fromtimestamp(float(self.epochs[i]), tz)
            yield GeoEvent(
                self.user_ids[i],
                float(self.lats[i]),
                float(self.lons[i]),
                ts,
                self.texts[i],
            )


def extract_hashtags(text: str) -> list[str]:
    """All '#'-prefixed word runs in order, casefolded, duplicates kept.

    This is the total-count view; uniqueness is applied downstream where
    needed.
    """
    if "#" not in text:
        return []
    return [t.casefold() for t in TAG_PATTERN.findall(text)]


# --- event stream parsing ---------------------------------------------------


def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data


def _csv_parse_quoted(record: str) -> list[str] | None:
    try:
        rows = list(csv.reader(io.StringIO(record)))
    except csv.Error:
        return None
    if len(rows) != 1:
        return None
    return rows[0]


def _iter_csv_fields(text: str) -> Iterator[list[str] | None]:
    """Yield one field list per CSV record; None marks an unparseable one.

    The common quote-free line takes a plain split() path; lines with
    quotes go through the csv module, accumulating continuation lines
    until the quote parity closes (newlines inside quoted fields).
    """
    pending: str | None = None
    for line in text.split("\n"):
        if pending is not None:
            pending += "\n" + line
            if line.count('"') % 2 == 1:
                yield _csv_parse_quoted(pending)
                pending = None
            continue
        if not line:
            continue
        if '"' not in line:
            yield line.split(",")
        elif line.count('"') % 2 == 0:
            yield _csv_parse_quoted(line)
        else:
            pending = line
    if pending is not None:
        yield None  # unterminated quote at EOF


def _iter_jsonl_fields(text: str) -> Iterator[list[str] | None]:
    for line in text.split("\n"):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            yield None
            continue
        if not isinstance(obj, dict):
            yield None
            continue
        try:
            uid = obj["user_id"]
            lat = obj["lat"]
            lon = obj["lon"]
            ts = obj["timestamp"]
        except KeyError:
            yield None
            continue
        text_v = obj.get("text", "")
        if not isinstance(ts, str) or not isinstance(text_v, str):
            yield None
            continue
        yield [str(uid), str(lat), str(lon), ts, text_v]


def _day_base(date_s: str, off_s: str) -> tuple[float, int]:
    """Epoch of local midnight plus the fixed offset for one (date,
    offset) pair; raises ValueError for bad dates or offsets."""
    if off_s == "Z":
        off = 0
        tz = timezone.utc
    else:
        off = int(off_s[1:3]) * 3600 + int(off_s[-2:]) * 60
        if off_s[0] == "-":
            off = -off
        tz = timezone(timedelta(seconds=off))
    y, mo, d = date_s.split("-")
    return datetime(int(y), int(mo), int(d), tzinfo=tz).timestamp(), off


def _second_of_day(hms: str) -> int:
    h = int(hms[0:2])
    mi = int(hms[3:5])
    sec = int(hms[6:8])
    if h > 23 or mi > 59 or sec > 59 or hms[2] != ":" or hms[5] != ":":
        raise ValueError(hms)
    return h * 3600 + mi * 60 + sec


def _timestamp_to_epoch(s: str, day_cache: dict, sod_cache: dict) -> tuple[float, int]:
    """Parse an ISO-8601 timestamp with a mandatory UTC offset.

    Returns (epoch seconds, offset seconds); raises ValueError on any
    problem. The fixed-width ``YYYY-MM-DDTHH:MM:SS+HH:MM`` shape takes a
    sliced-and-cached path; anything else falls back to a regex form and
    then to ``datetime.fromisoformat``.
    """
    if len(s) == 25 and s[10] == "T" and (s[19] == "+" or s[19] == "-") and s[22] == ":":
        date_s = s[0:10]
        off_s = s[19:25]
        key = date_s + off_s
        cached = day_cache.get(key)
        hms = s[11:19]
        sod = sod_cache.get(hms)
        if cached is not None and sod is not None:
            return cached[0] + sod, cached[1]
        if s[4] == "-" and s[7] == "-":
            if cached is None:
                cached = _day_base(date_s, off_s)
                if len(day_cache) < 4096:
                    day_cache[key] = cached
            if sod is None:
                sod = _second_of_day(hms)
                if len(sod_cache) < 90000:
                    sod_cache[hms] = sod
            return cached[0] + sod, cached[1]
    m = _TS_RE.match(s)
    if m:
        date_s, hh, mm, ss, off_s = m.groups()
        key = date_s + off_s
        cached = day_cache.get(key)
        if cached is None:
            cached = _day_base(date_s, off_s)
            if len(day_cache) < 4096:
                day_cache[key] = cached
        h = int(hh)
        mi = int(mm)
        sec = int(ss)
        if h > 23 or mi > 59 or sec > 59:
            raise ValueError(s)
        return cached[0] + h * 3600 + mi * 60 + sec, cached[1]
    # general ISO-8601 fallback
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None or dt.utcoffset() is None:
        raise ValueError("timestamp lacks a UTC offset")
    return dt.timestamp(), int(dt.utcoffset().total_seconds())


def validate_event_fields(fields: list[str]):
    """Validate one raw record; returns (user_id, lat, lon, epoch,
    offset_seconds, text) or raises the matching ingest error.

    Convenience wrapper over the same rules the batch loop applies
    inline; handy for testing single records.
    """
    if len(fields) != len(EVENT_COLUMNS):
        raise MalformedRecord(f"expected {len(EVENT_COLUMNS)} fields, got {len(fields)}")
    uid, lat_s, lon_s, ts_s, text = fields
    if not uid:
        raise MalformedRecord("empty user_id")
    try:
        lat = float(lat_s)
        lon = float(lon_s)
    except ValueError:
        raise MalformedRecord(f"non-numeric coordinate {lat_s!r},{lon_s!r}") from None
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise OutOfRangeCoordinate(f"({lat_s}, {lon_s})")
    try:
        epoch, off = _timestamp_to_epoch(ts_s, {}, {})
    except ValueError:
        raise BadTimestamp(ts_s) from None
    return uid, lat, lon, epoch, off, text


def parse_event_batch(
    source,
    format: str = "csv",
    stats: ParseStats | None = None,
    expect_header: bool = True,
) -> EventBatch:
    """Parse an event stream into columnar arrays.

    ``expect_header=False`` parses a headerless body slice (used when a
    file is split into byte ranges for parallel workers).
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown event format {format!r}")
    if stats is None:
        stats = ParseStats()
    text = _as_text(source)
    if "\r" in text:
        text = text.replace("\r\n", "\n")
    if format == "csv":
        rows = _iter_csv_fields(text)
        if expect_header:
            header = next(rows, None)
            if header is None or [h.strip() for h in header] != list(EVENT_COLUMNS):
                raise MalformedRecord(
                    f"CSV header must be {','.join(EVENT_COLUMNS)}, got {header!r}"
                )
    else:
        rows = _iter_jsonl_fields(text)

    uids: list[str] = []
    lats: list[float] = []
    lons: list[float] = []
    epochs: list[float] = []
    offs: list[int] = []
    texts: list[str] = []
    day_cache: dict = {}
    sod_cache: dict = {}
    # same rules as validate_event_fields, inlined: this loop is the hot
    # path for multi-million-row files
    u_app, la_app, lo_app = uids.append, lats.append, lons.append
    ep_app, of_app, tx_app = epochs.append, offs.append, texts.append
    ok = 0
    for fields in rows:
        if fields is None or len(fields) != 5:
            stats.count_error("MalformedRecord")
            continue
        uid, lat_s, lon_s, ts_s, text_v = fields
        if not uid:
            stats.count_error("MalformedRecord")
            continue
        try:
            lat = float(lat_s)
            lon = float(lon_s)
        except ValueError:
            stats.count_error("MalformedRecord")
            continue
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            stats.count_error("OutOfRangeCoordinate")
            continue
        try:
            epoch, off = _timestamp_to_epoch(ts_s, day_cache, sod_cache)
        except ValueError:
            stats.count_error("BadTimestamp")
            continue
        ok += 1
        u_app(uid)
        la_app(lat)
        lo_app(lon)
        ep_app(epoch)
        of_app(off)
        tx_app(text_v)
    stats.records_ok += ok
    return EventBatch(
        uids,
        np.asarray(lats, dtype=np.float64),
        np.asarray(lons, dtype=np.float64),
        np.asarray(epochs, dtype=np.float64),
        np.asarray(offs, dtype=np.int32),
        texts,
    )


def parse_events(
    source, format: str = "csv", stats: ParseStats | None = None
) -> Iterator[GeoEvent]:
    """Yield validated events in input order, skip-and-count on errors.

    Pass a :class:`ParseStats` to receive the ok/skipped/error tallies.
    """
    batch = parse_event_batch(source, format=format, stats=stats)
    yield from batch.to_events()


def partition_byte_ranges(path, k: int, format: str = "csv") -> list[tuple[int, int]]:
    """Split an event file into k byte ranges at record boundaries.

    A CSV record boundary is a newline preceded by an even number of
    quote characters, so records with quoted embedded newlines never
    straddle two ranges (JSONL lines always have balanced quotes, which
    makes the same scan valid there). The first range starts after the
    CSV header line.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    data = os.fspath(path)
    with open(data, "rb") as f:
        blob = f.read()
    if format == "csv":
        nl = blob.find(b"\n")
        start = nl + 1 if nl >= 0 else len(blob)
    else:
        start = 0
    end = len(blob)
    if k == 1 or end - start == 0:
        return [(start, end)]
    cuts: list[int] = []
    pos = start
    parity = 0
    for i in range(1, k):
        target = start + (end - start) * i // k
        if target < pos:
            target = pos
        parity = (parity + blob.count(b'"', pos, target)) & 1
        pos = target
        while pos < end:
            nl = blob.find(b"\n", pos)
            if nl == -1:
                pos = end
                break
            parity = (parity + blob.count(b'"', pos, nl)) & 1
            pos = nl + 1
            if parity == 0:
                break
        cuts.append(pos)
    bounds = [start] + cuts + [end]
    return [(bounds[i], bounds[i + 1]) for i in range(k)]


def read_byte_range(path, byte_range: tuple[int, int]) -> str:
    start, end = byte_range
    with open(os.fspath(path), "rb") as f:
        f.seek(start)
        return f.read(end - start).decode("utf-8")


# --- tract geometry parsing -------------------------------------------------


def _validate_ring(tract_id: str, ring) -> Ring:
    if not isinstance(ring, (list, tuple)) or len(ring) < 4:
        raise UnclosedRing(f"tract {tract_id}: ring with < 4 points")
    try:
        pts = tuple((float(p[0]), float(p[1])) for p in ring)
    except (TypeError, ValueError, IndexError):
        raise NonPolygonGeometry(f"tract {tract_id}: malformed coordinates") from None
    if pts[0] != pts[-1]:
        raise UnclosedRing(f"tract {tract_id}: ring not closed")
    return pts


def parse_tracts(source) -> list[RawTractFeature]:
    """Parse a GeoJSON FeatureCollection of Polygon/MultiPolygon tracts.

    A MultiPolygon becomes one tract with several polygon parts. Each
    feature must carry a unique, non-empty ``tract_id`` property.
    """
    try:
        obj = json.loads(_as_text(source))
    except json.JSONDecodeError as e:
        raise NonPolygonGeometry(f"not valid GeoJSON: {e}") from None
    if not isinstance(obj, dict) or obj.get("type") != "FeatureCollection":
        raise NonPolygonGeometry("input is not a GeoJSON FeatureCollection")
    out: list[RawTractFeature] = []
    seen: set[str] = set()
    for feat in obj.get("features") or []:
        props = feat.get("properties") or {}
        tid = props.get("tract_id")
        if tid is None or str(tid) == "":
            raise MissingTractId("feature lacks a tract_id property")
        tid = str(tid)
        if tid in seen:
            raise DuplicateTractId(tid)
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "Polygon":
            raw_polys = [geom.get("coordinates")]
        elif gtype == "MultiPolygon":
            raw_polys = geom.get("coordinates") or []
        else:
            raise NonPolygonGeometry(f"tract {tid}: geometry type {gtype!r}")
        polygons = []
        for rings in raw_polys:
            if not rings:
                raise NonPolygonGeometry(f"tract {tid}: polygon without rings")
            polygons.append(tuple(_validate_ring(tid, r) for r in rings))
        if not polygons:
            raise NonPolygonGeometry(f"tract {tid}: empty MultiPolygon")
        seen.add(tid)
        out.append(RawTractFeature(tid, tuple(polygons), dict(props)))
    return out


# --- census table parsing ---------------------------------------------------

_CENSUS_KNOWN = ("median_income", "median_rent", "unemployment_rate")
_CENSUS_MONETARY = ("median_income", "median_rent")


def parse_census(source) -> dict[str, CensusRecord]:
    """Parse a census indicator CSV into one record per tract.

    The header must name a ``tract_id`` column; every other column is
    numeric. Known columns land on the record fields, anything else goes
    to ``extra``. Rows for tracts missing from the boundary file are kept
    here and flagged later, so id mismatches stay diagnosable.
    """
    text = _as_text(source)
    if "\r" in text:
        text = text.replace("\r\n", "\n")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or "tract_id" not in [h.strip() for h in header]:
        raise MalformedRecord("census CSV must have a tract_id column")
    cols = [h.strip() for h in header]
    id_idx = cols.index("tract_id")
    out: dict[str, CensusRecord] = {}
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(cols):
            raise MalformedRecord(f"census row has {len(row)} cells, expected {len(cols)}")
        tid = row[id_idx].strip()
        if not tid:
            raise MissingTractId("census row with empty tract_id")
        if tid in out:
            raise DuplicateTractId(tid)
        known: dict[str, float] = {}
        extra: dict[str, float] = {}
        for name, cell in zip(cols, row):
            if name == "tract_id" or not cell.strip():
                continue
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericValue(f"{name}={cell!r} for tract {tid}") from None
            if name.endswith("rate"):
                if not (0.0 <= v <= 1.0):
                    raise RateOutOfRange(f"{name}={v} for tract {tid}")
            elif name in _CENSUS_MONETARY and v < 0:
                raise RateOutOfRange(f"{name}={v} for tract {tid} (negative)")
            if name in _CENSUS_KNOWN:
                known[name] = v
            else:
                extra[name] = v
        out[tid] = CensusRecord(tract_id=tid, extra=extra, **known)
    return out
