"""Per-tract, per-cohort aggregation with an associative merge.

Aggregation is a fold: any partitioning of the event stream, aggregated
separately and merged, must equal the single-pass result. All counts are
integers and unique-tag sets are exact, so merge order cannot matter.

Cohort bucket keys are "all", "visitor", "local", and "super_local";
events by super-local users count in both "local" and "super_local".
Temporal bins use one configured display timezone: day-of-week is
Sunday-first, "day" is the local interval 07:00:00..18:59:59 inclusive
(whole seconds), everything else is "night".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, time
from typing import Iterable, Mapping, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .cohort import Cohort
from .errors import DegenerateArea, EmptyCohort, MissingArea, TractIdMismatch
from .ingest import TAG_PATTERN, GeoEvent, extract_hashtags
from .timebins import LocalClock, month_tuple

DAY_START_SECOND = 7 * 3600  # 07:00:00 local, inclusive
DAY_END_SECOND = 19 * 3600  # 19:00:00 local, exclusive

BUCKET_ALL = "all"
BUCKET_KEYS = ("all", "visitor", "local", "super_local")

# bitmask per user for the batch path; "all" is implicit
_MASK_VISITOR = 1
_MASK_LOCAL = 2
_MASK_SUPER = 4


@dataclass
class CohortTractStats:
    event_count: int = 0
    tag_count: int = 0
    unique_tags: set[str] = field(default_factory=set)
    hour_histogram: list[int] = field(default_factory=lambda: [0] * 24)
    dow_histogram: list[int] = field(default_factory=lambda: [0] * 7)  # Sunday-first
    month_histogram: dict[tuple[int, int], int] = field(default_factory=dict)
    day_count: int = 0
    night_count: int = 0


@dataclass
class TractAggregate:
    tract_id: str
    cohorts: dict[str, CohortTractStats] = field(default_factory=dict)

    def stats(self, key: str) -> CohortTractStats:
        st = self.cohorts.get(key)
        if st is None:
            st = self.cohorts[key] = CohortTractStats()
        return st


@dataclass(frozen=True)
class TagSummary:
    image_count: int
    tag_total: int
    images_with_tags: int
    images_gt5_tags: int  # strictly more than 5 tags, i.e. >= 6
    images_gt10_tags: int  # strictly more than 10 tags, i.e. >= 11
    mean_tags_per_image: float
    mean_tags_per_tagged_image: float | None  # None when nothing is tagged

    @property
    def proportion_with_tags(self) -> float:
        return self.images_with_tags / self.image_count

    @property
    def proportion_gt5(self) -> float:
        return self.images_gt5_tags / self.image_count

    @property
    def proportion_gt10(self) -> float:
        return self.images_gt10_tags / self.image_count


def cohort_buckets(cohort: Cohort) -> tuple[str, ...]:
    if cohort.kind == "visitor":
        return ("all", "visitor")
    if cohort.super_local:
        return ("all", "local", "super_local")
    return ("all", "local")


def cohort_mask(cohort: Cohort) -> int:
    if cohort.kind == "visitor":
        return _MASK_VISITOR
    if cohort.super_local:
        return _MASK_LOCAL | _MASK_SUPER
    return _MASK_LOCAL


def day_night_split(t: datetime | time) -> str:
    """'day' for local wall-clock 07:00:00 through 18:59:59, else 'night'.

    Comparison is on whole seconds (sub-second parts truncate).
    """
    tt = t.time() if isinstance(t, datetime) else t
    sod = tt.hour * 3600 + tt.minute * 60 + tt.second
    return "day" if DAY_START_SECOND <= sod < DAY_END_SECOND else "night"


def aggregate_by_tract(
    assigned: Iterable[tuple[GeoEvent, str, Cohort]], tz: str | ZoneInfo
) -> dict[str, TractAggregate]:
    """Reduce (event, tract_id, cohort) triples into per-tract aggregates.

    Reference single-pass implementation; the pipeline's array path in
    :func:`aggregate_batch` must produce identical results.
    """
    tzinfo = ZoneInfo(tz) if isinstance(tz, str) else tz
    out: dict[str, TractAggregate] = {}
    for ev, tract_id, cohort in assigned:
        loc = ev.timestamp.astimezone(tzinfo)
        hour = loc.hour
        dow = (loc.weekday() + 1) % 7  # Sunday-first
        month = (loc.year, loc.month)
        is_day = day_night_split(loc) == "day"
        tags = extract_hashtags(ev.text)
        agg = out.get(tract_id)
        if agg is None:
            agg = out[tract_id] = TractAggregate(tract_id)
        for key in cohort_buckets(cohort):
            st = agg.stats(key)
            st.event_count += 1
            st.hour_histogram[hour] += 1
            st.dow_histogram[dow] += 1
            st.month_histogram[month] = st.month_histogram.get(month, 0) + 1
            if is_day:
                st.day_count += 1
            else:
                st.night_count += 1
            if tags:
                st.tag_count += len(tags)
                st.unique_tags.update(tags)
    return out


def merge_aggregates(a: TractAggregate, b: TractAggregate) -> TractAggregate:
    """Componentwise sum of counts/histograms, union of unique tags."""
    if a.tract_id != b.tract_id:
        raise TractIdMismatch(f"{a.tract_id!r} vs {b.tract_id!r}")
    out = TractAggregate(a.tract_id)
    for key in sorted(set(a.cohorts) | set(b.cohorts)):
        sa = a.cohorts.get(key)
        sb = b.cohorts.get(key)
        if sa is None or sb is None:
            src = sa if sa is not None else sb
            out.cohorts[key] = CohortTractStats(
                src.event_count,
                src.tag_count,
                set(src.unique_tags),
                list(src.hour_histogram),
                list(src.dow_histogram),
                dict(src.month_histogram),
                src.day_count,
                src.night_count,
            )
            continue
        months = dict(sa.month_histogram)
        for m, c in sb.month_histogram.items():
            months[m] = months.get(m, 0) + c
        out.cohorts[key] = CohortTractStats(
            sa.event_count + sb.event_count,
            sa.tag_count + sb.tag_count,
            sa.unique_tags | sb.unique_tags,
            [x + y for x, y in zip(sa.hour_histogram, sb.hour_histogram)],
            [x + y for x, y in zip(sa.dow_histogram, sb.dow_histogram)],
            months,
            sa.day_count + sb.day_count,
            sa.night_count + sb.night_count,
        )
    return out


def merge_aggregate_maps(
    a: dict[str, TractAggregate], b: dict[str, TractAggregate]
) -> dict[str, TractAggregate]:
    out = dict(a)
    for tid, agg in b.items():
        cur = out.get(tid)
        out[tid] = agg if cur is None else merge_aggregates(cur, agg)
    return out


def normalize_density(
    counts: Mapping[str, float], areas: Mapping[str, float]
) -> dict[str, float]:
    """count / area_km2 per tract; zero-count tracts stay in with 0.0.

    Empty tracts must remain visible to the inequality indexes, so they
    are never dropped here.
    """
    out: dict[str, float] = {}
    for tid, count in counts.items():
        area = areas.get(tid)
        if area is None:
            raise MissingArea(tid)
        if area <= 0:
            raise DegenerateArea(f"tract {tid}: area {area}")
        out[tid] = count / area
    return out


def tag_summary_from_counts(counts: Sequence[int]) -> TagSummary:
    n = len(counts)
    if n == 0:
        raise EmptyCohort("tag summary over zero events")
    total = int(sum(counts))
    with_tags = sum(1 for c in counts if c > 0)
    gt5 = sum(1 for c in counts if c >= 6)
    gt10 = sum(1 for c in counts if c >= 11)
    return tag_summary_from_components(n, total, with_tags, gt5, gt10)


def tag_summary_from_components(
    n: int, total: int, with_tags: int, gt5: int, gt10: int
) -> TagSummary:
    """Assemble a TagSummary from pre-summed components (image count,
    tag total, tagged/gt5/gt10 image counts); partition-merge friendly."""
    return TagSummary(
        image_count=n,
        tag_total=total,
        images_with_tags=with_tags,
        images_gt5_tags=gt5,
        images_gt10_tags=gt10,
        mean_tags_per_image=total / n,
        mean_tags_per_tagged_image=(total / with_tags) if with_tags else None,
    )


def tag_summary(events: Iterable[GeoEvent]) -> TagSummary:
    """Hashtag usage statistics over the events of one cohort."""
    return tag_summary_from_counts([len(extract_hashtags(ev.text)) for ev in events])


# --- batch (array) path -----------------------------------------------------


@dataclass
class BatchAggregation:
    """Output of the array path: aggregates plus the summable pieces the
    report needs (tag-summary components and per-bucket event totals)."""

    aggregates: dict[str, TractAggregate]
    tag_components: dict[str, tuple[int, int, int, int, int]]
    event_totals: dict[str, int]


def merge_tag_components(a: dict, b: dict) -> dict:
    out = dict(a)
    for key, comp in b.items():
        cur = out.get(key)
        out[key] = comp if cur is None else tuple(x + y for x, y in zip(cur, comp))
    return out


def aggregate_batch(
    tract_ids: Sequence[str],
    tract_idx: np.ndarray,
    epochs: np.ndarray,
    texts: Sequence[str],
    masks: np.ndarray,
    clock: LocalClock,
) -> BatchAggregation:
    """Vectorized equivalent of :func:`aggregate_by_tract`.

    ``tract_idx`` indexes into ``tract_ids`` (every event already
    assigned), ``masks`` carries the per-event cohort bitmask from
    :func:`cohort_mask`.
    """
    n = len(tract_idx)
    n_tracts = len(tract_ids)
    out: dict[str, TractAggregate] = {}
    tag_components: dict[str, tuple[int, int, int, int, int]] = {}
    event_totals: dict[str, int] = {}
    if n == 0:
        return BatchAggregation(out, tag_components, event_totals)

    sod, dow, month_num = clock.local_fields(epochs)
    hour = sod // 3600
    is_day = ((sod >= DAY_START_SECOND) & (sod < DAY_END_SECOND)).astype(np.int64)
    uniq_months, month_code = np.unique(month_num, return_inverse=True)
    n_months = len(uniq_months)
    month_keys = [month_tuple(m) for m in uniq_months]

    # per-event tag counts; tag_count/unique_tags accumulate per bucket below
    tag_counts = np.zeros(n, dtype=np.int64)
    tagged: list[tuple[int, list[str]]] = []
    findall = TAG_PATTERN.findall
    for i, text in enumerate(texts):
        if "#" in text:
            raw = findall(text)
            if raw:
                tag_counts[i] = len(raw)
                tagged.append((i, [t.casefold() for t in raw]))

    bucket_sel = {
        "all": None,
        "visitor": _MASK_VISITOR,
        "local": _MASK_LOCAL,
        "super_local": _MASK_SUPER,
    }
    for key in BUCKET_KEYS:
        bit = bucket_sel[key]
        if bit is None:
            idx = tract_idx
            sel = slice(None)
        else:
            sel = (masks & bit) != 0
            idx = tract_idx[sel]
        if idx.size == 0:
            continue
        ev_count = np.bincount(idx, minlength=n_tracts)
        hour_h = np.bincount(idx * 24 + hour[sel], minlength=n_tracts * 24)
        dow_h = np.bincount(idx * 7 + dow[sel], minlength=n_tracts * 7)
        dn = np.bincount(idx * 2 + is_day[sel], minlength=n_tracts * 2)
        mon_h = np.bincount(idx * n_months + month_code[sel], minlength=n_tracts * n_months)
        for ti in np.nonzero(ev_count)[0]:
            agg = out.get(tract_ids[ti])
            if agg is None:
                agg = out[tract_ids[ti]] = TractAggregate(tract_ids[ti])
            st = agg.stats(key)
            st.event_count = int(ev_count[ti])
            st.hour_histogram = [int(v) for v in hour_h[ti * 24 : (ti + 1) * 24]]
            st.dow_histogram = [int(v) for v in dow_h[ti * 7 : (ti + 1) * 7]]
            st.night_count = int(dn[ti * 2])
            st.day_count = int(dn[ti * 2 + 1])
            st.month_histogram = {
                month_keys[m]: int(c)
                for m, c in enumerate(mon_h[ti * n_months : (ti + 1) * n_months])
                if c
            }
        tc = tag_counts[sel]
        event_totals[key] = int(idx.size)
        tag_components[key] = (
            int(idx.size),
            int(tc.sum()),
            int((tc > 0).sum()),
            int((tc >= 6).sum()),
            int((tc >= 11).sum()),
        )

    keys_by_mask = {
        _MASK_VISITOR: ("all", "visitor"),
        _MASK_LOCAL: ("all", "local"),
        _MASK_LOCAL | _MASK_SUPER: ("all", "local", "super_local"),
    }
    tidx_list = tract_idx.tolist()
    mask_list = np.asarray(masks).tolist()
    for i, tags in tagged:
        agg = out[tract_ids[tidx_list[i]]]
        n_tags = len(tags)
        for key in keys_by_mask[mask_list[i]]:
            st = agg.cohorts[key]
            st.tag_count += n_tags
            st.unique_tags.update(tags)
    return BatchAggregation(out, tag_components, event_totals)
