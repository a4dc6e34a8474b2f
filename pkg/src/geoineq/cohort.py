"""Visitor/local cohort classification from per-user posting spans.

A user is a local when they posted at least twice and their first and
last posts are strictly more than ``window_days`` (in seconds) apart;
everyone else is a visitor, including single-post users, whose posts
trivially fit inside any window. Super-locals are locals who posted in
every calendar month of the collection span.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence
from zoneinfo import ZoneInfo

from .errors import EmptyDatasetMonths
from .ingest import GeoEvent

VISITOR = "visitor"
LOCAL = "local"

DEFAULT_WINDOW_DAYS = 12


@dataclass(frozen=True)
class Cohort:
    kind: str  # "visitor" | "local"
    super_local: bool = False

    def __post_init__(self):
        if self.kind not in (VISITOR, LOCAL):
            raise ValueError(f"unknown cohort kind {self.kind!r}")
        if self.super_local and self.kind != LOCAL:
            raise ValueError("super_local implies local")


@dataclass(frozen=True)
class UserActivity:
    user_id: str
    first_ts: datetime
    last_ts: datetime
    post_count: int
    months_present: frozenset[tuple[int, int]]  # (year, month) in display tz


def spans_more_than_window(post_count: int, span_seconds: float, window_days: int) -> bool:
    """The local rule: >= 2 posts strictly more than window_days apart.

    The span is measured in seconds, not calendar days, and the
    comparison is strict so that visitor/local is an exact partition:
    exactly window_days apart is still a visitor.
    """
    return post_count >= 2 and span_seconds > window_days * 86400.0


def build_user_activity(
    events: Iterable[GeoEvent], tz: str | ZoneInfo
) -> dict[str, UserActivity]:
    """Per-user first/last instants, post counts, and months touched.

    Events are expected to be tract-filtered already; month membership
    uses the display timezone, like every other temporal binning.
    """
    tzinfo = ZoneInfo(tz) if isinstance(tz, str) else tz
    acc: dict[str, list] = {}
    for ev in events:
        epoch = ev.timestamp.timestamp()
        loc = ev.timestamp.astimezone(tzinfo)
        month = (loc.year, loc.month)
        slot = acc.get(ev.user_id)
        if slot is None:
            acc[ev.user_id] = [epoch, epoch, 1, {month}]
        else:
            if epoch < slot[0]:
                slot[0] = epoch
            if epoch > slot[1]:
                slot[1] = epoch
            slot[2] += 1
            slot[3].add(month)
    return {
        uid: UserActivity(
            uid,
            datetime.fromtimestamp(first, timezone.utc),
            datetime.fromtimestamp(last, timezone.utc),
            count,
            frozenset(months),
        )
        for uid, (first, last, count, months) in acc.items()
    }


def merge_user_activity(
    a: Mapping[str, UserActivity], b: Mapping[str, UserActivity]
) -> dict[str, UserActivity]:
    """Merge per-partition activity maps.

    (min first, max last, summed counts, union of months) is associative
    and commutative, so any partitioning of the event stream merges to
    the same result.
    """
    out = dict(a)
    for uid, act in b.items():
        cur = out.get(uid)
        if cur is None:
            out[uid] = act
        else:
            out[uid] = UserActivity(
                uid,
                min(cur.first_ts, act.first_ts),
                max(cur.last_ts, act.last_ts),
                cur.post_count + act.post_count,
                cur.months_present | act.months_present,
            )
    return out


def classify_user(activity: UserActivity, window_days: int = DEFAULT_WINDOW_DAYS) -> Cohort:
    if window_days < 1:
        raise ValueError("window_days must be >= 1")
    span = (activity.last_ts - activity.first_ts).total_seconds()
    if spans_more_than_window(activity.post_count, span, window_days):
        return Cohort(LOCAL)
    return Cohort(VISITOR)


def is_super_local(
    activity: UserActivity, dataset_months: Sequence[tuple[int, int]]
) -> bool:
    """True when the user posted in every month of the collection span."""
    if not dataset_months:
        raise EmptyDatasetMonths("dataset_months must not be empty")
    return set(dataset_months) <= activity.months_present
