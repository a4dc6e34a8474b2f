from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoineq.cohort import (
    Cohort,
    UserActivity,
    build_user_activity,
    classify_user,
    is_super_local,
    merge_user_activity,
)
from geoineq.errors import EmptyDatasetMonths
from geoineq.ingest import GeoEvent

UTC = timezone.utc
T0 = datetime(2014, 3, 1, 12, 0, 0, tzinfo=UTC)


def ev(user_id, ts):
    return GeoEvent(user_id, 40.7, -74.0, ts, "")


def activity(timestamps, user_id="u"):
    return build_user_activity([ev(user_id, t) for t in timestamps], "UTC")[user_id]


class TestClassify:
    def test_two_posts_20_days_apart_is_local(self):
        act = activity([T0, T0 + timedelta(days=20)])
        assert classify_user(act) == Cohort("local")

    def test_posts_within_single_window_is_visitor(self):
        act = activity([T0 + timedelta(days=d) for d in (3, 5, 9)])
        assert classify_user(act) == Cohort("visitor")

    def test_single_post_is_visitor(self):
        act = activity([T0])
        assert classify_user(act) == Cohort("visitor")

    def test_exactly_window_apart_is_visitor(self):
        act = activity([T0, T0 + timedelta(seconds=12 * 86400)])
        assert classify_user(act) == Cohort("visitor")

    def test_one_second_beyond_window_is_local(self):
        act = activity([T0, T0 + timedelta(seconds=12 * 86400 + 1)])
        assert classify_user(act) == Cohort("local")

    def test_window_configurable(self):
        act = activity([T0, T0 + timedelta(days=5)])
        assert classify_user(act, window_days=4) == Cohort("local")
        assert classify_user(act, window_days=12) == Cohort("visitor")

    def test_super_local_requires_local(self):
        with pytest.raises(ValueError):
            Cohort("visitor", super_local=True)


class TestActivity:
    def test_span_count_months(self):
        act = activity(
            [
                datetime(2014, 3, 1, tzinfo=UTC),
                datetime(2014, 3, 5, tzinfo=UTC),
                datetime(2014, 7, 2, tzinfo=UTC),
            ]
        )
        assert act.post_count == 3
        assert act.first_ts == datetime(2014, 3, 1, tzinfo=UTC)
        assert act.last_ts == datetime(2014, 7, 2, tzinfo=UTC)
        assert act.months_present == frozenset({(2014, 3), (2014, 7)})

    def test_single_post_degenerate_span(self):
        act = activity([T0])
        assert act.first_ts == act.last_ts
        assert act.post_count == 1

    def test_empty_input(self):
        assert build_user_activity([], "UTC") == {}

    def test_months_use_display_timezone(self):
        # 2014-04-01T01:00Z is still March 31 in New York
        act = build_user_activity(
            [ev("u", datetime(2014, 4, 1, 1, 0, tzinfo=UTC))], "America/New_York"
        )["u"]
        assert act.months_present == frozenset({(2014, 3)})

    def test_merge_is_commutative_and_matches_single_pass(self):
        events = [ev("u", T0 + timedelta(days=d, hours=d % 5)) for d in range(10)]
        whole = build_user_activity(events, "UTC")
        a = build_user_activity(events[:4], "UTC")
        b = build_user_activity(events[4:], "UTC")
        assert merge_user_activity(a, b) == whole
        assert merge_user_activity(b, a) == whole


class TestSuperLocal:
    MONTHS = [(2014, m) for m in range(3, 8)]

    def _act(self, months):
        return UserActivity("u", T0, T0 + timedelta(days=100), 5, frozenset(months))

    def test_all_months_present(self):
        assert is_super_local(self._act(self.MONTHS), self.MONTHS)

    def test_missing_month(self):
        present = [m for m in self.MONTHS if m != (2014, 6)]
        assert not is_super_local(self._act(present), self.MONTHS)

    def test_empty_dataset_months(self):
        with pytest.raises(EmptyDatasetMonths):
            is_super_local(self._act(self.MONTHS), [])

    def test_extra_months_fine(self):
        assert is_super_local(self._act(self.MONTHS + [(2014, 9)]), self.MONTHS)


@given(
    st.lists(st.integers(0, 40 * 86400), min_size=1, max_size=20),
    st.integers(0, 40 * 86400),
)
def test_adding_a_post_never_demotes_local(seconds, extra):
    base = [T0 + timedelta(seconds=s) for s in seconds]
    before = classify_user(activity(base))
    after = classify_user(activity(base + [T0 + timedelta(seconds=extra)]))
    if before.kind == "local":
        assert after.kind == "local"


@given(st.lists(st.integers(0, 60 * 86400), min_size=1, max_size=24), st.integers(1, 5))
def test_partitioned_activity_merge_equals_single_pass(seconds, k):
    events = [ev(f"u{i % 3}", T0 + timedelta(seconds=s)) for i, s in enumerate(seconds)]
    whole = build_user_activity(events, "UTC")
    merged: dict = {}
    size = max(1, len(events) // k)
    for i in range(0, len(events), size):
        merged = merge_user_activity(merged, build_user_activity(events[i : i + size], "UTC"))
    assert merged == whole
