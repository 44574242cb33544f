"""Scheduler tests: fatigue windows, slot search, caps, halt reminders.

The slot-search oracle enumerates candidate starts minute by minute and
takes the first one whose whole slot is clear, which is compared against
the analytic search on randomized calendars.
"""

import random
from datetime import datetime, time, timedelta, timezone

import pytest

from reviewkit.scheduling import (
    DEFAULT_FATIGUE_WINDOWS,
    ActivityTimer,
    Assignment,
    FatigueWindow,
    NegativeDelta,
    NoSchedulableCandidate,
    NotAssigned,
    ReviewerSchedule,
    assign_review,
    commit_assignment,
    decide_assignment,
    find_slot,
    heartbeat,
    in_fatigue_window,
    release_assignment,
)


def utc(year, month, day, hour=0, minute=0, second=0):
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)


def _to_local(moment, offset_minutes):
    return moment.replace(tzinfo=None) + timedelta(minutes=offset_minutes)


def _to_utc(local, offset_minutes):
    return (local - timedelta(minutes=offset_minutes)).replace(
        tzinfo=timezone.utc
    )


def oracle_find_slot(schedule, windows, now, slot_minutes, horizon_days):
    """First whole-minute start whose slot avoids windows and bookings."""
    length = timedelta(minutes=slot_minutes)
    local_now = _to_local(now, schedule.tz_offset_minutes)

    blocks = []
    day = local_now.date() - timedelta(days=1)
    last_day = (local_now + timedelta(days=horizon_days)).date() + timedelta(days=1)
    while day <= last_day:
        for window in windows:
            blocks.append(
                (datetime.combine(day, window.start),
                 datetime.combine(day, window.end))
            )
        day += timedelta(days=1)
    for busy_start, busy_end in schedule.calendar_slots:
        blocks.append(
            (_to_local(busy_start, schedule.tz_offset_minutes),
             _to_local(busy_end, schedule.tz_offset_minutes))
        )

    for minute in range(horizon_days * 24 * 60 + 1):
        start = local_now + timedelta(minutes=minute)
        end = start + length
        if any(bs < end and start < be for bs, be in blocks):
            continue
        return (
            _to_utc(start, schedule.tz_offset_minutes),
            _to_utc(end, schedule.tz_offset_minutes),
        )
    return None


class TestFatigueWindow:
    def test_half_open_contains(self):
        window = FatigueWindow("after lunch", time(12, 0), time(13, 30))
        assert window.contains(time(12, 0))
        assert window.contains(time(13, 29))
        assert not window.contains(time(13, 30))
        assert not window.contains(time(11, 59))

    def test_start_must_precede_end(self):
        with pytest.raises(ValueError):
            FatigueWindow("bad", time(14, 0), time(14, 0))
        with pytest.raises(ValueError):
            FatigueWindow("bad", time(15, 0), time(14, 0))

    def test_defaults(self):
        labels = [w.label for w in DEFAULT_FATIGUE_WINDOWS]
        assert labels == ["after lunch", "end of day"]
        assert DEFAULT_FATIGUE_WINDOWS[0].start == time(12, 0)
        assert DEFAULT_FATIGUE_WINDOWS[0].end == time(13, 30)
        assert DEFAULT_FATIGUE_WINDOWS[1].start == time(16, 30)
        assert DEFAULT_FATIGUE_WINDOWS[1].end == time(18, 0)

    def test_dict_round_trip(self):
        window = FatigueWindow("after lunch", time(12, 0), time(13, 30))
        assert FatigueWindow.from_dict(window.to_dict()) == window

    def test_in_fatigue_window_uses_local_clock(self):
        # 10:30 UTC is 12:30 local at +120 minutes.
        now = utc(2024, 3, 4, 10, 30)
        assert in_fatigue_window(now, 120, DEFAULT_FATIGUE_WINDOWS) is not None
        assert in_fatigue_window(now, 0, DEFAULT_FATIGUE_WINDOWS) is None


class TestImmediateAssignment:
    def test_outside_windows_with_capacity(self):
        schedules = {"r1": ReviewerSchedule("r1")}
        assignment = assign_review(
            "c1", [("r1", 2.0)], schedules, DEFAULT_FATIGUE_WINDOWS,
            utc(2024, 3, 4, 9, 0),
        )
        assert assignment.immediate
        assert assignment.reviewer_id == "r1"
        assert schedules["r1"].active_assignments == {"c1"}

    def test_rank_order_skips_full_reviewer(self):
        schedules = {
            "best": ReviewerSchedule("best", active_assignments={"a", "b", "c"}),
            "next": ReviewerSchedule("next"),
        }
        assignment = assign_review(
            "c1", [("best", 9.0), ("next", 1.0)], schedules,
            DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 9, 0),
        )
        assert assignment.immediate
        assert assignment.reviewer_id == "next"

    def test_window_end_boundary_is_outside(self):
        # Half-open window: exactly 13:30 local is schedulable.
        schedules = {"r1": ReviewerSchedule("r1")}
        assignment = assign_review(
            "c1", [("r1", 1.0)], schedules, DEFAULT_FATIGUE_WINDOWS,
            utc(2024, 3, 4, 13, 30),
        )
        assert assignment.immediate

    def test_end_of_day_window_blocks(self):
        schedules = {"r1": ReviewerSchedule("r1")}
        assignment = assign_review(
            "c1", [("r1", 1.0)], schedules, DEFAULT_FATIGUE_WINDOWS,
            utc(2024, 3, 4, 17, 0),
        )
        assert not assignment.immediate


class TestDeferredAssignment:
    def test_lunch_window_defers_to_window_end(self):
        # Sole candidate's local clock reads 12:30, inside the default
        # 12:00-13:30 window, so the review books at 13:30 local.
        schedules = {"r1": ReviewerSchedule("r1")}
        now = utc(2024, 3, 4, 12, 30)
        assignment = assign_review(
            "c1", [("r1", 1.0)], schedules, DEFAULT_FATIGUE_WINDOWS, now,
        )
        assert not assignment.immediate
        start, end = assignment.scheduled_slot
        assert start == utc(2024, 3, 4, 13, 30)
        assert end == utc(2024, 3, 4, 14, 30)
        # Booking lands on the calendar, not on active capacity.
        assert schedules["r1"].active_assignments == set()
        assert schedules["r1"].calendar_slots == [(start, end)]

    def test_matches_minute_enumeration_for_lunch_example(self):
        schedule = ReviewerSchedule("r1")
        now = utc(2024, 3, 4, 12, 30)
        got = find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, now)
        want = oracle_find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, now, 60, 7)
        assert got == want
        assert got[0] == utc(2024, 3, 4, 13, 30)

    def test_lunch_example_with_timezone_offset(self):
        # 10:30 UTC at +120 minutes is 12:30 local; the 13:30 local slot
        # is 11:30 UTC.
        schedule = ReviewerSchedule("r1", tz_offset_minutes=120)
        got = find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 10, 30))
        assert got[0] == utc(2024, 3, 4, 11, 30)

    def test_busy_calendar_pushes_slot_later(self):
        schedule = ReviewerSchedule(
            "r1",
            calendar_slots=[(utc(2024, 3, 4, 13, 30), utc(2024, 3, 4, 14, 0))],
        )
        got = find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 12, 30))
        assert got == (utc(2024, 3, 4, 14, 0), utc(2024, 3, 4, 15, 0))

    def test_whole_slot_must_clear_window(self):
        # 11:30 is outside the lunch window, but a one-hour slot starting
        # there would run into it, so the search jumps to 13:30.
        schedule = ReviewerSchedule(
            "r1", active_assignments={"a", "b", "c"}
        )
        got = find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 11, 30))
        assert got[0] == utc(2024, 3, 4, 13, 30)

    def test_full_reviewer_gets_deferred_slot(self):
        schedules = {"r1": ReviewerSchedule("r1", active_assignments={"a", "b", "c"})}
        assignment = assign_review(
            "c9", [("r1", 1.0)], schedules, DEFAULT_FATIGUE_WINDOWS,
            utc(2024, 3, 4, 9, 0),
        )
        assert not assignment.immediate
        assert len(schedules["r1"].active_assignments) == 3

    def test_deferral_prefers_rank_over_earlier_slot(self):
        # "best" is saturated, "next" sits inside the lunch window. Both
        # end up in the deferred pass; rank wins even though "next" would
        # have the same slot available.
        schedules = {
            "best": ReviewerSchedule("best", active_assignments={"a", "b", "c"}),
            "next": ReviewerSchedule("next", active_assignments={"x", "y", "z"}),
        }
        assignment = assign_review(
            "c1", [("best", 9.0), ("next", 1.0)], schedules,
            DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 12, 30),
        )
        assert assignment.reviewer_id == "best"
        assert not assignment.immediate

    def test_packed_calendar_yields_no_candidate(self):
        # Saturated on active work and fully booked for weeks: neither
        # the immediate pass nor the deferred pass can place the review.
        schedule = ReviewerSchedule(
            "r1",
            active_assignments={"a", "b", "c"},
            calendar_slots=[(utc(2024, 3, 1), utc(2024, 3, 20))],
        )
        assert (
            find_slot(schedule, DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 9, 0))
            is None
        )
        with pytest.raises(NoSchedulableCandidate):
            assign_review(
                "c1", [("r1", 1.0)], {"r1": schedule},
                DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 9, 0),
            )

    def test_no_candidates_at_all(self):
        with pytest.raises(NoSchedulableCandidate):
            assign_review(
                "c1", [], {}, DEFAULT_FATIGUE_WINDOWS, utc(2024, 3, 4, 9, 0)
            )

    def test_decide_does_not_mutate(self):
        schedules = {"r1": ReviewerSchedule("r1")}
        decision = decide_assignment(
            "c1", [("r1", 1.0)], schedules, DEFAULT_FATIGUE_WINDOWS,
            utc(2024, 3, 4, 9, 0),
        )
        assert schedules["r1"].active_assignments == set()
        commit_assignment(schedules["r1"], decision)
        assert schedules["r1"].active_assignments == {"c1"}


class TestRandomizedSlotOracle:
    def test_analytic_search_matches_minute_enumeration(self):
        rng = random.Random(2024)
        for case in range(60):
            offset = rng.choice([-720, -480, -330, -120, 0, 60, 120, 330, 720])
            busy = []
            base = utc(2024, 5, 6, 0, 0)
            for _ in range(rng.randrange(0, 5)):
                start_min = rng.randrange(0, 3 * 24 * 60)
                dur = rng.choice([15, 30, 60, 120, 180])
                busy.append(
                    (base + timedelta(minutes=start_min),
                     base + timedelta(minutes=start_min + dur))
                )
            schedule = ReviewerSchedule(
                "r", calendar_slots=sorted(busy), tz_offset_minutes=offset
            )
            now = base + timedelta(minutes=rng.randrange(0, 24 * 60))
            slot_minutes = rng.choice([30, 60, 90])
            got = find_slot(
                schedule, DEFAULT_FATIGUE_WINDOWS, now, slot_minutes, 3
            )
            want = oracle_find_slot(
                schedule, DEFAULT_FATIGUE_WINDOWS, now, slot_minutes, 3
            )
            assert got == want, f"case {case}: {got} != {want}"


class TestCapSafety:
    def test_release_unknown_raises(self):
        schedule = ReviewerSchedule("r1")
        with pytest.raises(NotAssigned):
            release_assignment(schedule, "nope")

    def test_release_frees_capacity(self):
        schedule = ReviewerSchedule("r1", active_assignments={"a", "b", "c"})
        release_assignment(schedule, "b")
        assert schedule.has_capacity()

    def test_random_assign_release_never_exceeds_cap(self):
        rng = random.Random(77)
        reviewers = [f"r{i}" for i in range(4)]
        schedules = {r: ReviewerSchedule(r) for r in reviewers}
        ranked = [(r, float(len(reviewers) - i)) for i, r in enumerate(reviewers)]
        now = utc(2024, 6, 1, 8, 0)
        counter = 0
        for _ in range(500):
            now += timedelta(minutes=rng.randrange(1, 90))
            if rng.random() < 0.6:
                counter += 1
                try:
                    assignment = assign_review(
                        f"c{counter}", ranked, schedules,
                        DEFAULT_FATIGUE_WINDOWS, now,
                    )
                except NoSchedulableCandidate:
                    pass
                else:
                    chosen = schedules[assignment.reviewer_id]
                    if assignment.immediate:
                        assert (
                            in_fatigue_window(
                                now, chosen.tz_offset_minutes,
                                DEFAULT_FATIGUE_WINDOWS,
                            )
                            is None
                        )
                    else:
                        start, end = assignment.scheduled_slot
                        assert now <= start < end
            else:
                target = schedules[rng.choice(reviewers)]
                if target.active_assignments:
                    victim = sorted(target.active_assignments)[0]
                    release_assignment(target, victim)
            for schedule in schedules.values():
                assert len(schedule.active_assignments) <= schedule.max_concurrent


class TestHeartbeat:
    def test_threshold_crossing_emits_one_reminder(self):
        timer = ActivityTimer("s1")
        timer, reminders = heartbeat(
            timer, utc(2024, 3, 4, 10, 0), timedelta(minutes=59)
        )
        assert reminders == []
        timer, reminders = heartbeat(
            timer, utc(2024, 3, 4, 10, 1), timedelta(minutes=1)
        )
        assert len(reminders) == 1
        assert reminders[0].ordinal == 1
        assert "60 minutes" in reminders[0].message

    def test_exact_threshold_counts(self):
        timer = ActivityTimer("s1")
        timer, reminders = heartbeat(
            timer, utc(2024, 3, 4, 11, 0), timedelta(minutes=60)
        )
        assert [r.ordinal for r in reminders] == [1]

    def test_large_delta_emits_each_crossing(self):
        timer = ActivityTimer("s1")
        timer, reminders = heartbeat(
            timer, utc(2024, 3, 4, 12, 0), timedelta(minutes=185)
        )
        assert [r.ordinal for r in reminders] == [1, 2, 3]

    def test_negative_delta_rejected(self):
        timer = ActivityTimer("s1")
        with pytest.raises(NegativeDelta):
            heartbeat(timer, utc(2024, 3, 4, 10, 0), timedelta(minutes=-1))

    def test_replay_is_idempotent(self):
        timer = ActivityTimer("s1")
        moment = utc(2024, 3, 4, 10, 0)
        timer, _ = heartbeat(timer, moment, timedelta(minutes=30))
        before = timer.accumulated
        timer, reminders = heartbeat(timer, moment, timedelta(minutes=30))
        assert timer.accumulated == before
        assert reminders == []
        # A strictly earlier heartbeat is also ignored.
        timer, reminders = heartbeat(
            timer, moment - timedelta(minutes=5), timedelta(minutes=30)
        )
        assert timer.accumulated == before
        assert reminders == []

    def test_reminder_floor_identity_over_random_sequences(self):
        rng = random.Random(424242)
        for _ in range(100):
            timer = ActivityTimer("s")
            now = utc(2024, 1, 1, 0, 0)
            total = timedelta(0)
            emitted = 0
            for _ in range(rng.randrange(1, 40)):
                delta = timedelta(minutes=rng.randrange(0, 75))
                now += timedelta(minutes=rng.randrange(1, 30))
                total += delta
                timer, reminders = heartbeat(timer, now, delta)
                emitted += len(reminders)
                assert emitted == int(total // timer.threshold)
                assert timer.reminders_sent == emitted

    def test_dict_round_trip(self):
        timer = ActivityTimer(
            "s1",
            accumulated=timedelta(minutes=42),
            reminders_sent=0,
            last_heartbeat=utc(2024, 3, 4, 10, 0),
        )
        clone = ActivityTimer.from_dict(timer.to_dict())
        assert clone == timer


class TestSerialization:
    def test_schedule_round_trip(self):
        schedule = ReviewerSchedule(
            "r1",
            active_assignments={"c2", "c1"},
            calendar_slots=[(utc(2024, 3, 4, 13, 30), utc(2024, 3, 4, 14, 30))],
            tz_offset_minutes=-300,
        )
        clone = ReviewerSchedule.from_dict(schedule.to_dict())
        assert clone == schedule

    def test_assignment_round_trip(self):
        deferred = Assignment(
            "c1", "r1",
            (utc(2024, 3, 4, 13, 30), utc(2024, 3, 4, 14, 30)),
            utc(2024, 3, 4, 12, 30),
        )
        immediate = Assignment("c2", "r2", None, utc(2024, 3, 4, 9, 0))
        assert Assignment.from_dict(deferred.to_dict()) == deferred
        assert Assignment.from_dict(immediate.to_dict()) == immediate
