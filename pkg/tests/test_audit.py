import datetime as dt
import json

import pytest
from hypothesis import given, settings, strategies as st

from wikigate.audit import (
    ACTOR_SYSTEM,
    AuditEvent,
    AuthorStats,
    E_CONTRIB_ACCEPTED,
    E_CONTRIB_REJECTED,
    E_CONTRIB_REVERTED,
    E_CONTRIB_SUBMITTED,
    E_PAGE_CREATED,
    E_REVISION_COMMITTED,
    E_REVISION_REVERTED,
    EventLog,
    EVENT_KINDS,
    load_snapshot,
    LOG_NAME,
    read_events,
    stats,
    write_snapshot,
)
from wikigate.errors import IntegrityError, StateError, ValidationError


def iso(step: int) -> str:
    base = dt.datetime(2024, 1, 1, tzinfo=dt.timezone.utc)
    return (base + dt.timedelta(minutes=step)).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class TestEventShape:
    def test_twelve_kinds(self):
        assert len(EVENT_KINDS) == 12

    def test_line_round_trip(self):
        event = AuditEvent(seq=1, at=iso(0), kind=E_PAGE_CREATED, actor="a1", payload={"title": "T"})
        line = event.to_line()
        assert line.endswith(b"\n")
        assert AuditEvent.from_dict(json.loads(line.decode("utf-8"))) == event

    def test_missing_field_rejected(self):
        with pytest.raises(ValidationError):
            AuditEvent.from_dict({"seq": 1, "at": iso(0), "kind": E_PAGE_CREATED, "actor": "a"})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            AuditEvent.from_dict(
                {"seq": 1, "at": iso(0), "kind": "page-burned", "actor": "a", "payload": {}}
            )

    def test_non_object_payload_rejected(self):
        with pytest.raises(ValidationError):
            AuditEvent.from_dict(
                {"seq": 1, "at": iso(0), "kind": E_PAGE_CREATED, "actor": "a", "payload": [1]}
            )


class TestEventLog:
    def test_append_assigns_dense_seq_and_shared_timestamp(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            events = log.append_batch(
                [
                    (E_PAGE_CREATED, "a1", {"title": "T"}),
                    (E_REVISION_COMMITTED, "a1", {"page": "T"}),
                ],
                iso(0),
            )
        assert [e.seq for e in events] == [1, 2]
        assert {e.at for e in events} == {iso(0)}

    def test_batch_lands_as_whole_lines(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T"})], iso(0))
            log.append_batch(
                [
                    (E_CONTRIB_SUBMITTED, "a1", {"contribution_id": "c", "author_id": "a1", "page": "T"}),
                    (E_CONTRIB_REJECTED, ACTOR_SYSTEM, {"contribution_id": "c"}),
                ],
                iso(1),
            )
        lines = (tmp_path / LOG_NAME).read_bytes().splitlines()
        assert len(lines) == 3
        assert [json.loads(l)["seq"] for l in lines] == [1, 2, 3]

    def test_seq_continues_across_reopen(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T"})], iso(0))
        with EventLog(tmp_path, fsync=False) as log:
            events = log.append_batch([(E_REVISION_COMMITTED, "a1", {"page": "T"})], iso(1))
        assert events[0].seq == 2
        assert [e.seq for e in read_events(tmp_path)] == [1, 2]

    def test_take_initial_events(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T"})], iso(0))
        with EventLog(tmp_path, fsync=False) as log:
            initial = log.take_initial_events()
            assert [e.kind for e in initial] == [E_PAGE_CREATED]
            assert log.take_initial_events() == []

    def test_empty_batch_is_a_no_op(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            assert log.append_batch([], iso(0)) == []
        assert read_events(tmp_path) == []

    def test_second_writer_is_locked_out(self, tmp_path):
        with EventLog(tmp_path, fsync=False):
            with pytest.raises(StateError):
                EventLog(tmp_path, fsync=False)
        # Released on close: a new writer may take over.
        EventLog(tmp_path, fsync=False).close()

    def test_clock_regression_rejected(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T"})], iso(5))
            with pytest.raises(IntegrityError):
                log.append_batch([(E_REVISION_COMMITTED, "a1", {"page": "T"})], iso(4))

    def test_equal_timestamps_allowed(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T"})], iso(0))
            log.append_batch([(E_REVISION_COMMITTED, "a1", {"page": "T"})], iso(0))
        assert len(read_events(tmp_path)) == 2

    def test_unknown_kind_rejected_before_write(self, tmp_path):
        with EventLog(tmp_path, fsync=False) as log:
            with pytest.raises(ValidationError):
                log.append_batch([("page-burned", "a1", {})], iso(0))
        assert read_events(tmp_path) == []


class TestTailRepair:
    def seed(self, tmp_path, n=2):
        with EventLog(tmp_path, fsync=False) as log:
            for i in range(n):
                log.append_batch([(E_PAGE_CREATED, "a1", {"title": f"T{i}"})], iso(i))
        return tmp_path / LOG_NAME

    def test_unterminated_tail_discarded_with_warning(self, tmp_path):
        path = self.seed(tmp_path)
        good = path.read_bytes()
        path.write_bytes(good + b'{"seq": 3, "at": "2024')
        with pytest.warns(UserWarning, match="defective final"):
            events = read_events(tmp_path)
        assert len(events) == 2

    def test_reopen_truncates_the_torn_tail(self, tmp_path):
        path = self.seed(tmp_path)
        good = path.read_bytes()
        path.write_bytes(good + b'{"seq": 3,')
        with pytest.warns(UserWarning):
            with EventLog(tmp_path, fsync=False) as log:
                assert log.last_seq == 2
                log.append_batch([(E_PAGE_CREATED, "a1", {"title": "T9"})], iso(9))
        assert path.read_bytes().startswith(good)
        assert [e.seq for e in read_events(tmp_path)] == [1, 2, 3]

    def test_terminated_garbage_final_line_also_discarded(self, tmp_path):
        path = self.seed(tmp_path)
        path.write_bytes(path.read_bytes() + b"garbage\n")
        with pytest.warns(UserWarning, match="defective final"):
            assert len(read_events(tmp_path)) == 2

    def test_corruption_before_the_end_is_fatal(self, tmp_path):
        path = self.seed(tmp_path)
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(lines[0] + b"garbage\n" + lines[1])
        with pytest.raises(IntegrityError):
            read_events(tmp_path)
        with pytest.raises(IntegrityError):
            EventLog(tmp_path, fsync=False)

    def test_seq_gap_is_fatal(self, tmp_path):
        path = self.seed(tmp_path, n=3)
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(lines[0] + lines[2] + lines[1])  # 1, 3, 2
        with pytest.raises(IntegrityError):
            read_events(tmp_path)

    def test_timestamp_regression_is_fatal(self, tmp_path):
        path = self.seed(tmp_path)
        lines = path.read_bytes().splitlines(keepends=True)
        doctored = json.loads(lines[1])
        doctored["at"] = iso(-5)
        extra = AuditEvent(seq=3, at=iso(3), kind=E_PAGE_CREATED, actor="a1", payload={}).to_line()
        path.write_bytes(lines[0] + json.dumps(doctored).encode() + b"\n" + extra)
        with pytest.raises(IntegrityError):
            read_events(tmp_path)

    def test_missing_log_reads_empty(self, tmp_path):
        assert read_events(tmp_path / "fresh") == []


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        write_snapshot(tmp_path, 7, {"pages": {}})
        assert load_snapshot(tmp_path) == (7, {"pages": {}})

    def test_missing_snapshot(self, tmp_path):
        assert load_snapshot(tmp_path) is None

    def test_unreadable_snapshot_ignored_with_warning(self, tmp_path):
        (tmp_path / "snapshot.json").write_text("{broken", encoding="utf-8")
        with pytest.warns(UserWarning, match="unreadable snapshot"):
            assert load_snapshot(tmp_path) is None

    def test_no_tmp_file_left_behind(self, tmp_path):
        write_snapshot(tmp_path, 1, {})
        assert [p.name for p in tmp_path.iterdir()] == ["snapshot.json"]


# -- stats ------------------------------------------------------------------

AUTHORS = ("a1", "a2", "a3")
PAGES = ("P1", "P2")

# (author_idx, page_idx, fate, human_decider)
fate = st.sampled_from(["pending", "accepted", "rejected", "reverted"])
case = st.tuples(st.integers(0, 2), st.integers(0, 1), fate, st.booleans())


def build_events(cases):
    """Expand abstract cases into a well-formed event sequence."""
    events = []
    step = 0

    def emit(kind, actor, payload):
        nonlocal step
        step += 1
        events.append(
            AuditEvent(seq=len(events) + 1, at=iso(step), kind=kind, actor=actor, payload=payload)
        )

    for title in PAGES:
        emit(E_PAGE_CREATED, "mod", {"title": title})
    for i, (author_idx, page_idx, outcome, human) in enumerate(cases):
        cid = f"c{i}"
        author = AUTHORS[author_idx]
        page = PAGES[page_idx]
        actor = "mod" if human else ACTOR_SYSTEM
        emit(E_CONTRIB_SUBMITTED, author, {"contribution_id": cid, "author_id": author, "page": page})
        if outcome == "pending":
            continue
        if outcome == "rejected":
            emit(E_CONTRIB_REJECTED, actor, {"contribution_id": cid})
            continue
        emit(E_REVISION_COMMITTED, author, {"page": page, "contribution_id": cid})
        emit(E_CONTRIB_ACCEPTED, actor, {"contribution_id": cid})
        if outcome == "reverted":
            emit(E_REVISION_REVERTED, "mod", {"page": page})
            emit(E_CONTRIB_REVERTED, "mod", {"contribution_id": cid})
    return events


def oracle(cases):
    """Recompute the expected tables with plain counters."""
    authors = {a: {"submitted": 0, "accepted": 0, "rejected": 0, "reverted": 0} for a in AUTHORS}
    pages = {p: {"revisions": 1, "reverts": 0} for p in PAGES}
    decisions = {"auto": 0, "human": 0}
    pending = 0
    for author_idx, page_idx, outcome, human in cases:
        a = authors[AUTHORS[author_idx]]
        p = pages[PAGES[page_idx]]
        a["submitted"] += 1
        if outcome == "pending":
            pending += 1
            continue
        decisions["human" if human else "auto"] += 1
        if outcome == "rejected":
            a["rejected"] += 1
            continue
        a["accepted"] += 1
        p["revisions"] += 1
        if outcome == "reverted":
            a["reverted"] += 1
            p["revisions"] += 1
            p["reverts"] += 1
    return authors, pages, decisions, pending


class TestStats:
    @given(st.lists(case, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, cases):
        report = stats(build_events(cases))
        want_authors, want_pages, want_decisions, want_pending = oracle(cases)

        for author_id, want in want_authors.items():
            got = report.authors.get(author_id, AuthorStats(author_id=author_id))
            assert (got.submitted, got.accepted, got.rejected, got.reverted) == (
                want["submitted"], want["accepted"], want["rejected"], want["reverted"],
            )
        for title, want in want_pages.items():
            got = report.pages[title]
            assert (got.revisions, got.reverts) == (want["revisions"], want["reverts"])
        assert report.decisions == want_decisions
        if report.queue_depth:
            assert report.queue_depth[-1][1] == want_pending
        else:
            assert want_pending == 0

    @given(st.lists(case, max_size=40))
    @settings(max_examples=100, deadline=None)
    def test_queue_depth_steps_by_one_and_never_dips_below_zero(self, cases):
        report = stats(build_events(cases))
        prev = 0
        for _, depth in report.queue_depth:
            assert abs(depth - prev) == 1
            assert depth >= 0
            prev = depth

    def test_acceptance_rate(self):
        row = AuthorStats(author_id="a", submitted=4, accepted=3, rejected=1)
        assert row.acceptance_rate == pytest.approx(0.75)
        assert AuthorStats(author_id="b").acceptance_rate is None

    def test_author_filter_narrows_author_table_only(self):
        cases = [(0, 0, "accepted", False), (1, 1, "rejected", True)]
        report = stats(build_events(cases), author="a1")
        assert set(report.authors) == {"a1"}
        assert set(report.pages) == set(PAGES)
        assert report.decisions == {"auto": 1, "human": 1}

    def test_author_filter_matches_username(self):
        cases = [(0, 0, "accepted", False)]
        report = stats(build_events(cases), author="alice", usernames={"a1": "alice"})
        assert set(report.authors) == {"a1"}
        assert report.authors["a1"].username == "alice"

    def test_page_filter(self):
        cases = [(0, 0, "accepted", False), (0, 1, "accepted", False)]
        report = stats(build_events(cases), page="P2")
        assert set(report.pages) == {"P2"}

    def test_time_window(self):
        cases = [(0, 0, "accepted", False)]
        events = build_events(cases)
        report = stats(events, since=events[-1].at)
        assert all(s.submitted == 0 for s in report.authors.values())
        report = stats(events, until=events[-1].at)
        assert report.authors["a1"].submitted == 1
