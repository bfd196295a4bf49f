from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from rainbowscore.engine import (
    COVERAGE_THRESHOLD,
    Arrow,
    FeedbackFrame,
    InvalidModeError,
    Mask,
    Mode,
    NoteStatus,
    PerformanceEvent,
    PerformanceRecord,
    Session,
    SessionCompleteError,
    TimeRegressionError,
    UnfinishedSessionError,
    build_review,
    compute_coverage,
    make_mask,
    record_from_jsonl,
    record_to_jsonl,
    replay_gate,
    score_performance,
    score_record,
    start_session,
)
from rainbowscore.notation import Fingering, Note, Pitch, fingering_for_pitch

from conftest import make_piece


def fp(pitch: Pitch) -> Fingering:
    return fingering_for_pitch(pitch)


def events(*pairs) -> tuple[PerformanceEvent, ...]:
    return tuple(PerformanceEvent(t, fp(Pitch[name])) for t, name in pairs)


def brute_force_score(piece, record, tempo) -> float:
    """Independent 1 ms-step oracle: walk every millisecond cell, look up the
    sounding pitch at its left edge, and tally per-note correct cells. Exact
    whenever all note windows and events sit on integer milliseconds."""
    from rainbowscore.notation import pitch_from_fingering

    ms_per_beat = 60000.0 / tempo
    correct_notes = 0
    for note in piece.notes:
        start = int(float(note.onset) * ms_per_beat)
        end = int(float(note.end) * ms_per_beat)
        hits = 0
        for t in range(start, end):
            current = None
            if t < record.end_t:
                for event in record.events:
                    if event.t <= t:
                        current = event
                    else:
                        break
            pitch = pitch_from_fingering(current.fingering) if current else None
            if pitch is note.pitch:
                hits += 1
        if hits >= COVERAGE_THRESHOLD * (end - start):
            correct_notes += 1
    return correct_notes / len(piece.notes)


class TestModeBasics:
    def test_start_states(self, six_note_piece):
        a = start_session(Mode.A, six_note_piece, 60.0)
        assert a.playhead_beats == 0.0 and a.time == 0.0
        b = start_session(Mode.B, six_note_piece, 60.0)
        assert b.gate_index == 0
        d = start_session(Mode.D, six_note_piece, 60.0)
        assert d.playhead_beats is None

    def test_non_positive_tempo_rejected(self, six_note_piece):
        with pytest.raises(ValueError):
            start_session(Mode.A, six_note_piece, 0.0)

    def test_mode_flags(self):
        assert Mode.A.interactive and Mode.B.interactive
        assert not Mode.C.interactive and not Mode.D.interactive
        assert Mode.A.system_led and Mode.C.system_led
        assert not Mode.B.system_led and not Mode.D.system_led


class TestClock:
    def test_playhead_linear(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 120.0)
        frames = session.advance_clock(2000.0)
        assert frames[-1].playhead_beats == pytest.approx(4.0)
        assert session.playhead_beats == pytest.approx(4.0)

    def test_frame_rate(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0, frame_rate=30.0)
        frames = session.advance_clock(1000.0)
        assert len(frames) == 30
        assert frames[0].t == pytest.approx(1000.0 / 30.0)

    def test_clock_on_gated_modes_rejected(self, six_note_piece):
        for mode in (Mode.B, Mode.D):
            session = start_session(mode, six_note_piece, 60.0)
            with pytest.raises(InvalidModeError):
                session.advance_clock(10.0)

    def test_time_regression(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0)
        session.advance_clock(500.0)
        with pytest.raises(TimeRegressionError):
            session.advance_clock(400.0)

    def test_session_ends_past_last_note(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0)
        session.advance_clock(6000.0)
        assert session.complete
        assert session.record().end_t == pytest.approx(6000.0)

    def test_mode_c_frames_hide_feedback(self, six_note_piece):
        session = start_session(Mode.C, six_note_piece, 60.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.E)))  # wrong pitch
        frames = session.advance_clock(500.0)
        assert frames
        for frame in frames:
            assert frame.active_mask is None
            assert frame.note_statuses is None

    def test_mode_a_mask_and_arrow(self, six_note_piece):
        # score says C (row 0) at beat 0; playing E (row 2) masks with a down arrow
        session = start_session(Mode.A, six_note_piece, 60.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.E)))
        frame = session.advance_clock(100.0)[-1]
        assert frame.active_mask is not None
        assert frame.active_mask.played_row == 2
        assert frame.active_mask.target_row == 0
        assert frame.active_mask.arrow is Arrow.DOWN

    def test_metronome_beats(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0)
        frames = session.advance_clock(2500.0)
        beats = [f.metronome_beat for f in frames if f.metronome_beat is not None]
        assert beats == [0, 1, 2]
        marked = {f.metronome_beat: f.t for f in frames if f.metronome_beat is not None}
        assert marked[1] == pytest.approx(1000.0, abs=1000 / 30 + 1e-6)

    def test_statuses_settle_after_window(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.C)))  # correct note 0
        frames = session.advance_clock(1500.0)
        last = frames[-1]
        assert last.note_statuses[0] is NoteStatus.CORRECT
        assert last.note_statuses[1] is NoteStatus.IN_PROGRESS
        assert last.note_statuses[2] is NoteStatus.PENDING


class TestGate:
    def test_wrong_pitch_masks_and_holds(self, six_note_piece):
        session = start_session(Mode.B, six_note_piece, 60.0)
        frame = session.on_fingering(PerformanceEvent(0.0, fp(Pitch.D)))
        assert session.gate_index == 0
        assert frame.active_mask.played_row == 1
        assert frame.active_mask.target_row == 0
        assert frame.active_mask.arrow is Arrow.DOWN
        # still gated after more wrong input
        session.on_fingering(PerformanceEvent(500.0, fp(Pitch.D)))
        assert session.gate_index == 0

    def test_gate_on_e_played_d_arrow_up(self):
        piece = make_piece(["E", "D", "E"])
        session = start_session(Mode.B, piece, 60.0)
        frame = session.on_fingering(PerformanceEvent(0.0, fp(Pitch.D)))
        assert frame.active_mask.played_row == 1 and frame.active_mask.arrow is Arrow.UP
        session.poll(1000.0)
        assert session.gate_index == 0  # wrong pitch never advances

    def test_hold_confirms_and_advances(self, six_note_piece):
        session = start_session(Mode.B, six_note_piece, 60.0, hold_ms=30.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.C)))
        assert session.gate_index == 0  # not yet held long enough
        frame = session.poll(30.0)
        assert session.gate_index == 1
        assert frame.note_statuses[0] is NoteStatus.CORRECT
        assert frame.note_statuses[1] is NoteStatus.IN_PROGRESS

    def test_refinement_does_not_reset_hold(self, six_note_piece):
        session = start_session(Mode.B, six_note_piece, 60.0, hold_ms=30.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.C)))
        session.on_fingering(PerformanceEvent(20.0, fp(Pitch.C)))  # same pitch again
        session.poll(30.0)
        assert session.gate_index == 1

    def test_gate_never_skips(self, six_note_piece):
        session = start_session(Mode.B, six_note_piece, 60.0, hold_ms=30.0)
        indices = [session.gate_index]
        t = 0.0
        for note in six_note_piece.notes:
            session.on_fingering(PerformanceEvent(t, fp(note.pitch)))
            t += 100.0
            if not session.complete:
                session.poll(t)
            indices.append(session.gate_index)
        assert indices == sorted(indices)
        assert all(b - a in (0, 1) for a, b in zip(indices, indices[1:]))
        assert session.complete

    def test_completion_on_last_note(self):
        piece = make_piece(["C", "D"])
        session = start_session(Mode.B, piece, 60.0, hold_ms=30.0)
        session.on_fingering(PerformanceEvent(0.0, fp(Pitch.C)))
        session.poll(50.0)
        session.on_fingering(PerformanceEvent(100.0, fp(Pitch.D)))
        session.poll(200.0)
        assert session.complete
        assert session.note_results == ((0, 30.0), (1, 130.0))
        with pytest.raises(SessionCompleteError):
            session.on_fingering(PerformanceEvent(300.0, fp(Pitch.C)))


class TestCoverage:
    def test_perfect_performance(self, six_note_piece):
        record = PerformanceRecord(
            piece_id="t",
            mode=Mode.C,
            tempo=60.0,
            events=events(*((i * 1000.0, n.pitch.name) for i, n in enumerate(six_note_piece.notes))),
            end_t=6000.0,
        )
        coverages = compute_coverage(six_note_piece, record, 60.0)
        assert [c.ratio for c in coverages] == [1.0] * 6
        assert score_performance(coverages) == 1.0

    def test_silence_scores_zero(self, six_note_piece):
        record = PerformanceRecord("t", Mode.C, 60.0, (), 6000.0)
        coverages = compute_coverage(six_note_piece, record, 60.0)
        assert [c.ratio for c in coverages] == [0.0] * 6
        assert score_performance(coverages) == 0.0

    def test_700ms_of_1000ms_is_exactly_070(self):
        piece = make_piece(["C"])
        record = PerformanceRecord(
            "t", Mode.C, 60.0, events((0.0, "C"), (700.0, "D")), 1000.0
        )
        (coverage,) = compute_coverage(piece, record, 60.0)
        assert coverage.ratio == pytest.approx(0.70)
        assert coverage.passed

    @pytest.mark.parametrize(
        "correct_ms,expected",
        [(699.0, False), (700.0, True), (701.0, True)],
    )
    def test_threshold_boundary(self, correct_ms, expected):
        piece = make_piece(["C"])
        record = PerformanceRecord(
            "t", Mode.C, 60.0, events((0.0, "C"), (correct_ms, "D")), 1000.0
        )
        (coverage,) = compute_coverage(piece, record, 60.0)
        assert coverage.passed is expected

    def test_refinement_invariance(self, six_note_piece):
        rng = random.Random(7)
        base = []
        t = 0.0
        for _ in range(12):
            t += rng.randrange(100, 800)
            base.append(PerformanceEvent(float(t), fp(rng.choice(list(Pitch)))))
        record = PerformanceRecord("t", Mode.C, 60.0, tuple(base), 6000.0)
        refined = []
        for event in base:
            refined.append(event)
            refined.append(PerformanceEvent(event.t + 1.0, event.fingering))
        refined.sort(key=lambda e: e.t)
        record2 = PerformanceRecord("t", Mode.C, 60.0, tuple(refined), 6000.0)
        a = [c.ratio for c in compute_coverage(six_note_piece, record, 60.0)]
        b = [c.ratio for c in compute_coverage(six_note_piece, record2, 60.0)]
        assert a == pytest.approx(b, abs=1e-9)

    def test_matches_brute_force_on_random_records(self):
        rng = random.Random(1234)
        pitches = list(Pitch)
        for _ in range(25):
            n = rng.randrange(2, 9)
            names = []
            for _ in range(n):
                options = [p for p in pitches if not names or p is not Pitch[names[-1]]]
                names.append(rng.choice(options).name)
            durations = [rng.choice([Fraction(1, 2), Fraction(1), Fraction(2)]) for _ in range(n)]
            piece = make_piece(names, durations, tempo=120.0)
            piece_ms = int(piece.duration_ms(120.0))
            evs, t = [], 0
            while t < piece_ms:
                evs.append(PerformanceEvent(float(t), Fingering(tuple(rng.random() < 0.5 for _ in range(6)))))
                t += rng.randrange(50, 600)
            record = PerformanceRecord("t", Mode.C, 120.0, tuple(evs), float(piece_ms))
            ours = score_performance(compute_coverage(piece, record, 120.0))
            assert ours == brute_force_score(piece, record, 120.0)

    def test_empty_coverage_list_rejected(self):
        with pytest.raises(ValueError):
            score_performance([])

    def test_mode_a_and_c_measure_identically(self, six_note_piece):
        stream = events((0.0, "C"), (800.0, "E"), (2000.0, "C"), (3100.0, "D"))
        records = []
        for mode in (Mode.A, Mode.C):
            session = start_session(mode, six_note_piece, 60.0)
            for event in stream:
                session.on_fingering(event)
            session.advance_clock(6000.0)
            records.append(session.record())
        assert records[0].events == records[1].events
        assert records[0].end_t == records[1].end_t
        assert score_record(six_note_piece, records[0]) == score_record(
            six_note_piece, records[1]
        )


class TestMask:
    def test_arrow_direction_enforced(self):
        with pytest.raises(ValueError):
            Mask(played_row=1, target_row=3, arrow=Arrow.DOWN, span=(0.0, 1.0))

    def test_make_mask_directions(self):
        assert make_mask(Pitch.D, Pitch.E, (0.0, 1.0)).arrow is Arrow.UP
        assert make_mask(Pitch.E, Pitch.D, (0.0, 1.0)).arrow is Arrow.DOWN
        assert make_mask(Pitch.E, Pitch.E, (0.0, 1.0)).arrow is Arrow.NONE


class TestReview:
    def test_perfect_performance_tracks_match(self, six_note_piece):
        record = PerformanceRecord(
            "t",
            Mode.C,
            60.0,
            events(*((i * 1000.0, n.pitch.name) for i, n in enumerate(six_note_piece.notes))),
            6000.0,
        )
        review = build_review(six_note_piece, record, 60.0)
        assert review.played == review.ground_truth
        assert review.note_correct == (True,) * 6

    def test_wrong_note_shows_in_played_track(self, six_note_piece):
        # notes 0-4 correct, note 5 (E) played as D
        pairs = [(i * 1000.0, n.pitch.name) for i, n in enumerate(six_note_piece.notes[:5])]
        pairs.append((5000.0, "D"))
        record = PerformanceRecord("t", Mode.C, 60.0, events(*pairs), 6000.0)
        review = build_review(six_note_piece, record, 60.0)
        assert review.note_correct == (True,) * 5 + (False,)
        last = review.played[-1]
        assert last.pitch is Pitch.D
        assert review.ground_truth[-1].pitch is Pitch.E

    def test_empty_record_is_one_silence_segment(self, six_note_piece):
        record = PerformanceRecord("t", Mode.C, 60.0, (), 6000.0)
        review = build_review(six_note_piece, record, 60.0)
        assert len(review.played) == 1
        assert review.played[0].pitch is None
        assert (review.played[0].start_ms, review.played[0].end_ms) == (0.0, 6000.0)

    def test_unfinished_session_rejected(self, six_note_piece):
        record = PerformanceRecord("t", Mode.C, 60.0, (), 3000.0)
        with pytest.raises(UnfinishedSessionError):
            build_review(six_note_piece, record, 60.0)

    def test_mode_b_requires_gate_completion(self):
        piece = make_piece(["C", "D"])
        record = PerformanceRecord("t", Mode.B, 60.0, events((0.0, "C")), 100.0)
        with pytest.raises(UnfinishedSessionError):
            build_review(piece, record, 60.0)
        done = PerformanceRecord(
            "t", Mode.B, 60.0, events((0.0, "C"), (100.0, "D")), 200.0
        )
        review = build_review(piece, done, 60.0)
        assert review.note_correct == (True, True)


class TestPersistence:
    def test_jsonl_round_trip(self, six_note_piece):
        session = start_session(Mode.A, six_note_piece, 60.0)
        rng = random.Random(5)
        t = 0.0
        for _ in range(10):
            t += rng.randrange(50, 900)
            session.on_fingering(PerformanceEvent(t, fp(rng.choice(list(Pitch)))))
        session.advance_clock(6000.0)
        record = session.record()
        restored = record_from_jsonl(record_to_jsonl(record))
        assert restored == record
        assert score_record(six_note_piece, restored) == score_record(six_note_piece, record)

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            PerformanceRecord("t", Mode.C, 60.0, events((100.0, "C"), (50.0, "D")), 200.0)
        with pytest.raises(ValueError):
            PerformanceRecord("t", Mode.C, 60.0, events((100.0, "C")), 50.0)

    def test_replay_gate(self):
        piece = make_piece(["C", "D", "E"])
        record = PerformanceRecord(
            "t", Mode.B, 60.0, events((0.0, "C"), (100.0, "D"), (200.0, "E")), 300.0
        )
        assert replay_gate(piece, record) == 3
