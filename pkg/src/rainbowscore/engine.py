"""Live session state machines, per-note coverage scoring, and review builds.

Four learning modes share one session type:

* ``A`` - system-led, interactive: a constant-speed playhead with per-frame
  masks and arrows showing what the player is actually sounding.
* ``B`` - performer-led, interactive: the playhead is a gate that waits on
  each note until the correct pitch is held, masking wrong attempts.
* ``C`` - system-led, static: the mode-A playhead and metronome with all
  visual feedback suppressed. Exams run in this mode.
* ``D`` - performer-led, static: free practice; input is recorded, nothing
  is displayed or judged.

A session is a single-owner state machine: one caller feeds it clock
advances and fingering events; the frames and records it emits are frozen
values safe to share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .notation import Fingering, Note, Piece, Pitch, pitch_from_fingering, row_of

FRAME_RATE_HZ = 30.0

#: A pitch must be held this long in mode B before the gate accepts it.
HOLD_MS = 30.0

#: A note counts as correctly played when it is sounded correctly for at
#: least this fraction of its duration.
COVERAGE_THRESHOLD = 0.7


class Mode(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def interactive(self) -> bool:
        """Whether the mode shows real-time visual feedback."""
        return self in (Mode.A, Mode.B)

    @property
    def system_led(self) -> bool:
        """Whether progression is driven by the clock rather than the player."""
        return self in (Mode.A, Mode.C)


class NoteStatus(str, Enum):
    PENDING = "pending"
    IN_PROGRESS = "in-progress"
    CORRECT = "correct"
    INCORRECT = "incorrect"


class Arrow(str, Enum):
    UP = "up"
    DOWN = "down"
    NONE = "none"


class InvalidModeError(ValueError):
    """An operation was called on a session mode that does not support it."""


class TimeRegressionError(ValueError):
    """A timestamp moved backwards within one session."""


class SessionCompleteError(ValueError):
    """Input arrived after the session already ended."""


class UnfinishedSessionError(ValueError):
    """A review was requested for a session that did not run to the end."""


@dataclass(frozen=True)
class PerformanceEvent:
    """A fingering change at ``t`` milliseconds since session start."""

    t: float
    fingering: Fingering


@dataclass(frozen=True)
class PerformanceRecord:
    piece_id: str
    mode: Mode
    tempo: float
    events: tuple[PerformanceEvent, ...]
    end_t: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        last = 0.0
        for event in self.events:
            if event.t < last:
                raise ValueError(f"events out of order at t={event.t}")
            last = event.t
        if self.events and self.end_t < self.events[-1].t:
            raise ValueError("end_t precedes the last event")


@dataclass(frozen=True)
class Mask:
    """White-mask overlay: the row actually sounded under the target row.

    The arrow points from the played row toward the target row.
    """

    played_row: int
    target_row: int
    arrow: Arrow
    span: tuple[float, float]

    def __post_init__(self) -> None:
        expected = (
            Arrow.UP
            if self.target_row > self.played_row
            else Arrow.DOWN
            if self.target_row < self.played_row
            else Arrow.NONE
        )
        if self.arrow is not expected:
            raise ValueError(
                f"arrow {self.arrow.value} contradicts rows "
                f"{self.played_row}->{self.target_row}"
            )


def make_mask(played: Pitch, target: Pitch, span: tuple[float, float]) -> Mask:
    if target > played:
        arrow = Arrow.UP
    elif target < played:
        arrow = Arrow.DOWN
    else:
        arrow = Arrow.NONE
    return Mask(row_of(played), row_of(target), arrow, span)


@dataclass(frozen=True)
class FeedbackFrame:
    """One visual-state snapshot sent to the interface.

    ``note_statuses`` is None when statuses are hidden (mode C) or not
    applicable (mode D); ``playhead_beats`` is None when there is no playhead
    (mode D). ``metronome_beat`` is set on the first frame at or past each
    beat boundary in the clocked modes.
    """

    t: float
    playhead_beats: float | None
    note_statuses: tuple[NoteStatus, ...] | None
    active_mask: Mask | None
    metronome_beat: int | None = None


@dataclass(frozen=True)
class NoteCoverage:
    note_index: int
    correct_ms: float
    total_ms: float

    @property
    def ratio(self) -> float:
        return min(1.0, max(0.0, self.correct_ms / self.total_ms))

    @property
    def passed(self) -> bool:
        return self.ratio >= COVERAGE_THRESHOLD


def _timeline(
    events: Sequence[PerformanceEvent], end_t: float
) -> list[tuple[float, float, Pitch | None]]:
    """Piecewise-constant played-pitch signal as (start, end, pitch) spans.

    Before the first event nothing sounds (pitch None); each event's pitch
    holds until the next event; the signal stops at ``end_t``.
    """
    spans: list[tuple[float, float, Pitch | None]] = []
    prev_t = 0.0
    prev_pitch: Pitch | None = None
    for event in events:
        t = min(event.t, end_t)
        if t > prev_t:
            spans.append((prev_t, t, prev_pitch))
        prev_t = t
        prev_pitch = pitch_from_fingering(event.fingering)
    if end_t > prev_t:
        spans.append((prev_t, end_t, prev_pitch))
    return spans


def note_windows_ms(piece: Piece, tempo: float) -> list[tuple[float, float]]:
    """Wall-clock [start, end) windows of each note at the given tempo."""
    ms_per_beat = 60000.0 / tempo
    return [
        (float(n.onset) * ms_per_beat, float(n.end) * ms_per_beat) for n in piece.notes
    ]


def compute_coverage(
    piece: Piece, record: PerformanceRecord, tempo: float
) -> list[NoteCoverage]:
    """Per-note correct-sounding time against the played-pitch signal.

    A note's correct_ms is the total time inside its wall-clock window during
    which the signal equals the note's pitch. Overlap outside the window
    (anticipation or overhang) is not counted.
    """
    spans = _timeline(record.events, record.end_t)
    coverages = []
    for index, (note, (w_start, w_end)) in enumerate(
        zip(piece.notes, note_windows_ms(piece, tempo))
    ):
        correct = 0.0
        for s_start, s_end, pitch in spans:
            if pitch is not note.pitch:
                continue
            lo = max(w_start, s_start)
            hi = min(w_end, s_end)
            if hi > lo:
                correct += hi - lo
        coverages.append(NoteCoverage(index, correct, w_end - w_start))
    return coverages


def score_performance(coverages: Sequence[NoteCoverage]) -> float:
    """Correctly played notes divided by total notes."""
    if not coverages:
        raise ValueError("cannot score an empty coverage list")
    return sum(1 for c in coverages if c.passed) / len(coverages)


def score_record(piece: Piece, record: PerformanceRecord, tempo: float | None = None) -> float:
    tempo = record.tempo if tempo is None else tempo
    return score_performance(compute_coverage(piece, record, tempo))


class Session:
    """One live run of a piece in one mode. Single writer; see module docs."""

    def __init__(
        self,
        mode: Mode,
        piece: Piece,
        tempo: float,
        *,
        frame_rate: float = FRAME_RATE_HZ,
        hold_ms: float = HOLD_MS,
    ):
        if tempo <= 0:
            raise ValueError(f"tempo must be positive: {tempo}")
        self.mode = Mode(mode)
        self.piece = piece
        self.tempo = float(tempo)
        self.frame_rate = frame_rate
        self.hold_ms = hold_ms
        self._windows = note_windows_ms(piece, tempo)
        self._piece_end_ms = self._windows[-1][1] if self._windows else 0.0
        self._events: list[PerformanceEvent] = []
        self._time = 0.0  # highest session timestamp seen from any source
        self._clock_t = 0.0  # playhead clock (modes A/C); may trail events
        self._last_event_t = 0.0
        self._current_pitch: Pitch | None = None
        self._pitch_since = 0.0
        self._next_frame = 1
        self._last_metronome_beat = -1
        self._gate_index = 0
        self._note_results: list[tuple[int, float]] = []
        self._complete = False
        self._end_t: float | None = None

    # -- introspection ----------------------------------------------------

    @property
    def time(self) -> float:
        return self._time

    @property
    def complete(self) -> bool:
        return self._complete

    @property
    def gate_index(self) -> int:
        """Index of the note the mode-B gate is waiting on."""
        return self._gate_index

    @property
    def note_results(self) -> tuple[tuple[int, float], ...]:
        """(note index, confirmation time) pairs for mode-B gate decisions."""
        return tuple(self._note_results)

    @property
    def playhead_beats(self) -> float | None:
        if self.mode.system_led:
            return self._clock_t * self.tempo / 60000.0
        if self.mode is Mode.B:
            if self._gate_index < len(self.piece.notes):
                return float(self.piece.notes[self._gate_index].onset)
            return float(self.piece.length_beats)
        return None

    def record(self) -> PerformanceRecord:
        end_t = self._end_t if self._end_t is not None else self._time
        return PerformanceRecord(
            piece_id=self.piece.id,
            mode=self.mode,
            tempo=self.tempo,
            events=tuple(self._events),
            end_t=end_t,
        )

    # -- transitions -------------------------------------------------------

    def advance_clock(self, t: float) -> list[FeedbackFrame]:
        """Move the constant-speed playhead to ``t`` ms (modes A and C only).

        Emits the frames whose times fall in the advanced span, one per frame
        period, and ends the session once the playhead passes the last note.
        The playhead clock is independent of event timestamps: a client may
        report a fingering slightly ahead of the playhead without stalling it.
        """
        if not self.mode.system_led:
            raise InvalidModeError(f"mode {self.mode.value} has no clocked playhead")
        if t < self._clock_t:
            raise TimeRegressionError(f"clock moved back from {self._clock_t} to {t}")
        if self._complete:
            return []
        frames: list[FeedbackFrame] = []
        # n*1000/rate rather than n*(1000/rate): keeps round frame times exact
        while self._next_frame * 1000.0 / self.frame_rate <= t:
            frame_t = self._next_frame * 1000.0 / self.frame_rate
            self._next_frame += 1
            if frame_t >= self._piece_end_ms:
                break
            frames.append(self._clocked_frame(frame_t))
        if t >= self._piece_end_ms:
            self._clock_t = self._piece_end_ms
            self._time = max(self._time, self._piece_end_ms)
            frames.append(self._clocked_frame(self._piece_end_ms))
            self._complete = True
            self._end_t = max(self._time, self._piece_end_ms)
        else:
            self._clock_t = t
            self._time = max(self._time, t)
        return frames

    def on_fingering(self, event: PerformanceEvent) -> FeedbackFrame | None:
        """Record a fingering change and react per the session mode."""
        if self._complete:
            raise SessionCompleteError("session already ended")
        if event.t < self._last_event_t:
            raise TimeRegressionError(
                f"event at {event.t} precedes the previous event at {self._last_event_t}"
            )
        if self.mode is Mode.B:
            self._confirm_gate(max(event.t, self._time))
            if self._complete:
                # The hold elapsed before this event: the session was already
                # over when the finger moved, so the event is not part of it.
                return self._gate_frame()
        pitch = pitch_from_fingering(event.fingering)
        if pitch is not self._current_pitch:
            self._current_pitch = pitch
            self._pitch_since = event.t
        self._events.append(event)
        self._last_event_t = event.t
        self._time = max(self._time, event.t)
        if self.mode is Mode.B:
            return self._gate_frame()
        return None

    def poll(self, t: float) -> FeedbackFrame | None:
        """Let time pass in mode B so a held pitch can satisfy the gate.

        Polling with a time the session has already seen (events may carry
        timestamps ahead of the caller's clock) is a no-op.
        """
        if self.mode is not Mode.B:
            raise InvalidModeError(f"poll applies to mode B, not {self.mode.value}")
        if self._complete or t < self._time:
            return None
        advanced = self._confirm_gate(t)
        if not self._complete:
            self._time = t
        return self._gate_frame() if advanced else None

    def finish(self, end_t: float | None = None) -> PerformanceRecord:
        """Close the session (early close allowed) and return its record."""
        if not self._complete:
            t = self._time if end_t is None else end_t
            if t < self._time:
                raise TimeRegressionError(f"end_t {t} precedes session time {self._time}")
            self._time = t
            self._end_t = t
            self._complete = True
        return self.record()

    # -- internals ---------------------------------------------------------

    def _confirm_gate(self, now: float) -> bool:
        """Advance the mode-B gate if the held pitch has satisfied the hold."""
        if self._gate_index >= len(self.piece.notes) or self._current_pitch is None:
            return False
        gate_note = self.piece.notes[self._gate_index]
        if self._current_pitch is not gate_note.pitch:
            return False
        confirm_t = self._pitch_since + self.hold_ms
        if now < confirm_t:
            return False
        self._note_results.append((self._gate_index, confirm_t))
        self._gate_index += 1
        if self._gate_index == len(self.piece.notes):
            self._complete = True
            self._end_t = max(confirm_t, self._time)
        return True

    def _signal_pitch_at(self, t: float) -> Pitch | None:
        if self._current_pitch is not None and t >= self._pitch_since:
            return self._current_pitch
        pitch: Pitch | None = None
        for event in self._events:
            if event.t > t:
                break
            pitch = pitch_from_fingering(event.fingering)
        return pitch

    def _statuses_at(self, t: float) -> tuple[NoteStatus, ...]:
        spans = _timeline(self._events, max(t, self._time))
        statuses = []
        for index, (note, (w_start, w_end)) in enumerate(
            zip(self.piece.notes, self._windows)
        ):
            if t < w_start:
                statuses.append(NoteStatus.PENDING)
            elif t < w_end:
                statuses.append(NoteStatus.IN_PROGRESS)
            else:
                correct = 0.0
                for s_start, s_end, pitch in spans:
                    if pitch is not note.pitch:
                        continue
                    lo, hi = max(w_start, s_start), min(w_end, s_end)
                    if hi > lo:
                        correct += hi - lo
                ratio = correct / (w_end - w_start)
                statuses.append(
                    NoteStatus.CORRECT if ratio >= COVERAGE_THRESHOLD else NoteStatus.INCORRECT
                )
        return tuple(statuses)

    def _clocked_frame(self, t: float) -> FeedbackFrame:
        playhead = t * self.tempo / 60000.0
        beat = int(playhead)
        metronome = None
        if beat > self._last_metronome_beat:
            self._last_metronome_beat = beat
            metronome = beat
        mask = None
        statuses: tuple[NoteStatus, ...] | None = None
        if self.mode is Mode.A:
            statuses = self._statuses_at(t)
            active = self._active_note_index(t)
            if active is not None:
                played = self._signal_pitch_at(t)
                note = self.piece.notes[active]
                if played is not None and played is not note.pitch:
                    mask = make_mask(
                        played, note.pitch, (float(note.onset), float(note.end))
                    )
        return FeedbackFrame(
            t=t,
            playhead_beats=playhead,
            note_statuses=statuses,
            active_mask=mask,
            metronome_beat=metronome,
        )

    def _active_note_index(self, t: float) -> int | None:
        for index, (w_start, w_end) in enumerate(self._windows):
            if w_start <= t < w_end:
                return index
        return None

    def _gate_frame(self) -> FeedbackFrame:
        notes = self.piece.notes
        statuses = tuple(
            NoteStatus.CORRECT
            if i < self._gate_index
            else NoteStatus.IN_PROGRESS
            if i == self._gate_index
            else NoteStatus.PENDING
            for i in range(len(notes))
        )
        mask = None
        if (
            self._gate_index < len(notes)
            and self._current_pitch is not None
            and self._current_pitch is not notes[self._gate_index].pitch
        ):
            gate_note = notes[self._gate_index]
            mask = make_mask(
                self._current_pitch,
                gate_note.pitch,
                (float(gate_note.onset), float(gate_note.end)),
            )
        return FeedbackFrame(
            t=self._time,
            playhead_beats=self.playhead_beats,
            note_statuses=statuses,
            active_mask=mask,
        )


def start_session(
    mode: Mode,
    piece: Piece,
    tempo: float,
    *,
    frame_rate: float = FRAME_RATE_HZ,
    hold_ms: float = HOLD_MS,
) -> Session:
    """Open a session at t=0 for the piece at a player-chosen tempo."""
    return Session(mode, piece, tempo, frame_rate=frame_rate, hold_ms=hold_ms)


def replay_gate(piece: Piece, record: PerformanceRecord, *, hold_ms: float = HOLD_MS) -> int:
    """Re-run the mode-B gate over a recorded event stream; returns the
    index the gate reached (``len(notes)`` means the piece was completed)."""
    session = Session(Mode.B, piece, record.tempo, hold_ms=hold_ms)
    for event in record.events:
        session.on_fingering(event)
    if not session.complete:
        session.poll(max(record.end_t, session.time))
    return session.gate_index


# -- offline review ---------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """A span of constant pitch; ``pitch`` None means silence."""

    start_ms: float
    end_ms: float
    pitch: Pitch | None


@dataclass(frozen=True)
class ReviewDocument:
    """Aligned ground-truth and as-played tracks for the post-song review.

    Both tracks can be rendered or synthesized on their own, so the review
    screen can toggle between what the score says and what was played.
    """

    piece_id: str
    tempo: float
    ground_truth: tuple[Segment, ...]
    played: tuple[Segment, ...]
    note_correct: tuple[bool, ...]


def _merge_segments(
    spans: Iterable[tuple[float, float, Pitch | None]]
) -> tuple[Segment, ...]:
    merged: list[Segment] = []
    for start, end, pitch in spans:
        if end <= start:
            continue
        if merged and merged[-1].pitch is pitch and merged[-1].end_ms == start:
            merged[-1] = Segment(merged[-1].start_ms, end, pitch)
        else:
            merged.append(Segment(start, end, pitch))
    return tuple(merged)


def build_review(piece: Piece, record: PerformanceRecord, tempo: float) -> ReviewDocument:
    """Build the review document for a finished session.

    Timed sessions must cover the whole piece; a mode-B record must have
    carried the gate through the final note.
    """
    piece_ms = piece.duration_ms(tempo)
    if record.mode is Mode.B:
        reached = replay_gate(piece, record)
        if reached < len(piece.notes):
            raise UnfinishedSessionError(
                f"gate stopped at note {reached} of {len(piece.notes)}"
            )
        note_correct = tuple(True for _ in piece.notes)
    else:
        if record.end_t + 1e-9 < piece_ms:
            raise UnfinishedSessionError(
                f"record ends at {record.end_t} ms but the piece runs {piece_ms} ms"
            )
        note_correct = tuple(c.passed for c in compute_coverage(piece, record, tempo))
    ground_truth = _merge_segments(
        (w_start, w_end, note.pitch)
        for note, (w_start, w_end) in zip(piece.notes, note_windows_ms(piece, tempo))
    )
    played = _merge_segments(_timeline(record.events, record.end_t))
    if not played and record.end_t > 0:
        played = (Segment(0.0, record.end_t, None),)
    return ReviewDocument(
        piece_id=piece.id,
        tempo=tempo,
        ground_truth=ground_truth,
        played=played,
        note_correct=note_correct,
    )


# -- persistence --------------------------------------------------------------


def record_to_jsonl(record: PerformanceRecord) -> str:
    """One header line plus one line per event; replays bit-exactly."""
    lines = [
        json.dumps(
            {
                "piece_id": record.piece_id,
                "mode": record.mode.value,
                "tempo": record.tempo,
                "end_t": record.end_t,
            },
            sort_keys=True,
        )
    ]
    for event in record.events:
        lines.append(
            json.dumps(
                {"t": event.t, "covered": list(event.fingering.covered)}, sort_keys=True
            )
        )
    return "\n".join(lines) + "\n"


def record_from_jsonl(text: str) -> PerformanceRecord:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty record document")
    header = json.loads(lines[0])
    events = []
    for line in lines[1:]:
        raw = json.loads(line)
        events.append(PerformanceEvent(float(raw["t"]), Fingering.from_bits(raw["covered"])))
    return PerformanceRecord(
        piece_id=header["piece_id"],
        mode=Mode(header["mode"]),
        tempo=float(header["tempo"]),
        events=tuple(events),
        end_t=float(header["end_t"]),
    )
