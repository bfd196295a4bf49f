"""Per-song exam procedure, curriculum ordering, termination, and efficiency.

Each song runs through four steps: an unpracticed pre-exam, listening to the
ground truth, capped practice, and a randomized-pitch exam that keeps the
rhythm but redraws every pitch so the notes can only be read, not recalled.
A passing pre-exam (>= 80%) lets the subject skip the rest of the song, in
which case the pre-exam alone enters the history. Training is achieved after
three consecutive recorded exams at or above 80%, counted across songs and
across exam kinds.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, replace
from enum import Enum
from math import ceil
from pathlib import Path
from typing import Iterable, Sequence

from .notation import DifficultyScale, Note, Piece, Pitch

PASS_SCORE = 0.8
CONSECUTIVE_TO_ACHIEVE = 3
PRACTICE_BUDGET_MS = 900_000  # 15 minutes


class ExamKind(str, Enum):
    PRE = "pre"
    RANDOMIZED = "randomized"


class CurriculumStatus(str, Enum):
    RUNNING = "running"
    ACHIEVED = "achieved"
    QUIT = "quit"


class CurriculumOverError(ValueError):
    """A transition was applied to a curriculum that already terminated."""


class NotAchievedError(ValueError):
    """Learning efficiency was requested before the goal was achieved."""


@dataclass(frozen=True)
class ExamResult:
    piece_id: str
    kind: ExamKind
    score: float
    index: int  # 1-based, global across the whole history

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")


@dataclass(frozen=True)
class CurriculumState:
    piece_ids: tuple[str, ...]
    position: int
    history: tuple[ExamResult, ...]
    consecutive_passes: int
    status: CurriculumStatus

    @classmethod
    def start(cls, piece_ids: Sequence[str]) -> "CurriculumState":
        return cls(
            piece_ids=tuple(piece_ids),
            position=0,
            history=(),
            consecutive_passes=0,
            status=CurriculumStatus.RUNNING,
        )

    @property
    def current_piece_id(self) -> str | None:
        if self.status is CurriculumStatus.RUNNING and self.position < len(self.piece_ids):
            return self.piece_ids[self.position]
        return None

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(r.score for r in self.history)


def _trailing_passes(scores: Sequence[float]) -> int:
    run = 0
    for score in reversed(scores):
        if score >= PASS_SCORE:
            run += 1
        else:
            break
    return run


def _append_exam(state: CurriculumState, piece_id: str, kind: ExamKind, score: float) -> CurriculumState:
    result = ExamResult(piece_id, kind, score, index=len(state.history) + 1)
    history = state.history + (result,)
    passes = _trailing_passes([r.score for r in history])
    status = state.status
    if passes >= CONSECUTIVE_TO_ACHIEVE:
        status = CurriculumStatus.ACHIEVED
    return replace(state, history=history, consecutive_passes=passes, status=status)


def step_song(
    state: CurriculumState,
    pre_score: float,
    *,
    skip: bool = False,
    exam_score: float | None = None,
) -> CurriculumState:
    """Record one song's exams and advance the curriculum.

    The pre-exam always enters the history. If it achieves the goal the song
    (and the curriculum) ends there. With ``skip`` (allowed only when the
    pre-exam passed) the randomized exam is waived; otherwise ``exam_score``
    is required. Exhausting the curriculum without achieving marks the
    subject as quit, since the experiment ends either way.
    """
    if state.status is not CurriculumStatus.RUNNING:
        raise CurriculumOverError(f"curriculum already {state.status.value}")
    if state.position >= len(state.piece_ids):
        raise CurriculumOverError("no songs left in the curriculum")
    piece_id = state.piece_ids[state.position]

    state = _append_exam(state, piece_id, ExamKind.PRE, pre_score)
    if state.status is CurriculumStatus.RUNNING:
        if skip:
            if pre_score < PASS_SCORE:
                raise ValueError(
                    f"skip requires a passing pre-exam; got {pre_score:.3f}"
                )
        else:
            if exam_score is None:
                raise ValueError("randomized exam score required when not skipping")
            state = _append_exam(state, piece_id, ExamKind.RANDOMIZED, exam_score)

    state = replace(state, position=state.position + 1)
    if state.status is CurriculumStatus.RUNNING and state.position >= len(state.piece_ids):
        # Out of songs without reaching the goal: the run ends unachieved.
        state = replace(state, status=CurriculumStatus.QUIT)
    return state


def mark_quit(state: CurriculumState) -> CurriculumState:
    if state.status is not CurriculumStatus.RUNNING:
        raise CurriculumOverError(f"curriculum already {state.status.value}")
    return replace(state, status=CurriculumStatus.QUIT)


def learning_efficiency(state: CurriculumState) -> float:
    """Reciprocal of the exam count up to and including the achieving exam."""
    if state.status is not CurriculumStatus.ACHIEVED:
        raise NotAchievedError(f"curriculum status is {state.status.value}")
    scores = state.scores
    run = 0
    for index, score in enumerate(scores):
        run = run + 1 if score >= PASS_SCORE else 0
        if run >= CONSECUTIVE_TO_ACHIEVE:
            return 1.0 / (index + 1)
    raise NotAchievedError("achieved status without a qualifying run")  # unreachable


def practice_budget(elapsed_ms: float, budget_ms: float = PRACTICE_BUDGET_MS) -> bool:
    """Whether practice may continue; the 15-minute cap is inclusive."""
    if elapsed_ms < 0:
        raise ValueError(f"negative elapsed time: {elapsed_ms}")
    return elapsed_ms <= budget_ms


def arrange_alternating(pieces: Sequence[Piece]) -> list[Piece]:
    """Order a curriculum easy-hard-easy-hard by the fitted difficulty scale.

    Pieces are stably sorted by difficulty and split into an easy half and a
    hard half (the extra piece of an odd count goes to the easy half); the
    output interleaves the halves so no three consecutive exams come from
    same-difficulty material.
    """
    if len(pieces) < 2:
        raise ValueError(f"need at least 2 pieces to arrange, got {len(pieces)}")
    scale = DifficultyScale.fit(pieces)
    by_difficulty = sorted(range(len(pieces)), key=lambda i: scale.score(pieces[i]))
    half = ceil(len(pieces) / 2)
    easy, hard = by_difficulty[:half], by_difficulty[half:]
    order: list[int] = []
    for i, easy_index in enumerate(easy):
        order.append(easy_index)
        if i < len(hard):
            order.append(hard[i])
    return [pieces[i] for i in order]


def randomize_pitches(piece: Piece, seed: int) -> Piece:
    """Redraw every pitch uniformly, never repeating the previous note's.

    Onsets and durations are untouched, so the exam shares the song's rhythm
    exactly; the result satisfies the no-adjacent-equal-pitch constraint by
    construction. Deterministic for a given seed.
    """
    rng = random.Random(seed)
    notes: list[Note] = []
    prev: Pitch | None = None
    for note in piece.notes:
        choices = [p for p in Pitch if p is not prev]
        pitch = rng.choice(choices)
        notes.append(Note(pitch, note.onset, note.duration))
        prev = pitch
    return replace(piece, notes=tuple(notes))


def write_exam_csv(
    path: str | Path, histories: Iterable[tuple[str, Sequence[ExamResult]]]
) -> None:
    """Export exam histories as subject_id, exam_index, piece_id, kind, score."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["subject_id", "exam_index", "piece_id", "kind", "score"])
        for subject_id, history in histories:
            for result in history:
                writer.writerow(
                    [subject_id, result.index, result.piece_id, result.kind.value, result.score]
                )
