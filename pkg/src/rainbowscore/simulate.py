"""Headless learner model and cohort runner for desk-scale studies.

The learner is a deliberately simple synthetic instrument, not a cognitive
claim: it knows each pitch's notation-to-fingering mapping with some
per-pitch strength, produces near-miss errors one degree off otherwise, and
strengthens a mapping whenever it produces it correctly. In the interactive
modes a revealed mistake also strengthens the missed mapping, because the
mask and arrows tell the learner what should have happened - that is the
only mechanism by which the two study groups can differ.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import curriculum as cur
from .analytics import GROUP_INTERACTIVE, GROUP_STATIC, GROUPS
from .engine import (
    Mode,
    PerformanceEvent,
    PerformanceRecord,
    compute_coverage,
    score_performance,
)
from .notation import Piece, Pitch, fingering_for_pitch
from .scorefile import load_curriculum, load_manifest

GROUP_MODES: dict[str, tuple[Mode, ...]] = {
    GROUP_INTERACTIVE: (Mode.A, Mode.B),
    GROUP_STATIC: (Mode.C, Mode.D),
}

#: Practice runs in the system-led mode of each group (A or C). The two
#: modes consume identical random draws, so with the feedback rate at zero a
#: matched pair of subjects behaves bit-identically across groups.
PRACTICE_MODE: dict[str, Mode] = {GROUP_INTERACTIVE: Mode.A, GROUP_STATIC: Mode.C}

EXAM_MODE = Mode.C

# Non-achieving subjects take the efficiency floor: one over the full exam
# count, the worst value an achieving subject could post.
EFFICIENCY_FLOOR = 1.0 / 32.0

#: Margin the mode-B simulation holds a pitch beyond the gate debounce.
HOLD_SLACK_MS = 40.0


@dataclass(frozen=True)
class LearnerModel:
    """Parameterized synthetic player; all defaults are tuning choices."""

    strengths: tuple[float, ...] = (0.3,) * 7  # per-pitch association, C..B
    base_error: float = 0.05  # slip rate even on a known mapping
    rate_correct: float = 0.02  # strength gained per correct production
    rate_feedback: float = 0.02  # extra gain per revealed mistake (modes A/B)
    latency_mean_ms: float = 120.0
    latency_jitter_ms: float = 40.0
    quit_probability: float = 0.0  # per song
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.strengths) != 7:
            raise ValueError("strengths needs one value per pitch (7)")
        for name in ("base_error", "quit_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {value}")
        if any(not 0.0 <= s <= 1.0 for s in self.strengths):
            raise ValueError("strengths must lie in [0,1]")
        if self.rate_feedback < 0 or self.rate_correct < 0:
            raise ValueError("learning rates must be non-negative")


@dataclass(frozen=True)
class SessionOutcome:
    """Per-pitch tallies of one finished session."""

    correct: dict[Pitch, int]
    mistakes: dict[Pitch, int]


def _draw_played_pitch(model: LearnerModel, target: Pitch, rng: random.Random) -> Pitch:
    p_correct = model.strengths[int(target)] * (1.0 - model.base_error)
    if rng.random() < p_correct:
        return target
    neighbors = [Pitch(d) for d in (int(target) - 1, int(target) + 1) if 0 <= d <= 6]
    return rng.choice(neighbors)


def perform(
    model: LearnerModel,
    piece: Piece,
    mode: Mode,
    tempo: float,
    rng: random.Random | None = None,
) -> PerformanceRecord:
    """Play the piece once; one attempt per note at onset plus reaction latency.

    In mode B the gate forces corrections: a wrong attempt is followed, one
    reaction later, by a step toward the arrow direction until the gate note
    sounds. The timed modes draw exactly the same random sequence per note,
    so records are comparable across A/C/D for a shared rng state.
    """
    if rng is None:
        rng = random.Random(model.seed)
    ms_per_beat = 60000.0 / tempo
    events: list[PerformanceEvent] = []
    t_floor = 0.0
    if mode is Mode.B:
        t = 0.0
        for note in piece.notes:
            t += max(0.0, rng.gauss(model.latency_mean_ms, model.latency_jitter_ms))
            played = _draw_played_pitch(model, note.pitch, rng)
            events.append(PerformanceEvent(t, fingering_for_pitch(played)))
            t += 2 * HOLD_SLACK_MS
            while played is not note.pitch:
                step = 1 if note.pitch > played else -1
                played = Pitch(int(played) + step)
                t += max(0.0, rng.gauss(model.latency_mean_ms, model.latency_jitter_ms))
                events.append(PerformanceEvent(t, fingering_for_pitch(played)))
                t += 2 * HOLD_SLACK_MS
        end_t = t
    else:
        for note in piece.notes:
            latency = max(0.0, rng.gauss(model.latency_mean_ms, model.latency_jitter_ms))
            played = _draw_played_pitch(model, note.pitch, rng)
            t = max(float(note.onset) * ms_per_beat + latency, t_floor)
            events.append(PerformanceEvent(t, fingering_for_pitch(played)))
            t_floor = t
        end_t = max(piece.duration_ms(tempo), t_floor)
    return PerformanceRecord(
        piece_id=piece.id, mode=mode, tempo=tempo, events=tuple(events), end_t=end_t
    )


def session_outcome(piece: Piece, record: PerformanceRecord, tempo: float) -> SessionOutcome:
    """Note-level tallies: a note counts as correct iff its coverage passes."""
    correct: dict[Pitch, int] = {}
    mistakes: dict[Pitch, int] = {}
    for note, coverage in zip(piece.notes, compute_coverage(piece, record, tempo)):
        bucket = correct if coverage.passed else mistakes
        bucket[note.pitch] = bucket.get(note.pitch, 0) + 1
    return SessionOutcome(correct=correct, mistakes=mistakes)


def practice_update(model: LearnerModel, outcome: SessionOutcome, mode: Mode) -> LearnerModel:
    """Reinforce mappings the session produced; feedback reveals the misses.

    Correct productions always reinforce. Mistakes additionally reinforce in
    the interactive modes only, where the interface shows what was missed.
    """
    strengths = list(model.strengths)
    for pitch, count in outcome.correct.items():
        strengths[int(pitch)] += model.rate_correct * count
    if mode.interactive:
        for pitch, count in outcome.mistakes.items():
            strengths[int(pitch)] += model.rate_feedback * count
    clamped = tuple(min(1.0, max(0.0, s)) for s in strengths)
    return replace(model, strengths=clamped)


@dataclass(frozen=True)
class CohortConfig:
    curriculum_path: Path
    group_sizes: dict[str, int] = field(
        default_factory=lambda: {GROUP_INTERACTIVE: 8, GROUP_STATIC: 8}
    )
    master_seed: int = 0
    learner: LearnerModel = LearnerModel()
    practice_passes: int = 4
    skip_on_passing_pre: bool = True
    group_modes: dict[str, tuple[Mode, ...]] = field(
        default_factory=lambda: dict(GROUP_MODES)
    )

    def __post_init__(self) -> None:
        if set(self.group_sizes) != set(GROUPS):
            raise ValueError(f"group_sizes must cover exactly {GROUPS}")
        if any(n < 1 for n in self.group_sizes.values()):
            raise ValueError("every group needs at least one subject")
        if {g: tuple(m) for g, m in self.group_modes.items()} != GROUP_MODES:
            raise ValueError("group_modes must map interactive->(A,B), static->(C,D)")
        if self.practice_passes < 0:
            raise ValueError("practice_passes must be non-negative")


@dataclass(frozen=True)
class SubjectResult:
    subject_id: str
    group: str
    status: cur.CurriculumStatus
    history: tuple[cur.ExamResult, ...]
    efficiency: float


@dataclass(frozen=True)
class StudyDataset:
    curriculum_id: str
    master_seed: int
    subjects: tuple[SubjectResult, ...]

    def efficiencies(self) -> dict[str, list[float]]:
        out: dict[str, list[float]] = {g: [] for g in GROUPS}
        for s in self.subjects:
            out[s.group].append(s.efficiency)
        return out


def subject_seed(master_seed: int, subject_index: int) -> int:
    """Stable per-subject seed split; the same index in each group matches."""
    digest = hashlib.sha256(f"{master_seed}/{subject_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def run_subject(
    subject_id: str,
    group: str,
    pieces: Sequence[Piece],
    config: CohortConfig,
    seed: int,
) -> SubjectResult:
    """One subject's full run through the arranged curriculum."""
    rng = random.Random(seed)
    model = replace(config.learner, seed=seed)
    state = cur.CurriculumState.start([p.id for p in pieces])
    practice_mode = PRACTICE_MODE[group]

    for piece in pieces:
        if state.status is not cur.CurriculumStatus.RUNNING:
            break
        tempo = piece.default_tempo
        pre_record = perform(model, piece, EXAM_MODE, tempo, rng)
        pre = score_performance(compute_coverage(piece, pre_record, tempo))

        achieves_now = pre >= cur.PASS_SCORE and state.consecutive_passes >= 2
        if achieves_now:
            state = cur.step_song(state, pre)
        elif pre >= cur.PASS_SCORE and config.skip_on_passing_pre:
            state = cur.step_song(state, pre, skip=True)
        else:
            # Listening to the ground truth carries no motor information for
            # this model, so only the practice passes update it.
            elapsed = 0.0
            for _ in range(config.practice_passes):
                if not cur.practice_budget(elapsed):
                    break
                practice_record = perform(model, piece, practice_mode, tempo, rng)
                outcome = session_outcome(piece, practice_record, tempo)
                model = practice_update(model, outcome, practice_mode)
                elapsed += piece.duration_ms(tempo)
            exam_piece = cur.randomize_pitches(piece, seed=rng.randrange(2**32))
            exam_record = perform(model, exam_piece, EXAM_MODE, tempo, rng)
            exam = score_performance(compute_coverage(exam_piece, exam_record, tempo))
            state = cur.step_song(state, pre, exam_score=exam)

        if (
            state.status is cur.CurriculumStatus.RUNNING
            and rng.random() < model.quit_probability
        ):
            state = cur.mark_quit(state)

    if state.status is cur.CurriculumStatus.ACHIEVED:
        efficiency = cur.learning_efficiency(state)
    else:
        efficiency = EFFICIENCY_FLOOR
    return SubjectResult(
        subject_id=subject_id,
        group=group,
        status=state.status,
        history=state.history,
        efficiency=efficiency,
    )


def run_cohort(config: CohortConfig, pieces: Sequence[Piece] | None = None) -> StudyDataset:
    """Run the whole study once; bit-reproducible from the master seed."""
    if pieces is None:
        pieces = load_curriculum(config.curriculum_path)
    curriculum_id = load_manifest(config.curriculum_path).id
    arranged = cur.arrange_alternating(pieces)
    subjects: list[SubjectResult] = []
    for group in GROUPS:
        for index in range(config.group_sizes[group]):
            subjects.append(
                run_subject(
                    subject_id=f"{group[0]}{index:02d}",
                    group=group,
                    pieces=arranged,
                    config=config,
                    seed=subject_seed(config.master_seed, index),
                )
            )
    return StudyDataset(
        curriculum_id=curriculum_id,
        master_seed=config.master_seed,
        subjects=tuple(subjects),
    )


# -- JSON round trip -------------------------------------------------------------


def dataset_to_json(dataset: StudyDataset) -> str:
    payload = {
        "curriculum_id": dataset.curriculum_id,
        "master_seed": dataset.master_seed,
        "subjects": [
            {
                "subject_id": s.subject_id,
                "group": s.group,
                "status": s.status.value,
                "efficiency": s.efficiency,
                "history": [
                    {
                        "piece_id": r.piece_id,
                        "kind": r.kind.value,
                        "score": r.score,
                        "index": r.index,
                    }
                    for r in s.history
                ],
            }
            for s in dataset.subjects
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def dataset_from_json(text: str) -> StudyDataset:
    raw = json.loads(text)
    subjects = tuple(
        SubjectResult(
            subject_id=s["subject_id"],
            group=s["group"],
            status=cur.CurriculumStatus(s["status"]),
            history=tuple(
                cur.ExamResult(
                    piece_id=r["piece_id"],
                    kind=cur.ExamKind(r["kind"]),
                    score=r["score"],
                    index=r["index"],
                )
                for r in s["history"]
            ),
            efficiency=s["efficiency"],
        )
        for s in raw["subjects"]
    )
    return StudyDataset(
        curriculum_id=raw["curriculum_id"],
        master_seed=raw["master_seed"],
        subjects=subjects,
    )


def load_cohort_config(path: str | Path) -> CohortConfig:
    """Read a cohort description from JSON (see README for the shape)."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    learner_raw = raw.get("learner", {})
    learner = LearnerModel(
        strengths=tuple(learner_raw.get("strengths", (0.3,) * 7)),
        base_error=learner_raw.get("base_error", 0.05),
        rate_correct=learner_raw.get("rate_correct", 0.02),
        rate_feedback=learner_raw.get("rate_feedback", 0.02),
        latency_mean_ms=learner_raw.get("latency_mean_ms", 120.0),
        latency_jitter_ms=learner_raw.get("latency_jitter_ms", 40.0),
        quit_probability=learner_raw.get("quit_probability", 0.0),
    )
    curriculum_path = Path(raw["curriculum"])
    if not curriculum_path.is_absolute():
        curriculum_path = path.parent / curriculum_path
    sizes = raw.get("group_sizes", {GROUP_INTERACTIVE: 8, GROUP_STATIC: 8})
    return CohortConfig(
        curriculum_path=curriculum_path,
        group_sizes={g: int(n) for g, n in sizes.items()},
        master_seed=int(raw.get("master_seed", 0)),
        learner=learner,
        practice_passes=int(raw.get("practice_passes", 4)),
        skip_on_passing_pre=bool(raw.get("skip_on_passing_pre", True)),
    )
