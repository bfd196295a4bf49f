"""Session service: hosts live sessions over WebSocket and owns persistence.

Wire protocol: each WebSocket text message is one JSON object followed by a
newline::

    {"seq": 3, "kind": "fingering", "payload": {"t": 512.0, "covered": [...]}}

Sequence numbers increase strictly per direction per connection. Message
kinds are ``hello``, ``start``, ``fingering``, ``frame``, ``note-result``,
``exam-result``, ``review`` and ``error``; anything else is rejected. The
server opens every connection with a ``hello`` carrying the schema version
and the curriculum, one live session runs per connection at a time, and
fingering timestamps (client-relative ms) are rebased onto session time at
first receipt.

Persistence is an append-only JSON-lines event log per subject plus one
JSON-lines file per session record; curriculum state is reconstructed by
replaying song-step events through the curriculum transitions.
"""

from __future__ import annotations

import asyncio
import hashlib
import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import curriculum as cur
from .engine import (
    FeedbackFrame,
    Mode,
    PerformanceEvent,
    PerformanceRecord,
    Session,
    UnfinishedSessionError,
    build_review,
    record_from_jsonl,
    record_to_jsonl,
    score_record,
    start_session,
)
from .notation import Fingering, Piece
from .scorefile import load_curriculum, load_manifest

SCHEMA_VERSION = 1

MESSAGE_KINDS = (
    "hello",
    "start",
    "fingering",
    "frame",
    "note-result",
    "exam-result",
    "review",
    "error",
)

PURPOSES = ("practice", "free", "pre-exam", "exam", "skip", "stop")


@dataclass
class ServiceConfig:
    curriculum_path: Path
    data_dir: Path
    frame_rate: float = 30.0
    practice_budget_ms: float = cur.PRACTICE_BUDGET_MS
    exam_seed: int = 0
    group: str = "both"  # "interactive" | "static" | "both"

    def allowed_modes(self) -> tuple[Mode, ...]:
        if self.group == "interactive":
            return (Mode.A, Mode.B)
        if self.group == "static":
            return (Mode.C, Mode.D)
        return (Mode.A, Mode.B, Mode.C, Mode.D)


@dataclass
class _SubjectView:
    state: cur.CurriculumState
    pending_pre: float | None = None
    practice_ms: dict[str, float] = field(default_factory=dict)


class SubjectStore:
    """Append-only per-subject event log; state is rebuilt by replay."""

    def __init__(self, data_dir: Path, piece_order: list[str]):
        self.data_dir = Path(data_dir)
        self.piece_order = piece_order
        (self.data_dir / "subjects").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        self._session_counter = itertools.count()

    def _log_path(self, subject: str) -> Path:
        return self.data_dir / "subjects" / f"{subject}.jsonl"

    def _append(self, subject: str, event: dict[str, Any]) -> None:
        with open(self._log_path(subject), "a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")

    def events(self, subject: str) -> list[dict[str, Any]]:
        path = self._log_path(subject)
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]

    def view(self, subject: str) -> _SubjectView:
        """Reconstruct the subject's curriculum state from the event log."""
        state = cur.CurriculumState.start(self.piece_order)
        view = _SubjectView(state=state)
        for event in self.events(subject):
            if event["type"] == "song-step":
                view.state = cur.step_song(
                    view.state,
                    event["pre"],
                    skip=event["skip"],
                    exam_score=event["exam"],
                )
                view.pending_pre = None
            elif event["type"] == "pre-exam":
                view.pending_pre = event["score"]
            elif event["type"] == "quit":
                view.state = cur.mark_quit(view.state)
            elif event["type"] == "practice":
                piece = event["piece_id"]
                view.practice_ms[piece] = view.practice_ms.get(piece, 0.0) + event["ms"]
        return view

    def log_pre_exam(self, subject: str, piece_id: str, score: float) -> None:
        self._append(subject, {"type": "pre-exam", "piece_id": piece_id, "score": score})

    def log_song_step(
        self, subject: str, piece_id: str, pre: float, skip: bool, exam: float | None
    ) -> None:
        self._append(
            subject,
            {"type": "song-step", "piece_id": piece_id, "pre": pre, "skip": skip, "exam": exam},
        )

    def log_practice(self, subject: str, piece_id: str, ms: float) -> None:
        self._append(subject, {"type": "practice", "piece_id": piece_id, "ms": ms})

    def save_session(
        self, subject: str, purpose: str, record: PerformanceRecord, status: str
    ) -> Path:
        name = f"{subject}-{next(self._session_counter):05d}-{int(time.time() * 1000)}.jsonl"
        path = self.data_dir / "sessions" / name
        path.write_text(record_to_jsonl(record), encoding="utf-8")
        self._append(
            subject,
            {
                "type": "session",
                "file": str(path.relative_to(self.data_dir)),
                "piece_id": record.piece_id,
                "mode": record.mode.value,
                "tempo": record.tempo,
                "purpose": purpose,
                "status": status,
            },
        )
        return path

    def load_record(self, path: str | Path) -> PerformanceRecord:
        path = Path(path)
        if not path.is_absolute():
            path = self.data_dir / path
        return record_from_jsonl(path.read_text(encoding="utf-8"))

    def pending_session(self, subject: str) -> dict[str, Any] | None:
        """Most recent quit-in-progress session event, if it was the last one."""
        for event in reversed(self.events(subject)):
            if event["type"] == "session":
                return event if event["status"] == "quit-in-progress" else None
        return None

    def export_exams_csv(self, path: str | Path, subjects: list[str]) -> None:
        cur.write_exam_csv(path, [(s, self.view(s).state.history) for s in subjects])


def piece_payload(piece: Piece) -> dict[str, Any]:
    """Full piece description as the wire carries it, notes included (beats
    as floats; the engine keeps the exact grid, the UI only draws it)."""
    return {
        "id": piece.id,
        "title": piece.title,
        "tempo": piece.default_tempo,
        "beats_per_measure": piece.beats_per_measure,
        "notes": [
            {
                "degree": int(n.pitch),
                "onset": float(n.onset),
                "duration": float(n.duration),
            }
            for n in piece.notes
        ],
    }


def _frame_payload(frame: FeedbackFrame) -> dict[str, Any]:
    mask = None
    if frame.active_mask is not None:
        mask = {
            "played_row": frame.active_mask.played_row,
            "target_row": frame.active_mask.target_row,
            "arrow": frame.active_mask.arrow.value,
            "span": list(frame.active_mask.span),
        }
    return {
        "t": frame.t,
        "playhead_beats": frame.playhead_beats,
        "note_statuses": None
        if frame.note_statuses is None
        else [s.value for s in frame.note_statuses],
        "active_mask": mask,
        "metronome_beat": frame.metronome_beat,
    }


def _review_payload(review) -> dict[str, Any]:
    def segments(track):
        return [
            {
                "start_ms": seg.start_ms,
                "end_ms": seg.end_ms,
                "pitch": None if seg.pitch is None else int(seg.pitch),
            }
            for seg in track
        ]

    return {
        "piece_id": review.piece_id,
        "tempo": review.tempo,
        "ground_truth": segments(review.ground_truth),
        "played": segments(review.played),
        "note_correct": list(review.note_correct),
    }


class _Connection:
    """Per-connection protocol state: sequence tracking and one live session."""

    def __init__(self, app_state: "_AppState", websocket: WebSocket, subject: str):
        self.app = app_state
        self.ws = websocket
        self.subject = subject
        self.out_seq = 0
        self.last_in_seq = 0
        self.session: Session | None = None
        self.session_task: asyncio.Task | None = None
        self.purpose: str = "free"
        self.piece: Piece | None = None
        self.exam_piece: Piece | None = None
        self.t0: float = 0.0
        self.client_offset: float | None = None
        self.send_lock = asyncio.Lock()

    async def send(self, kind: str, payload: dict[str, Any]) -> None:
        self.out_seq += 1
        message = {"seq": self.out_seq, "kind": kind, "payload": payload}
        async with self.send_lock:
            await self.ws.send_text(json.dumps(message) + "\n")

    async def error(self, message: str) -> None:
        await self.send("error", {"message": message})

    def now_ms(self) -> float:
        return (time.monotonic() - self.t0) * 1000.0

    # -- message handlers ----------------------------------------------------

    async def handle(self, raw: str) -> None:
        try:
            message = json.loads(raw)
        except json.JSONDecodeError:
            await self.error("message is not valid JSON")
            return
        seq = message.get("seq")
        if not isinstance(seq, int) or seq <= self.last_in_seq:
            await self.error(f"sequence number {seq!r} is not strictly increasing")
            return
        self.last_in_seq = seq
        kind = message.get("kind")
        if kind not in MESSAGE_KINDS:
            await self.error(f"unknown message kind {kind!r}")
            return
        payload = message.get("payload") or {}
        if kind == "start":
            await self.on_start(payload)
        elif kind == "fingering":
            await self.on_fingering(payload)
        else:
            await self.error(f"clients may not send {kind!r} messages")

    async def on_start(self, payload: dict[str, Any]) -> None:
        purpose = payload.get("purpose", "practice")
        if purpose not in PURPOSES:
            await self.error(f"unknown purpose {purpose!r}")
            return
        if purpose == "stop":
            if self.session is None:
                await self.error("no session to stop")
                return
            await self.finalize("stopped")
            return
        if purpose == "skip":
            await self.on_skip()
            return
        if self.session is not None:
            await self.error("a session is already running; stop it first")
            return

        view = self.app.store.view(self.subject)
        if purpose in ("pre-exam", "exam"):
            piece_id = view.state.current_piece_id
            if piece_id is None:
                await self.error(f"curriculum is {view.state.status.value}; no exam due")
                return
            mode = Mode.C
            if purpose == "exam" and view.pending_pre is None:
                await self.error("the song's pre-exam has not been taken")
                return
        else:
            piece_id = payload.get("piece_id") or view.state.current_piece_id
            if piece_id is None or piece_id not in self.app.pieces_by_id:
                await self.error(f"unknown piece {piece_id!r}")
                return
            try:
                mode = Mode(payload.get("mode", "D"))
            except ValueError:
                await self.error(f"unknown mode {payload.get('mode')!r}")
                return
            if mode not in self.app.config.allowed_modes():
                await self.error(f"mode {mode.value} is not available to this group")
                return

        piece = self.app.pieces_by_id[piece_id]
        self.piece = piece
        self.exam_piece = None
        if purpose == "exam":
            seed = self.app.exam_seed_for(self.subject, piece_id)
            self.exam_piece = cur.randomize_pitches(piece, seed)
        tempo = float(payload.get("tempo", piece.default_tempo))
        if tempo <= 0:
            await self.error(f"tempo must be positive: {tempo}")
            return
        target = self.exam_piece if self.exam_piece is not None else piece
        self.session = start_session(mode, target, tempo, frame_rate=self.app.config.frame_rate)
        self.purpose = purpose
        self.t0 = time.monotonic()
        self.client_offset = None
        if payload.get("resume"):
            pending = self.app.store.pending_session(self.subject)
            if pending and pending["piece_id"] == piece_id and Mode(pending["mode"]) is mode:
                prior = self.app.store.load_record(pending["file"])
                for event in prior.events:
                    self.session.on_fingering(event)
                self.t0 = time.monotonic() - self.session.time / 1000.0
        # Acknowledge with the material actually on the stand: for exams that
        # is the randomized piece, which the client has never seen.
        await self.send(
            "start",
            {
                "purpose": purpose,
                "mode": mode.value,
                "tempo": tempo,
                "piece": piece_payload(target),
            },
        )
        self.session_task = asyncio.create_task(self.run_clock())

    async def on_skip(self) -> None:
        view = self.app.store.view(self.subject)
        piece_id = view.state.current_piece_id
        if piece_id is None or view.pending_pre is None:
            await self.error("no pre-exam on record for the current song")
            return
        if view.pending_pre < cur.PASS_SCORE:
            await self.error(
                f"skip requires a pre-exam of {cur.PASS_SCORE:.0%}, got {view.pending_pre:.0%}"
            )
            return
        self.app.store.log_song_step(self.subject, piece_id, view.pending_pre, True, None)
        state = self.app.store.view(self.subject).state
        await self.send(
            "exam-result",
            {
                "piece_id": piece_id,
                "kind": "pre",
                "score": view.pending_pre,
                "skipped": True,
                "curriculum": self._curriculum_payload(state),
            },
        )

    async def on_fingering(self, payload: dict[str, Any]) -> None:
        if self.session is None:
            await self.error("no session running")
            return
        try:
            fingering = Fingering.from_bits(payload["covered"])
            client_t = float(payload["t"])
        except (KeyError, ValueError, TypeError):
            await self.error("fingering payload needs 't' and 6-element 'covered'")
            return
        if self.client_offset is None:
            self.client_offset = self.now_ms() - client_t
        t = max(client_t + self.client_offset, self.session.time)
        if self.session.complete:
            return
        before = self.session.gate_index if self.session.mode is Mode.B else None
        frame = self.session.on_fingering(PerformanceEvent(t, fingering))
        if frame is not None:
            await self.send("frame", _frame_payload(frame))
        if before is not None and self.session.gate_index > before:
            await self._send_note_results(before, self.session.gate_index)
        if self.session.complete:
            await self.finalize("complete")

    async def _send_note_results(self, start: int, stop: int) -> None:
        for index in range(start, stop):
            await self.send("note-result", {"note_index": index, "status": "correct"})

    async def run_clock(self) -> None:
        """Frame-rate loop: advances clocked sessions, polls gated ones,
        and enforces the practice budget on practice sessions."""
        period = 1.0 / self.app.config.frame_rate
        try:
            while self.session is not None and not self.session.complete:
                await asyncio.sleep(period)
                session = self.session
                if session is None:
                    return
                t = self.now_ms()
                if session.mode.system_led:
                    for frame in session.advance_clock(t):
                        await self.send("frame", _frame_payload(frame))
                elif session.mode is Mode.B:
                    before = session.gate_index
                    frame = session.poll(t)
                    if frame is not None:
                        await self.send("frame", _frame_payload(frame))
                    if session.gate_index > before:
                        await self._send_note_results(before, session.gate_index)
                if self.purpose == "practice" and self.piece is not None:
                    spent = self.app.store.view(self.subject).practice_ms.get(self.piece.id, 0.0)
                    if not cur.practice_budget(spent + t, self.app.config.practice_budget_ms):
                        await self.error("practice budget exhausted; session closed")
                        await self.finalize("budget")
                        return
                if session.complete:
                    await self.finalize("complete")
                    return
        except asyncio.CancelledError:
            raise
        except WebSocketDisconnect:
            pass
        except Exception as exc:  # engine misuse must not die silently
            try:
                await self.error(f"session aborted: {exc}")
                await self.finalize("error")
            except Exception:
                pass

    async def finalize(self, reason: str) -> None:
        session, piece = self.session, self.piece
        if session is None or piece is None:
            return
        self.session = None
        if self.session_task is not None and self.session_task is not asyncio.current_task():
            self.session_task.cancel()
        self.session_task = None
        record = session.finish(max(self.now_ms(), session.time)) if not session.complete else session.record()
        complete = reason == "complete"
        status = "done" if complete else "quit-in-progress"
        if self.purpose == "practice":
            self.app.store.log_practice(self.subject, piece.id, record.end_t)
            status = "done" if reason in ("complete", "stopped", "budget") else status
        self.app.store.save_session(self.subject, self.purpose, record, status)

        if self.purpose in ("pre-exam", "exam") and complete:
            target = self.exam_piece if self.exam_piece is not None else piece
            score = score_record(target, record)
            if self.purpose == "pre-exam":
                self.app.store.log_pre_exam(self.subject, piece.id, score)
                state = self.app.store.view(self.subject).state
                await self.send(
                    "exam-result",
                    {
                        "piece_id": piece.id,
                        "kind": "pre",
                        "score": score,
                        "skip_eligible": score >= cur.PASS_SCORE,
                        "curriculum": self._curriculum_payload(state),
                    },
                )
            else:
                view = self.app.store.view(self.subject)
                pre = view.pending_pre if view.pending_pre is not None else 0.0
                self.app.store.log_song_step(self.subject, piece.id, pre, False, score)
                state = self.app.store.view(self.subject).state
                await self.send(
                    "exam-result",
                    {
                        "piece_id": piece.id,
                        "kind": "randomized",
                        "score": score,
                        "curriculum": self._curriculum_payload(state),
                    },
                )
        try:
            target = self.exam_piece if self.exam_piece is not None else piece
            review = build_review(target, record, record.tempo)
            await self.send("review", _review_payload(review))
        except UnfinishedSessionError:
            pass

    def _curriculum_payload(self, state: cur.CurriculumState) -> dict[str, Any]:
        return {
            "position": state.position,
            "status": state.status.value,
            "consecutive_passes": state.consecutive_passes,
            "exams_taken": len(state.history),
        }

    async def close(self) -> None:
        if self.session is not None:
            # Disconnected mid-session: persist what we have as resumable.
            session, piece = self.session, self.piece
            self.session = None
            if self.session_task is not None:
                self.session_task.cancel()
            was_complete = session.complete
            record = (
                session.record()
                if was_complete
                else session.finish(max(self.now_ms(), session.time))
            )
            status = "done" if was_complete else "quit-in-progress"
            if self.purpose == "practice":
                self.app.store.log_practice(self.subject, piece.id, record.end_t)
            self.app.store.save_session(self.subject, self.purpose, record, status)


class _AppState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        manifest = load_manifest(config.curriculum_path)
        pieces = load_curriculum(manifest)
        self.curriculum_id = manifest.id
        self.arranged = cur.arrange_alternating(pieces)
        self.pieces_by_id = {p.id: p for p in pieces}
        self.store = SubjectStore(config.data_dir, [p.id for p in self.arranged])

    def exam_seed_for(self, subject: str, piece_id: str) -> int:
        digest = hashlib.sha256(
            f"{self.config.exam_seed}/{subject}/{piece_id}".encode()
        ).digest()
        return int.from_bytes(digest[:8], "big")

    def hello_payload(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "curriculum": {
                "id": self.curriculum_id,
                "pieces": [piece_payload(p) for p in self.arranged],
            },
            "modes": [m.value for m in self.config.allowed_modes()],
        }


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="rainbowscore session service")
    state = _AppState(config)
    app.state.service = state

    @app.get("/healthz")
    async def healthz() -> dict[str, str]:
        return {"status": "ok", "curriculum": state.curriculum_id}

    @app.websocket("/session")
    async def session_endpoint(websocket: WebSocket, subject: str = "anonymous") -> None:
        await websocket.accept()
        connection = _Connection(state, websocket, subject)
        await connection.send("hello", state.hello_payload())
        try:
            while True:
                raw = await websocket.receive_text()
                await connection.handle(raw)
        except WebSocketDisconnect:
            await connection.close()

    return app


def serve(config: ServiceConfig, port: int, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
