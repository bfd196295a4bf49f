"""Plain-text piece documents (``.rbs``) and curriculum manifests.

Document format::

    id: river-run
    title: River Run
    tempo: 92
    beats_per_measure: 4

    C q D q E q F q | G q A q B q A q
    G h E h | C w

A header of ``key: value`` lines is separated from the body by a blank
line. The body is a whitespace-separated token stream: each note is a pitch
letter (C D E F G A B) followed by a duration token, and ``|`` asserts that
the running beat total sits on a measure boundary. Duration tokens are
w=4, h=2, q=1, e=1/2, s=1/4 beats; a trailing ``.`` multiplies by 3/2.
``#`` starts a comment running to end of line. Notes are contiguous: each
onset is the running total of the durations before it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterator

from .notation import Note, Piece, Pitch, Severity, Violation, validate_piece

DURATION_BEATS = {
    "w": Fraction(4),
    "h": Fraction(2),
    "q": Fraction(1),
    "e": Fraction(1, 2),
    "s": Fraction(1, 4),
}
DOT_FACTOR = Fraction(3, 2)

_TOKEN_OF_BEATS = {beats: tok for tok, beats in DURATION_BEATS.items()}
_TOKEN_OF_BEATS.update({beats * DOT_FACTOR: tok + "." for tok, beats in DURATION_BEATS.items()})

_HEADER_KEYS = ("id", "title", "tempo", "beats_per_measure")

PIECE_SUFFIX = ".rbs"


class ParseError(ValueError):
    """Syntax error in a piece document, with 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PieceValidationError(ValueError):
    """A structurally parsable document that breaks the piece invariants."""

    def __init__(self, piece_id: str, violations: list[Violation]):
        detail = "; ".join(f"{v.code}: {v.message}" for v in violations)
        super().__init__(f"piece {piece_id!r} is invalid: {detail}")
        self.violations = violations


class SerializationError(ValueError):
    """The piece cannot be written in the document grammar."""


class CurriculumError(ValueError):
    """A manifest or one of its piece files failed to load."""


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize_body(lines: list[str], start_line: int) -> Iterator[_Token]:
    for offset, raw in enumerate(lines):
        line_no = start_line + offset
        line = raw.split("#", 1)[0]
        column = 1
        for chunk in line.split(" "):
            if chunk.strip():
                yield _Token(chunk.strip(), line_no, column + len(chunk) - len(chunk.lstrip()))
            column += len(chunk) + 1


def _parse_header(lines: list[str]) -> tuple[dict[str, str], int]:
    """Header fields and the 1-based line number where the body starts."""
    fields: dict[str, str] = {}
    for index, raw in enumerate(lines):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if fields:
                return fields, index + 2
            continue
        if ":" not in line:
            # No header yet and no colon: the document starts with the body.
            if not fields:
                return fields, index + 1
            raise ParseError("expected 'key: value' header line", index + 1, 1)
        key, value = (part.strip() for part in line.split(":", 1))
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown header key {key!r}", index + 1, 1)
        if key in fields:
            raise ParseError(f"duplicate header key {key!r}", index + 1, 1)
        fields[key] = value
    return fields, len(lines) + 1


def _parse_duration(token: _Token) -> Fraction:
    text = token.text
    dotted = text.endswith(".")
    base = text[:-1] if dotted else text
    if base not in DURATION_BEATS:
        raise ParseError(f"unknown duration token {text!r}", token.line, token.column)
    beats = DURATION_BEATS[base]
    return beats * DOT_FACTOR if dotted else beats


def parse_piece(text: str, *, fallback_id: str = "untitled") -> Piece:
    """Parse and validate a piece document.

    Raises :class:`ParseError` on malformed input, :class:`PieceValidationError`
    when the document parses but breaks an error-level invariant. Warnings
    (page overflow) do not raise.
    """
    lines = text.splitlines()
    header, body_start = _parse_header(lines)

    piece_id = header.get("id", fallback_id)
    title = header.get("title", piece_id)
    try:
        tempo = float(header.get("tempo", "90"))
    except ValueError:
        raise ParseError(f"tempo is not a number: {header['tempo']!r}", 1, 1) from None
    try:
        beats_per_measure = int(header.get("beats_per_measure", "4"))
    except ValueError:
        raise ParseError(
            f"beats_per_measure is not an integer: {header['beats_per_measure']!r}", 1, 1
        ) from None
    if beats_per_measure < 1 or tempo <= 0:
        raise ParseError("tempo and beats_per_measure must be positive", 1, 1)

    notes: list[Note] = []
    cursor = Fraction(0)
    last_bar = Fraction(-1)
    pending_pitch: _Token | None = None
    for token in _tokenize_body(lines[body_start - 1 :], body_start):
        if token.text == "|":
            if pending_pitch is not None:
                raise ParseError(
                    f"pitch {pending_pitch.text!r} is missing its duration",
                    pending_pitch.line,
                    pending_pitch.column,
                )
            if cursor == last_bar:
                raise ParseError("empty measure before '|'", token.line, token.column)
            if cursor % beats_per_measure != 0:
                raise ParseError(
                    f"'|' at beat {cursor} is not a multiple of {beats_per_measure}",
                    token.line,
                    token.column,
                )
            last_bar = cursor
        elif pending_pitch is None:
            if token.text not in Pitch.__members__:
                raise ParseError(f"unknown pitch {token.text!r}", token.line, token.column)
            pending_pitch = token
        else:
            beats = _parse_duration(token)
            notes.append(Note(Pitch[pending_pitch.text], cursor, beats))
            cursor += beats
            pending_pitch = None
    if pending_pitch is not None:
        raise ParseError(
            f"pitch {pending_pitch.text!r} is missing its duration",
            pending_pitch.line,
            pending_pitch.column,
        )

    piece = Piece(
        id=piece_id,
        title=title,
        notes=tuple(notes),
        beats_per_measure=beats_per_measure,
        default_tempo=tempo,
    )
    errors = [v for v in validate_piece(piece) if v.severity is Severity.ERROR]
    if errors:
        raise PieceValidationError(piece.id, errors)
    return piece


def serialize_piece(piece: Piece) -> str:
    """Canonical text for a piece; ``parse_piece`` of the result is identity.

    Only contiguous pieces whose durations exist in the token grammar are
    representable; anything else raises :class:`SerializationError`.
    """
    for name, value in (("id", piece.id), ("title", piece.title)):
        if "#" in value or "\n" in value or value != value.strip():
            raise SerializationError(f"{name} {value!r} is not representable in a header line")
    tempo = piece.default_tempo
    tempo_text = str(int(tempo)) if tempo == int(tempo) else repr(tempo)
    header = [
        f"id: {piece.id}",
        f"title: {piece.title}",
        f"tempo: {tempo_text}",
        f"beats_per_measure: {piece.beats_per_measure}",
        "",
    ]
    tokens: list[str] = []
    cursor = Fraction(0)
    measures_on_line = 0
    lines: list[str] = []
    for index, note in enumerate(piece.notes):
        if note.onset != cursor:
            raise SerializationError(
                f"note {index} at beat {note.onset} leaves a gap after beat {cursor}; "
                "the grammar has no rest token"
            )
        if note.duration not in _TOKEN_OF_BEATS:
            raise SerializationError(
                f"duration {note.duration} of note {index} has no duration token"
            )
        if cursor > 0 and cursor % piece.beats_per_measure == 0:
            tokens.append("|")
            measures_on_line += 1
            if measures_on_line == 4:
                lines.append(" ".join(tokens[:-1]))
                tokens = []
                measures_on_line = 0
        tokens.append(f"{note.pitch.name} {_TOKEN_OF_BEATS[note.duration]}")
        cursor += note.duration
    if tokens:
        lines.append(" ".join(tokens))
    return "\n".join(header + lines) + "\n"


@dataclass(frozen=True)
class CurriculumManifest:
    """Ordered piece file references making up one curriculum."""

    id: str
    piece_paths: tuple[Path, ...]
    base_dir: Path

    def resolved_paths(self) -> list[Path]:
        return [p if p.is_absolute() else self.base_dir / p for p in self.piece_paths]


def load_manifest(path: str | Path) -> CurriculumManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CurriculumError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CurriculumError(f"manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict) or "id" not in raw or "pieces" not in raw:
        raise CurriculumError(f"manifest {path} must be an object with 'id' and 'pieces'")
    pieces = tuple(Path(p) for p in raw["pieces"])
    return CurriculumManifest(id=str(raw["id"]), piece_paths=pieces, base_dir=path.parent)


def load_curriculum(manifest: CurriculumManifest | str | Path) -> list[Piece]:
    """Parse and validate every piece in the manifest (at least two).

    Any parse or validation failure aborts the load, naming the file.
    """
    if not isinstance(manifest, CurriculumManifest):
        manifest = load_manifest(manifest)
    paths = manifest.resolved_paths()
    if len(paths) < 2:
        raise CurriculumError(
            f"curriculum {manifest.id!r} lists {len(paths)} pieces; at least 2 required"
        )
    pieces: list[Piece] = []
    seen_ids: set[str] = set()
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise CurriculumError(f"cannot read piece file {path}: {exc}") from None
        try:
            piece = parse_piece(text, fallback_id=path.stem)
        except (ParseError, PieceValidationError) as exc:
            raise CurriculumError(f"piece file {path}: {exc}") from None
        if piece.id in seen_ids:
            raise CurriculumError(f"piece file {path}: duplicate piece id {piece.id!r}")
        seen_ids.add(piece.id)
        pieces.append(piece)
    return pieces


def builtin_manifest_path() -> Path:
    """Path of the packaged 16-piece curriculum manifest."""
    return Path(str(resources.files("rainbowscore").joinpath("corpus/manifest.json")))
