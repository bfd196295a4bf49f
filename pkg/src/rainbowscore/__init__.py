"""Colored-notation sight-playing tutor for a six-hole flute.

Library layout:

* :mod:`rainbowscore.notation` - pitch/color/row/fingering trinity, piece
  model, validation, difficulty.
* :mod:`rainbowscore.scorefile` - ``.rbs`` text documents, manifests, and
  the packaged 16-piece curriculum.
* :mod:`rainbowscore.engine` - live sessions for the four learning modes,
  coverage scoring, reviews, record persistence.
* :mod:`rainbowscore.curriculum` - exam procedure, ordering, termination,
  learning efficiency.
* :mod:`rainbowscore.analytics` - learning curves, accumulated differences,
  t-tests, talent scatter.
* :mod:`rainbowscore.simulate` - seeded learner model and cohort runner.
* :mod:`rainbowscore.service` - WebSocket session service and subject store.
* :mod:`rainbowscore.reports` - figure rendering for the analyze pipeline.
"""

from .notation import (
    DifficultyScale,
    Fingering,
    Note,
    NoteColor,
    Piece,
    Pitch,
    color_of,
    difficulty,
    fingering_for_pitch,
    frequency_of,
    pitch_from_fingering,
    row_of,
    validate_piece,
)

__all__ = [
    "DifficultyScale",
    "Fingering",
    "Note",
    "NoteColor",
    "Piece",
    "Pitch",
    "color_of",
    "difficulty",
    "fingering_for_pitch",
    "frequency_of",
    "pitch_from_fingering",
    "row_of",
    "validate_piece",
]

__version__ = "0.1.0"
