"""Study-level statistics: learning curves, accumulated differences,
two-sample t-tests, and talent-vs-performance scatter data.

Subjects are compared per exam index over a fixed 32-slot series (16 songs,
two exams each). Subjects who achieve early have the remaining slots filled
with 100%; subjects who quit have the last valid score carried forward.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

from .curriculum import CurriculumStatus

SERIES_LENGTH = 32

GROUP_INTERACTIVE = "interactive"
GROUP_STATIC = "static"
GROUPS = (GROUP_INTERACTIVE, GROUP_STATIC)

Group = Literal["interactive", "static"]


class UnfinishedSubjectError(ValueError):
    """A still-running subject cannot enter the study analysis."""


@dataclass(frozen=True)
class SubjectSeries:
    """One subject's 32-slot exam-score series after the fill rules."""

    subject_id: str
    group: str
    scores: tuple[float, ...]
    raw_length: int

    def __post_init__(self) -> None:
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}")
        if len(self.scores) != SERIES_LENGTH:
            raise ValueError(f"series must have {SERIES_LENGTH} entries, got {len(self.scores)}")
        if any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise ValueError("scores must lie in [0, 1]")


def fill_series(
    scores: Sequence[float],
    status: CurriculumStatus | str,
    *,
    length: int = SERIES_LENGTH,
) -> tuple[float, ...]:
    """Pad an exam history to the full series length.

    Achieved subjects left the study early, so the rest counts as 100%;
    quitting subjects carry their last valid score forward. Running subjects
    are not admissible. Idempotent on already-full series.
    """
    status = CurriculumStatus(status)
    if status is CurriculumStatus.RUNNING:
        raise UnfinishedSubjectError("subject is still running; series cannot be filled")
    if len(scores) > length:
        raise ValueError(f"history of {len(scores)} exceeds the series length {length}")
    padding = length - len(scores)
    if padding == 0:
        return tuple(scores)
    if status is CurriculumStatus.ACHIEVED:
        fill = 1.0
    else:
        if not scores:
            raise UnfinishedSubjectError("a quitting subject needs at least one valid score")
        fill = scores[-1]
    return tuple(scores) + (fill,) * padding


def subject_series(
    subject_id: str,
    group: str,
    scores: Sequence[float],
    status: CurriculumStatus | str,
) -> SubjectSeries:
    return SubjectSeries(
        subject_id=subject_id,
        group=group,
        scores=fill_series(scores, status),
        raw_length=len(scores),
    )


def _split_groups(series: Sequence[SubjectSeries]) -> dict[str, list[SubjectSeries]]:
    groups: dict[str, list[SubjectSeries]] = {g: [] for g in GROUPS}
    for s in series:
        groups[s.group].append(s)
    return groups


def group_curves(series: Sequence[SubjectSeries]) -> dict[str, tuple[float, ...]]:
    """Per-exam-index mean score for each group."""
    groups = _split_groups(series)
    curves: dict[str, tuple[float, ...]] = {}
    for group, members in groups.items():
        if not members:
            raise ValueError(f"group {group!r} has no subjects")
        curves[group] = tuple(
            sum(m.scores[i] for m in members) / len(members) for i in range(SERIES_LENGTH)
        )
    return curves


def accumulated_difference(curves: dict[str, tuple[float, ...]]) -> tuple[float, ...]:
    """Prefix sums of the per-index mean difference (interactive - static)."""
    diffs = [
        a - b for a, b in zip(curves[GROUP_INTERACTIVE], curves[GROUP_STATIC])
    ]
    out: list[float] = []
    total = 0.0
    for d in diffs:
        total += d
        out.append(total)
    return tuple(out)


# -- Student's t ---------------------------------------------------------------

_BETA_EPS = 1e-12
_BETA_TINY = 1e-300
_BETA_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction of the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_TINY:
            d = _BETA_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETA_TINY:
            c = _BETA_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) evaluated by continued fraction, accurate to ~1e-12."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t with ``df`` degrees."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive: {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def _mean_var(sample: Sequence[float]) -> tuple[float, float]:
    n = len(sample)
    mean = sum(sample) / n
    var = sum((x - mean) ** 2 for x in sample) / (n - 1)
    return mean, var


def t_test_independent(
    a: Sequence[float], b: Sequence[float], *, welch: bool = False
) -> tuple[float, float]:
    """Two-sample t-test; returns (t, two-sided p).

    The default is the classical pooled-variance Student test; ``welch=True``
    drops the equal-variance assumption. Degenerate zero-variance samples use
    the conventions p=1 for equal means and p=0 otherwise.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 observations")
    mean_a, var_a = _mean_var(a)
    mean_b, var_b = _mean_var(b)
    na, nb = len(a), len(b)
    if welch:
        se2 = var_a / na + var_b / nb
        if se2 == 0.0:
            return (0.0, 1.0) if mean_a == mean_b else (math.inf * _sign(mean_a - mean_b), 0.0)
        df = se2**2 / (
            (var_a / na) ** 2 / (na - 1) + (var_b / nb) ** 2 / (nb - 1)
        )
        t = (mean_a - mean_b) / math.sqrt(se2)
    else:
        df = na + nb - 2
        pooled = ((na - 1) * var_a + (nb - 1) * var_b) / df
        se2 = pooled * (1.0 / na + 1.0 / nb)
        if se2 == 0.0:
            return (0.0, 1.0) if mean_a == mean_b else (math.inf * _sign(mean_a - mean_b), 0.0)
        t = (mean_a - mean_b) / math.sqrt(se2)
    return t, student_t_two_sided_p(t, df)


def _sign(x: float) -> float:
    return 1.0 if x > 0 else -1.0


def per_index_p_values(series: Sequence[SubjectSeries]) -> tuple[float, ...]:
    """t-test p at each exam index on per-subject accumulated scores.

    At index k the tested quantity is each subject's prefix sum of scores
    through k, i.e. the subject-level version of what the accumulated
    difference curve aggregates.
    """
    groups = _split_groups(series)
    for group, members in groups.items():
        if len(members) < 2:
            raise ValueError(f"group {group!r} needs at least 2 subjects for t-tests")
    prefix: dict[str, list[list[float]]] = {}
    for group, members in groups.items():
        rows = []
        for m in members:
            acc, row = 0.0, []
            for s in m.scores:
                acc += s
                row.append(acc)
            rows.append(row)
        prefix[group] = rows
    p_values = []
    for k in range(SERIES_LENGTH):
        a = [row[k] for row in prefix[GROUP_INTERACTIVE]]
        b = [row[k] for row in prefix[GROUP_STATIC]]
        p_values.append(t_test_independent(a, b)[1])
    return tuple(p_values)


# -- talent scatter -----------------------------------------------------------

TalentMode = Literal["first", "first-two"]
SpanMode = Literal["full", "first-half"]


@dataclass(frozen=True)
class ScatterPoint:
    subject_id: str
    group: str
    x: float
    y: float


def talent_scatter(
    series: Sequence[SubjectSeries],
    talent: TalentMode = "first",
    span: SpanMode = "full",
) -> list[ScatterPoint]:
    """Initial-talent (x) versus overall-performance (y) points.

    ``talent`` picks the first exam score or the sum of the first two;
    ``span`` accumulates the whole series or only its first half.
    """
    half = SERIES_LENGTH // 2
    points = []
    for s in series:
        x = s.scores[0] if talent == "first" else s.scores[0] + s.scores[1]
        y = sum(s.scores) if span == "full" else sum(s.scores[:half])
        points.append(ScatterPoint(s.subject_id, s.group, x, y))
    return points


# -- study-level bundle ---------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyComparison:
    mean_interactive: float
    mean_static: float
    improvement: float  # relative, e.g. 0.311 for +31.1%
    t: float
    p: float


def compare_efficiency(efficiencies: dict[str, Sequence[float]]) -> EfficiencyComparison:
    """Group-mean learning efficiencies with the same t machinery as the curves."""
    eff_i = list(efficiencies[GROUP_INTERACTIVE])
    eff_s = list(efficiencies[GROUP_STATIC])
    if not eff_i or not eff_s:
        raise ValueError("both groups need at least one efficiency value")
    mean_i = sum(eff_i) / len(eff_i)
    mean_s = sum(eff_s) / len(eff_s)
    improvement = (mean_i - mean_s) / mean_s if mean_s else math.inf
    t, p = t_test_independent(eff_i, eff_s)
    return EfficiencyComparison(mean_i, mean_s, improvement, t, p)


@dataclass(frozen=True)
class GroupStats:
    """Everything the study figures need, bundled."""

    curves: dict[str, tuple[float, ...]]
    accumulated: tuple[float, ...]
    p_values: tuple[float, ...]
    efficiency: EfficiencyComparison


def study_stats(
    series: Sequence[SubjectSeries], efficiencies: dict[str, Sequence[float]]
) -> GroupStats:
    curves = group_curves(series)
    return GroupStats(
        curves=curves,
        accumulated=accumulated_difference(curves),
        p_values=per_index_p_values(series),
        efficiency=compare_efficiency(efficiencies),
    )


# -- CSV emitters ---------------------------------------------------------------


def write_curves_csv(path: str | Path, curves: dict[str, tuple[float, ...]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["exam_index", "interactive_mean", "static_mean"])
        for i in range(SERIES_LENGTH):
            writer.writerow([i + 1, curves[GROUP_INTERACTIVE][i], curves[GROUP_STATIC][i]])


def write_accdiff_csv(
    path: str | Path, accumulated: Sequence[float], p_values: Sequence[float]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["exam_index", "accumulated_difference", "p_value"])
        for i, (acc, p) in enumerate(zip(accumulated, p_values)):
            writer.writerow([i + 1, acc, p])


def write_scatter_csv(path: str | Path, series: Sequence[SubjectSeries]) -> None:
    """All four talent/span combinations in one plot-ready table."""
    half = SERIES_LENGTH // 2
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "subject_id",
                "group",
                "talent_first",
                "talent_first_two",
                "overall_full",
                "overall_first_half",
            ]
        )
        for s in series:
            writer.writerow(
                [
                    s.subject_id,
                    s.group,
                    s.scores[0],
                    s.scores[0] + s.scores[1],
                    sum(s.scores),
                    sum(s.scores[:half]),
                ]
            )
