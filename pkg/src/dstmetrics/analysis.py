"""Trait measures over mistake placement (tail-orientation, non-uniformity),
correlation utilities, and metric disagreement ranking."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

from .delta import MistakeEvent
from .model import InputError, MetricReport


@dataclass(frozen=True)
class TraitScores:
    """Per-dialogue spurious-trait measures; traits are ``None`` iff the
    dialogue has no mistakes."""

    dialogue_id: str
    tail_orientation: float | None
    non_uniformity: float | None
    mistake_count: int


@dataclass(frozen=True)
class CorrelationComparison:
    """Confidence interval for the difference of two dependent correlations."""

    difference: float
    lower: float
    upper: float
    confidence: float
    significant: bool


def tail_orientation(events: Sequence[MistakeEvent],
                     n_turns: int) -> float | None:
    """Normalized displacement of the mean mistake turn from the middle turn.

    Positive values mean mistakes lean toward the end of the dialogue.
    Undefined (``None``) when there are no mistakes.
    """
    turns = _event_turns(events, n_turns)
    if not turns:
        return None
    mean_turn = sum(turns) / len(turns)
    return (mean_turn - (n_turns - 1) / 2) / n_turns


def non_uniformity(events: Sequence[MistakeEvent],
                   n_turns: int) -> float | None:
    """Total absolute deviation of per-turn mistake counts from the uniform
    expectation, normalized by that expectation. ``None`` with no mistakes."""
    turns = _event_turns(events, n_turns)
    if not turns:
        return None
    expected = len(turns) / n_turns
    per_turn = Counter(turns)
    deviation = sum(abs(per_turn.get(t, 0) - expected) for t in range(n_turns))
    return deviation / expected


def trait_scores(dialogue_id: str, events: Sequence[MistakeEvent],
                 n_turns: int) -> TraitScores:
    return TraitScores(
        dialogue_id=dialogue_id,
        tail_orientation=tail_orientation(events, n_turns),
        non_uniformity=non_uniformity(events, n_turns),
        mistake_count=len(events),
    )


def mean_normalize(xs: Sequence[float]) -> list[float]:
    """Map each value to (x - mean) / (max - min); the output has zero mean."""
    if len(xs) < 2:
        raise InputError("mean normalization needs at least 2 values",
                         code="E_STATS")
    spread = max(xs) - min(xs)
    if spread == 0:
        raise InputError("mean normalization is undefined for constant input",
                         code="E_STATS")
    mean = math.fsum(xs) / len(xs)
    return [(x - mean) / spread for x in xs]


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Product-moment correlation coefficient of two equal-length series."""
    if len(xs) != len(ys):
        raise InputError("series differ in length", code="E_STATS")
    n = len(xs)
    if n < 2:
        raise InputError("correlation needs at least 2 samples", code="E_STATS")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0 or var_y == 0:
        raise InputError("correlation is undefined for a constant series",
                         code="E_STATS")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def compare_correlations(r1: float, r2: float, r_common: float, n: int,
                         confidence: float = 0.95) -> CorrelationComparison:
    """Confidence interval for r1 - r2 when both correlations share a variable.

    ``r1`` and ``r2`` correlate two different series with the same third
    series, and ``r_common`` is the correlation between those two series.
    Uses Fisher-transformed per-correlation intervals combined with the
    asymptotic correlation between the two sample correlations; the
    difference is significant iff the interval excludes 0.
    """
    if n < 4:
        raise InputError(f"need at least 4 samples, got {n}", code="E_STATS")
    for name, r in (("r1", r1), ("r2", r2), ("r_common", r_common)):
        if not -1.0 < r < 1.0:
            raise InputError(f"{name}={r} outside (-1, 1)", code="E_STATS")
    if not 0.0 < confidence < 1.0:
        raise InputError(f"confidence must be in (0, 1), got {confidence}",
                         code="E_STATS")

    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    half_width = z / math.sqrt(n - 3)
    l1, u1 = _fisher_interval(r1, half_width)
    l2, u2 = _fisher_interval(r2, half_width)
    c = _dependent_correlation(r1, r2, r_common)

    difference = r1 - r2
    lower = difference - math.sqrt(
        (r1 - l1) ** 2 + (u2 - r2) ** 2 - 2 * c * (r1 - l1) * (u2 - r2))
    upper = difference + math.sqrt(
        (u1 - r1) ** 2 + (r2 - l2) ** 2 - 2 * c * (u1 - r1) * (r2 - l2))
    return CorrelationComparison(
        difference=difference, lower=lower, upper=upper,
        confidence=confidence, significant=not lower <= 0.0 <= upper)


def disagreement_ranking(report: MetricReport, metric_a: str, metric_b: str,
                         k: int) -> list[tuple[str, float, float]]:
    """Top-k dialogues by |metric_a - metric_b| gap, ties broken by id.

    Returns (dialogue_id, score_a, score_b) triples, largest gap first.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}", code="E_STATS")
    rows: list[tuple[float, str, float, float]] = []
    problems: list[str] = []
    for dialogue_id, scores in report.per_dialogue.items():
        a = scores.get(metric_a)
        b = scores.get(metric_b)
        if a is None or b is None:
            problems.append(dialogue_id)
            continue
        rows.append((abs(a - b), dialogue_id, a, b))
    if problems:
        raise InputError(
            f"per-dialogue {metric_a}/{metric_b} scores missing for: "
            f"{', '.join(sorted(problems))}",
            code="E_STATS", details=sorted(problems))
    rows.sort(key=lambda row: (-row[0], row[1]))
    return [(dialogue_id, a, b) for _, dialogue_id, a, b in rows[:k]]


def _event_turns(events: Sequence[MistakeEvent], n_turns: int) -> list[int]:
    if n_turns < 1:
        raise InputError(f"dialogue must have at least 1 turn, got {n_turns}",
                         code="E_STATS")
    turns = []
    for event in events:
        if not 0 <= event.turn_index < n_turns:
            raise InputError(
                f"mistake at turn {event.turn_index} outside dialogue of "
                f"{n_turns} turns",
                code="E_STATS")
        turns.append(event.turn_index)
    return turns


def _fisher_interval(r: float, half_width: float) -> tuple[float, float]:
    zr = math.atanh(r)
    return math.tanh(zr - half_width), math.tanh(zr + half_width)


def _dependent_correlation(r1: float, r2: float, rc: float) -> float:
    # Asymptotic correlation between two sample correlations sharing one
    # variable (Pearson-Filon form).
    numerator = (rc * (1 - r1 * r1 - r2 * r2)
                 - 0.5 * r1 * r2 * (1 - r1 * r1 - r2 * r2 - rc * rc))
    denominator = (1 - r1 * r1) * (1 - r2 * r2)
    return max(-1.0, min(1.0, numerator / denominator))
