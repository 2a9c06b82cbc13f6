"""Belief-state diffing and the four-count change accounting between gold and
predicted state sequences, plus per-turn error classification for decayed
goal accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

from .model import BeliefState, InputError

MistakeKind = Literal["missed", "wrong", "overshot"]
TurnTag = Literal["clean", "new_error", "propagated_only"]


@dataclass(frozen=True)
class StateDelta:
    """Slot-value pairs that changed between two consecutive states.

    A pair's value is ``None`` when the slot was active before and is
    absent now (an explicit deactivation). At most one pair per slot.
    """

    changed_pairs: frozenset[tuple[str, str | None]]

    def slots(self) -> set[str]:
        return {slot for slot, _ in self.changed_pairs}

    def __len__(self) -> int:
        return len(self.changed_pairs)

    def __iter__(self):
        return iter(self.changed_pairs)

    def __contains__(self, pair: tuple[str, str | None]) -> bool:
        return pair in self.changed_pairs


@dataclass(frozen=True)
class ChangeCounts:
    """Tallies of missed / wrong / overshot / correct change predictions.

    The totals are always derived: ``total_predictions`` counts everything
    the model asserted (C+W+O) and ``total_gold`` everything the gold state
    asserted (C+W+M).
    """

    missed: int = 0
    wrong: int = 0
    overshot: int = 0
    correct: int = 0

    def __post_init__(self):
        if min(self.missed, self.wrong, self.overshot, self.correct) < 0:
            raise InputError("change counts must be non-negative",
                             code="E_COUNTS")

    @property
    def total_predictions(self) -> int:
        return self.correct + self.wrong + self.overshot

    @property
    def total_gold(self) -> int:
        return self.correct + self.wrong + self.missed

    @property
    def mistakes(self) -> int:
        return self.missed + self.wrong + self.overshot

    def __add__(self, other: "ChangeCounts") -> "ChangeCounts":
        return ChangeCounts(
            missed=self.missed + other.missed,
            wrong=self.wrong + other.wrong,
            overshot=self.overshot + other.overshot,
            correct=self.correct + other.correct,
        )


@dataclass(frozen=True)
class MistakeEvent:
    """One mistaken change prediction, located at the turn where it occurred."""

    dialogue_id: str
    turn_index: int
    kind: MistakeKind
    slot: str


@dataclass(frozen=True)
class TurnErrorClass:
    """Per-turn error status driving decayed goal accuracy.

    ``last_new_error_turn`` is the most recent turn index <= this turn at
    which a new mistake event occurred, or ``None`` if there is none yet.
    """

    tag: TurnTag
    last_new_error_turn: int | None = None


def state_delta(prev: BeliefState, cur: BeliefState) -> StateDelta:
    """Pairs newly asserted in ``cur`` plus deactivations of slots dropped
    since ``prev``. The first turn diffs against the empty state."""
    prev_entries = prev.entries
    cur_entries = cur.entries
    pairs: list[tuple[str, str | None]] = [
        (slot, value) for slot, value in cur_entries.items()
        if prev_entries.get(slot) != value
    ]
    pairs.extend((slot, None) for slot in prev_entries
                 if slot not in cur_entries)
    return StateDelta(frozenset(pairs))


def _check_lengths(gold_states: Sequence[BeliefState],
                   pred_states: Sequence[BeliefState]) -> int:
    if len(gold_states) != len(pred_states):
        raise InputError(
            f"gold has {len(gold_states)} turns but prediction has "
            f"{len(pred_states)}",
            code="E_LENGTH")
    return len(gold_states)


def count_changes(gold_states: Sequence[BeliefState],
                  pred_states: Sequence[BeliefState],
                  *,
                  dialogue_id: str = "",
                  score_deactivations: bool = True,
                  ) -> tuple[ChangeCounts, list[MistakeEvent]]:
    """Tally the four change counts over equal-length cumulative sequences.

    Per turn, every gold change is classified against the predicted state
    (missed / wrong / correct, with a gold deactivation scoring correct when
    the prediction agrees the slot is inactive and overshot otherwise), then
    every predicted change not already settled by the gold pass is classified
    against the gold state (overshot / wrong / correct; a spurious predicted
    deactivation of a gold-active slot is wrong). Each mistake is emitted
    once, at the turn where the change occurs.

    With ``score_deactivations`` off, active->inactive transitions are not
    treated as changes at all.
    """
    n = _check_lengths(gold_states, pred_states)
    missed = wrong = overshot = correct = 0
    events: list[MistakeEvent] = []
    prev_gold: dict[str, str] = {}
    prev_pred: dict[str, str] = {}
    for t in range(n):
        gold = gold_states[t].entries
        pred = pred_states[t].entries
        settled: set[str] = set()

        for slot, value in gold.items():
            if prev_gold.get(slot) == value:
                continue
            predicted = pred.get(slot)
            if predicted is None:
                missed += 1
                events.append(MistakeEvent(dialogue_id, t, "missed", slot))
            elif predicted != value:
                wrong += 1
                events.append(MistakeEvent(dialogue_id, t, "wrong", slot))
            else:
                correct += 1
            settled.add(slot)
        if score_deactivations:
            for slot in prev_gold:
                if slot in gold:
                    continue
                if slot in pred:
                    overshot += 1
                    events.append(MistakeEvent(dialogue_id, t, "overshot", slot))
                else:
                    correct += 1
                settled.add(slot)

        for slot, value in pred.items():
            if prev_pred.get(slot) == value or slot in settled:
                continue
            gold_value = gold.get(slot)
            if gold_value is None:
                overshot += 1
                events.append(MistakeEvent(dialogue_id, t, "overshot", slot))
            elif gold_value != value:
                wrong += 1
                events.append(MistakeEvent(dialogue_id, t, "wrong", slot))
            else:
                correct += 1
        if score_deactivations:
            for slot in prev_pred:
                if slot in pred or slot in settled:
                    continue
                if slot in gold:
                    wrong += 1
                    events.append(MistakeEvent(dialogue_id, t, "wrong", slot))
                else:
                    correct += 1

        prev_gold = gold
        prev_pred = pred

    counts = ChangeCounts(missed=missed, wrong=wrong,
                          overshot=overshot, correct=correct)
    return counts, events


def classify_turn_errors(gold_states: Sequence[BeliefState],
                         pred_states: Sequence[BeliefState],
                         *,
                         score_deactivations: bool = True,
                         ) -> list[TurnErrorClass]:
    """Tag each turn as clean, new_error, or propagated_only.

    A turn is a new error iff at least one mistake event occurs there; clean
    iff the states match exactly; propagated_only otherwise (the states
    disagree but every disagreement originated earlier).
    """
    _check_lengths(gold_states, pred_states)
    _, events = count_changes(gold_states, pred_states,
                              score_deactivations=score_deactivations)
    equal_flags = [g == p for g, p in zip(gold_states, pred_states)]
    return classify_from_events(equal_flags, events)


def classify_from_events(equal_flags: Sequence[bool],
                         events: Sequence[MistakeEvent],
                         ) -> list[TurnErrorClass]:
    """Classification from precomputed per-turn equality flags and events."""
    error_turns = {event.turn_index for event in events}
    classes: list[TurnErrorClass] = []
    last_new: int | None = None
    for t, equal in enumerate(equal_flags):
        if t in error_turns:
            last_new = t
            tag: TurnTag = "new_error"
        elif equal:
            tag = "clean"
        else:
            tag = "propagated_only"
        classes.append(TurnErrorClass(tag, last_new))
    return classes
