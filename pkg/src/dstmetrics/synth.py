"""Synthetic prediction generation with controlled error rate, timing, and
spread, plus an independent from-scratch reimplementation of the change
counts used as a test oracle."""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .delta import ChangeCounts, _check_lengths
from .model import BeliefState, Corpus, Dialogue, InputError, Prediction

_KINDS = ("missed", "wrong", "overshot")


@dataclass(frozen=True)
class PerturbationSpec:
    """Controls for the synthetic error injector.

    ``error_rate`` is the fraction of gold change events to corrupt;
    ``kind_mix`` the (missed, wrong, overshot) probabilities; ``tail_bias``
    pushes mistake placement late (>0) or early (<0); ``concentration``
    clusters mistakes into fewer turns as it grows. Generation is
    deterministic given ``seed``.
    """

    error_rate: float = 0.0
    kind_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    tail_bias: float = 0.0
    concentration: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise InputError(
                f"error_rate must be in [0, 1], got {self.error_rate}",
                code="E_SPEC")
        mix = tuple(float(p) for p in self.kind_mix)
        if len(mix) != 3 or any(p < 0 for p in mix):
            raise InputError(
                "kind_mix must be 3 non-negative probabilities", code="E_SPEC")
        if abs(sum(mix) - 1.0) > 1e-9:
            raise InputError(
                f"kind_mix must sum to 1, got {sum(mix)}", code="E_SPEC")
        object.__setattr__(self, "kind_mix", mix)
        if self.concentration < 0:
            raise InputError(
                f"concentration must be >= 0, got {self.concentration}",
                code="E_SPEC")


def perturb(corpus: Corpus, spec: PerturbationSpec) -> list[Prediction]:
    """Generate predictions that corrupt a controlled share of gold changes.

    Starting from perfect predictions, a seeded plan corrupts
    ``spec.error_rate`` of each dialogue's gold change events: a missed
    corruption suppresses the change (deactivating the slot if it was
    active), a wrong one substitutes a different value seen for that slot in
    the corpus, and an overshot one injects a spurious change on a slot the
    dialogue never uses. Corruption targets and injection turns are drawn
    with weight exp(tail_bias * (t/(n-1) - 1/2)) and clustered into fewer
    turns as ``concentration`` grows.

    The per-dialogue plan covers every gold event in a fixed seeded order and
    ``error_rate`` only selects its prefix, so sweeping the rate with a fixed
    seed yields nested corruption sets. An overshot draw falls back to a
    wrong corruption when the ontology has no spare slot left to inject.
    """
    if not corpus.dialogues:
        raise InputError("corpus has no dialogues", code="E_EMPTY")
    vocab = _value_vocabulary(corpus.dialogues)
    ontology_slots = sorted(corpus.ontology.slots)
    return [
        _perturb_dialogue(dialogue, spec, vocab, ontology_slots)
        for dialogue in corpus.dialogues
    ]


def oracle_counts(gold_states: Sequence[BeliefState],
                  pred_states: Sequence[BeliefState],
                  *,
                  score_deactivations: bool = True) -> ChangeCounts:
    """Change counts recomputed from scratch per turn, without the
    incremental bookkeeping of the production counter.

    For each turn the full pair-set differences against the previous gold
    and predicted states are formed, and every changed slot is classified
    independently by comparing its gold and predicted values at that turn.
    Intended as a test oracle only.
    """
    n = _check_lengths(gold_states, pred_states)
    missed = wrong = overshot = correct = 0
    prev_gold: dict[str, str] = {}
    prev_pred: dict[str, str] = {}
    for t in range(n):
        gold = gold_states[t].entries
        pred = pred_states[t].entries
        gold_changed = {s for s, v in gold.items() if prev_gold.get(s) != v}
        pred_changed = {s for s, v in pred.items() if prev_pred.get(s) != v}
        if score_deactivations:
            gold_changed.update(s for s in prev_gold if s not in gold)
            pred_changed.update(s for s in prev_pred if s not in pred)
        for slot in gold_changed | pred_changed:
            gold_value = gold.get(slot)
            pred_value = pred.get(slot)
            if gold_value == pred_value:
                correct += 1
            elif gold_value is None:
                overshot += 1
            elif pred_value is None:
                if slot in gold_changed:
                    missed += 1
                else:
                    wrong += 1
            else:
                wrong += 1
        prev_gold = gold
        prev_pred = pred
    return ChangeCounts(missed=missed, wrong=wrong,
                        overshot=overshot, correct=correct)


def _derive_seed(seed: int, dialogue_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{dialogue_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _value_vocabulary(dialogues: Sequence[Dialogue]) -> dict[str, list[str]]:
    seen: dict[str, set[str]] = {}
    for dialogue in dialogues:
        for turn in dialogue.turns:
            for slot, value in turn.gold.items():
                seen.setdefault(slot, set()).add(value)
    return {slot: sorted(values) for slot, values in seen.items()}


def _turn_weights(n_turns: int, tail_bias: float) -> list[float]:
    if n_turns == 1:
        return [1.0]
    return [math.exp(tail_bias * (t / (n_turns - 1) - 0.5))
            for t in range(n_turns)]


def _gold_changes(dialogue: Dialogue):
    """Per-turn gold change script: value changes and deactivations."""
    changes_by_turn: dict[int, list[tuple[str, str | None]]] = {}
    value_events: list[tuple[int, str, str]] = []
    prev: dict[str, str] = {}
    for t, turn in enumerate(dialogue.turns):
        cur = turn.gold.entries
        for slot, value in cur.items():
            if prev.get(slot) != value:
                changes_by_turn.setdefault(t, []).append((slot, value))
                value_events.append((t, slot, value))
        for slot in prev:
            if slot not in cur:
                changes_by_turn.setdefault(t, []).append((slot, None))
        prev = cur
    return changes_by_turn, value_events


def _perturb_dialogue(dialogue: Dialogue, spec: PerturbationSpec,
                      vocab: dict[str, list[str]],
                      ontology_slots: list[str]) -> Prediction:
    rng = random.Random(_derive_seed(spec.seed, dialogue.id))
    n_turns = len(dialogue)
    changes_by_turn, value_events = _gold_changes(dialogue)

    gold_slots = {slot for _, slot, _ in value_events}
    free_slots = [s for s in ontology_slots if s not in gold_slots]
    rng.shuffle(free_slots)

    plan = _corruption_plan(rng, value_events, n_turns, spec, vocab,
                            free_slots)
    n_corrupt = round(spec.error_rate * len(value_events))

    overrides: dict[tuple[int, str], str | None] = {}
    injections: list[tuple[int, str, str]] = []
    for corruption in plan[:n_corrupt]:
        kind, turn, slot, value = corruption
        if kind == "overshot":
            injections.append((turn, slot, value))
        else:
            overrides[(turn, slot)] = value  # None suppresses the change

    pred_changes: dict[int, list[tuple[str, str | None]]] = {}
    for t, changes in changes_by_turn.items():
        out = []
        for slot, value in changes:
            if value is not None and (t, slot) in overrides:
                value = overrides[(t, slot)]
            out.append((slot, value))
        pred_changes[t] = out
    for turn, slot, value in injections:
        pred_changes.setdefault(turn, []).append((slot, value))

    states: list[BeliefState] = []
    current: dict[str, str] = {}
    for t in range(n_turns):
        for slot, value in pred_changes.get(t, ()):
            if value is None:
                current.pop(slot, None)
            else:
                current[slot] = value
        states.append(BeliefState(dict(current)))
    return Prediction(dialogue_id=dialogue.id, states=tuple(states))


def _corruption_plan(rng: random.Random,
                     value_events: list[tuple[int, str, str]],
                     n_turns: int, spec: PerturbationSpec,
                     vocab: dict[str, list[str]],
                     free_slots: list[str]):
    """A seeded corruption for every gold event; error_rate-independent.

    Yields (kind, turn, slot, value) tuples where value is None for missed
    corruptions. Turn selection follows the tail-bias weights; with
    probability concentration/(1+concentration) a step stays on the current
    cluster turn instead of opening a fresh one.
    """
    weights = _turn_weights(n_turns, spec.tail_bias)
    remaining: dict[int, list[tuple[str, str]]] = {}
    for t, slot, value in value_events:
        remaining.setdefault(t, []).append((slot, value))
    for pending in remaining.values():
        rng.shuffle(pending)

    reuse_p = spec.concentration / (1.0 + spec.concentration)
    injected_at: dict[int, set[str]] = {}
    used_values: dict[str, set[str]] = {}
    plan: list[tuple[str, int, str, str | None]] = []
    current_turn: int | None = None

    for i in range(len(value_events)):
        kind = rng.choices(_KINDS, weights=spec.kind_mix)[0]
        reuse = current_turn is not None and rng.random() < reuse_p

        if kind == "overshot":
            turn = current_turn if reuse else _weighted_turn(
                rng, list(range(n_turns)), weights)
            allocation = _allocate_injection(rng, turn, injected_at,
                                             free_slots, vocab, used_values, i)
            if allocation is None and not reuse:
                # retry on the densest option before degrading
                allocation = None
            if allocation is not None:
                current_turn = turn
                slot, value = allocation
                plan.append(("overshot", turn, slot, value))
                continue
            kind = "wrong"  # no spare slot: degrade to a value corruption

        candidates = [t for t, pending in remaining.items() if pending]
        turn = current_turn if reuse and remaining.get(current_turn) else None
        if turn is None:
            turn = _weighted_turn(rng, candidates, weights)
            current_turn = turn
        slot, gold_value = remaining[turn].pop()
        if kind == "missed":
            plan.append(("missed", turn, slot, None))
        else:
            plan.append(("wrong", turn, slot,
                         _alternative_value(rng, vocab, slot, gold_value, i)))
    return plan


def _weighted_turn(rng: random.Random, turns: list[int],
                   weights: list[float]) -> int:
    return rng.choices(turns, weights=[weights[t] for t in turns])[0]


def _allocate_injection(rng: random.Random, turn: int,
                        injected_at: dict[int, set[str]],
                        free_slots: list[str],
                        vocab: dict[str, list[str]],
                        used_values: dict[str, set[str]],
                        salt: int) -> tuple[str, str] | None:
    used_here = injected_at.setdefault(turn, set())
    candidates = [s for s in free_slots if s not in used_here]
    if not candidates:
        return None
    slot = rng.choice(candidates)
    used = used_values.setdefault(slot, set())
    pool = [v for v in vocab.get(slot, ()) if v not in used]
    value = rng.choice(pool) if pool else f"alt-{salt}"
    used.add(value)
    used_here.add(slot)
    return slot, value


def _alternative_value(rng: random.Random, vocab: dict[str, list[str]],
                       slot: str, gold_value: str, salt: int) -> str:
    pool = [v for v in vocab.get(slot, ()) if v != gold_value]
    return rng.choice(pool) if pool else f"alt-{salt}"
