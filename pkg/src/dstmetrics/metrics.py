"""The six corpus metrics: joint goal accuracy, slot accuracy, average goal
accuracy, relative slot accuracy, flexible goal accuracy, and granular change
accuracy with its value/label precision-recall intermediates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .delta import (ChangeCounts, MistakeEvent, TurnErrorClass, _check_lengths,
                    classify_from_events, count_changes)
from .model import (METRIC_NAMES, BeliefState, Corpus, Dialogue, InputError,
                    MetricConfig, MetricReport, Ontology, Prediction)


@dataclass(frozen=True)
class IntermediateScores:
    """Value/label precision and recall over change counts.

    A value match implies a label match, so value_precision <=
    label_precision and value_recall <= label_recall always hold.
    """

    value_precision: float
    value_recall: float
    label_precision: float
    label_recall: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.value_precision, self.value_recall,
                self.label_precision, self.label_recall)


def jga(gold_states: Sequence[BeliefState],
        pred_states: Sequence[BeliefState]) -> float:
    """Fraction of turns whose predicted state equals gold exactly."""
    n = _require_turns(gold_states, pred_states)
    return sum(1 for g, p in zip(gold_states, pred_states) if g == p) / n


def slot_accuracy(gold_states: Sequence[BeliefState],
                  pred_states: Sequence[BeliefState],
                  ontology: Ontology) -> float:
    """Mean per-turn accuracy over all K ontology slots, inactive included.

    Per turn the score is (K - missed - wrong) / K, where wrong counts both
    mismatched values and predicted slots absent from the gold state.
    """
    n = _require_turns(gold_states, pred_states)
    k = len(ontology)
    if k == 0:
        raise InputError("ontology is empty", code="E_ONTOLOGY")
    _require_known_slots(gold_states, pred_states, ontology)
    total = 0.0
    for g, p in zip(gold_states, pred_states):
        missed, wrong = _turn_missed_wrong(g.entries, p.entries)
        total += (k - missed - wrong) / k
    return total / n


def aga(gold_states: Sequence[BeliefState],
        pred_states: Sequence[BeliefState]) -> float | None:
    """Mean per-turn pair recall over turns with a non-empty gold state.

    Turns with no active gold slots are discarded; returns ``None`` when no
    turn qualifies.
    """
    _require_turns(gold_states, pred_states)
    total = 0.0
    qualifying = 0
    for g, p in zip(gold_states, pred_states):
        if not g.entries:
            continue
        total += _turn_recall(g.entries, p.entries)
        qualifying += 1
    return total / qualifying if qualifying else None


def rsa(gold_states: Sequence[BeliefState],
        pred_states: Sequence[BeliefState]) -> float:
    """Mean per-turn accuracy over the union of gold and predicted slots.

    A turn with an empty union scores 0.
    """
    n = _require_turns(gold_states, pred_states)
    total = 0.0
    for g, p in zip(gold_states, pred_states):
        total += _turn_rsa(g.entries, p.entries)
    return total / n


def fga(gold_states: Sequence[BeliefState],
        pred_states: Sequence[BeliefState],
        lam: float = 0.5,
        *,
        score_deactivations: bool = True) -> float:
    """Joint goal accuracy with decayed credit for propagated-only turns.

    A clean turn scores 1, a turn with a new mistake scores 0, and a turn
    whose only disagreements propagate from an earlier mistake scores
    1 - exp(-lam * distance-to-that-mistake).
    """
    n = _require_turns(gold_states, pred_states)
    if not 0.0 < lam <= 1.0:
        raise InputError(f"lambda must be in (0, 1], got {lam}",
                         code="E_CONFIG")
    _, events = count_changes(gold_states, pred_states,
                              score_deactivations=score_deactivations)
    equal_flags = [g == p for g, p in zip(gold_states, pred_states)]
    classes = classify_from_events(equal_flags, events)
    return sum(_fga_turn_scores(classes, lam)) / n


def intermediates(counts: ChangeCounts) -> IntermediateScores:
    """The four precision/recall ratios over change counts.

    Zero denominators yield 0, except the vacuous all-zero case which is
    perfect by convention.
    """
    p = counts.total_predictions
    g = counts.total_gold
    if p == 0 and g == 0:
        return IntermediateScores(1.0, 1.0, 1.0, 1.0)
    c = counts.correct
    cw = c + counts.wrong
    return IntermediateScores(
        value_precision=c / p if p else 0.0,
        value_recall=c / g if g else 0.0,
        label_precision=cw / p if p else 0.0,
        label_recall=cw / g if g else 0.0,
    )


def weighted_harmonic_mean(values: Sequence[float],
                           weights: Sequence[float]) -> float:
    """sum(w) / sum(w/x); 0 as soon as any positively-weighted value is 0."""
    if len(values) != len(weights):
        raise InputError("values and weights differ in length",
                         code="E_WEIGHTS")
    if any(w < 0 for w in weights):
        raise InputError("weights must be non-negative", code="E_WEIGHTS")
    total_weight = sum(weights)
    if total_weight <= 0:
        raise InputError("weights must not all be zero", code="E_WEIGHTS")
    denom = 0.0
    for value, weight in zip(values, weights):
        if not 0.0 <= value <= 1.0:
            raise InputError(f"value {value} outside [0, 1]", code="E_WEIGHTS")
        if weight == 0:
            continue
        if value == 0:
            return 0.0
        denom += weight / value
    return total_weight / denom


def gca(counts: ChangeCounts, config: MetricConfig | None = None) -> float:
    """Weighted harmonic mean of the value/label precision-recall quartet."""
    config = config or MetricConfig()
    scores = intermediates(counts)
    weights = (config.value_weight, config.value_weight,
               config.label_weight, config.label_weight)
    return weighted_harmonic_mean(scores.as_tuple(), weights)


def evaluate_corpus(dialogues: Corpus | Sequence[Dialogue],
                    predictions: Sequence[Prediction],
                    ontology: Ontology,
                    config: MetricConfig | None = None) -> MetricReport:
    """Score every predicted dialogue and aggregate to corpus level.

    Turn-based metrics are reduced per ``config.aggregation``: micro-averaged
    over all turns in pooled/micro modes, or averaged over per-dialogue means.
    GCA pools change counts corpus-wide in pooled mode and averages
    per-dialogue scores otherwise. The per-dialogue table is always included.
    """
    config = config or MetricConfig()
    dataset = ""
    if isinstance(dialogues, Corpus):
        dataset = dialogues.dataset
        dialogues = dialogues.dialogues
    if not predictions:
        raise InputError("no predictions to evaluate", code="E_EMPTY")
    if len(ontology) == 0:
        raise InputError("ontology is empty", code="E_ONTOLOGY")

    by_id: dict[str, Dialogue] = {}
    for dialogue in dialogues:
        if dialogue.id in by_id:
            raise InputError(f"duplicate dialogue id {dialogue.id!r}",
                             code="E_DUP_ID", details=[dialogue.id])
        by_id[dialogue.id] = dialogue
    _validate_pairing(by_id, predictions, ontology)

    k = len(ontology)
    per_dialogue: dict[str, dict[str, float | None]] = {}
    dialogue_counts: list[ChangeCounts] = []
    pooled = ChangeCounts()
    turns_total = 0
    jga_sum = sa_sum = rsa_sum = fga_sum = 0.0
    aga_sum = 0.0
    aga_turns = 0

    for prediction in predictions:
        dialogue = by_id[prediction.dialogue_id]
        gold_states = dialogue.gold_states()
        pred_states = list(prediction.states)
        n = len(gold_states)

        equal_flags = []
        sa_turns = []
        rsa_turns = []
        recalls = []
        for g, p in zip(gold_states, pred_states):
            ge, pe = g.entries, p.entries
            equal_flags.append(ge == pe)
            missed, wrong = _turn_missed_wrong(ge, pe)
            sa_turns.append((k - missed - wrong) / k)
            union = len(ge.keys() | pe.keys())
            rsa_turns.append((union - missed - wrong) / union if union else 0.0)
            if ge:
                recalls.append(_turn_recall(ge, pe))

        counts, events = count_changes(
            gold_states, pred_states, dialogue_id=dialogue.id,
            score_deactivations=config.score_deactivations)
        classes = classify_from_events(equal_flags, events)
        fga_turns = _fga_turn_scores(classes, config.fga_lambda)

        per_dialogue[dialogue.id] = {
            "jga": sum(equal_flags) / n,
            "sa": sum(sa_turns) / n,
            "aga": sum(recalls) / len(recalls) if recalls else None,
            "rsa": sum(rsa_turns) / n,
            "fga": sum(fga_turns) / n,
            "gca": gca(counts, config),
        }
        dialogue_counts.append(counts)
        pooled = pooled + counts
        turns_total += n
        jga_sum += sum(equal_flags)
        sa_sum += sum(sa_turns)
        rsa_sum += sum(rsa_turns)
        fga_sum += sum(fga_turns)
        aga_sum += sum(recalls)
        aga_turns += len(recalls)

    if config.aggregation == "per-dialogue":
        scores = _mean_of_dialogues(per_dialogue)
    else:
        scores = {
            "jga": jga_sum / turns_total,
            "sa": sa_sum / turns_total,
            "aga": aga_sum / aga_turns if aga_turns else None,
            "rsa": rsa_sum / turns_total,
            "fga": fga_sum / turns_total,
        }
        if config.aggregation == "pooled":
            scores["gca"] = gca(pooled, config)
        else:
            scores["gca"] = _mean_defined(
                row["gca"] for row in per_dialogue.values())

    return MetricReport(scores=scores, per_dialogue=per_dialogue,
                        counts=pooled, config=config, dataset=dataset)


def _require_turns(gold_states, pred_states) -> int:
    n = _check_lengths(gold_states, pred_states)
    if n == 0:
        raise InputError("state sequences are empty", code="E_EMPTY")
    return n


def _require_known_slots(gold_states, pred_states, ontology: Ontology) -> None:
    unknown: set[str] = set()
    for states in (gold_states, pred_states):
        for state in states:
            for slot in state.entries:
                if slot not in ontology:
                    unknown.add(slot)
    if unknown:
        raise InputError(
            f"slots not in ontology: {', '.join(sorted(unknown))}",
            code="E_UNKNOWN_SLOT", details=sorted(unknown))


def _turn_missed_wrong(gold: dict[str, str],
                       pred: dict[str, str]) -> tuple[int, int]:
    missed = sum(1 for slot in gold if slot not in pred)
    wrong = sum(1 for slot, value in pred.items() if gold.get(slot) != value)
    return missed, wrong


def _turn_recall(gold: dict[str, str], pred: dict[str, str]) -> float:
    hits = sum(1 for slot, value in gold.items() if pred.get(slot) == value)
    return hits / len(gold)


def _turn_rsa(gold: dict[str, str], pred: dict[str, str]) -> float:
    union = len(gold.keys() | pred.keys())
    if union == 0:
        return 0.0
    missed, wrong = _turn_missed_wrong(gold, pred)
    return (union - missed - wrong) / union


def _fga_turn_scores(classes: Sequence[TurnErrorClass],
                     lam: float) -> list[float]:
    scores = []
    for t, cls in enumerate(classes):
        if cls.tag == "clean":
            scores.append(1.0)
        elif cls.tag == "new_error":
            scores.append(0.0)
        elif cls.last_new_error_turn is None:
            # Divergence with no recorded origin (only reachable with
            # deactivation scoring off): no credit.
            scores.append(0.0)
        else:
            scores.append(1.0 - math.exp(-lam * (t - cls.last_new_error_turn)))
    return scores


def _validate_pairing(by_id: dict[str, Dialogue],
                      predictions: Sequence[Prediction],
                      ontology: Ontology) -> None:
    problems: list[str] = []
    seen: set[str] = set()
    for prediction in predictions:
        did = prediction.dialogue_id
        if did in seen:
            problems.append(f"{did}: duplicate prediction")
            continue
        seen.add(did)
        dialogue = by_id.get(did)
        if dialogue is None:
            problems.append(f"{did}: no such dialogue in the corpus")
            continue
        if len(prediction) != len(dialogue):
            problems.append(
                f"{did}: prediction has {len(prediction)} states for "
                f"{len(dialogue)} turns")
            continue
        unknown: set[str] = set()
        for state in dialogue.gold_states():
            unknown.update(s for s in state.entries if s not in ontology)
        for state in prediction.states:
            unknown.update(s for s in state.entries if s not in ontology)
        if unknown:
            problems.append(
                f"{did}: slots not in ontology: {', '.join(sorted(unknown))}")
    if problems:
        raise InputError(
            f"{len(problems)} prediction(s) failed validation: "
            f"{problems[0]}",
            code="E_PAIRING", details=problems)


def _mean_of_dialogues(per_dialogue: dict[str, dict[str, float | None]],
                       ) -> dict[str, float | None]:
    scores: dict[str, float | None] = {}
    for name in METRIC_NAMES:
        scores[name] = _mean_defined(row[name] for row in per_dialogue.values())
    return scores


def _mean_defined(values) -> float | None:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None
