"""Core domain types: belief states, dialogues, predictions, and configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator, Literal, Mapping

if TYPE_CHECKING:
    from .delta import ChangeCounts

# Raw values meaning "this slot is inactive"; compared after normalization.
DEFAULT_INACTIVE_VALUES = frozenset({"none", "not mentioned", ""})

SLOT_SEPARATOR = "-"

METRIC_NAMES = ("jga", "sa", "aga", "rsa", "fga", "gca")

AggregationMode = Literal["pooled", "per-dialogue", "micro"]

_AGGREGATION_ALIASES = {
    "pooled": "pooled",
    "per-dialogue": "per-dialogue",
    "per-dialogue-mean": "per-dialogue",
    "micro": "micro",
    "micro-turn": "micro",
}


class InputError(ValueError):
    """Invalid input data: bad slot names, mismatched lengths, unknown ids, etc.

    ``code`` is a stable machine-readable identifier; ``details`` carries
    per-item diagnostics (e.g. one line per offending dialogue id).
    """

    def __init__(self, message: str, *, code: str = "E_INPUT",
                 details: Iterable[str] = ()):
        super().__init__(message)
        self.code = code
        self.details = list(details)


def normalize_text(raw: str) -> str:
    """Lowercase and collapse all whitespace runs to single spaces."""
    return " ".join(raw.lower().split())


def normalize_value(raw: str,
                    inactive_values: frozenset[str] = DEFAULT_INACTIVE_VALUES,
                    ) -> str | None:
    """Canonicalize a raw slot value; ``None`` means the slot is inactive.

    Total and idempotent: any string maps to a normalized value or to the
    inactive marker. "dontcare" is an ordinary active value.
    """
    value = normalize_text(raw)
    return None if value in inactive_values else value


def normalize_slot_name(raw: str) -> str:
    """Canonicalize a slot name of the form ``domain-slot`` (e.g. "hotel-area")."""
    name = normalize_text(raw)
    if not name:
        raise InputError("slot name is empty", code="E_SLOT_NAME")
    if name.count(SLOT_SEPARATOR) != 1:
        raise InputError(
            f"slot name {name!r} must be 'domain-slot' with exactly one "
            f"{SLOT_SEPARATOR!r} separator",
            code="E_SLOT_NAME")
    domain, slot = name.split(SLOT_SEPARATOR)
    if not domain or not slot:
        raise InputError(
            f"slot name {name!r} has an empty domain or slot part",
            code="E_SLOT_NAME")
    return name


class BeliefState:
    """Immutable map of active slot names to values at one turn.

    Inactive slots are represented by absence: a state never stores an
    inactive-sentinel value. Equality is exact map equality.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, str] | Iterable[tuple[str, str]] = ()):
        entries = dict(entries)
        for slot, value in entries.items():
            if not slot or not value:
                raise InputError(
                    f"belief state entry {slot!r}: {value!r} is empty",
                    code="E_STATE")
        self._entries = entries

    @classmethod
    def from_raw(cls, raw: Mapping[str, str],
                 inactive_values: frozenset[str] = DEFAULT_INACTIVE_VALUES,
                 ) -> "BeliefState":
        """Build a state from raw text, normalizing and dropping inactive slots."""
        entries: dict[str, str] = {}
        for slot, value in raw.items():
            name = normalize_slot_name(slot)
            if name in entries:
                raise InputError(
                    f"duplicate slot {name!r} after normalization",
                    code="E_DUP_SLOT")
            norm = normalize_value(value, inactive_values)
            if norm is not None:
                entries[name] = norm
        return cls(entries)

    @property
    def entries(self) -> dict[str, str]:
        """The underlying slot->value map. Treat as read-only."""
        return self._entries

    def get(self, slot: str, default: str | None = None) -> str | None:
        return self._entries.get(slot, default)

    def items(self):
        return self._entries.items()

    def slots(self):
        return self._entries.keys()

    def __getitem__(self, slot: str) -> str:
        return self._entries[slot]

    def __contains__(self, slot: str) -> bool:
        return slot in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BeliefState):
            return self._entries == other._entries
        return NotImplemented

    def __repr__(self) -> str:
        pairs = ", ".join(f"{s}={v}" for s, v in sorted(self._entries.items()))
        return f"BeliefState({pairs})"


EMPTY_STATE = BeliefState()


@dataclass(frozen=True)
class Turn:
    """One system/user exchange with its cumulative gold belief state."""

    system_utterance: str
    user_utterance: str
    gold: BeliefState


@dataclass(frozen=True)
class Dialogue:
    """An ordered, non-empty sequence of turns with a corpus-unique id."""

    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if not self.id:
            raise InputError("dialogue id is empty", code="E_DIALOGUE")
        if not self.turns:
            raise InputError(
                f"dialogue {self.id!r} has no turns", code="E_DIALOGUE")

    def __len__(self) -> int:
        return len(self.turns)

    def gold_states(self) -> list[BeliefState]:
        return [turn.gold for turn in self.turns]


@dataclass(frozen=True)
class Prediction:
    """Cumulative predicted belief states, one per turn of one dialogue."""

    dialogue_id: str
    states: tuple[BeliefState, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class Ontology:
    """The dataset's full set of slot names; ``len`` is the K of slot accuracy."""

    slots: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "slots", frozenset(self.slots))

    def __contains__(self, slot: str) -> bool:
        return slot in self.slots

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class Corpus:
    """A named set of gold dialogues plus the ontology they draw slots from."""

    dataset: str
    ontology: Ontology
    dialogues: tuple[Dialogue, ...]

    def __post_init__(self):
        object.__setattr__(self, "dialogues", tuple(self.dialogues))
        seen: set[str] = set()
        for dialogue in self.dialogues:
            if dialogue.id in seen:
                raise InputError(
                    f"duplicate dialogue id {dialogue.id!r}", code="E_DUP_ID")
            seen.add(dialogue.id)

    def __len__(self) -> int:
        return len(self.dialogues)

    def by_id(self) -> dict[str, Dialogue]:
        return {d.id: d for d in self.dialogues}


@dataclass(frozen=True)
class MetricConfig:
    """Knobs shared by the metric suite.

    ``fga_lambda`` is the decay ratio for propagated-error credit,
    ``value_weight``/``label_weight`` weight the value vs. label
    precision/recall pairs inside the harmonic mean, ``aggregation``
    selects how corpus scores are reduced, and ``score_deactivations``
    controls whether active->inactive transitions are scored as changes.
    """

    fga_lambda: float = 0.5
    value_weight: float = 0.9
    label_weight: float = 0.1
    aggregation: str = "pooled"
    score_deactivations: bool = True

    def __post_init__(self):
        if not 0.0 < self.fga_lambda <= 1.0:
            raise InputError(
                f"fga_lambda must be in (0, 1], got {self.fga_lambda}",
                code="E_CONFIG")
        if self.value_weight < 0 or self.label_weight < 0:
            raise InputError("metric weights must be non-negative",
                             code="E_CONFIG")
        if self.value_weight + self.label_weight <= 0:
            raise InputError("value_weight + label_weight must be positive",
                             code="E_CONFIG")
        canonical = _AGGREGATION_ALIASES.get(self.aggregation)
        if canonical is None:
            raise InputError(
                f"unknown aggregation {self.aggregation!r}; expected one of "
                f"{sorted(set(_AGGREGATION_ALIASES))}",
                code="E_CONFIG")
        object.__setattr__(self, "aggregation", canonical)


@dataclass(frozen=True)
class MetricReport:
    """Corpus- and dialogue-level scores with their provenance.

    ``scores`` maps metric name to a value in [0, 1] or ``None`` when the
    metric is undefined for the corpus (e.g. AGA with no active gold turns).
    ``per_dialogue`` covers every evaluated dialogue.
    """

    scores: dict[str, float | None]
    per_dialogue: dict[str, dict[str, float | None]]
    counts: "ChangeCounts"
    config: MetricConfig
    dataset: str = ""
    system: str = ""

    def undefined_metrics(self) -> list[str]:
        return [name for name, score in self.scores.items() if score is None]
