"""Domain ontology: slots, value sets, question construction, slot relationships.

The ontology file declares per-slot prediction mode explicitly
(``"mode": "value"`` or ``"mode": "span"``); span slots carry no value
list.  Questions are built one per (domain, slot) pair, and tracking a
new value is just extending an existing question.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError, ValidationError
from .text import normalize_value

#: candidate appended to every value-mode question, and the default
#: answer for every unmentioned (domain, slot) pair
NOT_MENTIONED = "not mentioned"
#: candidate for "the user said any value is fine"
DONT_CARE = "don't care"
SPECIAL_VALUES = (NOT_MENTIONED, DONT_CARE)

VALUE_MODE = "value"
SPAN_MODE = "span"


@dataclass(frozen=True)
class SlotSpec:
    """One slot of one domain: prediction mode plus its value set."""

    mode: str
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in (VALUE_MODE, SPAN_MODE):
            raise ValidationError(f"unknown slot mode {self.mode!r}")


@dataclass(frozen=True)
class Ontology:
    """Validated, immutable map domain -> slot -> SlotSpec."""

    domains: dict[str, dict[str, SlotSpec]]

    def __post_init__(self):
        for domain, slots in self.domains.items():
            if not domain.strip():
                raise ValidationError("empty domain name")
            for slot, spec in slots.items():
                if not slot.strip():
                    raise ValidationError(f"empty slot name in domain {domain!r}")
                if spec.mode == VALUE_MODE:
                    if not spec.values:
                        raise ValidationError(
                            f"value-mode slot ({domain}, {slot}) has an empty value list"
                        )
                    normalized = [normalize_value(v) for v in spec.values]
                    if len(set(normalized)) != len(normalized):
                        raise ValidationError(
                            f"duplicate values (after normalization) in ({domain}, {slot})"
                        )

    def pairs(self) -> list[tuple[str, str]]:
        """All (domain, slot) pairs in file order; this order fixes
        question order, exact-match column order, and graph node order."""
        return [(d, s) for d, slots in self.domains.items() for s in slots]

    def spec(self, domain: str, slot: str) -> SlotSpec:
        try:
            return self.domains[domain][slot]
        except KeyError:
            raise KeyError(f"unknown (domain, slot) pair ({domain}, {slot})") from None

    def has_pair(self, domain: str, slot: str) -> bool:
        return domain in self.domains and slot in self.domains[domain]

    def restricted(self, domains: list[str]) -> "Ontology":
        """Sub-ontology containing only the named domains (order kept)."""
        unknown = [d for d in domains if d not in self.domains]
        if unknown:
            raise ValidationError(f"unknown domains {unknown}")
        return Ontology({d: dict(self.domains[d]) for d in self.domains if d in domains})

    def canonical_dict(self) -> dict:
        return {
            "domains": {
                d: {
                    s: {
                        "mode": spec.mode,
                        "values": list(spec.values) if spec.mode == VALUE_MODE else None,
                    }
                    for s, spec in slots.items()
                }
                for d, slots in self.domains.items()
            }
        }

    def to_json(self) -> str:
        return json.dumps(self.canonical_dict(), indent=2)


@dataclass(frozen=True)
class Question:
    """The question asked for one (domain, slot) pair at every turn.

    ``values`` holds the slot's own candidates; the two special values
    are always the last two candidates in value mode and the two
    non-span answer types in span mode.
    """

    domain: str
    slot: str
    values: tuple[str, ...]
    mode: str

    @property
    def candidates(self) -> tuple[str, ...]:
        """Scored candidate list; value mode only (length K^s + 2)."""
        return self.values + SPECIAL_VALUES

    @property
    def embedded_values(self) -> tuple[str, ...]:
        """Strings whose embeddings form the value matrix: all candidates
        in value mode, just the specials in span mode."""
        if self.mode == VALUE_MODE:
            return self.candidates
        return SPECIAL_VALUES

    @property
    def pair(self) -> tuple[str, str]:
        return (self.domain, self.slot)


@dataclass(frozen=True)
class RelationshipSet:
    """Static slot relationships derived from value sets.

    ``same_values`` holds unordered pairs with identical value sets;
    ``subset`` holds ordered pairs whose first value set is a strict
    subset of the second.  Correlation links are not stored (the graph
    attention learns them) and informed-value links are dynamic.
    """

    same_values: frozenset[frozenset[tuple[str, str]]] = field(default_factory=frozenset)
    subset: frozenset[tuple[tuple[str, str], tuple[str, str]]] = field(default_factory=frozenset)


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ValidationError(f"duplicate key {key!r} in ontology file")
        seen[key] = value
    return seen


def parse_ontology(data: dict) -> Ontology:
    """Validate an already-parsed ontology mapping."""
    if not isinstance(data, dict) or "domains" not in data:
        raise SchemaError("ontology file must be an object with a 'domains' key")
    domains_raw = data["domains"]
    if not isinstance(domains_raw, dict):
        raise SchemaError("'domains' must map domain names to slot tables")
    domains: dict[str, dict[str, SlotSpec]] = {}
    for domain, slots_raw in domains_raw.items():
        if not isinstance(slots_raw, dict):
            raise SchemaError(f"domain {domain!r} must map slot names to slot specs")
        slots: dict[str, SlotSpec] = {}
        for slot, spec_raw in slots_raw.items():
            if not isinstance(spec_raw, dict) or "mode" not in spec_raw:
                raise SchemaError(f"slot ({domain}, {slot}) needs an object with a 'mode' key")
            mode = spec_raw["mode"]
            if mode not in (VALUE_MODE, SPAN_MODE):
                raise SchemaError(f"slot ({domain}, {slot}) has unknown mode {mode!r}")
            values = spec_raw.get("values")
            if mode == SPAN_MODE:
                values = ()  # span slots may carry a list; it is ignored
            elif values is None:
                values = ()
            slots[slot] = SlotSpec(mode=mode, values=tuple(str(v) for v in values))
        domains[domain] = slots
    return Ontology(domains)


def load_ontology(path: str | Path) -> Ontology:
    """Load and validate an ontology JSON file.

    Raises SchemaError (with line info) on parse failures and
    ValidationError on duplicate names or empty value lists.
    """
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read ontology file {path}: {exc}") from exc
    try:
        data = json.loads(raw, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"ontology parse error at line {exc.lineno}, col {exc.colno}: {exc.msg}") from exc
    return parse_ontology(data)


def build_questions(ontology: Ontology) -> list[Question]:
    """One question per (domain, slot) pair, in ontology order.

    Value-mode questions carry the slot's value list; the two special
    values are appended as the last two candidates.  Span-mode questions
    carry only the domain and slot names (the specials become answer
    types).
    """
    questions = []
    for domain, slot in ontology.pairs():
        spec = ontology.spec(domain, slot)
        if spec.mode == VALUE_MODE:
            questions.append(Question(domain, slot, spec.values, VALUE_MODE))
        else:
            questions.append(Question(domain, slot, (), SPAN_MODE))
    return questions


def extend_question(question: Question, new_values: list[str]) -> Question:
    """Extend a value-mode question with new candidate values.

    New values are inserted before the two special values; existing
    order is unchanged.
    """
    if question.mode != VALUE_MODE:
        raise ValidationError(
            f"cannot extend span-mode question ({question.domain}, {question.slot})"
        )
    existing = {normalize_value(v) for v in question.candidates}
    added = []
    for value in new_values:
        norm = normalize_value(value)
        if norm in existing:
            raise ValidationError(f"value {value!r} already present in question")
        existing.add(norm)
        added.append(value)
    return Question(question.domain, question.slot, question.values + tuple(added), VALUE_MODE)


def extend_ontology(ontology: Ontology, domain: str, slot: str, new_values: list[str]) -> Ontology:
    """New ontology with extra candidate values appended to one
    value-mode slot.  Pair order and every other slot are unchanged, so
    feature layouts and question order stay compatible."""
    spec = ontology.spec(domain, slot)
    if spec.mode != VALUE_MODE:
        raise ValidationError(f"cannot extend span-mode slot ({domain}, {slot})")
    existing = {normalize_value(v) for v in spec.values}
    added = []
    for value in new_values:
        norm = normalize_value(value)
        if norm in existing:
            raise ValidationError(f"value {value!r} already present in ({domain}, {slot})")
        existing.add(norm)
        added.append(value)
    domains = {
        d: {
            s: (SlotSpec(VALUE_MODE, sp.values + tuple(added)) if (d, s) == (domain, slot) else sp)
            for s, sp in slots.items()
        }
        for d, slots in ontology.domains.items()
    }
    return Ontology(domains)


def derive_relationships(ontology: Ontology) -> RelationshipSet:
    """Compute equal-value-set and strict-subset relations over value-mode
    slots by exact comparison of normalized value strings."""
    value_sets = {}
    for domain, slot in ontology.pairs():
        spec = ontology.spec(domain, slot)
        if spec.mode == VALUE_MODE:
            value_sets[(domain, slot)] = frozenset(normalize_value(v) for v in spec.values)
    same = set()
    subset = set()
    items = list(value_sets.items())
    for i, (pair_a, set_a) in enumerate(items):
        for pair_b, set_b in items[i + 1 :]:
            if set_a == set_b:
                same.add(frozenset((pair_a, pair_b)))
            elif set_a < set_b:
                subset.add((pair_a, pair_b))
            elif set_b < set_a:
                subset.add((pair_b, pair_a))
    return RelationshipSet(frozenset(same), frozenset(subset))
