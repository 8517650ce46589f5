"""Dialogue corpus: ingestion, per-turn training examples, labels, features.

A dialogue state is a set of (domain, slot, value) triples, stored here
as a ``{(domain, slot): value}`` mapping since each pair carries at most
one value per turn.  States are cumulative: the state at turn t is the
full belief state after the user's t-th utterance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import SchemaError, ValidationError
from .ontology import (
    DONT_CARE,
    NOT_MENTIONED,
    Ontology,
    Question,
    SPAN_MODE,
    VALUE_MODE,
)
from .text import DEFAULT_LEMMATIZER, Lemmatizer, lemmatize_tokens, normalize_value, tokenize

UNK_TOKEN = "<unk>"

ROLE_AGENT = 0
ROLE_USER = 1

#: span answer types, aligned with the 3-way span-type classifier
SPAN_TYPE_NOT_MENTIONED = 0
SPAN_TYPE_DONT_CARE = 1
SPAN_TYPE_SPAN = 2

#: domains ignored during ingestion (they only occur in the training split)
EXCLUDED_DOMAINS = ("hospital", "police")

#: annotation spellings folded onto the two special values
_SPECIAL_ALIASES = {
    "dontcare": DONT_CARE,
    "dont care": DONT_CARE,
    "don't care": DONT_CARE,
    "do n't care": DONT_CARE,
    "do not care": DONT_CARE,
    "none": NOT_MENTIONED,
    "not mentioned": NOT_MENTIONED,
    "": NOT_MENTIONED,
}

State = dict[tuple[str, str], str]


def canonicalize_value(value: str) -> str:
    """Normalize an annotated value, folding special-value spellings."""
    norm = normalize_value(value)
    return _SPECIAL_ALIASES.get(norm, norm)


@dataclass(frozen=True)
class Turn:
    agent: str
    user: str
    state: State


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    turns: tuple[Turn, ...]

    def mentioned_domains(self) -> set[str]:
        return {domain for turn in self.turns for (domain, _slot) in turn.state}


@dataclass(frozen=True)
class SpanLabel:
    """Gold answer for a span-mode question: answer type plus token
    indices, defined only when the type is span and the value was found."""

    answer_type: int
    start: int | None = None
    end: int | None = None


@dataclass
class TurnExample:
    """Model-ready view of one turn: tokenized context with role tags,
    exact-match features, and one label per question."""

    dialogue_id: str
    turn_index: int
    tokens: list[str]
    roles: list[int]
    exact_match: np.ndarray  # (len(tokens), 2 * n_pairs) uint8
    labels: dict[tuple[str, str], int | SpanLabel]
    state: State


class Vocabulary:
    """Token -> id table with a reserved unknown id."""

    def __init__(self, tokens: list[str]):
        self._ids = {UNK_TOKEN: 0}
        for token in tokens:
            if token not in self._ids:
                self._ids[token] = len(self._ids)

    @property
    def unk_id(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids.get(token, 0)

    def ids(self, tokens: list[str]) -> list[int]:
        return [self._ids.get(t, 0) for t in tokens]

    def to_dict(self) -> dict[str, int]:
        return dict(self._ids)

    @classmethod
    def from_dict(cls, mapping: dict[str, int]) -> "Vocabulary":
        vocab = cls([])
        for token, idx in sorted(mapping.items(), key=lambda kv: kv[1]):
            if token == UNK_TOKEN:
                continue
            vocab._ids[token] = len(vocab._ids)
        return vocab


def _ontology_tokens(ontology: Ontology) -> list[str]:
    tokens = []
    for domain, slot in ontology.pairs():
        tokens.extend(tokenize(domain))
        tokens.extend(tokenize(slot))
        for value in ontology.spec(domain, slot).values:
            tokens.extend(tokenize(value))
    for special in (NOT_MENTIONED, DONT_CARE):
        tokens.extend(tokenize(special))
    return tokens


def build_vocabulary(dialogues: list[Dialogue], ontology: Ontology | None = None) -> Vocabulary:
    """Vocabulary over the training dialogues plus question-element and
    special-value tokens (those must embed even when absent from text)."""
    tokens: list[str] = []
    for dialogue in dialogues:
        for turn in dialogue.turns:
            tokens.extend(tokenize(turn.agent))
            tokens.extend(tokenize(turn.user))
    if ontology is not None:
        tokens.extend(_ontology_tokens(ontology))
    else:
        for special in (NOT_MENTIONED, DONT_CARE):
            tokens.extend(tokenize(special))
    return Vocabulary(tokens)


@dataclass
class Corpus:
    dialogues: list[Dialogue]
    splits: dict[str, list[str]]
    vocabulary: Vocabulary

    def __post_init__(self):
        ids = [d.dialogue_id for d in self.dialogues]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate dialogue ids in corpus")
        by_id = set(ids)
        tagged: set[str] = set()
        for split, members in self.splits.items():
            for did in members:
                if did not in by_id:
                    raise ValidationError(f"split {split!r} references unknown dialogue {did!r}")
                if did in tagged:
                    raise ValidationError(f"dialogue {did!r} assigned to more than one split")
                tagged.add(did)

    @classmethod
    def build(
        cls,
        dialogues: list[Dialogue],
        splits: dict[str, list[str]],
        ontology: Ontology | None = None,
    ) -> "Corpus":
        by_id = {d.dialogue_id: d for d in dialogues}
        train = [by_id[i] for i in splits.get("train", [])]
        return cls(dialogues, splits, build_vocabulary(train, ontology))

    def split_dialogues(self, split: str) -> list[Dialogue]:
        by_id = {d.dialogue_id: d for d in self.dialogues}
        return [by_id[i] for i in self.splits.get(split, [])]

    def by_id(self, dialogue_id: str) -> Dialogue:
        for dialogue in self.dialogues:
            if dialogue.dialogue_id == dialogue_id:
                return dialogue
        raise KeyError(dialogue_id)


@dataclass
class IngestionReport:
    dialogues_kept: int = 0
    dialogues_excluded: int = 0
    triples_kept: int = 0
    dropped_unknown_slot: int = 0
    dropped_unknown_value: int = 0
    dropped_excluded_domain: int = 0
    unpaired_user_turns: int = 0
    dropped_examples: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PreprocessReport:
    span_labels_built: int = 0
    span_label_misses: int = 0
    examples_built: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# label construction


def build_span_label(tokens: list[str], value: str) -> tuple[int, int] | None:
    """Token indices (inclusive) of the last occurrence of ``value`` in
    ``tokens``, or None when absent.

    The value is tokenized with the shared tokenizer and matched as a
    contiguous token subsequence.
    """
    if not tokens:
        raise ValidationError("build_span_label requires a non-empty token list")
    needle = tokenize(value)
    if not needle:
        return None
    n = len(needle)
    last = None
    for start in range(len(tokens) - n + 1):
        if tokens[start : start + n] == needle:
            last = (start, start + n - 1)
    return last


def exact_match_features(
    tokens: list[str],
    ontology: Ontology,
    lemmatizer: Lemmatizer | None = None,
) -> np.ndarray:
    """Binary matrix (len(tokens), 2P): for pair p, column 2p marks tokens
    inside an original-form occurrence of any of p's values and column
    2p+1 marks tokens inside a lemmatized-form occurrence.  Pairs without
    value lists yield all-zero columns.
    """
    pairs = ontology.pairs()
    features = np.zeros((len(tokens), 2 * len(pairs)), dtype=np.uint8)
    lemmas = lemmatize_tokens(tokens, lemmatizer or DEFAULT_LEMMATIZER)
    for p, (domain, slot) in enumerate(pairs):
        spec = ontology.spec(domain, slot)
        for value in spec.values:
            needle = tokenize(value)
            if needle:
                _mark_occurrences(tokens, needle, features, 2 * p)
                lemma_needle = lemmatize_tokens(needle, lemmatizer or DEFAULT_LEMMATIZER)
                _mark_occurrences(lemmas, lemma_needle, features, 2 * p + 1)
    return features


def _mark_occurrences(haystack: list[str], needle: list[str], features: np.ndarray, col: int):
    n = len(needle)
    for start in range(len(haystack) - n + 1):
        if haystack[start : start + n] == needle:
            features[start : start + n, col] = 1


def _value_label_index(question: Question, value: str) -> int:
    norm = canonicalize_value(value)
    for idx, candidate in enumerate(question.candidates):
        if normalize_value(candidate) == norm:
            return idx
    raise ValidationError(
        f"value {value!r} not among candidates of ({question.domain}, {question.slot})"
    )


def build_turn_examples(
    dialogue: Dialogue,
    ontology: Ontology,
    questions: list[Question],
    context_window: int | None = None,
    lemmatizer: Lemmatizer | None = None,
    report: PreprocessReport | None = None,
) -> list[TurnExample]:
    """One example per turn: tokenized context (all turns up to t, or the
    last ``context_window`` turns), role tags, exact-match features, and
    a label per question.

    Span values missing from the context produce a span-type label with
    no indices; those questions still supervise the type classifier but
    are excluded from the boundary loss.
    """
    per_turn_tokens: list[tuple[list[str], list[int]]] = []
    for turn in dialogue.turns:
        tokens: list[str] = []
        roles: list[int] = []
        for text_piece, role in ((turn.agent, ROLE_AGENT), (turn.user, ROLE_USER)):
            piece_tokens = tokenize(text_piece)
            tokens.extend(piece_tokens)
            roles.extend([role] * len(piece_tokens))
        per_turn_tokens.append((tokens, roles))

    examples = []
    for t, turn in enumerate(dialogue.turns):
        first = 0 if context_window is None else max(0, t + 1 - context_window)
        tokens = [tok for toks, _ in per_turn_tokens[first : t + 1] for tok in toks]
        roles = [r for _, rs in per_turn_tokens[first : t + 1] for r in rs]
        state = {pair: canonicalize_value(v) for pair, v in turn.state.items()}
        labels: dict[tuple[str, str], int | SpanLabel] = {}
        for question in questions:
            value = state.get(question.pair, NOT_MENTIONED)
            if question.mode == VALUE_MODE:
                labels[question.pair] = _value_label_index(question, value)
            else:
                if value == NOT_MENTIONED:
                    labels[question.pair] = SpanLabel(SPAN_TYPE_NOT_MENTIONED)
                elif value == DONT_CARE:
                    labels[question.pair] = SpanLabel(SPAN_TYPE_DONT_CARE)
                else:
                    span = build_span_label(tokens, value) if tokens else None
                    if report is not None:
                        report.span_labels_built += 1
                        if span is None:
                            report.span_label_misses += 1
                    if span is None:
                        labels[question.pair] = SpanLabel(SPAN_TYPE_SPAN)
                    else:
                        labels[question.pair] = SpanLabel(SPAN_TYPE_SPAN, span[0], span[1])
        if report is not None:
            report.examples_built += 1
        examples.append(
            TurnExample(
                dialogue_id=dialogue.dialogue_id,
                turn_index=t,
                tokens=tokens,
                roles=roles,
                exact_match=exact_match_features(tokens, ontology, lemmatizer),
                labels=labels,
                state=state,
            )
        )
    return examples


# ---------------------------------------------------------------------------
# MultiWOZ ingestion


def _read_id_list(path: Path) -> list[str]:
    text = path.read_text().strip()
    if text.startswith("["):
        return list(json.loads(text))
    return [line.strip() for line in text.splitlines() if line.strip()]


def _find_list_file(raw: Path, stem: str) -> Path | None:
    for suffix in (".json", ".txt"):
        candidate = raw / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def _metadata_triples(metadata: dict) -> list[tuple[str, str, str]]:
    triples = []
    for domain, sections in metadata.items():
        if not isinstance(sections, dict):
            continue
        semi = sections.get("semi", {}) or {}
        book = sections.get("book", {}) or {}
        for slot, value in semi.items():
            triples.append((domain, slot, value))
        for slot, value in book.items():
            if slot == "booked":
                continue
            triples.append((domain, f"book {slot}", value))
    return triples


def _normalize_triple(
    domain: str,
    slot: str,
    value,
    ontology: Ontology,
    report: IngestionReport,
) -> tuple[tuple[str, str], str] | None:
    if isinstance(value, list):
        value = value[0] if value else ""
    value = canonicalize_value(str(value))
    if value == NOT_MENTIONED:
        return None
    domain = normalize_value(domain)
    slot = normalize_value(slot)
    if domain in EXCLUDED_DOMAINS:
        report.dropped_excluded_domain += 1
        return None
    if not ontology.has_pair(domain, slot):
        report.dropped_unknown_slot += 1
        if len(report.dropped_examples) < 20:
            report.dropped_examples.append(f"unknown slot ({domain}, {slot})")
        return None
    spec = ontology.spec(domain, slot)
    if value != DONT_CARE and spec.mode == VALUE_MODE:
        known = {normalize_value(v) for v in spec.values}
        if value not in known:
            report.dropped_unknown_value += 1
            if len(report.dropped_examples) < 20:
                report.dropped_examples.append(f"unknown value ({domain}, {slot}, {value})")
            return None
    report.triples_kept += 1
    return (domain, slot), value


def ingest_multiwoz(raw_path: str | Path, ontology: Ontology) -> tuple[Corpus, IngestionReport]:
    """Read a raw MultiWOZ 2.0/2.1 distribution into the canonical corpus.

    Expects ``data.json`` plus ``valListFile``/``testListFile`` (either
    one id per line or a JSON array) under ``raw_path``.  The log
    alternates user/system utterances starting with the user; a system
    turn's metadata holds the belief state after the preceding user
    utterance.  Hospital and police content is dropped; a dialogue whose
    annotations touch only those domains is excluded entirely.
    """
    raw = Path(raw_path)
    data_file = raw / "data.json"
    if not data_file.exists():
        raise FileNotFoundError(f"no data.json under {raw}")
    data = json.loads(data_file.read_text())
    if not isinstance(data, dict):
        raise SchemaError("data.json must map dialogue ids to dialogue records")

    val_file = _find_list_file(raw, "valListFile")
    test_file = _find_list_file(raw, "testListFile")
    dev_ids = set(_read_id_list(val_file)) if val_file else set()
    test_ids = set(_read_id_list(test_file)) if test_file else set()

    report = IngestionReport()
    dialogues = []
    for dialogue_id, record in data.items():
        log = record.get("log", [])
        turns = []
        excluded_only = False
        mentioned: set[str] = set()
        for t in range(len(log) // 2):
            user_entry = log[2 * t]
            system_entry = log[2 * t + 1]
            agent_text = log[2 * t - 1].get("text", "") if t > 0 else ""
            user_text = user_entry.get("text", "")
            state: State = {}
            for domain, slot, value in _metadata_triples(system_entry.get("metadata", {}) or {}):
                mentioned.add(normalize_value(domain))
                normalized = _normalize_triple(domain, slot, value, ontology, report)
                if normalized is not None:
                    state[normalized[0]] = normalized[1]
            turns.append(Turn(agent=agent_text, user=user_text, state=state))
        if len(log) % 2 == 1:
            report.unpaired_user_turns += 1
        if mentioned and mentioned <= set(EXCLUDED_DOMAINS):
            excluded_only = True
        if excluded_only or not turns:
            report.dialogues_excluded += 1
            continue
        report.dialogues_kept += 1
        dialogues.append(Dialogue(dialogue_id=dialogue_id, turns=tuple(turns)))

    kept_ids = {d.dialogue_id for d in dialogues}
    splits = {
        "train": [d.dialogue_id for d in dialogues if d.dialogue_id not in dev_ids | test_ids],
        "dev": [d.dialogue_id for d in dialogues if d.dialogue_id in dev_ids],
        "test": [d.dialogue_id for d in dialogues if d.dialogue_id in test_ids],
    }
    del kept_ids
    corpus = Corpus.build(dialogues, splits, ontology)
    return corpus, report


# ---------------------------------------------------------------------------
# canonical corpus serialization


def state_to_json(state: State) -> list[dict]:
    return [
        {"domain": d, "slot": s, "value": v}
        for (d, s), v in sorted(state.items())
    ]


def state_from_json(entries: list[dict]) -> State:
    state: State = {}
    for entry in entries:
        state[(entry["domain"], entry["slot"])] = entry["value"]
    return state


def dialogue_to_json(dialogue: Dialogue) -> dict:
    return {
        "dialogue_id": dialogue.dialogue_id,
        "turns": [
            {"agent": t.agent, "user": t.user, "state": state_to_json(t.state)}
            for t in dialogue.turns
        ],
    }


def dialogue_from_json(data: dict) -> Dialogue:
    try:
        turns = tuple(
            Turn(
                agent=t.get("agent", ""),
                user=t["user"],
                state={
                    pair: canonicalize_value(v)
                    for pair, v in state_from_json(t.get("state", [])).items()
                    if canonicalize_value(v) != NOT_MENTIONED
                },
            )
            for t in data["turns"]
        )
        return Dialogue(dialogue_id=data["dialogue_id"], turns=turns)
    except KeyError as exc:
        raise SchemaError(f"dialogue record missing key {exc}") from exc


def save_corpus(corpus: Corpus, path: str | Path):
    payload = {
        "dialogues": [dialogue_to_json(d) for d in corpus.dialogues],
        "splits": corpus.splits,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False))


def load_corpus(path: str | Path, ontology: Ontology | None = None) -> Corpus:
    try:
        payload = json.loads(Path(path).read_text())
        dialogues = [dialogue_from_json(d) for d in payload["dialogues"]]
        splits = payload.get("splits", {})
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SchemaError(f"bad corpus file {path}: {exc}") from exc
    return Corpus.build(dialogues, splits, ontology)


# ---------------------------------------------------------------------------
# w/o-span configuration


def convert_span_slots_to_value(ontology: Ontology, train_dialogues: list[Dialogue]) -> Ontology:
    """Rebuild span slots as value slots whose lists collect every value
    observed for them in the training dialogues (sorted for determinism).
    Span slots with no observed values stay in span mode."""
    collected: dict[tuple[str, str], set[str]] = {}
    for dialogue in train_dialogues:
        for turn in dialogue.turns:
            for pair, value in turn.state.items():
                canon = canonicalize_value(value)
                if canon in (NOT_MENTIONED, DONT_CARE):
                    continue
                if ontology.has_pair(*pair) and ontology.spec(*pair).mode == SPAN_MODE:
                    collected.setdefault(pair, set()).add(canon)
    domains = {}
    for domain, slots in ontology.domains.items():
        new_slots = {}
        for slot, spec in slots.items():
            values = collected.get((domain, slot))
            if spec.mode == SPAN_MODE and values:
                new_slots[slot] = type(spec)(mode=VALUE_MODE, values=tuple(sorted(values)))
            else:
                new_slots[slot] = spec
        domains[domain] = new_slots
    return Ontology(domains)
