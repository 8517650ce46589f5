"""State-level metrics.

Joint accuracy: a turn counts only if the predicted state matches the
gold state exactly over every tracked (domain, slot) pair.  Slot
accuracy: fraction of pairs answered correctly per turn, counting "not
mentioned" pairs, averaged over all turns.  Per-domain numbers follow
the convention of dropping dialogues that never mention the domain and
ignoring other domains' slots in the remaining turns.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import canonicalize_value
from .ontology import NOT_MENTIONED, Ontology

Pair = tuple[str, str]


def normalize_state(state: dict) -> dict:
    """Canonical comparison form: values normalized, absent and
    "not mentioned" entries removed."""
    out = {}
    for pair, value in state.items():
        canon = canonicalize_value(value)
        if canon != NOT_MENTIONED:
            out[pair] = canon
    return out


def _restrict(state: dict, pairs) -> dict:
    return {pair: value for pair, value in state.items() if pair in pairs}


@dataclass
class EvalReport:
    joint: float
    slot: float
    per_domain: dict[str, dict] = field(default_factory=dict)
    per_slot: dict[str, float] = field(default_factory=dict)
    turns: int = 0

    def as_dict(self) -> dict:
        return {
            "joint": self.joint,
            "slot": self.slot,
            "per_domain": self.per_domain,
            "per_slot": self.per_slot,
            "turns": self.turns,
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.as_dict(), indent=2))


def joint_accuracy(pred_states, gold_states, pairs) -> float:
    """pred_states/gold_states: flat turn-aligned lists of state dicts."""
    if len(pred_states) != len(gold_states):
        raise ValueError("prediction/gold turn counts differ")
    if not pred_states:
        return 0.0
    pairs = set(pairs)
    hits = 0
    for pred, gold in zip(pred_states, gold_states):
        if _restrict(normalize_state(pred), pairs) == _restrict(normalize_state(gold), pairs):
            hits += 1
    return hits / len(pred_states)


def slot_accuracy(pred_states, gold_states, pairs) -> float:
    if len(pred_states) != len(gold_states):
        raise ValueError("prediction/gold turn counts differ")
    pairs = list(pairs)
    if not pred_states or not pairs:
        return 0.0
    hits = 0
    for pred, gold in zip(pred_states, gold_states):
        pred_n, gold_n = normalize_state(pred), normalize_state(gold)
        for pair in pairs:
            if pred_n.get(pair, NOT_MENTIONED) == gold_n.get(pair, NOT_MENTIONED):
                hits += 1
    return hits / (len(pred_states) * len(pairs))


def per_slot_accuracy(pred_states, gold_states, pairs) -> dict[str, float]:
    out = {}
    for pair in pairs:
        hits = 0
        for pred, gold in zip(pred_states, gold_states):
            pred_n, gold_n = normalize_state(pred), normalize_state(gold)
            if pred_n.get(pair, NOT_MENTIONED) == gold_n.get(pair, NOT_MENTIONED):
                hits += 1
        out[f"{pair[0]} {pair[1]}"] = hits / len(pred_states) if pred_states else 0.0
    return out


def per_domain_eval(pred_by_dialogue, gold_by_dialogue, ontology: Ontology) -> dict[str, dict]:
    """Metrics per domain over nested per-dialogue state lists.  A
    dialogue participates in a domain's numbers only if its gold states
    mention that domain; only that domain's pairs are scored."""
    report = {}
    for domain in ontology.domains:
        pairs = [p for p in ontology.pairs() if p[0] == domain]
        preds, golds = [], []
        for dialogue_preds, dialogue_golds in zip(pred_by_dialogue, gold_by_dialogue):
            mentions = any(
                pair[0] == domain
                for state in dialogue_golds
                for pair in normalize_state(state)
            )
            if mentions:
                preds.extend(dialogue_preds)
                golds.extend(dialogue_golds)
        report[domain] = {
            "joint": joint_accuracy(preds, golds, pairs),
            "slot": slot_accuracy(preds, golds, pairs),
            "turns": len(preds),
        }
    return report


def evaluate_states(pred_by_dialogue, gold_by_dialogue, ontology: Ontology, pairs=None) -> EvalReport:
    """Full report over nested per-dialogue prediction/gold state lists."""
    if len(pred_by_dialogue) != len(gold_by_dialogue):
        raise ValueError("prediction/gold dialogue counts differ")
    for p, g in zip(pred_by_dialogue, gold_by_dialogue):
        if len(p) != len(g):
            raise ValueError("prediction/gold turn counts differ within a dialogue")
    pairs = list(pairs) if pairs is not None else ontology.pairs()
    preds = [state for dialogue in pred_by_dialogue for state in dialogue]
    golds = [state for dialogue in gold_by_dialogue for state in dialogue]
    return EvalReport(
        joint=joint_accuracy(preds, golds, pairs),
        slot=slot_accuracy(preds, golds, pairs),
        per_domain=per_domain_eval(pred_by_dialogue, gold_by_dialogue, ontology),
        per_slot=per_slot_accuracy(preds, golds, pairs),
        turns=len(preds),
    )
