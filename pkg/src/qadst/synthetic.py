"""Synthetic two-domain dialogue generator.

Produces small, fully-annotated corpora whose utterances mention slot
values verbatim, so a tracker that works can reach near-perfect joint
accuracy on them quickly.  Used by the test suite and the gen-synthetic
CLI command; not a benchmark.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, Dialogue, State, Turn
from .ontology import DONT_CARE, Ontology, SlotSpec, SPAN_MODE, VALUE_MODE

TIME_POOL = tuple(
    f"{hour:02d}:{minute:02d}" for hour in (7, 8, 9, 11, 14, 17, 19, 21) for minute in (0, 15, 45)
)

_PLACES = (
    "alexander inn",
    "broad street market",
    "city stadium",
    "garden museum",
    "north station",
    "old town hall",
    "river cinema",
    "west gallery",
)


def default_ontology() -> Ontology:
    return Ontology(
        {
            "restaurant": {
                "price range": SlotSpec(VALUE_MODE, ("cheap", "moderate", "expensive")),
                "area": SlotSpec(VALUE_MODE, ("north", "south", "east", "west", "centre")),
            },
            "taxi": {
                "destination": SlotSpec(VALUE_MODE, _PLACES),
                "leave time": SlotSpec(SPAN_MODE, ()),
            },
        }
    )


_INFORM_TEMPLATES = {
    ("restaurant", "price range"): (
        "i want a {value} priced restaurant",
        "find me a {value} restaurant please",
    ),
    ("restaurant", "area"): (
        "i would like a restaurant in the {value}",
        "somewhere in the {value} part of town please",
    ),
    ("taxi", "destination"): (
        "i need a taxi to {value}",
        "book me a taxi going to {value}",
    ),
    ("taxi", "leave time"): (
        "i want to leave at {value}",
        "the taxi should leave at {value}",
    ),
}

_DONT_CARE_TEMPLATES = {
    ("restaurant", "price range"): "any price range is fine",
    ("restaurant", "area"): "the area does not matter to me",
    ("taxi", "destination"): "i do not mind the destination",
    ("taxi", "leave time"): "any leave time works for me",
}

# fallbacks so the generator works with any ontology, not just the
# default one; curated wording above wins when a pair has it
_GENERIC_INFORM = (
    "the {domain} {slot} should be {value}",
    "for the {domain} {slot} i want {value}",
)
_GENERIC_DONT_CARE = "any {domain} {slot} is fine"

_CHITCHAT = (
    "hello there",
    "thank you so much",
    "that sounds great",
    "you have been very helpful",
)

_AGENT_LINES = (
    "how can i help you",
    "sure , anything else ?",
    "okay , i can help with that",
    "of course , what else do you need ?",
)


def inform_utterance(domain: str, slot: str, value: str, variant: int = 0) -> str:
    """Deterministic user utterance informing one slot value.  Exposed so
    tests can build dialogues whose wording matches the training data."""
    if value == DONT_CARE:
        template = _DONT_CARE_TEMPLATES.get((domain, slot), _GENERIC_DONT_CARE)
        return template.format(domain=domain, slot=slot)
    templates = _INFORM_TEMPLATES.get((domain, slot), _GENERIC_INFORM)
    return templates[variant % len(templates)].format(domain=domain, slot=slot, value=value)


@dataclass
class SyntheticConfig:
    n_train: int = 50
    n_dev: int = 10
    n_test: int = 10
    seed: int = 13
    max_informs: int = 3
    chitchat_rate: float = 0.25
    dont_care_rate: float = 0.1
    # extra wizard lines mixed into every dialogue; lets a corpus expose
    # vocabulary (for example another domain's words) without informing
    # any slot
    extra_agent_lines: tuple = ()


def _sample_value(rng: random.Random, ontology: Ontology, domain: str, slot: str) -> str:
    spec = ontology.spec(domain, slot)
    if spec.mode == SPAN_MODE:
        return rng.choice(TIME_POOL)
    return rng.choice(list(spec.values))


def _generate_dialogue(
    rng: random.Random, ontology: Ontology, dialogue_id: str, config: SyntheticConfig
) -> Dialogue:
    pairs = list(ontology.pairs())
    agent_lines = _AGENT_LINES + tuple(config.extra_agent_lines)
    n_informs = rng.randint(1, min(config.max_informs, len(pairs)))
    chosen = rng.sample(pairs, n_informs)
    state: State = {}
    turns = []
    agent = ""
    for domain, slot in chosen:
        if rng.random() < config.chitchat_rate:
            turns.append(Turn(agent=agent, user=rng.choice(_CHITCHAT), state=dict(state)))
            agent = rng.choice(agent_lines)
        if rng.random() < config.dont_care_rate:
            value = DONT_CARE
        else:
            value = _sample_value(rng, ontology, domain, slot)
        state[(domain, slot)] = value
        turns.append(
            Turn(agent=agent, user=inform_utterance(domain, slot, value, rng.randrange(2)), state=dict(state))
        )
        agent = rng.choice(agent_lines)
    return Dialogue(dialogue_id=dialogue_id, turns=tuple(turns))


def generate_synthetic(
    config: SyntheticConfig | None = None,
    ontology: Ontology | None = None,
) -> tuple[Corpus, Ontology]:
    """Generate a corpus with train/dev/test splits.  Deterministic for a
    given config: the same seed yields byte-identical dialogues."""
    config = config or SyntheticConfig()
    ontology = ontology or default_ontology()
    rng = random.Random(config.seed)
    dialogues = []
    splits: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
    for split, count in (("train", config.n_train), ("dev", config.n_dev), ("test", config.n_test)):
        for i in range(count):
            dialogue_id = f"synth-{split}-{i:04d}"
            dialogues.append(_generate_dialogue(rng, ontology, dialogue_id, config))
            splits[split].append(dialogue_id)
    return Corpus.build(dialogues, splits, ontology), ontology
