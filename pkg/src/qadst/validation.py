"""Input coercion and validation for the public estimator API."""
from __future__ import annotations

from pathlib import Path

from .corpus import Corpus, Dialogue, dialogue_from_json
from .errors import ValidationError
from .ontology import Ontology, load_ontology, parse_ontology


def as_ontology(obj) -> Ontology:
    """Accept an Ontology, a parsed mapping, or a path to a JSON file."""
    if isinstance(obj, Ontology):
        return obj
    if isinstance(obj, dict):
        return parse_ontology(obj)
    if isinstance(obj, (str, Path)):
        return load_ontology(obj)
    raise ValidationError(f"cannot interpret {type(obj).__name__} as an ontology")


def as_dialogue(obj) -> Dialogue:
    if isinstance(obj, Dialogue):
        return obj
    if isinstance(obj, dict):
        return dialogue_from_json(obj)
    raise ValidationError(f"cannot interpret {type(obj).__name__} as a dialogue")


def as_dialogues(X) -> list[Dialogue]:
    """Accept a Dialogue, a dialogue dict, or a sequence of either."""
    if isinstance(X, (Dialogue, dict)):
        return [as_dialogue(X)]
    if isinstance(X, (list, tuple)):
        if not X:
            raise ValidationError("empty dialogue list")
        return [as_dialogue(item) for item in X]
    raise ValidationError(f"cannot interpret {type(X).__name__} as dialogues")


def as_corpus(X, ontology: Ontology | None = None) -> Corpus:
    """Accept a Corpus as-is, or wrap plain dialogues as an all-train
    corpus (no dev/test splits)."""
    if isinstance(X, Corpus):
        return X
    dialogues = as_dialogues(X)
    return Corpus.build(
        dialogues,
        {"train": [d.dialogue_id for d in dialogues]},
        ontology,
    )


def require_fitted(estimator, attribute: str = "runtime_"):
    if not hasattr(estimator, attribute):
        raise ValidationError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
