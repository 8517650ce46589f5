import json

import pytest

from qadst import (
    DONT_CARE,
    NOT_MENTIONED,
    Ontology,
    SchemaError,
    SlotSpec,
    ValidationError,
    build_questions,
    derive_relationships,
    extend_ontology,
    extend_question,
    load_ontology,
    parse_ontology,
)
from qadst.ontology import SPAN_MODE, VALUE_MODE


def _ontology():
    return Ontology(
        {
            "restaurant": {
                "area": SlotSpec(VALUE_MODE, ("north", "south")),
                "book time": SlotSpec(SPAN_MODE, ()),
            },
            "hotel": {
                "area": SlotSpec(VALUE_MODE, ("north", "south")),
                "stars": SlotSpec(VALUE_MODE, ("1", "2", "3")),
            },
        }
    )


def test_pairs_follow_declaration_order():
    assert _ontology().pairs() == [
        ("restaurant", "area"),
        ("restaurant", "book time"),
        ("hotel", "area"),
        ("hotel", "stars"),
    ]


def test_value_mode_requires_values():
    with pytest.raises(ValidationError):
        Ontology({"d": {"s": SlotSpec(VALUE_MODE, ())}})


def test_duplicate_normalized_values_rejected():
    with pytest.raises(ValidationError):
        Ontology({"d": {"s": SlotSpec(VALUE_MODE, ("North", "north"))}})


def test_parse_rejects_bad_mode():
    with pytest.raises(SchemaError):
        parse_ontology({"domains": {"d": {"s": {"mode": "other", "values": ["x"]}}}})


def test_load_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"domains": {,}}')
    with pytest.raises(SchemaError, match="line"):
        load_ontology(path)


def test_load_rejects_duplicate_slot_keys(tmp_path):
    path = tmp_path / "dup.json"
    path.write_text(
        '{"domains": {"d": {"s": {"mode": "value", "values": ["a"]},'
        ' "s": {"mode": "value", "values": ["b"]}}}}'
    )
    with pytest.raises(ValidationError, match="duplicate"):
        load_ontology(path)


def test_json_roundtrip(tmp_path):
    ontology = _ontology()
    path = tmp_path / "ontology.json"
    path.write_text(ontology.to_json())
    assert load_ontology(path).pairs() == ontology.pairs()
    assert json.loads(ontology.to_json())["domains"]["hotel"]["stars"]["values"] == ["1", "2", "3"]


def test_questions_candidates_end_with_specials():
    questions = build_questions(_ontology())
    area = questions[0]
    assert area.mode == VALUE_MODE
    assert area.candidates == ("north", "south", NOT_MENTIONED, DONT_CARE)
    span = questions[1]
    assert span.mode == SPAN_MODE
    assert span.embedded_values == (NOT_MENTIONED, DONT_CARE)


def test_extend_question_inserts_before_specials():
    question = build_questions(_ontology())[0]
    extended = extend_question(question, ["east"])
    assert extended.candidates == ("north", "south", "east", NOT_MENTIONED, DONT_CARE)
    with pytest.raises(ValidationError):
        extend_question(extended, ["EAST"])
    with pytest.raises(ValidationError):
        extend_question(build_questions(_ontology())[1], ["x"])


def test_extend_ontology_keeps_layout():
    ontology = _ontology()
    extended = extend_ontology(ontology, "hotel", "stars", ["4"])
    assert extended.pairs() == ontology.pairs()
    assert extended.spec("hotel", "stars").values == ("1", "2", "3", "4")
    assert ontology.spec("hotel", "stars").values == ("1", "2", "3")
    with pytest.raises(ValidationError):
        extend_ontology(ontology, "restaurant", "book time", ["x"])


def test_restricted_keeps_only_named_domains():
    restricted = _ontology().restricted(["hotel"])
    assert all(domain == "hotel" for domain, _ in restricted.pairs())
    with pytest.raises(ValidationError):
        _ontology().restricted(["nope"])


def test_relationships_equal_and_subset():
    ontology = Ontology(
        {
            "a": {"x": SlotSpec(VALUE_MODE, ("p", "q")), "y": SlotSpec(VALUE_MODE, ("p", "q", "r"))},
            "b": {"x": SlotSpec(VALUE_MODE, ("Q", "P"))},
        }
    )
    rel = derive_relationships(ontology)
    assert frozenset({("a", "x"), ("b", "x")}) in rel.same_values
    assert (("a", "x"), ("a", "y")) in rel.subset
    assert (("a", "y"), ("a", "x")) not in rel.subset
