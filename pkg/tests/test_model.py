import numpy as np
import pytest
import torch

from qadst import (
    DONT_CARE,
    ModelConfig,
    NOT_MENTIONED,
    ShapeError,
    build_questions,
    build_turn_examples,
    build_vocabulary,
    extend_ontology,
)
from qadst.corpus import Dialogue, Turn
from qadst.graph import counters, reset_counters
from qadst.model import DstModel
from qadst.ontology import SPAN_MODE, VALUE_MODE
from qadst.synthetic import default_ontology


def _setup(**config):
    ontology = default_ontology()
    dialogue = Dialogue(
        "d",
        (
            Turn("", "i want a cheap restaurant in the north", {
                ("restaurant", "price range"): "cheap",
                ("restaurant", "area"): "north",
            }),
            Turn("sure , anything else ?", "a taxi to city stadium leaving at 08:15", {
                ("restaurant", "price range"): "cheap",
                ("restaurant", "area"): "north",
                ("taxi", "destination"): "city stadium",
                ("taxi", "leave time"): "08:15",
            }),
        ),
    )
    vocab = build_vocabulary([dialogue], ontology)
    defaults = dict(word_dim=16, char_dim=8, char_filters=8, role_dim=8, dropout=0.0, word_dropout=0.0)
    defaults.update(config)
    torch.manual_seed(0)
    model = DstModel(ontology, vocab, ModelConfig(**defaults))
    examples = build_turn_examples(dialogue, ontology, model.questions)
    return model, examples


def test_forward_covers_every_pair_with_right_shapes():
    model, examples = _setup()
    model.eval()
    outputs = model.forward_turn(examples[1])
    assert set(outputs) == set(model.pairs)
    for question in model.questions:
        out = outputs[question.pair]
        if question.mode == VALUE_MODE:
            assert out.value_logits.shape == (len(question.candidates),)
            assert out.type_logits is None
        else:
            assert out.type_logits.shape == (3,)
            L = len(examples[1].tokens)
            assert out.start_logits.shape == (L,)
            assert out.end_logits.shape == (L,)


def test_graph_state_requires_graph_parameters():
    model, examples = _setup(graph=False)
    with pytest.raises(ShapeError):
        model.forward_turn(examples[0], model.new_graph())


def test_feature_width_mismatch_rejected():
    model, examples = _setup()
    example = examples[0]
    example.exact_match = example.exact_match[:, :-1]
    with pytest.raises(ShapeError):
        model.forward_turn(example)


def test_decode_returns_value_strings_for_all_pairs():
    model, examples = _setup()
    model.eval()
    predictions, _ = model.predict_turn(examples[0])
    assert set(predictions) == set(model.pairs)
    for question in model.questions:
        value = predictions[question.pair]
        if question.mode == VALUE_MODE:
            assert value in question.candidates
        else:
            assert isinstance(value, str) and value


def test_extended_questions_grow_value_head():
    model, examples = _setup()
    model.eval()
    extended = extend_ontology(model.ontology, "restaurant", "area", ["riverside"])
    questions = build_questions(extended)
    outputs = model.forward_turn(examples[0], questions=questions)
    area = outputs[("restaurant", "area")]
    base_k = len(default_ontology().spec("restaurant", "area").values) + 2
    assert area.value_logits.shape == (base_k + 1,)
    probs = area.value_distribution()
    assert abs(probs.sum().item() - 1.0) < 1e-6


def test_predict_dialogue_graph_feeds_own_predictions():
    model, examples = _setup()
    reset_counters()
    states = model.predict_dialogue(examples, use_graph=True)
    assert len(states) == 2
    n_value_questions = sum(q.mode == VALUE_MODE for q in model.questions)
    assert counters["node_embeddings"] == len(examples)
    assert counters["graph_embedding"] == len(examples) * n_value_questions
    reset_counters()


def test_graph_off_run_never_touches_graph_ops():
    model, examples = _setup()
    reset_counters()
    model.predict_dialogue(examples, use_graph=False)
    assert all(v == 0 for v in counters.values())


def test_eval_mode_forward_is_deterministic():
    model, examples = _setup(dropout=0.5, word_dropout=0.1)
    model.eval()
    a = model.forward_turn(examples[1])
    b = model.forward_turn(examples[1])
    for pair in model.pairs:
        for field in ("value_logits", "type_logits", "start_logits", "end_logits"):
            ta, tb = getattr(a[pair], field), getattr(b[pair], field)
            assert (ta is None) == (tb is None)
            if ta is not None:
                assert torch.equal(ta, tb)


def test_span_decode_special_types():
    model, examples = _setup()
    model.eval()
    outputs = model.forward_turn(examples[0])
    pair = ("taxi", "leave time")
    out = outputs[pair]
    with torch.no_grad():
        out.type_logits = torch.tensor([5.0, 0.0, 0.0], dtype=out.type_logits.dtype)
    assert model.decode(outputs, examples[0])[pair] == NOT_MENTIONED
    with torch.no_grad():
        out.type_logits = torch.tensor([0.0, 5.0, 0.0], dtype=out.type_logits.dtype)
    assert model.decode(outputs, examples[0])[pair] == DONT_CARE


def test_gated_nodes_adds_exactly_one_parameter_tensor():
    plain, _ = _setup(graph=True, gated_nodes=False)
    gated, _ = _setup(graph=True, gated_nodes=True)
    plain_names = {n for n, _ in plain.named_parameters()}
    gated_names = {n for n, _ in gated.named_parameters()}
    assert gated_names - plain_names == {"theta4"}
    no_graph, _ = _setup(graph=False)
    assert plain_names - {n for n, _ in no_graph.named_parameters()} == {"beta4"}
