import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from qadst import ShapeError, SpanLabel
from qadst.corpus import SPAN_TYPE_DONT_CARE, SPAN_TYPE_SPAN
from qadst.ontology import SPAN_MODE, VALUE_MODE
from qadst.reader import (
    QuestionOutput,
    att,
    bidirectional_attention,
    bilinear,
    compute_loss,
    decode_span,
    span_end_logits,
    span_start_logits,
    span_summary,
    span_type_logits,
    summarize_context,
    value_logits,
)

from .oracles import (
    att_oracle,
    bidirectional_attention_oracle,
    bilinear_oracle,
    decode_span_oracle,
    softmax_oracle,
    span_end_oracle,
    span_start_oracle,
    span_type_oracle,
    summarize_context_oracle,
    value_distribution_oracle,
)


def _t(x):
    return torch.tensor(np.asarray(x), dtype=torch.float64)


def test_att_worked_example():
    # two rows engineered to score 3 and 1: softmax gives (0.8808, 0.1192)
    K = _t([[3.0, 0.0], [1.0, 0.0]])
    q = _t([1.0, 0.0])
    beta = _t([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    out = att(K, q, beta)
    assert out.shape == (2,)
    assert math.isclose(out[0].item(), 0.8807970779778823, rel_tol=1e-12)
    assert math.isclose(out[1].item(), 0.11920292202211755, rel_tol=1e-12)


def test_att_matches_oracle():
    rng = np.random.default_rng(0)
    K = rng.standard_normal((5, 4))
    q = rng.standard_normal(4)
    beta = rng.standard_normal(12)
    got = att(_t(K), _t(q), _t(beta)).numpy()
    np.testing.assert_allclose(got, att_oracle(K, q, beta), atol=1e-12)


def test_att_rejects_bad_beta_length():
    with pytest.raises(ShapeError):
        att(_t(np.zeros((2, 3))), _t(np.zeros(3)), _t(np.zeros(8)))


def test_bilinear_matches_oracle_and_shape():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 3))
    y = rng.standard_normal(3)
    phi = rng.standard_normal((3, 3))
    got = bilinear(_t(X), _t(y), _t(phi)).numpy()
    np.testing.assert_allclose(got, bilinear_oracle(X, y, phi), atol=1e-12)
    with pytest.raises(ShapeError):
        bilinear(_t(X), _t(y), _t(np.zeros((3, 4))))


def test_bidirectional_attention_matches_oracle():
    rng = np.random.default_rng(2)
    E_c = rng.standard_normal((7, 5))
    W_q = rng.standard_normal((4, 5))
    beta = rng.standard_normal(15)
    B_c, B_q = bidirectional_attention(_t(E_c), _t(W_q), _t(beta))
    oc, oq = bidirectional_attention_oracle(E_c, W_q, beta)
    np.testing.assert_allclose(B_c.numpy(), oc, atol=1e-12)
    np.testing.assert_allclose(B_q.numpy(), oq, atol=1e-12)


def test_value_pipeline_matches_oracle():
    rng = np.random.default_rng(3)
    E_c = rng.standard_normal((6, 4))
    W_q = rng.standard_normal((5, 4))
    ds = rng.standard_normal(4)
    beta1, beta2 = rng.standard_normal(12), rng.standard_normal(12)
    phi1 = rng.standard_normal((4, 4))
    B_c, B_q = bidirectional_attention(_t(E_c), _t(W_q), _t(beta1))
    u = summarize_context(B_c, _t(ds), _t(beta2))
    np.testing.assert_allclose(
        u.numpy(),
        summarize_context_oracle(*bidirectional_attention_oracle(E_c, W_q, beta1)[:1], ds, beta2),
        atol=1e-12,
    )
    probs = torch.softmax(value_logits(B_q, u, _t(phi1)), dim=0).numpy()
    want = value_distribution_oracle(E_c, W_q, ds, beta1, beta2, phi1)
    np.testing.assert_allclose(probs, want, atol=1e-12)


def test_span_heads_match_oracles():
    rng = np.random.default_rng(4)
    E_c = rng.standard_normal((8, 4))
    ds = rng.standard_normal(4)
    beta3 = rng.standard_normal(12)
    theta1 = rng.standard_normal((3, 4))
    theta2, theta3 = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
    phi2, phi3 = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
    c = span_summary(_t(E_c), _t(ds), _t(beta3))
    p_st = torch.softmax(span_type_logits(c, _t(theta1)), dim=0).numpy()
    np.testing.assert_allclose(p_st, span_type_oracle(E_c, ds, beta3, theta1), atol=1e-12)
    p_ss = torch.softmax(span_start_logits(_t(E_c), c, _t(theta2), _t(phi2)), dim=0).numpy()
    np.testing.assert_allclose(p_ss, span_start_oracle(E_c, ds, beta3, theta2, phi2), atol=1e-12)
    p_se = torch.softmax(
        span_end_logits(_t(E_c), c, _t(theta2), _t(theta3), _t(phi3)), dim=0
    ).numpy()
    np.testing.assert_allclose(
        p_se, span_end_oracle(E_c, ds, beta3, theta2, theta3, phi3), atol=1e-12
    )


def test_decode_span_prefers_earliest_on_ties():
    p = np.array([0.25, 0.25, 0.25, 0.25])
    assert decode_span(p, p) == (0, 0)


def test_decode_span_respects_max_length():
    p_ss = np.array([0.9, 0.05, 0.05])
    p_se = np.array([0.05, 0.06, 0.89])
    assert decode_span(p_ss, p_se, max_span_length=2) == (0, 1)
    assert decode_span(p_ss, p_se, max_span_length=3) == (0, 2)
    assert decode_span(p_ss, p_se, max_span_length=1) == (0, 0)


def test_decode_span_rejects_mismatched_inputs():
    with pytest.raises(ShapeError):
        decode_span(np.zeros(3), np.zeros(4))


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=1, max_value=12),
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=0, max_value=10_000),
)
def test_decode_span_matches_exhaustive_oracle(length, max_len, seed):
    rng = np.random.default_rng(seed)
    p_ss = softmax_oracle(rng.standard_normal(length))
    p_se = softmax_oracle(rng.standard_normal(length))
    assert decode_span(p_ss, p_se, max_len) == decode_span_oracle(p_ss, p_se, max_len)


def _value_output(logits):
    return QuestionOutput(mode=VALUE_MODE, value_logits=_t(logits))


def _span_output(type_logits, start_logits, end_logits):
    return QuestionOutput(
        mode=SPAN_MODE,
        type_logits=_t(type_logits),
        start_logits=_t(start_logits),
        end_logits=_t(end_logits),
    )


def test_compute_loss_sums_components():
    outputs = {
        ("d", "v"): _value_output([2.0, 0.0, -1.0]),
        ("d", "s"): _span_output([0.5, 0.1, 1.2], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]),
    }
    labels = {
        ("d", "v"): 1,
        ("d", "s"): SpanLabel(SPAN_TYPE_SPAN, 1, 2),
    }
    loss_v, loss_st, loss_span = compute_loss(outputs, labels)
    want_v = -np.log(softmax_oracle([2.0, 0.0, -1.0])[1])
    want_st = -np.log(softmax_oracle([0.5, 0.1, 1.2])[SPAN_TYPE_SPAN])
    want_span = -np.log(softmax_oracle([0.0, 1.0, 0.0])[1]) - np.log(
        softmax_oracle([0.0, 0.0, 2.0])[2]
    )
    assert math.isclose(loss_v.item(), want_v, rel_tol=1e-10)
    assert math.isclose(loss_st.item(), want_st, rel_tol=1e-10)
    assert math.isclose(loss_span.item(), want_span, rel_tol=1e-10)


def test_compute_loss_skips_boundaries_without_indices():
    outputs = {("d", "s"): _span_output([0.0, 0.0, 0.0], [1.0, 0.0], [0.0, 1.0])}
    labels = {("d", "s"): SpanLabel(SPAN_TYPE_SPAN)}
    loss_v, loss_st, loss_span = compute_loss(outputs, labels)
    assert loss_v.item() == 0.0
    assert loss_st.item() > 0.0
    assert loss_span.item() == 0.0


def test_compute_loss_dont_care_span_type():
    outputs = {("d", "s"): _span_output([0.0, 3.0, 0.0], [1.0], [1.0])}
    labels = {("d", "s"): SpanLabel(SPAN_TYPE_DONT_CARE)}
    _, loss_st, loss_span = compute_loss(outputs, labels)
    want = -np.log(softmax_oracle([0.0, 3.0, 0.0])[1])
    assert math.isclose(loss_st.item(), want, rel_tol=1e-10)
    assert loss_span.item() == 0.0
