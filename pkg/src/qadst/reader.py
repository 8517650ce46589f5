"""Reading-comprehension heads over an encoded dialogue context.

All functions here are pure tensor transforms: they take encoded context
and question matrices plus named parameter tensors and return
distributions or logits.  Shapes follow one convention: the context has
L rows, a question has K+2 candidate rows (its values plus "not
mentioned" and "don't care"), and every embedding has width D.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .corpus import SpanLabel, SPAN_TYPE_SPAN
from .errors import ShapeError
from .ontology import VALUE_MODE


def att(K, q, beta):
    """Attention of query ``q`` over the rows of ``K``.

    Row i scores [K_i; q; K_i * q] @ beta; the scores are softmaxed over
    rows.  beta has length 3n for K of width n.
    """
    m, n = K.shape
    if beta.shape[0] != 3 * n:
        raise ShapeError(f"beta must have length {3 * n}, got {beta.shape[0]}")
    scores = K @ beta[:n] + q @ beta[n : 2 * n] + (K * q) @ beta[2 * n :]
    return F.softmax(scores, dim=0)


def bilinear(X, y, phi):
    """Row-wise bilinear form: output_i = X_i @ phi @ y."""
    m, n = X.shape
    if phi.shape != (n, n):
        raise ShapeError(f"phi must be ({n}, {n}), got {tuple(phi.shape)}")
    return X @ (phi @ y)


def bidirectional_attention(E_c, W_q, beta1):
    """Context-to-question and question-to-context attention.

    For context row i, att over question rows gives a question-space
    summary added back to E_c; symmetrically for question rows over the
    context.  One shared beta1 parameterizes both directions (the key /
    query segments swap roles).

    Returns (B_c, B_q): (L, D) and (K+2, D).
    """
    L, D = E_c.shape
    if W_q.shape[1] != D:
        raise ShapeError(f"context width {D} != question width {W_q.shape[1]}")
    b_key, b_query, b_prod = beta1[:D], beta1[D : 2 * D], beta1[2 * D :]
    # scores_cq[i, j] = [W_q[j]; E_c[i]; W_q[j] * E_c[i]] @ beta1
    scores_cq = (W_q @ b_key)[None, :] + (E_c @ b_query)[:, None] + (E_c * b_prod) @ W_q.T
    alpha_v = F.softmax(scores_cq, dim=1)            # (L, K+2)
    B_QD = alpha_v @ W_q                             # (L, D)
    # scores_qc[j, i] = [E_c[i]; W_q[j]; E_c[i] * W_q[j]] @ beta1
    scores_qc = (E_c @ b_key)[None, :] + (W_q @ b_query)[:, None] + (W_q * b_prod) @ E_c.T
    alpha_w = F.softmax(scores_qc, dim=1)            # (K+2, L)
    B_CD = alpha_w @ E_c                             # (K+2, D)
    return E_c + B_QD, W_q + B_CD


def summarize_context(B_c, ds, beta2):
    """Domain+slot conditioned context summary u = B_c^T att(B_c, ds)."""
    alpha_b = att(B_c, ds, beta2)
    return B_c.T @ alpha_b


def value_logits(B_q, u, phi1):
    """Candidate scores: bilinear between question rows and the context
    summary (or its graph-fused variant)."""
    return bilinear(B_q, u, phi1)


def span_summary(E_c, ds, beta3):
    """c = w_d + w_s + E_c^T att(E_c, w_d + w_s): the context-dependent
    (domain, slot) embedding shared by all three span heads."""
    alpha_e = att(E_c, ds, beta3)
    return ds + E_c.T @ alpha_e


def span_type_logits(c, theta1):
    # theta1: (3, D); order: not mentioned, don't care, span
    return theta1 @ c


def span_start_logits(E_c, c, theta2, phi2):
    return bilinear(F.relu(E_c @ theta2), c, phi2)


def span_end_logits(E_c, c, theta2, theta3, phi3):
    return bilinear(F.relu(E_c @ theta2 @ theta3), c, phi3)


def decode_span(p_ss, p_se, max_span_length=10):
    """Best (start, end) under p_ss[start] * p_se[end] subject to
    start <= end <= start + max_span_length - 1.  Ties break toward the
    smaller start, then the smaller end.
    """
    p_ss = np.asarray(p_ss if not torch.is_tensor(p_ss) else p_ss.detach().cpu().numpy())
    p_se = np.asarray(p_se if not torch.is_tensor(p_se) else p_se.detach().cpu().numpy())
    if p_ss.shape != p_se.shape or p_ss.ndim != 1:
        raise ShapeError("start/end distributions must be 1-d and equal length")
    L = p_ss.shape[0]
    best = None
    best_score = -1.0
    for i in range(L):
        top = min(L, i + max_span_length)
        j = i + int(np.argmax(p_se[i:top]))
        score = float(p_ss[i] * p_se[j])
        if score > best_score:
            best, best_score = (i, j), score
    return best


@dataclass
class QuestionOutput:
    """Logits from one question's heads at one turn.  Value questions
    fill value_logits (and gamma when the graph is active); span
    questions fill the three span heads."""

    mode: str
    value_logits: torch.Tensor | None = None
    type_logits: torch.Tensor | None = None
    start_logits: torch.Tensor | None = None
    end_logits: torch.Tensor | None = None
    gamma: torch.Tensor | None = None

    def value_distribution(self):
        return F.softmax(self.value_logits, dim=0)

    def type_distribution(self):
        return F.softmax(self.type_logits, dim=0)

    def start_distribution(self):
        return F.softmax(self.start_logits, dim=0)

    def end_distribution(self):
        return F.softmax(self.end_logits, dim=0)


def _nll(logits, index):
    return -F.log_softmax(logits, dim=0)[index]


def compute_loss(outputs, labels):
    """Summed cross-entropy over one turn's questions.

    Returns (loss_v, loss_st, loss_span).  Span questions whose gold
    value never occurred in the context supervise only the type head.
    """
    zero = None
    for output in outputs.values():
        ref = output.value_logits if output.value_logits is not None else output.type_logits
        zero = ref.new_zeros(())
        break
    if zero is None:
        raise ShapeError("no question outputs to compute a loss over")
    loss_v = zero.clone()
    loss_st = zero.clone()
    loss_span = zero.clone()
    for pair, output in outputs.items():
        label = labels[pair]
        if output.mode == VALUE_MODE:
            loss_v = loss_v + _nll(output.value_logits, int(label))
        else:
            assert isinstance(label, SpanLabel)
            loss_st = loss_st + _nll(output.type_logits, label.answer_type)
            if label.answer_type == SPAN_TYPE_SPAN and label.start is not None:
                loss_span = loss_span + _nll(output.start_logits, label.start)
                loss_span = loss_span + _nll(output.end_logits, label.end)
    return loss_v, loss_st, loss_span
