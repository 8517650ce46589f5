import numpy as np
import pytest
import torch

from qadst import NOT_MENTIONED, ShapeError
from qadst.graph import (
    DialogueGraph,
    counters,
    gate_fuse,
    graph_embedding,
    node_embeddings,
    reset_counters,
    update_graph,
)

from .oracles import gate_fuse_oracle, graph_embedding_oracle, node_embeddings_oracle


def _t(x):
    return torch.tensor(np.asarray(x), dtype=torch.float64)


PAIRS = [("restaurant", "area"), ("taxi", "destination")]


def test_new_graph_links_everything_to_not_mentioned():
    graph = DialogueGraph(PAIRS)
    assert graph.links == {pair: NOT_MENTIONED for pair in PAIRS}


def test_update_is_functional_and_validated():
    graph = DialogueGraph(PAIRS)
    updated = update_graph(graph, {("restaurant", "area"): "north"})
    assert updated.links[("restaurant", "area")] == "north"
    assert graph.links[("restaurant", "area")] == NOT_MENTIONED
    with pytest.raises(ShapeError):
        graph.update({("hotel", "area"): "x"})


def test_node_embeddings_default_is_additive():
    rng = np.random.default_rng(0)
    ds, values = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    got = node_embeddings(_t(ds), _t(values)).numpy()
    np.testing.assert_allclose(got, node_embeddings_oracle(ds, values), atol=1e-12)


def test_node_embeddings_gated_matches_oracle():
    rng = np.random.default_rng(1)
    ds, values = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    theta4 = rng.standard_normal((4, 4))
    got = node_embeddings(_t(ds), _t(values), eta=0.3, theta4=_t(theta4)).numpy()
    np.testing.assert_allclose(
        got, node_embeddings_oracle(ds, values, eta=0.3, theta4=theta4), atol=1e-12
    )


def test_node_embeddings_gated_requires_eta():
    with pytest.raises(ShapeError):
        node_embeddings(_t(np.zeros((2, 2))), _t(np.zeros((2, 2))), theta4=_t(np.eye(2)))


def test_graph_embedding_matches_oracle():
    rng = np.random.default_rng(2)
    G = rng.standard_normal((5, 4))
    u = rng.standard_normal(4)
    beta4 = rng.standard_normal(12)
    got = graph_embedding(_t(G), _t(u), _t(beta4)).numpy()
    np.testing.assert_allclose(got, graph_embedding_oracle(G, u, beta4), atol=1e-12)


def test_gate_fuse_matches_oracle_and_bounds():
    rng = np.random.default_rng(3)
    u, z = rng.standard_normal(6), rng.standard_normal(6)
    fused, gamma = gate_fuse(_t(u), _t(z))
    want_fused, want_gamma = gate_fuse_oracle(u, z)
    np.testing.assert_allclose(fused.numpy(), want_fused, atol=1e-12)
    np.testing.assert_allclose(gamma.numpy(), want_gamma, atol=1e-12)
    assert ((gamma > 0) & (gamma < 1)).all()
    with pytest.raises(ShapeError):
        gate_fuse(_t(np.zeros(3)), _t(np.zeros(4)))


def test_counters_track_calls():
    reset_counters()
    node_embeddings(_t(np.zeros((2, 2))), _t(np.zeros((2, 2))))
    graph_embedding(_t(np.zeros((2, 2))), _t(np.zeros(2)), _t(np.zeros(6)))
    gate_fuse(_t(np.zeros(2)), _t(np.zeros(2)))
    assert counters == {"node_embeddings": 1, "graph_embedding": 1, "gate_fuse": 1}
    reset_counters()
    assert all(v == 0 for v in counters.values())
