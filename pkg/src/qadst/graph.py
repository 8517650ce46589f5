"""Dynamic knowledge graph over (domain, slot) nodes.

Every (domain, slot) pair is a node; all pair nodes are connected to
each other and relationships are learned by attention rather than read
from the ontology.  Each pair node is additionally linked to a value
node holding the model's own prediction for that pair from the previous
turn ("not mentioned" before anything is predicted), so the graph
evolves as the dialogue progresses.  No gold labels ever enter the
graph.
"""
from __future__ import annotations

import torch

from .errors import ShapeError
from .ontology import NOT_MENTIONED
from .reader import att

#: number of calls per graph operation, for wiring audits (a run with the
#: graph disabled must leave these untouched)
counters = {"node_embeddings": 0, "graph_embedding": 0, "gate_fuse": 0}


def reset_counters():
    for key in counters:
        counters[key] = 0


class DialogueGraph:
    """Value links of the graph for one dialogue: pair -> last predicted
    value string.  Immutable; update() returns a new graph."""

    def __init__(self, pairs, links=None):
        self.pairs = tuple(pairs)
        self.links = dict(links) if links else {pair: NOT_MENTIONED for pair in self.pairs}

    def update(self, predictions: dict) -> "DialogueGraph":
        links = dict(self.links)
        for pair, value in predictions.items():
            if pair not in links:
                raise ShapeError(f"prediction for unknown pair {pair}")
            links[pair] = value
        return DialogueGraph(self.pairs, links)


def update_graph(graph: DialogueGraph, predictions: dict) -> DialogueGraph:
    return graph.update(predictions)


def node_embeddings(ds_vecs, value_vecs, eta=None, theta4=None):
    """Pair-node embeddings from (domain+slot) vectors and the linked
    value vectors, both (|M|, D).

    Default propagation is plain addition.  When ``theta4`` is given the
    gated variant applies: eta * ds + (1 - eta) * sigmoid(theta4 @ value);
    eta = 1 then removes any dependence on linked values.
    """
    counters["node_embeddings"] += 1
    if ds_vecs.shape != value_vecs.shape:
        raise ShapeError(
            f"pair/value embedding shapes differ: {tuple(ds_vecs.shape)} "
            f"vs {tuple(value_vecs.shape)}"
        )
    if theta4 is None:
        return ds_vecs + value_vecs
    if eta is None:
        raise ShapeError("gated node propagation requires eta")
    return eta * ds_vecs + (1.0 - eta) * torch.sigmoid(value_vecs @ theta4.T)


def graph_embedding(G, u, beta4):
    """Summary of the graph for one question: z = G^T att(G, u)."""
    counters["graph_embedding"] += 1
    alpha_g = att(G, u, beta4)
    return G.T @ alpha_g


def gate_fuse(u, z):
    """Mix the context summary with the graph embedding.

    gamma = sigmoid(u + z) elementwise;  fused = (1 - gamma) * u + gamma * z.
    Returns (fused, gamma).
    """
    counters["gate_fuse"] += 1
    if u.shape != z.shape:
        raise ShapeError(f"context/graph embedding shapes differ: {u.shape} vs {z.shape}")
    gamma = torch.sigmoid(u + z)
    return (1.0 - gamma) * u + gamma * z, gamma
