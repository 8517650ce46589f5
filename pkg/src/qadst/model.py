"""Question-answering dialogue state tracker.

One forward pass per dialogue turn: encode the context once, then answer
one question per (domain, slot) pair.  Value questions score their
candidate list through bidirectional attention (optionally fused with
the dialogue graph); span questions classify the answer type and point
at start/end tokens.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn

from .corpus import TurnExample, Vocabulary
from .encoding import CharVocabulary, ContextEncoder, HashedWordProvider, TokenEncoder
from .errors import ShapeError
from .graph import DialogueGraph, gate_fuse, graph_embedding, node_embeddings
from .ontology import (
    DONT_CARE,
    NOT_MENTIONED,
    Ontology,
    Question,
    SPAN_MODE,
    VALUE_MODE,
    build_questions,
)
from .reader import (
    QuestionOutput,
    bidirectional_attention,
    bilinear,
    compute_loss,
    decode_span,
    span_end_logits,
    span_start_logits,
    span_summary,
    span_type_logits,
    summarize_context,
)
from .reader import att as _att

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass
class ModelConfig:
    word_dim: int = 48
    char_dim: int = 16
    char_filters: int = 16
    char_kernel: int = 5
    role_dim: int = 16
    dropout: float = 0.5
    word_dropout: float = 0.1
    contextual: bool = False
    contextual_dim: int = 48
    graph: bool = True
    gated_nodes: bool = False
    eta: float = 0.5
    max_span_length: int = 10
    dtype: str = "float32"

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ShapeError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


class DstModel(nn.Module):
    """Trainable tracker over a fixed ontology and vocabulary.

    Questions may be overridden per call (e.g. with extended value
    lists); everything embeds by surface form, so candidates unseen in
    training still get word/character vectors.
    """

    def __init__(self, ontology: Ontology, vocabulary: Vocabulary, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        self.ontology = ontology
        self.vocabulary = vocabulary
        self.questions = build_questions(ontology)
        self.pairs = ontology.pairs()
        self.n_features = 2 * len(self.pairs)

        provider = HashedWordProvider(self.config.contextual_dim) if self.config.contextual else None
        self.token_encoder = TokenEncoder(
            vocabulary,
            CharVocabulary(vocabulary.to_dict().keys()),
            word_dim=self.config.word_dim,
            char_dim=self.config.char_dim,
            char_filters=self.config.char_filters,
            char_kernel=self.config.char_kernel,
            provider=provider,
            word_dropout=self.config.word_dropout,
        )
        dim = self.token_encoder.dim
        self.context_encoder = ContextEncoder(
            dim, self.n_features, role_dim=self.config.role_dim, dropout=self.config.dropout
        )

        def attention_param():
            bound = 1.0 / np.sqrt(3 * dim)
            return nn.Parameter(torch.empty(3 * dim).uniform_(-bound, bound))

        def square_param(rows=dim):
            bound = 1.0 / np.sqrt(dim)
            return nn.Parameter(torch.empty(rows, dim).uniform_(-bound, bound))

        self.beta1 = attention_param()
        self.beta2 = attention_param()
        self.beta3 = attention_param()
        self.phi1 = square_param()
        self.phi2 = square_param()
        self.phi3 = square_param()
        self.theta1 = square_param(rows=3)
        self.theta2 = square_param()
        self.theta3 = square_param()
        if self.config.graph:
            self.beta4 = attention_param()
        if self.config.graph and self.config.gated_nodes:
            self.theta4 = square_param()

        #: test hook: when True the graph gate is clamped to zero, so value
        #: scores must equal a graph-free run bit for bit
        self.force_gamma_zero = False
        self.to(_DTYPES[self.config.dtype])

    @property
    def dim(self):
        return self.token_encoder.dim

    # -- embedding helpers -------------------------------------------------

    def _element_cache(self):
        cache: dict[str, torch.Tensor] = {}

        def embed(text: str) -> torch.Tensor:
            vec = cache.get(text)
            if vec is None:
                vec = self.token_encoder.embed_text(text)
                cache[text] = vec
            return vec

        return embed

    def new_graph(self) -> DialogueGraph:
        return DialogueGraph(self.pairs)

    def _graph_matrix(self, graph_state: DialogueGraph, embed):
        ds_rows = []
        value_rows = []
        for domain, slot in self.pairs:
            ds_rows.append(embed(domain) + embed(slot))
            value_rows.append(embed(graph_state.links[(domain, slot)]))
        ds_vecs = torch.stack(ds_rows)
        value_vecs = torch.stack(value_rows)
        if self.config.gated_nodes:
            return node_embeddings(ds_vecs, value_vecs, eta=self.config.eta, theta4=self.theta4)
        return node_embeddings(ds_vecs, value_vecs)

    # -- forward -----------------------------------------------------------

    def forward_turn(
        self,
        example: TurnExample,
        graph_state: DialogueGraph | None = None,
        questions: list[Question] | None = None,
        trace: list | None = None,
    ) -> dict:
        """Answer every question against one turn's context.

        graph_state carries the model's own predictions from earlier
        turns; pass None to run graph-free.  ``trace``, when given,
        collects (name, distribution) pairs for every softmax produced.
        """
        if graph_state is not None and not self.config.graph:
            raise ShapeError("model was built without graph parameters")
        if example.exact_match.shape[1] != self.n_features:
            raise ShapeError(
                f"example has {example.exact_match.shape[1]} feature columns, "
                f"model expects {self.n_features}"
            )
        questions = questions if questions is not None else self.questions
        dtype = _DTYPES[self.config.dtype]
        device = self.beta1.device

        token_vecs = self.token_encoder(example.tokens)
        roles = torch.tensor(example.roles, dtype=torch.long, device=device)
        features = torch.from_numpy(example.exact_match).to(device=device, dtype=dtype)
        E_c = self.context_encoder(token_vecs, roles, features)

        embed = self._element_cache()
        G = self._graph_matrix(graph_state, embed) if graph_state is not None else None

        outputs = {}
        for question in questions:
            ds = embed(question.domain) + embed(question.slot)
            if question.mode == VALUE_MODE:
                W_vbar = torch.stack([embed(value) for value in question.candidates])
                W_q = ds + W_vbar
                B_c, B_q = bidirectional_attention(E_c, W_q, self.beta1)
                u = summarize_context(B_c, ds, self.beta2)
                gamma = None
                if G is not None:
                    z = graph_embedding(G, u, self.beta4)
                    fused, gamma = gate_fuse(u, z)
                    if self.force_gamma_zero:
                        fused, gamma = u, torch.zeros_like(u)
                else:
                    fused = u
                logits = bilinear(B_q, fused, self.phi1)
                outputs[question.pair] = QuestionOutput(
                    mode=VALUE_MODE, value_logits=logits, gamma=gamma
                )
                if trace is not None:
                    trace.append((f"{question.pair} alpha_b", _att(B_c, ds, self.beta2)))
                    if G is not None:
                        trace.append((f"{question.pair} alpha_g", _att(G, u, self.beta4)))
                    trace.append((f"{question.pair} p_v", outputs[question.pair].value_distribution()))
            else:
                c = span_summary(E_c, ds, self.beta3)
                out = QuestionOutput(
                    mode=SPAN_MODE,
                    type_logits=span_type_logits(c, self.theta1),
                    start_logits=span_start_logits(E_c, c, self.theta2, self.phi2),
                    end_logits=span_end_logits(E_c, c, self.theta2, self.theta3, self.phi3),
                )
                outputs[question.pair] = out
                if trace is not None:
                    trace.append((f"{question.pair} alpha_e", _att(E_c, ds, self.beta3)))
                    trace.append((f"{question.pair} p_st", out.type_distribution()))
                    trace.append((f"{question.pair} p_ss", out.start_distribution()))
                    trace.append((f"{question.pair} p_se", out.end_distribution()))
        return outputs

    def turn_loss(self, example, graph_state=None):
        outputs = self.forward_turn(example, graph_state)
        loss_v, loss_st, loss_span = compute_loss(outputs, example.labels)
        return loss_v, loss_st, loss_span, outputs

    # -- decoding ----------------------------------------------------------

    def decode(self, outputs: dict, example: TurnExample, questions=None) -> dict:
        """Map head outputs to one value string per pair ("not mentioned"
        when absent).  Argmax everywhere; first index wins ties."""
        questions = questions if questions is not None else self.questions
        by_pair = {q.pair: q for q in questions}
        predictions = {}
        for pair, output in outputs.items():
            question = by_pair[pair]
            if output.mode == VALUE_MODE:
                probs = output.value_distribution().detach().cpu().numpy()
                predictions[pair] = question.candidates[int(np.argmax(probs))]
            else:
                type_probs = output.type_distribution().detach().cpu().numpy()
                answer_type = int(np.argmax(type_probs))
                if answer_type == 0:
                    predictions[pair] = NOT_MENTIONED
                elif answer_type == 1:
                    predictions[pair] = DONT_CARE
                else:
                    start, end = decode_span(
                        output.start_distribution(),
                        output.end_distribution(),
                        self.config.max_span_length,
                    )
                    predictions[pair] = " ".join(example.tokens[start : end + 1])
        return predictions

    def predict_turn(self, example, graph_state=None, questions=None):
        outputs = self.forward_turn(example, graph_state, questions=questions)
        return self.decode(outputs, example, questions=questions), outputs

    @torch.no_grad()
    def predict_dialogue(self, examples: list[TurnExample], use_graph: bool | None = None) -> list[dict]:
        """Predict states turn by turn.  The graph for turn t links each
        pair to this model's own prediction at turn t-1."""
        use_graph = self.config.graph if use_graph is None else use_graph
        was_training = self.training
        self.eval()
        try:
            graph = self.new_graph() if use_graph else None
            states = []
            for example in examples:
                predictions, _ = self.predict_turn(example, graph)
                states.append(predictions)
                if use_graph:
                    graph = graph.update(predictions)
            return states
        finally:
            self.train(was_training)
