"""Estimator facade over the tracker.

Wraps ontology handling, preprocessing, training, and decoding behind a
fit/predict interface.  Hyperparameters are plain constructor arguments
so get_params/set_params and clone() work as usual.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator

from .corpus import state_to_json
from .evaluation import EvalReport, normalize_state
from .model import ModelConfig
from .ontology import build_questions, extend_ontology
from .trainer import Runtime, TrainConfig, load_checkpoint, save_checkpoint, train
from .validation import as_corpus, as_dialogues, as_ontology, require_fitted


class DialogueStateTracker(BaseEstimator):
    """Multi-domain dialogue state tracker.

    Parameters mirror ModelConfig and TrainConfig; see those for
    semantics.  ``ontology`` may be an Ontology, a parsed mapping, or a
    path to an ontology JSON file.

    Fitted attributes: ``runtime_`` (model + ontology bundle),
    ``history_`` (one record per epoch), ``ontology_``.
    """

    def __init__(
        self,
        ontology=None,
        word_dim=48,
        char_dim=16,
        char_filters=16,
        char_kernel=5,
        role_dim=16,
        dropout=0.5,
        word_dropout=0.1,
        contextual=False,
        contextual_dim=48,
        graph=True,
        gated_nodes=False,
        eta=0.5,
        max_span_length=10,
        dtype="float32",
        epochs=50,
        lr=1e-3,
        seed=0,
        patience=10,
        context_window=None,
        domains=None,
        stop_at_train_joint=None,
    ):
        self.ontology = ontology
        self.word_dim = word_dim
        self.char_dim = char_dim
        self.char_filters = char_filters
        self.char_kernel = char_kernel
        self.role_dim = role_dim
        self.dropout = dropout
        self.word_dropout = word_dropout
        self.contextual = contextual
        self.contextual_dim = contextual_dim
        self.graph = graph
        self.gated_nodes = gated_nodes
        self.eta = eta
        self.max_span_length = max_span_length
        self.dtype = dtype
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.patience = patience
        self.context_window = context_window
        self.domains = domains
        self.stop_at_train_joint = stop_at_train_joint

    # -- config assembly ----------------------------------------------------

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            word_dim=self.word_dim,
            char_dim=self.char_dim,
            char_filters=self.char_filters,
            char_kernel=self.char_kernel,
            role_dim=self.role_dim,
            dropout=self.dropout,
            word_dropout=self.word_dropout,
            contextual=self.contextual,
            contextual_dim=self.contextual_dim,
            graph=self.graph,
            gated_nodes=self.gated_nodes,
            eta=self.eta,
            max_span_length=self.max_span_length,
            dtype=self.dtype,
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lr=self.lr,
            seed=self.seed,
            patience=self.patience,
            context_window=self.context_window,
            domains=tuple(self.domains) if self.domains else None,
            stop_at_train_joint=self.stop_at_train_joint,
        )

    # -- estimator API -------------------------------------------------------

    def fit(self, X, y=None):
        """Train on a Corpus (uses its train/dev splits) or a plain list
        of annotated dialogues (all treated as training data)."""
        if self.ontology is None:
            raise ValueError("DialogueStateTracker requires an ontology to fit")
        ontology = as_ontology(self.ontology)
        corpus = as_corpus(X, ontology)
        result = train(
            corpus,
            ontology,
            model_config=self._model_config(),
            train_config=self._train_config(),
        )
        self.runtime_ = result.runtime
        self.history_ = result.history
        self.ontology_ = ontology
        return self

    def predict(self, X):
        """Per-turn states for each dialogue, as lists of
        {"domain", "slot", "value"} records."""
        require_fitted(self)
        return [
            [state_to_json(state) for state in self.runtime_.predict_states(dialogue)]
            for dialogue in as_dialogues(X)
        ]

    def predict_states(self, X) -> list[list[dict]]:
        """Like predict() but returns {(domain, slot): value} mappings."""
        require_fitted(self)
        return [self.runtime_.predict_states(d) for d in as_dialogues(X)]

    def evaluate(self, X) -> EvalReport:
        require_fitted(self)
        return self.runtime_.evaluate(as_dialogues(X))

    def score(self, X, y=None) -> float:
        """Joint accuracy against the gold states carried by X."""
        return self.evaluate(X).joint

    # -- ontology growth -----------------------------------------------------

    def extend_values(self, domain: str, slot: str, new_values):
        """Add candidate values to a fitted tracker without retraining.

        Candidates are scored through their word/character embeddings, so
        values unseen in training become predictable immediately.
        """
        require_fitted(self)
        extended = extend_ontology(self.runtime_.ontology, domain, slot, list(new_values))
        self.runtime_.ontology = extended
        self.runtime_.model.ontology = extended
        self.runtime_.model.questions = build_questions(extended)
        self.ontology_ = extended
        return self

    # -- persistence -----------------------------------------------------------

    def save(self, path, metrics: dict | None = None):
        require_fitted(self)
        save_checkpoint(self.runtime_, path, metrics=metrics)
        return self

    @classmethod
    def load(cls, path) -> "DialogueStateTracker":
        runtime = load_checkpoint(path)
        tracker = cls(ontology=runtime.ontology, context_window=runtime.context_window)
        config = runtime.model.config
        for key, value in config.as_dict().items():
            setattr(tracker, key, value)
        tracker.runtime_ = runtime
        tracker.history_ = []
        tracker.ontology_ = runtime.ontology
        return tracker
