"""Multi-domain dialogue state tracking by question answering.

The tracker asks one question per (domain, slot) pair at every dialogue
turn and answers it either by scoring a candidate value list or by
pointing at a span in the dialogue context.  A dynamic graph over
(domain, slot) nodes carries the model's own earlier predictions across
turns.
"""
from .corpus import (
    Corpus,
    Dialogue,
    IngestionReport,
    PreprocessReport,
    SpanLabel,
    Turn,
    TurnExample,
    Vocabulary,
    build_span_label,
    build_turn_examples,
    build_vocabulary,
    canonicalize_value,
    convert_span_slots_to_value,
    exact_match_features,
    ingest_multiwoz,
    load_corpus,
    save_corpus,
)
from .errors import (
    AlignmentError,
    CheckpointMismatch,
    SchemaError,
    ShapeError,
    TrainingDiverged,
    ValidationError,
)
from .evaluation import EvalReport, evaluate_states, joint_accuracy, slot_accuracy
from .model import DstModel, ModelConfig
from .ontology import (
    DONT_CARE,
    NOT_MENTIONED,
    Ontology,
    Question,
    SlotSpec,
    build_questions,
    derive_relationships,
    extend_ontology,
    extend_question,
    load_ontology,
    parse_ontology,
)
from .synthetic import SyntheticConfig, default_ontology, generate_synthetic
from .tracker import DialogueStateTracker
from .trainer import (
    Runtime,
    TrainConfig,
    TrainResult,
    domain_expansion,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "CheckpointMismatch",
    "Corpus",
    "DONT_CARE",
    "Dialogue",
    "DialogueStateTracker",
    "DstModel",
    "EvalReport",
    "IngestionReport",
    "ModelConfig",
    "NOT_MENTIONED",
    "Ontology",
    "PreprocessReport",
    "Question",
    "Runtime",
    "SchemaError",
    "ShapeError",
    "SlotSpec",
    "SpanLabel",
    "SyntheticConfig",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "Turn",
    "TurnExample",
    "ValidationError",
    "Vocabulary",
    "build_questions",
    "build_span_label",
    "build_turn_examples",
    "build_vocabulary",
    "canonicalize_value",
    "convert_span_slots_to_value",
    "default_ontology",
    "derive_relationships",
    "domain_expansion",
    "evaluate_states",
    "exact_match_features",
    "extend_ontology",
    "extend_question",
    "generate_synthetic",
    "ingest_multiwoz",
    "joint_accuracy",
    "load_checkpoint",
    "load_corpus",
    "load_ontology",
    "parse_ontology",
    "save_checkpoint",
    "save_corpus",
    "slot_accuracy",
    "train",
]
