"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a documented invariant (bad ontology, config, label)."""


class SchemaError(ValidationError):
    """A structured file does not parse against its schema."""


class ShapeError(ValueError):
    """Tensor arguments do not conform to the documented shapes."""


class AlignmentError(ValueError):
    """Prediction/gold sequences that must be aligned have different lengths."""


class CheckpointMismatch(RuntimeError):
    """Checkpoint refused: manifest hash, ontology hash, or format disagrees."""


class TrainingDiverged(RuntimeError):
    """Non-finite loss encountered; carries a diagnostic dump of the batch."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
