"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI can emit
one-line ``error: <code>: <message>`` diagnostics.
"""


class DeclipError(Exception):
    code = "error"


class InvalidInputError(DeclipError, ValueError):
    code = "invalid-input"


class InvalidArgumentError(DeclipError, ValueError):
    code = "invalid-argument"


class ShapeMismatchError(DeclipError, ValueError):
    code = "shape-mismatch"


class InfeasibleRegimeError(DeclipError, ValueError):
    code = "infeasible-regime"


class UnidentifiableError(DeclipError):
    code = "unidentifiable"


class MissingGroundTruthError(DeclipError):
    code = "missing-ground-truth"


class TrainingDivergedError(DeclipError, FloatingPointError):
    code = "diverged"

    def __init__(self, message, step=None, batch=None):
        super().__init__(message)
        self.step = step
        self.batch = batch


class CheckpointError(DeclipError):
    code = "checkpoint"


class CheckpointVersionError(CheckpointError):
    code = "checkpoint-version"


class ConfigError(DeclipError):
    code = "config"
