"""Exception hierarchy shared by all ecoaudit modules.

Every error carries a stable machine-parseable ``code`` so the CLI can emit
``CODE: message`` lines without string-matching exception text.
"""

from __future__ import annotations


class EcoAuditError(Exception):
    """Base class for all data and validation errors raised by ecoaudit."""

    code = "ECOAUDIT_ERROR"


class MalformedInput(EcoAuditError):
    code = "MALFORMED_INPUT"


class MissingField(EcoAuditError):
    code = "MISSING_FIELD"


class ConflictingPrediction(EcoAuditError):
    """Same (instance, model, period) seen twice with different predictions."""

    code = "CONFLICTING_PREDICTION"

    def __init__(self, instance_id, model_id, period):
        self.instance_id = instance_id
        self.model_id = model_id
        self.period = period
        super().__init__(
            f"conflicting predictions for instance={instance_id!r} "
            f"model={model_id!r} period={period!r}"
        )


class InconsistentLabel(EcoAuditError):
    """One instance carries two different ground-truth labels."""

    code = "INCONSISTENT_LABEL"

    def __init__(self, instance_id):
        self.instance_id = instance_id
        super().__init__(f"instance {instance_id!r} carries inconsistent labels")


class InconsistentMetadata(EcoAuditError):
    """One instance carries two different values for the same metadata key."""

    code = "INCONSISTENT_METADATA"

    def __init__(self, instance_id, key):
        self.instance_id = instance_id
        self.key = key
        super().__init__(
            f"instance {instance_id!r} carries inconsistent metadata for key {key!r}"
        )


class IncompleteCoverage(EcoAuditError):
    """An instance lacks a prediction from one of the requested models."""

    code = "INCOMPLETE_COVERAGE"

    def __init__(self, instance_id, model_id):
        self.instance_id = instance_id
        self.model_id = model_id
        super().__init__(
            f"instance {instance_id!r} has no record for model {model_id!r}"
        )


class EmptyEcosystem(EcoAuditError):
    code = "EMPTY_ECOSYSTEM"


class UnknownInstance(EcoAuditError):
    code = "UNKNOWN_INSTANCE"


class UnknownModel(EcoAuditError):
    code = "UNKNOWN_MODEL"


class InvalidRate(EcoAuditError):
    """A failure rate falls outside [0, 1]."""

    code = "INVALID_RATE"

    def __init__(self, index, rate):
        self.index = index
        self.rate = rate
        super().__init__(f"rate[{index}] = {rate!r} is outside [0, 1]")


class InvalidParams(EcoAuditError):
    """Difficulty parameters violate one or more per-model rate bounds."""

    code = "INVALID_PARAMS"

    def __init__(self, message, violations=()):
        self.violations = tuple(violations)
        super().__init__(message)


class TooManyModels(EcoAuditError):
    code = "TOO_MANY_MODELS"


class LengthMismatch(EcoAuditError):
    code = "LENGTH_MISMATCH"


class NoValidParams(EcoAuditError):
    code = "NO_VALID_PARAMS"


class MissingMetadata(EcoAuditError):
    code = "MISSING_METADATA"

    def __init__(self, instance_id, key):
        self.instance_id = instance_id
        self.key = key
        super().__init__(
            f"instance {instance_id!r} is missing metadata key {key!r}"
        )
