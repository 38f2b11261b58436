"""Exception hierarchy shared by every pipeline stage."""


class PhoneSlipError(Exception):
    """Base class for all domain errors raised by the pipeline."""

    stage = "pipeline"


class InvalidArgument(PhoneSlipError, ValueError):
    pass


# ingest
class IngestError(PhoneSlipError):
    stage = "ingest"


class MalformedRow(IngestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class NonMonotonicTime(IngestError):
    def __init__(self, line: int):
        super().__init__(f"line {line}: time is not strictly increasing")
        self.line = line


class TooShort(IngestError, ValueError):
    pass


# synthgen
class InvalidParams(PhoneSlipError, ValueError):
    stage = "synth"


# features
class EmptySeries(PhoneSlipError, ValueError):
    stage = "extract"


# featuredb
class FeatureDbError(PhoneSlipError):
    stage = "featuredb"


class DuplicateSample(FeatureDbError):
    pass


class EmptyFitSet(FeatureDbError, ValueError):
    pass


class DegenerateRow(FeatureDbError):
    pass


class SchemaMismatch(FeatureDbError):
    pass


class IoFailure(PhoneSlipError, OSError):
    stage = "io"


# nnets
class TrainingError(PhoneSlipError):
    stage = "train"


class ShapeMismatch(TrainingError, ValueError):
    pass


class SingleClassTraining(TrainingError):
    pass


class NonFiniteLoss(TrainingError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


# eval
class InsufficientClassRows(PhoneSlipError):
    stage = "eval"
