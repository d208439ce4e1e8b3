"""Exception types raised across the pipeline."""


class BiocompError(Exception):
    """Base class for all pipeline errors."""


# --- ingestion ---

class FormatError(BiocompError):
    """A channel file violates the on-disk grammar."""


class EmptyChannelError(BiocompError):
    """A channel file has a valid header but no samples."""


class ManifestError(BiocompError):
    """manifest.json is missing, malformed, or violates session invariants."""


class MissingChannelError(BiocompError):
    """A channel required by the manifest or a signal configuration is absent."""


# --- preprocessing ---

class InsufficientBaselineError(BiocompError):
    """A channel does not cover the 30 s calibration window."""


class DegenerateBaselineError(BiocompError):
    """Baseline standard deviation is zero; Z-scoring is undefined."""


class FilterDesignError(BiocompError):
    """Requested band edges are invalid for the signal's sample rate."""


class DecompositionError(BiocompError):
    """EDA decomposition failed to converge within the iteration cap."""

    def __init__(self, message, kkt_residual=None, iterations=None):
        super().__init__(message)
        self.kkt_residual = kkt_residual
        self.iterations = iterations


# --- segmentation ---

class ScheduleError(BiocompError):
    """Task events are inconsistent with the display schedule."""


class EmptyWindowError(BiocompError):
    """A task window does not intersect the signal's extent."""


# --- features ---

class FeatureError(BiocompError):
    """Feature extraction received an empty or unusable window."""


class ImputationError(BiocompError):
    """A feature is missing for every row of a task kind; no median exists."""


# --- learning ---

class TrainError(BiocompError):
    """Training data cannot support fitting (e.g. a single-class set)."""


class CorrelationUndefinedError(BiocompError):
    """Rank correlation is undefined (a vector is entirely tied)."""


# --- synthesis / orchestration ---

class SynthError(BiocompError):
    """Synthetic corpus parameters are inconsistent."""


class ConfigError(BiocompError):
    """Pipeline configuration file or flags are invalid."""
