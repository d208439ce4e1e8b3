"""Biometric classification of code vs. prose comprehension tasks.

Pipeline stages: session ingestion, baseline normalization and filtering,
EDA tonic/phasic decomposition, per-task windowing, feature extraction,
classifier evaluation (leave-one-participant-out and hold-out), and the
expertise correlation analysis. A synthetic-corpus generator provides
ground truth for end-to-end verification.
"""

__version__ = "0.1.0"
