"""Batch engine for recognizing high-level human activities from
probability-annotated low-level observations.

The pipeline stages: ingest or generate candidate relations, smooth
them with the probabilistic mode operator, learn assertion axioms from
labeled training runs, fuse evidence per instance with weighted
noisy-OR, compact predictions into an activity timeline by three-step
elimination, and score the result against ground truth.
"""

__version__ = "0.1.0"
