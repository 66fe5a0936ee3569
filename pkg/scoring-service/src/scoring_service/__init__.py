"""HTTP scoring sidecar.

Wraps a sequence-to-sequence language model behind the engine's /v1/score
protocol: given an input text and a list of answer choices, it returns one
length-normalized conditional log-probability per choice.
"""

from scoring_service.app import create_app
from scoring_service.scorer import Seq2SeqScorer

__all__ = ["create_app", "Seq2SeqScorer"]
