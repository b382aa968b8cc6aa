"""HTTP backend serving fluency scoring and sentence fusion."""

from .config import ServerConfig
from .scoring import CausalScorer, OverLengthError
from .tagging import FusedHypothesis, FusionTagger, load_tagger
from .training import TrainingError, train_fusion

__all__ = [
    "CausalScorer",
    "FusedHypothesis",
    "FusionTagger",
    "OverLengthError",
    "ServerConfig",
    "TrainingError",
    "load_tagger",
    "train_fusion",
]
