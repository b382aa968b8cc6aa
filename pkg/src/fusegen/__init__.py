"""Data-to-text generation by template lexicalization and iterative sentence
fusion, with entity-preservation guarantees."""

from .checking import CheckResult, SlotPattern, SlotPatternTable, check_entities, check_slots
from .data import DataError, Dataset, Example, Triple, load_jsonl, save_jsonl
from .decoder import DecoderConfig, StepTrace, fallback_rate, generate
from .editing import PhraseVocabulary, Tag, TagSequence, build_vocabulary, convert
from .fusion import FusionContext, FusionModel, Hypothesis, IdentityFuser, RemoteFuser, RuleFuser
from .metrics import EvalReport, bleu, report, rouge_l
from .mining import FusionPair, filter_discofuse, mine_pairs
from .remote import ProtocolError, RemoteBackendError, TransportError
from .scoring import NGramScorer, RemoteScorer, Scorer, geometric_mean, train_ngram
from .templates import (
    FALLBACK,
    Template,
    TemplateStore,
    extract_pair_templates,
    extract_single_templates,
    fill,
    select_lexicalization,
)

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "SlotPattern",
    "SlotPatternTable",
    "check_entities",
    "check_slots",
    "DataError",
    "Dataset",
    "Example",
    "Triple",
    "load_jsonl",
    "save_jsonl",
    "DecoderConfig",
    "StepTrace",
    "fallback_rate",
    "generate",
    "PhraseVocabulary",
    "Tag",
    "TagSequence",
    "build_vocabulary",
    "convert",
    "FusionContext",
    "FusionModel",
    "Hypothesis",
    "IdentityFuser",
    "RemoteFuser",
    "RuleFuser",
    "EvalReport",
    "bleu",
    "report",
    "rouge_l",
    "FusionPair",
    "filter_discofuse",
    "mine_pairs",
    "ProtocolError",
    "RemoteBackendError",
    "TransportError",
    "NGramScorer",
    "RemoteScorer",
    "Scorer",
    "geometric_mean",
    "train_ngram",
    "FALLBACK",
    "Template",
    "TemplateStore",
    "extract_pair_templates",
    "extract_single_templates",
    "fill",
    "select_lexicalization",
    "__version__",
]
