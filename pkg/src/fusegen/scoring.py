"""Fluency scoring: geometric mean of token conditional probabilities.

The pipeline only ever takes argmaxes of scores, so any backend that ranks
fluent text above disfluent text will do. The native backend is an add-k
smoothed n-gram model trained on dataset references; a remote backend
delegates to the /score wire protocol. Scores live in (0, 1] at interfaces
and are carried in log space internally to avoid underflow on long texts.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import remote
from .editing import SENTINEL, tokenize

BOS = "<bos>"
UNK = "<unk>"


class UnscorableError(ValueError):
    """Raised for texts with no tokens to score."""


def geometric_mean(log_probs: Sequence[float]) -> float:
    """exp of the mean log probability; equals (prod p_i)^(1/n)."""
    if not log_probs:
        raise UnscorableError("unscorable: no token probabilities")
    return math.exp(math.fsum(log_probs) / len(log_probs))


def _score_tokens(text: str) -> list[str]:
    tokens = [tok.surface for tok in tokenize(text) if tok.surface != SENTINEL]
    if not tokens:
        raise UnscorableError(f"unscorable: no tokens in {text!r}")
    return tokens


class Scorer:
    """Interface: batch scoring is the primitive, one score per text in order."""

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        raise NotImplementedError

    def score(self, text: str) -> float:
        return self.score_batch([text])[0]


@dataclass
class NGramModel:
    """Add-k smoothed n-gram counts with an unknown-token class.

    For every context, probabilities over the known vocabulary plus the
    unknown class sum to one.
    """

    order: int = 3
    k: float = 0.1
    counts: dict = field(default_factory=dict)
    context_totals: Counter = field(default_factory=Counter)
    vocab: set = field(default_factory=set)

    def _map(self, token: str) -> str:
        return token if token in self.vocab or token == BOS else UNK

    def log_prob(self, token: str, context: tuple[str, ...]) -> float:
        token = self._map(token)
        context = tuple(self._map(t) for t in context)
        count = self.counts.get(context, {}).get(token, 0)
        total = self.context_totals.get(context, 0)
        classes = len(self.vocab) + 1  # known types plus the unknown class
        return math.log((count + self.k) / (total + self.k * classes))

    def sequence_log_probs(self, tokens: Sequence[str]) -> list[float]:
        padded = [BOS] * (self.order - 1) + list(tokens)
        history = self.order - 1
        return [
            self.log_prob(padded[i], tuple(padded[i - history : i]))
            for i in range(history, len(padded))
        ]


def train_ngram(corpus: Iterable[str], order: int = 3, k: float = 0.1) -> NGramModel:
    """Estimate an add-k n-gram model from raw texts.

    Tokenization matches the editing module so the scorer sees the same
    units the rest of the pipeline manipulates.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("smoothing constant k must be > 0")
    model = NGramModel(order=order, k=k)
    texts = list(corpus)
    if not texts:
        raise ValueError("empty corpus")
    for text in texts:
        tokens = [tok.surface for tok in tokenize(text) if tok.surface != SENTINEL]
        model.vocab.update(tokens)
        padded = [BOS] * (order - 1) + tokens
        for i in range(order - 1, len(padded)):
            context = tuple(padded[i - (order - 1) : i])
            model.counts.setdefault(context, Counter())[padded[i]] += 1
            model.context_totals[context] += 1
    return model


class NGramScorer(Scorer):
    def __init__(self, model: NGramModel):
        self.model = model

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        return [
            geometric_mean(self.model.sequence_log_probs(_score_tokens(text)))
            for text in texts
        ]


class RemoteScorer(Scorer):
    """Client for the POST /score wire protocol.

    Sends {"texts": [...]}, expects {"scores": [...]} with one value per text
    in order. Transport or protocol failures raise; there is no silent
    fallback to another backend.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def score_batch(self, texts: Sequence[str]) -> list[float]:
        texts = list(texts)
        for text in texts:
            _score_tokens(text)
        if not texts:
            return []
        payload = remote.post_json(self.endpoint, "/score", {"texts": texts}, self.timeout)
        scores = payload.get("scores") if isinstance(payload, dict) else None
        if not isinstance(scores, list) or len(scores) != len(texts):
            raise remote.ProtocolError(
                self.endpoint, f"expected {len(texts)} scores, got {scores!r}"
            )
        values = []
        for value in scores:
            if not isinstance(value, (int, float)) or not 0 < value <= 1:
                raise remote.ProtocolError(self.endpoint, f"score out of (0, 1]: {value!r}")
            values.append(float(value))
        return values
