"""Sentence-fusion backends: identity, deterministic rules, and remote.

A backend turns an "X lex(t)" concatenation into a beam of fused hypotheses.
The identity backend reproduces the concatenation baseline; the rule backend
mirrors the behaviors a zero-shot fusion model exhibits (subject coordination,
relative clauses, apposition) without any neural dependency; the remote
backend speaks the POST /fuse wire protocol.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import remote

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_FINAL_PUNCT = re.compile(r"[.!?]\s*$")


@dataclass(frozen=True)
class Hypothesis:
    """A candidate fused text with the backend's own ordering score."""

    text: str
    backend_score: float = 0.0

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("empty hypothesis text")


@dataclass(frozen=True)
class FusionContext:
    """Decode-time knowledge handed to backends that want it: the entity
    strings seen so far and which of them denote persons."""

    entities: tuple[str, ...] = ()
    person_entities: frozenset[str] = frozenset()


class FusionModel:
    """Interface: fuse(text, beam_size) -> at most beam_size hypotheses,
    ordered by backend_score descending."""

    def fuse(
        self, text: str, beam_size: int, context: Optional[FusionContext] = None
    ) -> list[Hypothesis]:
        raise NotImplementedError


class IdentityFuser(FusionModel):
    """Returns the input unchanged: composing this with the decoder yields
    the plain concatenation-of-templates baseline."""

    def fuse(self, text, beam_size, context=None):
        if not text or not text.strip():
            raise ValueError("empty input")
        return [Hypothesis(text, 0.0)]


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_SPLIT.split(text.strip()) if s]


def _strip_final_punct(sentence: str) -> str:
    return _FINAL_PUNCT.sub("", sentence).rstrip()


def _leading_entity(sentence: str, context: FusionContext) -> Optional[str]:
    # Longest known entity the sentence starts with; no parsing involved.
    candidates = [e for e in context.entities if sentence.startswith(e)]
    return max(candidates, key=len) if candidates else None


class RuleFuser(FusionModel):
    """Deterministic fusion of the last two sentences.

    Three rules, in priority order: subject coordination with ", and" plus
    deletion of the repeated subject; a relative clause ("who"/"which")
    folding the second sentence into the first; and apposition when the
    second sentence is a plain copula. The unfused input is always appended
    as the lowest-scored hypothesis. Every word in the output comes from the
    input or from the fixed connective set, never from anywhere else.
    """

    def fuse(self, text, beam_size, context=None):
        if not text or not text.strip():
            raise ValueError("empty input")
        context = context or FusionContext()
        sentences = split_sentences(text)
        if len(sentences) < 2:
            return [Hypothesis(text, 0.0)]

        prefix = sentences[:-2]
        first, second = sentences[-2], sentences[-1]
        candidates: list[Hypothesis] = []

        subject = _leading_entity(first, context)
        same_subject = subject is not None and second.startswith(subject)
        if same_subject:
            first_rest = first[len(subject):]  # includes leading space
            second_rest = second[len(subject):]

            # (a) subject coordination: "S P1, and P2."
            coordinated = f"{subject}{_strip_final_punct(first_rest)}, and{second_rest}"
            candidates.append(Hypothesis(coordinated, 3.0))

            # (b) relative clause: "S, who/which P2, P1."
            relative_pronoun = (
                "who" if subject in context.person_entities else "which"
            )
            clause = _strip_final_punct(second_rest).lstrip()
            if clause:
                candidates.append(
                    Hypothesis(
                        f"{subject}, {relative_pronoun} {clause},{first_rest}", 2.0
                    )
                )

            # (c) apposition: second sentence "S is NP." folds to "S, NP, P1."
            copula = re.match(r"\s+is\s+(.+)$", _strip_final_punct(second_rest))
            if copula:
                candidates.append(
                    Hypothesis(f"{subject}, {copula.group(1)},{first_rest}", 1.0)
                )

        if prefix:
            joined_prefix = " ".join(prefix)
            candidates = [
                Hypothesis(f"{joined_prefix} {c.text}", c.backend_score)
                for c in candidates
            ]
        candidates.append(Hypothesis(text, 0.0))
        return candidates[:beam_size]


class RemoteFuser(FusionModel):
    """Client for the POST /fuse wire protocol.

    Sends {"text", "beam_size"}, expects {"hypotheses": [{"text", "score"}]}.
    Transport and protocol failures raise; deciding whether to fall back is
    the decoder's business, not this client's.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def fuse(self, text, beam_size, context=None):
        if not text or not text.strip():
            raise ValueError("empty input")
        payload = remote.post_json(
            self.endpoint, "/fuse", {"text": text, "beam_size": beam_size}, self.timeout
        )
        hypotheses = payload.get("hypotheses") if isinstance(payload, dict) else None
        if not isinstance(hypotheses, list):
            raise remote.ProtocolError(self.endpoint, f"bad /fuse response: {payload!r}")
        if len(hypotheses) > beam_size:
            raise remote.ProtocolError(
                self.endpoint, f"{len(hypotheses)} hypotheses exceed beam size {beam_size}"
            )
        beam = []
        for item in hypotheses:
            if not isinstance(item, dict) or not isinstance(item.get("text"), str):
                raise remote.ProtocolError(self.endpoint, f"bad hypothesis: {item!r}")
            if not item["text"].strip():
                raise remote.ProtocolError(self.endpoint, "empty hypothesis text")
            score = item.get("score", 0.0)
            if not isinstance(score, (int, float)):
                raise remote.ProtocolError(self.endpoint, f"bad hypothesis score: {item!r}")
            beam.append(Hypothesis(item["text"], float(score)))
        beam.sort(key=lambda h: -h.backend_score)
        return beam
