"""The iterative lexicalize-fuse-filter-rescore decoding loop.

The first triple (or pair of triples, when a pair template exists) seeds the
base text. Each remaining triple is lexicalized, appended, run through the
fusion backend, and the resulting beam is filtered for semantic accuracy; the
best-scoring survivor becomes the new base text. When the whole beam fails
the check, the step falls back to the unfused concatenation, preferring
accuracy to fluency. The final base text always passes the configured check
against the full triple set, whatever the fusion backend does.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .checking import CheckResult, SlotPatternTable, check_entities, check_slots
from .data import Example, Triple
from .editing import SENTINEL, tokenize
from .fusion import FusionContext, FusionModel, Hypothesis
from .scoring import Scorer
from .templates import TemplateStore, select_lexicalization

CHECKERS = ("entities", "slots")


@dataclass(frozen=True)
class StepTrace:
    """What one decoding step did, for diffing and fallback accounting."""

    index: int
    lexicalization: str
    beam_before: tuple[Hypothesis, ...]
    beam_after: tuple[Hypothesis, ...]
    chosen: str
    fallback: bool

    def as_dict(self, example_id: str = "") -> dict:
        return {
            "example_id": example_id,
            "index": self.index,
            "lexicalization": self.lexicalization,
            "beam_before": [
                {"text": h.text, "score": h.backend_score} for h in self.beam_before
            ],
            "beam_after": [
                {"text": h.text, "score": h.backend_score} for h in self.beam_after
            ],
            "chosen": self.chosen,
            "fallback": self.fallback,
        }


@dataclass(frozen=True)
class DecoderConfig:
    beam_size: int = 10
    checker: str = "entities"
    slot_patterns: Optional[SlotPatternTable] = None
    max_triples: Optional[int] = None
    use_pair_start: bool = True
    person_entities: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.checker not in CHECKERS:
            raise ValueError(f"unknown checker {self.checker!r}")
        if self.checker == "slots" and self.slot_patterns is None:
            raise ValueError("slots checker requires a slot pattern table")

    def check(self, text: str, triples) -> CheckResult:
        if self.checker == "slots":
            return check_slots(text, triples, self.slot_patterns)
        return check_entities(text, triples)


def _token_count(text: str) -> int:
    return sum(1 for tok in tokenize(text) if tok.surface != SENTINEL)


def _pick_best(hypotheses: list[Hypothesis], scorer: Scorer) -> str:
    scores = scorer.score_batch([h.text for h in hypotheses])
    ranked = sorted(
        zip(scores, hypotheses),
        key=lambda item: (-item[0], _token_count(item[1].text), item[1].text),
    )
    return ranked[0][1].text


def generate(
    example: Example,
    store: TemplateStore,
    scorer: Scorer,
    fuser: FusionModel,
    config: DecoderConfig = DecoderConfig(),
) -> tuple[str, list[StepTrace]]:
    """Decode one example into text, returning the full step trace."""
    triples = list(example.triples)
    if config.max_triples is not None:
        triples = triples[: config.max_triples]
    if not triples:
        raise ValueError("example has no triples")

    consumed = 1
    if (
        config.use_pair_start
        and len(triples) >= 2
        and triples[0].subject == triples[1].subject
        and store.has_key((triples[0].predicate, triples[1].predicate))
    ):
        base = select_lexicalization(store, triples[:2], scorer)
        consumed = 2
    else:
        base = select_lexicalization(store, triples[:1], scorer)

    traces = [
        StepTrace(
            index=0,
            lexicalization=base,
            beam_before=(),
            beam_after=(),
            chosen=base,
            fallback=False,
        )
    ]

    for step, triple in enumerate(triples[consumed:], start=1):
        seen = triples[: consumed + step]
        lexicalization = select_lexicalization(store, [triple], scorer)
        candidate = f"{base} {lexicalization}"
        context = FusionContext(
            entities=tuple(
                dict.fromkeys(
                    entity for t in seen for entity in (t.subject, t.object)
                )
            ),
            person_entities=config.person_entities,
        )
        beam = tuple(fuser.fuse(candidate, config.beam_size, context)[: config.beam_size])
        filtered = tuple(h for h in beam if config.check(h.text, seen).passed)
        if filtered:
            base = _pick_best(list(filtered), scorer)
            fallback = False
        else:
            base = candidate
            fallback = True
        traces.append(
            StepTrace(
                index=step,
                lexicalization=lexicalization,
                beam_before=beam,
                beam_after=filtered,
                chosen=base,
                fallback=fallback,
            )
        )
    return base, traces


def fallback_rate(traces: list[StepTrace]) -> float:
    """Fraction of fallback steps among steps with index >= 1.

    Step 0 never counts: it is pure lexicalization with no fusion. Zero
    eligible steps is defined as rate 0.
    """
    eligible = [t for t in traces if t.index >= 1]
    if not eligible:
        return 0.0
    return sum(1 for t in eligible if t.fallback) / len(eligible)
