"""Desk-scale evaluation: corpus BLEU, ROUGE-L, and the pipeline report.

Metric tokenization reuses the editing tokenizer, lowercased, so every number
in a report is computed over the same token stream the pipeline manipulates.
The external challenge tooling tokenizes differently, so absolute values are
comparable only in trend; reports produced from native-backend runs are
flagged as non-comparable outright.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .checking import SlotPatternTable, check_entities, check_slots
from .data import Dataset
from .decoder import StepTrace, fallback_rate
from .editing import SENTINEL, lcs_align, tokenize
from .templates import TemplateStore

ROUGE_BETA = 1.2  # recall-leaning F, as in the E2E challenge tooling


def metric_tokens(text: str) -> list[str]:
    return [tok.surface.lower() for tok in tokenize(text) if tok.surface != SENTINEL]


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _validate(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError(
            f"{len(hypotheses)} hypotheses vs {len(references)} reference sets"
        )
    for refs in references:
        if not refs:
            raise ValueError("empty reference set")


def bleu(hypotheses: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """Corpus-level BLEU-4: clipped precisions, brevity penalty against the
    closest reference length, no smoothing."""
    _validate(hypotheses, references)
    max_n = 4
    matched = [0] * (max_n + 1)
    total = [0] * (max_n + 1)
    hyp_len = 0
    ref_len = 0
    for hypothesis, refs in zip(hypotheses, references):
        hyp_tokens = metric_tokens(hypothesis)
        ref_token_lists = [metric_tokens(r) for r in refs]
        hyp_len += len(hyp_tokens)
        ref_len += min(
            (len(r) for r in ref_token_lists),
            key=lambda length: (abs(length - len(hyp_tokens)), length),
        )
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp_tokens, n)
            if not hyp_counts:
                continue
            max_ref_counts: Counter = Counter()
            for ref_tokens in ref_token_lists:
                for ngram, count in _ngrams(ref_tokens, n).items():
                    max_ref_counts[ngram] = max(max_ref_counts[ngram], count)
            matched[n] += sum(
                min(count, max_ref_counts[ngram]) for ngram, count in hyp_counts.items()
            )
            total[n] += sum(hyp_counts.values())
    if hyp_len == 0:
        return 0.0
    log_precisions = []
    for n in range(1, max_n + 1):
        if matched[n] == 0 or total[n] == 0:
            return 0.0
        log_precisions.append(math.log(matched[n] / total[n]))
    brevity = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return brevity * math.exp(math.fsum(log_precisions) / max_n)


def _lcs_f(hyp_tokens: list[str], ref_tokens: list[str], beta: float) -> float:
    lcs = len(lcs_align(hyp_tokens, ref_tokens))
    if lcs == 0:
        return 0.0
    precision = lcs / len(hyp_tokens)
    recall = lcs / len(ref_tokens)
    return ((1 + beta**2) * precision * recall) / (recall + beta**2 * precision)


def rouge_l(
    hypotheses: Sequence[str],
    references: Sequence[Sequence[str]],
    beta: float = ROUGE_BETA,
) -> float:
    """Mean over examples of the best LCS F-measure across references."""
    _validate(hypotheses, references)
    if not hypotheses:
        return 0.0
    scores = []
    for hypothesis, refs in zip(hypotheses, references):
        hyp_tokens = metric_tokens(hypothesis)
        if not hyp_tokens:
            scores.append(0.0)
            continue
        scores.append(
            max(_lcs_f(hyp_tokens, metric_tokens(r), beta) for r in refs if metric_tokens(r))
        )
    return math.fsum(scores) / len(scores)


@dataclass(frozen=True)
class EvalReport:
    bleu: float
    rouge_l: float
    entity_error_rate: float
    fallback_rate: Optional[float]
    templates_per_predicate: Optional[float]
    example_count: int
    scorer_backend: str = "ngram"
    fuser_backend: str = "identity"
    comparable_to_reported: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "rouge_l": self.rouge_l,
            "entity_error_rate": self.entity_error_rate,
            "fallback_rate": self.fallback_rate,
            "templates_per_predicate": self.templates_per_predicate,
            "example_count": self.example_count,
            "scorer_backend": self.scorer_backend,
            "fuser_backend": self.fuser_backend,
            "comparable_to_reported": self.comparable_to_reported,
            "note": self.note,
        }


NON_COMPARABLE_NOTE = (
    "native-backend run: statistics are not comparable to values reported for "
    "the neural-backend setup on the full datasets"
)


def report(
    hypotheses: Sequence[str],
    dataset: Dataset,
    traces: Optional[Sequence[StepTrace]] = None,
    store: Optional[TemplateStore] = None,
    checker: str = "entities",
    slot_patterns: Optional[SlotPatternTable] = None,
    scorer_backend: str = "ngram",
    fuser_backend: str = "identity",
) -> EvalReport:
    """Assemble the evaluation report for one run.

    fallback_rate is absent (None), not zero, when no traces are supplied.
    The templates-per-predicate statistic excludes the fallback template.
    """
    if len(hypotheses) != len(dataset.examples):
        raise ValueError(
            f"{len(hypotheses)} hypotheses for {len(dataset.examples)} examples"
        )
    scored = [ex for ex in dataset.examples if ex.references]
    scored_hyps = [h for h, ex in zip(hypotheses, dataset.examples) if ex.references]
    failures = 0
    for hypothesis, example in zip(hypotheses, dataset.examples):
        if checker == "slots":
            result = check_slots(hypothesis, example.triples, slot_patterns)
        else:
            result = check_entities(hypothesis, example.triples)
        if not result.passed:
            failures += 1
    native = scorer_backend != "remote" or fuser_backend != "remote"
    return EvalReport(
        bleu=bleu(scored_hyps, [list(ex.references) for ex in scored]) if scored else 0.0,
        rouge_l=rouge_l(scored_hyps, [list(ex.references) for ex in scored]) if scored else 0.0,
        entity_error_rate=failures / len(dataset.examples) if dataset.examples else 0.0,
        fallback_rate=fallback_rate(list(traces)) if traces is not None else None,
        templates_per_predicate=store.templates_per_key() if store is not None else None,
        example_count=len(dataset.examples),
        scorer_backend=scorer_backend,
        fuser_backend=fuser_backend,
        comparable_to_reported=not native,
        note=NON_COMPARABLE_NOTE if native else "",
    )


def save_report(rep: EvalReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(rep.as_dict(), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
