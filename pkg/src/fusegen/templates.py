"""Per-predicate lexicalization templates: extraction, storage, filling,
and scorer-driven selection.

Templates are extracted from single-triple training examples by replacing
entity occurrences with placeholders, or from two-triple examples for pair
templates. Unseen predicates fall back to the universal pattern
"The <predicate> of <subject> is <object>.".
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field

from .data import Dataset, Triple
from .scoring import Scorer

SUBJECT = "<subject>"
OBJECT = "<object>"
OBJECT1 = "<object1>"
OBJECT2 = "<object2>"
PREDICATE = "<predicate>"

FALLBACK_PATTERN = "The <predicate> of <subject> is <object>."

_PLACEHOLDERS = (SUBJECT, OBJECT, OBJECT1, OBJECT2, PREDICATE)


@dataclass(frozen=True)
class Template:
    """A lexicalization pattern keyed by a predicate or ordered predicate pair."""

    key: "str | tuple[str, str]"
    pattern: str
    origin: str = "extracted"  # extracted | manual | fallback
    frequency: int = 1

    def __post_init__(self):
        if self.origin not in ("extracted", "manual", "fallback"):
            raise ValueError(f"unknown template origin {self.origin!r}")
        required = self._required_placeholders()
        for placeholder in required:
            if self.pattern.count(placeholder) != 1:
                raise ValueError(
                    f"pattern must contain {placeholder} exactly once: {self.pattern!r}"
                )
        for placeholder in set(_PLACEHOLDERS) - set(required):
            if placeholder in self.pattern:
                raise ValueError(
                    f"pattern contains stray placeholder {placeholder}: {self.pattern!r}"
                )

    def _required_placeholders(self) -> tuple[str, ...]:
        if self.origin == "fallback":
            return (PREDICATE, SUBJECT, OBJECT)
        if self.is_pair:
            return (SUBJECT, OBJECT1, OBJECT2)
        return (SUBJECT, OBJECT)

    @property
    def is_pair(self) -> bool:
        return isinstance(self.key, tuple)


FALLBACK = Template(key="", pattern=FALLBACK_PATTERN, origin="fallback")


class TemplateStore:
    """Immutable-by-convention map from key to templates, plus the fallback.

    Lookup on an unseen single predicate returns the fallback; unseen pair
    keys have no fallback and raise.
    """

    def __init__(self, templates: "list[Template] | None" = None):
        self._by_key: dict = {}
        for template in templates or []:
            self._by_key.setdefault(template.key, []).append(template)
        self.fallback = FALLBACK

    def keys(self):
        return self._by_key.keys()

    def has_key(self, key) -> bool:
        return key in self._by_key

    def templates_for(self, key) -> list[Template]:
        """Templates for a key; the fallback is the sole candidate only when
        a single-predicate key is absent."""
        if key in self._by_key:
            return list(self._by_key[key])
        if isinstance(key, tuple):
            raise KeyError(f"no pair template for {key!r}")
        return [self.fallback]

    def all_templates(self) -> list[Template]:
        return [t for group in self._by_key.values() for t in group]

    def templates_per_key(self) -> float:
        """Mean number of templates per key, fallback excluded."""
        if not self._by_key:
            return 0.0
        return float(statistics.mean(len(group) for group in self._by_key.values()))

    def merged_with(self, other: "TemplateStore") -> "TemplateStore":
        return TemplateStore(self.all_templates() + other.all_templates())


def _placeholder_spans(text: str, entities: list[tuple[str, str]]):
    """Reserve the first non-overlapping occurrence of every entity.

    Longer entities are matched first so a nested entity cannot corrupt the
    span of a longer one. Returns None when any entity is missing.
    """
    spans: list[tuple[int, int, str]] = []
    for entity, placeholder in sorted(entities, key=lambda item: -len(item[0])):
        start = 0
        while True:
            index = text.find(entity, start)
            if index < 0:
                return None
            end = index + len(entity)
            if all(end <= s or index >= e for s, e, _ in spans):
                spans.append((index, end, placeholder))
                break
            start = index + 1
    spans.sort()
    return spans


def make_pattern(text: str, entities: list[tuple[str, str]]) -> "str | None":
    """Replace the first occurrence of each entity with its placeholder.

    Matching is case-sensitive; returns None when any entity is absent.
    """
    spans = _placeholder_spans(text, entities)
    if spans is None:
        return None
    out = []
    cursor = 0
    for start, end, placeholder in spans:
        out.append(text[cursor:start])
        out.append(placeholder)
        cursor = end
    out.append(text[cursor:])
    return "".join(out)


def _merge(extracted: list[tuple]) -> list[Template]:
    counted: dict = {}
    for key, pattern in extracted:
        counted[(key, pattern)] = counted.get((key, pattern), 0) + 1
    return [
        Template(key=key, pattern=pattern, origin="extracted", frequency=count)
        for (key, pattern), count in counted.items()
    ]


def extract_single_templates(dataset: Dataset) -> TemplateStore:
    """Extract single-predicate templates from the one-triple examples.

    A reference contributes a template only when both the subject and the
    object occur in it; references missing either entity contribute nothing.
    """
    extracted = []
    for example in dataset:
        if len(example.triples) != 1:
            continue
        triple = example.triples[0]
        for reference in example.references:
            pattern = make_pattern(
                reference, [(triple.subject, SUBJECT), (triple.object, OBJECT)]
            )
            if pattern is None:
                continue
            try:
                Template(key=triple.predicate, pattern=pattern)
            except ValueError:
                continue
            extracted.append((triple.predicate, pattern))
    return TemplateStore(_merge(extracted))


def extract_pair_templates(dataset: Dataset) -> TemplateStore:
    """Extract templates for ordered predicate pairs from two-triple examples.

    Requires the shared-subject shape; <object1> and <object2> bind to the
    objects of the first and second triple respectively.
    """
    extracted = []
    for example in dataset:
        if len(example.triples) != 2:
            continue
        first, second = example.triples
        if first.subject != second.subject:
            continue
        key = (first.predicate, second.predicate)
        for reference in example.references:
            pattern = make_pattern(
                reference,
                [
                    (first.subject, SUBJECT),
                    (first.object, OBJECT1),
                    (second.object, OBJECT2),
                ],
            )
            if pattern is None:
                continue
            try:
                Template(key=key, pattern=pattern)
            except ValueError:
                continue
            extracted.append((key, pattern))
    return TemplateStore(_merge(extracted))


def fill(template: Template, triples: "list[Triple] | tuple") -> str:
    """Fill a template's placeholders verbatim from one or two triples."""
    triples = list(triples)
    if template.is_pair:
        if len(triples) != 2:
            raise ValueError(f"pair template needs 2 triples, got {len(triples)}")
        first, second = triples
        if first.subject != second.subject:
            raise ValueError("pair template requires a shared subject")
        values = {
            SUBJECT: first.subject,
            OBJECT1: first.object,
            OBJECT2: second.object,
        }
    else:
        if len(triples) != 1:
            raise ValueError(f"single template needs 1 triple, got {len(triples)}")
        triple = triples[0]
        values = {
            SUBJECT: triple.subject,
            OBJECT: triple.object,
            PREDICATE: triple.predicate,
        }
    out = []
    cursor = 0
    pattern = template.pattern
    while cursor < len(pattern):
        positions = [
            (pattern.find(ph, cursor), ph)
            for ph in values
            if pattern.find(ph, cursor) >= 0
        ]
        if not positions:
            out.append(pattern[cursor:])
            break
        index, placeholder = min(positions)
        out.append(pattern[cursor:index])
        out.append(values[placeholder])
        cursor = index + len(placeholder)
    return "".join(out)


def select_lexicalization(store: TemplateStore, triples, scorer: Scorer) -> str:
    """The filled candidate with the best score.

    Ties break toward the higher-frequency template, then lexicographic
    pattern order, so selection is deterministic for any scorer.
    """
    triples = list(triples)
    if len(triples) == 1:
        key = triples[0].predicate
    elif len(triples) == 2:
        key = (triples[0].predicate, triples[1].predicate)
    else:
        raise ValueError(f"lexicalization takes 1 or 2 triples, got {len(triples)}")
    candidates = store.templates_for(key)
    filled = [fill(template, triples) for template in candidates]
    scores = scorer.score_batch(filled)
    ranked = sorted(
        zip(scores, candidates, filled),
        key=lambda item: (-item[0], -item[1].frequency, item[1].pattern),
    )
    return ranked[0][2]


def _key_to_json(key):
    return list(key) if isinstance(key, tuple) else key


def _key_from_json(key):
    if isinstance(key, list):
        if len(key) != 2:
            raise ValueError(f"pair key must have 2 predicates: {key!r}")
        return (str(key[0]), str(key[1]))
    return str(key)


def save_templates(store: TemplateStore, path: str) -> None:
    """Template file format: [{"key", "pattern", "origin", "frequency"}]."""
    rows = [
        {
            "key": _key_to_json(t.key),
            "pattern": t.pattern,
            "origin": t.origin,
            "frequency": t.frequency,
        }
        for t in sorted(
            store.all_templates(), key=lambda t: (str(t.key), t.pattern)
        )
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(rows, handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def load_templates(path: str) -> TemplateStore:
    with open(path, encoding="utf-8") as handle:
        rows = json.load(handle)
    if not isinstance(rows, list):
        raise ValueError(f"{path}: template file must be a JSON list")
    templates = [
        Template(
            key=_key_from_json(row["key"]),
            pattern=str(row["pattern"]),
            origin=str(row.get("origin", "extracted")),
            frequency=int(row.get("frequency", 1)),
        )
        for row in rows
    ]
    return TemplateStore(templates)


def filter_templates(store: TemplateStore, allowed_patterns: "set[str]") -> TemplateStore:
    """Keep only templates whose pattern is in the allowlist.

    Used to drop extracted pair templates with semantic noise; the allowlist
    is a curated file, not an automatic filter.
    """
    return TemplateStore(
        [t for t in store.all_templates() if t.pattern in allowed_patterns]
    )
