"""Semantic-accuracy heuristics used to filter fusion beams.

Entity checking does case-insensitive substring matching of every subject and
object against the text. Slot checking, for E2E-shaped data, certifies each
(slot, value) through a table of surface patterns; the table is a checked-in
resource covering the eight restaurant slots with positive and negated
variants.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources as importlib_resources
from typing import Optional, Sequence

from .data import Triple


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    missing: tuple[str, ...]

    def __post_init__(self):
        if self.passed != (len(self.missing) == 0):
            raise ValueError("passed flag must mirror an empty missing list")

    @classmethod
    def from_missing(cls, missing: Sequence[str]) -> "CheckResult":
        return cls(passed=not missing, missing=tuple(missing))


@dataclass(frozen=True)
class SlotPattern:
    """Surface patterns any one of which certifies a (slot, value) pair.

    A value of "*" applies to every value of the slot; "{value}" inside a
    pattern is replaced by the regex-escaped actual value at check time.
    """

    slot: str
    value: str
    patterns: tuple[str, ...]

    def __post_init__(self):
        if not self.patterns:
            raise ValueError(f"slot pattern for ({self.slot}, {self.value}) has no patterns")


class SlotPatternTable:
    def __init__(self, entries: Sequence[SlotPattern]):
        self._exact = {(e.slot, e.value): e for e in entries if e.value != "*"}
        self._wildcard = {e.slot: e for e in entries if e.value == "*"}

    def lookup(self, slot: str, value: str) -> Optional[SlotPattern]:
        return self._exact.get((slot, value)) or self._wildcard.get(slot)

    def compiled(self, slot: str, value: str) -> list[re.Pattern]:
        entry = self.lookup(slot, value)
        if entry is None:
            raise KeyError(f"no slot patterns for ({slot!r}, {value!r})")
        return [
            re.compile(p.replace("{value}", re.escape(value)), re.IGNORECASE)
            for p in entry.patterns
        ]


def check_entities(text: str, triples: Sequence[Triple]) -> CheckResult:
    """Every subject and object must occur as a case-insensitive substring."""
    haystack = text.lower()
    missing: list[str] = []
    for triple in triples:
        for entity in (triple.subject, triple.object):
            if entity.lower() not in haystack and entity not in missing:
                missing.append(entity)
    return CheckResult.from_missing(missing)


def check_slots(
    text: str, triples: Sequence[Triple], table: SlotPatternTable
) -> CheckResult:
    """Each slot passes iff any of its patterns matches; the subject
    (restaurant name) is checked by plain substring."""
    missing: list[str] = []
    haystack = text.lower()
    for triple in triples:
        if triple.subject.lower() not in haystack and "name" not in missing:
            missing.append("name")
        matched = any(
            p.search(text) for p in table.compiled(triple.predicate, triple.object)
        )
        if not matched and triple.predicate not in missing:
            missing.append(triple.predicate)
    return CheckResult.from_missing(missing)


def load_slot_patterns(path: Optional[str] = None) -> SlotPatternTable:
    """Load a slot-pattern JSON file; defaults to the bundled E2E table."""
    if path is None:
        payload = (
            importlib_resources.files("fusegen.resources")
            .joinpath("e2e_slot_patterns.json")
            .read_text(encoding="utf-8")
        )
        rows = json.loads(payload)
    else:
        with open(path, encoding="utf-8") as handle:
            rows = json.load(handle)
    if isinstance(rows, dict):  # header-wrapped variant
        rows = rows["patterns"]
    entries = [
        SlotPattern(str(r["slot"]), str(r["value"]), tuple(str(p) for p in r["patterns"]))
        for r in rows
    ]
    return SlotPatternTable(entries)
