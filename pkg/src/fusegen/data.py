"""Data model for triple sets and their reference texts, plus dataset importers.

The atomic unit is a (subject, predicate, object) triple. Examples group an
ordered triple set with zero or more reference texts; datasets group examples
per split. Importers exist for WebNLG-style XML, E2E-style CSV, and the JSONL
interchange format used by the rest of the toolkit.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
SOURCES = ("webnlg", "e2e", "jsonl", "discofuse")

_WHITESPACE = re.compile(r"\s+")
_MR_SLOT = re.compile(r"^\s*([^\[\]]+?)\s*\[\s*(.*?)\s*\]\s*$")


class DataError(ValueError):
    """Raised when an input file or record violates the data contracts."""


def normalize_entity(raw: str) -> str:
    """Normalize an entity surface form at import time.

    Underscores become single spaces, repeated whitespace collapses, and
    surrounding straight double quotes are stripped. Applied exactly once,
    by the importers; everything downstream sees the normalized form.
    """
    text = raw.replace("_", " ")
    text = _WHITESPACE.sub(" ", text).strip()
    if len(text) >= 2 and text.startswith('"') and text.endswith('"'):
        text = text[1:-1].strip()
    return text


@dataclass(frozen=True)
class Triple:
    """A (subject, predicate, object) fact. Fields are trimmed, never empty."""

    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name).strip()
            if not value:
                raise DataError(f"triple field '{name}' is empty")
            object.__setattr__(self, name, value)

    def as_dict(self) -> dict:
        return {"s": self.subject, "p": self.predicate, "o": self.object}

    @classmethod
    def from_dict(cls, obj: dict) -> "Triple":
        try:
            return cls(obj["s"], obj["p"], obj["o"])
        except KeyError as exc:
            raise DataError(f"triple object missing key {exc}") from exc


@dataclass(frozen=True)
class Example:
    """An ordered triple set with its reference texts.

    Triple order is preserved exactly as imported; the decoder consumes
    triples in this default order.
    """

    id: str
    triples: tuple[Triple, ...]
    references: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(self.triples))
        object.__setattr__(self, "references", tuple(self.references))
        if not self.triples:
            raise DataError("empty triple set")
        if len(set(self.triples)) != len(self.triples):
            raise DataError(f"example {self.id!r} contains duplicate triples")

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "triples": [t.as_dict() for t in self.triples],
            "refs": list(self.references),
        }


@dataclass(frozen=True)
class Dataset:
    examples: tuple[Example, ...]
    split: str = "train"
    source: str = "jsonl"

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        if self.split not in SPLITS:
            raise DataError(f"unknown split {self.split!r}")
        if self.source not in SOURCES:
            raise DataError(f"unknown source {self.source!r}")
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DataError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)


def load_jsonl(path: str, split: str = "train") -> Dataset:
    """Load a Dataset from the JSONL interchange format, one example per line.

    Schema per line: {"id": str, "triples": [{"s","p","o"}, ...], "refs": [...]}.
    """
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            try:
                example = Example(
                    id=str(obj["id"]),
                    triples=tuple(Triple.from_dict(t) for t in obj["triples"]),
                    references=tuple(str(r) for r in obj.get("refs", [])),
                )
            except KeyError as exc:
                raise DataError(f"{path}: line {lineno} missing key {exc}") from exc
            except DataError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
            examples.append(example)
    return Dataset(tuple(examples), split=split, source="jsonl")


def save_jsonl(dataset: Dataset, path: str) -> None:
    """Write a Dataset in the JSONL interchange format (UTF-8, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for example in dataset:
            handle.write(json.dumps(example.as_dict(), ensure_ascii=False))
            handle.write("\n")


def _parse_mr(mr: str) -> list[tuple[str, str]]:
    """Parse an E2E meaning representation into ordered (slot, value) items."""
    items = []
    for fragment in mr.split(","):
        fragment = fragment.strip()
        if not fragment:
            continue
        match = _MR_SLOT.match(fragment)
        if not match:
            raise DataError(f"unparseable slot item: {fragment!r}")
        items.append((match.group(1), match.group(2)))
    return items


def import_e2e(path: str, split: str = "train") -> Dataset:
    """Import an E2E-style CSV of (meaning representation, reference) rows.

    Each distinct MR becomes one Example: the name slot value is the subject
    and every remaining slot contributes one (name, slot, value) triple, so an
    MR with n slots yields n-1 triples. References sharing an MR are grouped.
    """
    grouped: dict[str, list[str]] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for rowno, row in enumerate(reader):
            if not row:
                continue
            if len(row) < 2:
                raise DataError(f"{path}: row {rowno + 1} has {len(row)} column(s), expected 2")
            mr, ref = row[0].strip(), row[1].strip()
            if rowno == 0 and mr.lower() == "mr" and ref.lower() == "ref":
                continue
            grouped.setdefault(mr, []).append(ref)

    examples = []
    for index, (mr, refs) in enumerate(grouped.items()):
        slots = _parse_mr(mr)
        name = next((value for slot, value in slots if slot == "name"), None)
        if name is None:
            raise DataError(f"MR without name slot: {mr!r}")
        subject = normalize_entity(name)
        triples = tuple(
            Triple(subject, slot, normalize_entity(value))
            for slot, value in slots
            if slot != "name"
        )
        try:
            examples.append(Example(id=f"e2e-{index}", triples=triples, references=tuple(refs)))
        except DataError as exc:
            raise DataError(f"MR {mr!r}: {exc}") from exc
    return Dataset(tuple(examples), split=split, source="e2e")


def _entry_references(entry: ET.Element) -> tuple[str, ...]:
    refs = []
    for lex in entry.findall("lex"):
        text = lex.findtext("text")
        if text is None:
            text = lex.text
        if text and text.strip():
            refs.append(text.strip())
    return tuple(refs)


def import_webnlg(path: str, split: str = "train") -> Dataset:
    """Import a WebNLG-style XML benchmark file.

    One Example per entry, triples in document order, all lex strings kept as
    references. Entries without a usable triple set are skipped with a warning
    rather than aborting the whole split.
    """
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise DataError(f"{path}: XML parse failure: {exc}") from exc

    examples = []
    skipped = 0
    seen_ids = set()
    for index, entry in enumerate(tree.getroot().iter("entry")):
        tripleset = entry.find("modifiedtripleset")
        if tripleset is None:
            tripleset = entry.find("originaltripleset")
        if tripleset is None:
            logger.warning("entry %d: missing triple set, skipped", index)
            skipped += 1
            continue
        triples = []
        broken = False
        for node in tripleset:
            parts = (node.text or "").split("|")
            if len(parts) != 3:
                logger.warning("entry %d: unparseable triple %r, entry skipped", index, node.text)
                broken = True
                break
            triples.append(
                Triple(
                    normalize_entity(parts[0]),
                    parts[1].strip(),
                    normalize_entity(parts[2]),
                )
            )
        if broken or not triples:
            if not broken:
                logger.warning("entry %d: empty triple set, skipped", index)
            skipped += 1
            continue

        eid = entry.get("eid")
        category = entry.get("category")
        example_id = f"{category}-{eid}" if category and eid else f"entry-{index}"
        if example_id in seen_ids:
            example_id = f"{example_id}-{index}"
        seen_ids.add(example_id)
        try:
            examples.append(
                Example(id=example_id, triples=tuple(triples), references=_entry_references(entry))
            )
        except DataError as exc:
            logger.warning("entry %d: %s, skipped", index, exc)
            skipped += 1
    logger.info("imported %d entries from %s (%d skipped)", len(examples), path, skipped)
    return Dataset(tuple(examples), split=split, source="webnlg")
