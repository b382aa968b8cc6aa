"""Edit-operation tagging over word-level tokens.

A target text is represented as a program of per-token tags over the source:
KEEP or DELETE for every source token, with an optional phrase inserted before
it. Conversion from a (source, target) pair runs a longest common subsequence
alignment; a conversion is feasible only if every phrase it needs to insert is
in the phrase vocabulary. Applying a tag sequence never emits a word that is
absent from both the source and the tag inserts, which is what makes the edit
model structurally unable to hallucinate content.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

KEEP = "KEEP"
DELETE = "DELETE"

SENTINEL = "<eos>"

PUNCTUATION = frozenset(".,;:!?\"()")

WORD = "word"
PUNCT = "punctuation"
SENT = "sentinel"


@dataclass(frozen=True)
class Token:
    surface: str
    kind: str  # word | punctuation | sentinel


@dataclass(frozen=True)
class Tag:
    """One edit operation: keep or delete the token, optionally inserting a
    phrase (ordered tokens) before it."""

    base: str
    insert: tuple[str, ...] = ()

    def __post_init__(self):
        if self.base not in (KEEP, DELETE):
            raise ValueError(f"unknown tag base {self.base!r}")
        if any(not tok for tok in self.insert):
            raise ValueError("insert phrase contains an empty token")


@dataclass(frozen=True)
class TagSequence:
    """One tag per source token, sentinel included; the sentinel tag is KEEP."""

    tags: tuple[Tag, ...]

    def __post_init__(self):
        if not self.tags or self.tags[-1].base != KEEP:
            raise ValueError("tag sequence must end with a KEEP on the sentinel")

    def __len__(self) -> int:
        return len(self.tags)

    def insert_phrases(self) -> list[str]:
        """Phrase strings required by this sequence, in order."""
        return [" ".join(tag.insert) for tag in self.tags if tag.insert]


@dataclass(frozen=True)
class PhraseVocabulary:
    """The closed set of insertable phrases, at most `capacity` of them."""

    phrases: frozenset[str]
    capacity: int
    counts: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.phrases) > self.capacity:
            raise ValueError("vocabulary exceeds its capacity")
        if any(not p for p in self.phrases):
            raise ValueError("empty phrase in vocabulary")

    def __contains__(self, phrase: str) -> bool:
        return phrase in self.phrases


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, detach punctuation, append the sentinel."""
    tokens: list[Token] = []
    for chunk in text.split():
        word = []
        for ch in chunk:
            if ch in PUNCTUATION:
                if word:
                    tokens.append(Token("".join(word), WORD))
                    word = []
                tokens.append(Token(ch, PUNCT))
            else:
                word.append(ch)
        if word:
            tokens.append(Token("".join(word), WORD))
    tokens.append(Token(SENTINEL, SENT))
    return tokens


def surfaces(text: str) -> list[str]:
    """Token surfaces of `text`, sentinel excluded."""
    return [tok.surface for tok in tokenize(text)[:-1]]


def detokenize(token_surfaces: Iterable[str]) -> str:
    """Join tokens with single spaces, attaching punctuation to the preceding
    token. Case is left untouched."""
    out: list[str] = []
    for surface in token_surfaces:
        if surface in PUNCTUATION and out:
            out[-1] += surface
        else:
            out.append(surface)
    return " ".join(out)


def lcs_align(source: Sequence[str], target: Sequence[str]) -> list[tuple[int, int]]:
    """Aligned (source_index, target_index) pairs of one longest common
    subsequence. Ties prefer the earliest source match."""
    n, m = len(source), len(target)
    # dp[i][j] = LCS length of source[i:] vs target[j:]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if source[i] == target[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])
    matches = []
    i = j = 0
    while i < n and j < m:
        if source[i] == target[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            matches.append((i, j))
            i += 1
            j += 1
        elif dp[i][j] == dp[i][j + 1]:
            j += 1
        else:
            i += 1
    return matches


def convert(
    source: str, target: str, vocab: Optional[PhraseVocabulary] = None
) -> Optional[TagSequence]:
    """Convert a (source, target) text pair into a tag sequence.

    Source tokens outside the LCS get DELETE, inside get KEEP. Each maximal
    run of unmatched target tokens becomes a phrase inserted before the next
    matched source token (or before the sentinel). Returns None when a needed
    phrase is not in `vocab`; `vocab=None` means unrestricted.
    """
    src = surfaces(source)
    tgt = surfaces(target)
    matches = lcs_align(src, tgt)

    kept = {i for i, _ in matches}
    inserts: dict[int, tuple[str, ...]] = {}
    prev_j = -1
    for i, j in matches:
        if j - prev_j > 1:
            inserts[i] = tuple(tgt[prev_j + 1 : j])
        prev_j = j
    if prev_j < len(tgt) - 1:
        inserts[len(src)] = tuple(tgt[prev_j + 1 :])

    if vocab is not None:
        for phrase_tokens in inserts.values():
            if " ".join(phrase_tokens) not in vocab:
                return None

    tags = [
        Tag(KEEP if i in kept else DELETE, inserts.get(i, ()))
        for i in range(len(src))
    ]
    tags.append(Tag(KEEP, inserts.get(len(src), ())))
    return TagSequence(tuple(tags))


def apply(tags: TagSequence, source: str) -> str:
    """Apply a tag sequence to a source text and detokenize the result.

    For every tag its insert phrase is emitted first; the source token itself
    is emitted only for KEEP. Inserts on DELETE tags are honored so phrase
    placement survives deletion of the anchor token.
    """
    source_tokens = tokenize(source)
    if len(tags) != len(source_tokens):
        raise ValueError(
            f"tag count {len(tags)} does not match token count {len(source_tokens)}"
        )
    out: list[str] = []
    for tag, token in zip(tags.tags, source_tokens):
        out.extend(tag.insert)
        if tag.base == KEEP and token.kind != SENT:
            out.append(token.surface)
    return detokenize(out)


def build_vocabulary(pairs: Iterable[tuple[str, str]], capacity: int) -> PhraseVocabulary:
    """Collect the `capacity` most frequent insert phrases over all pairs.

    Frequencies come from unrestricted conversions; ties break toward the
    shorter phrase, then lexicographic order.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    counts: Counter[str] = Counter()
    for source, target in pairs:
        tags = convert(source, target, vocab=None)
        counts.update(tags.insert_phrases())
    ranked = sorted(counts.items(), key=lambda item: (-item[1], len(item[0]), item[0]))
    top = ranked[:capacity]
    return PhraseVocabulary(
        frozenset(phrase for phrase, _ in top),
        capacity,
        counts={phrase: count for phrase, count in top},
    )


def filter_feasible(
    pairs: Sequence[tuple[str, str]], vocab: PhraseVocabulary
) -> tuple[list[tuple[str, str]], int]:
    """Keep exactly the pairs whose conversion is feasible under `vocab`."""
    kept = [pair for pair in pairs if convert(pair[0], pair[1], vocab) is not None]
    return kept, len(pairs) - len(kept)


def save_vocabulary(vocab: PhraseVocabulary, path: str) -> None:
    """One phrase per line, frequency appended after a tab."""
    rows = sorted(
        ((phrase, vocab.counts.get(phrase, 0)) for phrase in vocab.phrases),
        key=lambda item: (-item[1], len(item[0]), item[0]),
    )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for phrase, count in rows:
            handle.write(f"{phrase}\t{count}\n")


def load_vocabulary(path: str, capacity: Optional[int] = None) -> PhraseVocabulary:
    phrases = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            phrase, _, count = line.rpartition("\t")
            if not phrase:
                raise ValueError(f"{path}: malformed vocabulary line {line!r}")
            phrases[phrase] = int(count)
    return PhraseVocabulary(
        frozenset(phrases), capacity if capacity is not None else len(phrases), counts=phrases
    )
