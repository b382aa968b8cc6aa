"""Construct sentence-fusion training pairs.

Two sources: (1) dataset mining, pairing examples whose triple sets differ by
exactly one triple and concatenating a lexicalization of the extra triple onto
a reference of the smaller example; (2) a DiscoFuse-shaped corpus filtered to
the discourse phenomena that actually occur in data-to-text references.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .data import Dataset, Triple
from .scoring import Scorer
from .templates import TemplateStore, select_lexicalization

logger = logging.getLogger(__name__)

STRATEGIES = ("best", "best_tgt", "all")

# Discourse types kept for zero-shot fusion training. The coordination types
# are additionally restricted to plain "and" connectives.
DISCOFUSE_KEEP = frozenset(
    {
        "PAIR_ANAPHORA",
        "PAIR_NONE",
        "SINGLE_APPOSITION",
        "SINGLE_RELATIVE",
        "SINGLE_S_COORD",
        "SINGLE_S_COORD_ANAPHORA",
        "SINGLE_VP_COORD",
    }
)
DISCOFUSE_CONNECTIVE_RESTRICTED = frozenset(
    {"SINGLE_S_COORD", "SINGLE_S_COORD_ANAPHORA", "SINGLE_VP_COORD"}
)
DISCOFUSE_ALLOWED_CONNECTIVES = frozenset({"and", ", and"})

DISCOFUSE_ALL_TYPES = frozenset(
    {
        "PAIR_ANAPHORA",
        "PAIR_CONN",
        "PAIR_CONN_ANAPHORA",
        "PAIR_NONE",
        "SINGLE_APPOSITION",
        "SINGLE_CATAPHORA",
        "SINGLE_CONN_INNER",
        "SINGLE_CONN_INNER_ANAPHORA",
        "SINGLE_CONN_START",
        "SINGLE_RELATIVE",
        "SINGLE_S_COORD",
        "SINGLE_S_COORD_ANAPHORA",
        "SINGLE_VP_COORD",
    }
)


@dataclass(frozen=True)
class FusionPair:
    """One fusion training pair: unfused source text and its fused target."""

    source: str
    target: str
    meta: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "meta": self.meta}


def _best_index(texts: Sequence[str], scorer: Scorer) -> int:
    scores = scorer.score_batch(list(texts))
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return best


def mine_pairs(
    dataset: Dataset,
    store: TemplateStore,
    scorer: Scorer,
    strategy: str = "all",
) -> list[FusionPair]:
    """Mine fusion pairs from ordered example pairs with (n, n+1) triples.

    For every (X, X') where all n triples of X occur field-wise in X', the
    unique extra triple t is lexicalized with the scorer-selected template and
    appended to a reference of X; the target is a reference of X'. The
    reference strategy controls which reference combinations are emitted:
    "best" scores both sides, "best_tgt" scores the target side only, "all"
    takes the full cross product. Output order is canonical in
    (X.id, X'.id, source ref index, target ref index).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")

    by_size: dict[int, list] = {}
    for example in dataset:
        by_size.setdefault(len(example.triples), []).append(example)

    lex_cache: dict[Triple, str] = {}

    def lex(triple: Triple) -> str:
        if triple not in lex_cache:
            lex_cache[triple] = select_lexicalization(store, [triple], scorer)
        return lex_cache[triple]

    pairs: list[FusionPair] = []
    for n, smaller_group in sorted(by_size.items()):
        larger_group = by_size.get(n + 1, [])
        if not larger_group:
            continue
        for smaller in smaller_group:
            if not smaller.references:
                continue
            small_set = set(smaller.triples)
            for larger in larger_group:
                if not larger.references:
                    continue
                extra = [t for t in larger.triples if t not in small_set]
                if len(extra) != 1:
                    continue
                triple = extra[0]
                lexicalization = lex(triple)

                if strategy == "all":
                    combos = [
                        (i, j)
                        for i in range(len(smaller.references))
                        for j in range(len(larger.references))
                    ]
                elif strategy == "best_tgt":
                    j = _best_index(larger.references, scorer)
                    combos = [(i, j) for i in range(len(smaller.references))]
                else:  # best
                    i = _best_index(smaller.references, scorer)
                    j = _best_index(larger.references, scorer)
                    combos = [(i, j)]

                for i, j in combos:
                    pairs.append(
                        FusionPair(
                            source=f"{smaller.references[i]} {lexicalization}",
                            target=larger.references[j],
                            meta={
                                "x_id": smaller.id,
                                "x_prime_id": larger.id,
                                "triple": triple.as_dict(),
                                "src_ref": i,
                                "tgt_ref": j,
                            },
                        )
                    )

    pairs.sort(
        key=lambda p: (p.meta["x_id"], p.meta["x_prime_id"], p.meta["src_ref"], p.meta["tgt_ref"])
    )
    seen: set[tuple[str, str]] = set()
    unique = []
    for pair in pairs:
        signature = (pair.source, pair.target)
        if signature in seen:
            continue
        seen.add(signature)
        unique.append(pair)
    return unique


def filter_discofuse(rows: Iterable[dict]) -> list[FusionPair]:
    """Keep the DiscoFuse rows whose discourse phenomena fit sentence fusion.

    A row survives iff its discourse type is in the allowlist, and for the
    coordination types only when the connective is "and" or ", and". Unknown
    discourse types are dropped; per-type counts are logged.
    """
    kept: list[FusionPair] = []
    dropped: dict[str, int] = {}
    unknown = 0
    for row in rows:
        discourse_type = (row.get("discourse_type") or "").strip()
        if discourse_type not in DISCOFUSE_ALL_TYPES:
            unknown += 1
            continue
        connective = (row.get("connective_string") or "").strip()
        keep = discourse_type in DISCOFUSE_KEEP and (
            discourse_type not in DISCOFUSE_CONNECTIVE_RESTRICTED
            or connective in DISCOFUSE_ALLOWED_CONNECTIVES
        )
        if not keep:
            dropped[discourse_type] = dropped.get(discourse_type, 0) + 1
            continue
        first = (row.get("incoherent_first_sentence") or "").strip()
        second = (row.get("incoherent_second_sentence") or "").strip()
        fused = (row.get("coherent_first_sentence") or "").strip()
        coherent_second = (row.get("coherent_second_sentence") or "").strip()
        if coherent_second:
            fused = f"{fused} {coherent_second}"
        kept.append(
            FusionPair(
                source=f"{first} {second}".strip(),
                target=fused,
                meta={"discourse_type": discourse_type, "connective": connective},
            )
        )
    if dropped or unknown:
        logger.info(
            "discofuse filter: kept %d, dropped %s, unknown types %d",
            len(kept),
            dict(sorted(dropped.items())),
            unknown,
        )
    return kept


def load_discofuse(path: str) -> list[dict]:
    """Read a DiscoFuse-shaped tab-separated file with its release header."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        return list(reader)


def save_pairs(pairs: Sequence[FusionPair], path: str) -> None:
    """Training-pair JSONL: {"source", "target", "meta"} per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair.as_dict(), ensure_ascii=False))
            handle.write("\n")


def load_pairs(path: str) -> list[FusionPair]:
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pairs.append(
                    FusionPair(str(obj["source"]), str(obj["target"]), dict(obj.get("meta", {})))
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: malformed pair on line {lineno}: {exc}") from exc
    return pairs
