"""Fusion-pair mining from datasets and DiscoFuse-shaped rows."""

import json

import pytest

from fusegen.data import Dataset, Example, Triple
from fusegen.mining import (
    DISCOFUSE_KEEP,
    FusionPair,
    filter_discofuse,
    load_discofuse,
    load_pairs,
    mine_pairs,
    save_pairs,
)
from fusegen.scoring import Scorer
from fusegen.templates import Template, TemplateStore


class TableScorer(Scorer):
    def __init__(self, table=None, default=0.5):
        self.table = table or {}
        self.default = default

    def score_batch(self, texts):
        return [self.table.get(t, self.default) for t in texts]


FOOD_STORE = TemplateStore([
    Template(key="food", pattern="<subject> serves <object> food.")
])

T_NEAR = Triple("A", "near", "B")
T_FOOD = Triple("A", "food", "Chinese")


def test_two_example_toy():
    dataset = Dataset((
        Example(id="x1", triples=(T_NEAR,), references=("a",)),
        Example(id="x2", triples=(T_NEAR, T_FOOD), references=("b",)),
    ))
    pairs = mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all")
    assert len(pairs) == 1
    assert pairs[0].source == "a A serves Chinese food."
    assert pairs[0].target == "b"
    assert pairs[0].meta["x_id"] == "x1"
    assert pairs[0].meta["x_prime_id"] == "x2"
    assert pairs[0].meta["triple"] == {"s": "A", "p": "food", "o": "Chinese"}


def test_no_containment_yields_nothing():
    dataset = Dataset((
        Example(id="x1", triples=(Triple("A", "near", "B"),), references=("a",)),
        Example(
            id="x2",
            triples=(Triple("C", "near", "D"), Triple("C", "food", "Chinese")),
            references=("b",),
        ),
    ))
    assert mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all") == []


def test_containment_is_field_wise():
    # same subject and predicate but a different object is a different triple
    dataset = Dataset((
        Example(id="x1", triples=(Triple("A", "near", "B"),), references=("a",)),
        Example(
            id="x2",
            triples=(Triple("A", "near", "Z"), Triple("A", "food", "Chinese")),
            references=("b",),
        ),
    ))
    assert mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all") == []


def cross_product_dataset():
    return Dataset((
        Example(id="x1", triples=(T_NEAR,), references=("a1", "a2")),
        Example(id="x2", triples=(T_NEAR, T_FOOD), references=("b1", "b2")),
    ))


def test_strategy_cardinalities():
    dataset = cross_product_dataset()
    scorer = TableScorer()
    assert len(mine_pairs(dataset, FOOD_STORE, scorer, strategy="all")) == 4
    assert len(mine_pairs(dataset, FOOD_STORE, scorer, strategy="best_tgt")) == 2
    assert len(mine_pairs(dataset, FOOD_STORE, scorer, strategy="best")) == 1


def test_best_strategy_follows_scorer():
    dataset = cross_product_dataset()
    scorer = TableScorer({"a2": 0.9, "a1": 0.1, "b1": 0.8, "b2": 0.2})
    [pair] = mine_pairs(dataset, FOOD_STORE, scorer, strategy="best")
    assert pair.source.startswith("a2 ")
    assert pair.target == "b1"
    assert (pair.meta["src_ref"], pair.meta["tgt_ref"]) == (1, 0)


def test_best_tgt_keeps_all_sources():
    dataset = cross_product_dataset()
    scorer = TableScorer({"b2": 0.9, "b1": 0.1})
    pairs = mine_pairs(dataset, FOOD_STORE, scorer, strategy="best_tgt")
    assert [p.meta["src_ref"] for p in pairs] == [0, 1]
    assert all(p.target == "b2" for p in pairs)


def test_examples_without_references_are_skipped():
    dataset = Dataset((
        Example(id="x1", triples=(T_NEAR,), references=()),
        Example(id="x2", triples=(T_NEAR, T_FOOD), references=("b",)),
        Example(id="x3", triples=(T_NEAR,), references=("a",)),
        Example(id="x4", triples=(T_NEAR, T_FOOD), references=()),
    ))
    pairs = mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all")
    assert [(p.meta["x_id"], p.meta["x_prime_id"]) for p in pairs] == [("x3", "x2")]


def test_duplicate_surface_pairs_are_deduplicated():
    dataset = Dataset((
        Example(id="x1", triples=(T_NEAR,), references=("a", "a")),
        Example(id="x2", triples=(T_NEAR, T_FOOD), references=("b", "b")),
    ))
    pairs = mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all")
    assert len(pairs) == 1


def test_output_order_is_canonical():
    t_extra = Triple("A", "area", "riverside")
    dataset = Dataset((
        Example(id="z-small", triples=(T_NEAR,), references=("za",)),
        Example(id="a-small", triples=(T_NEAR,), references=("aa",)),
        Example(id="big1", triples=(T_NEAR, T_FOOD), references=("b",)),
        Example(id="big2", triples=(T_NEAR, t_extra), references=("c",)),
    ))
    pairs = mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all")
    keys = [(p.meta["x_id"], p.meta["x_prime_id"]) for p in pairs]
    assert keys == sorted(keys)
    assert keys == [
        ("a-small", "big1"),
        ("a-small", "big2"),
        ("z-small", "big1"),
        ("z-small", "big2"),
    ]


def test_source_ends_with_a_filled_template():
    dataset = cross_product_dataset()
    pairs = mine_pairs(dataset, FOOD_STORE, TableScorer(), strategy="all")
    for pair in pairs:
        assert pair.source.endswith(" A serves Chinese food.")
        assert "<" not in pair.source


def test_unknown_strategy_rejected():
    with pytest.raises(ValueError, match="strategy"):
        mine_pairs(cross_product_dataset(), FOOD_STORE, TableScorer(), strategy="any")


def df_row(dtype, connective="", first="First.", second="Second.", fused="Fused."):
    return {
        "discourse_type": dtype,
        "connective_string": connective,
        "incoherent_first_sentence": first,
        "incoherent_second_sentence": second,
        "coherent_first_sentence": fused,
        "coherent_second_sentence": "",
    }


def test_discofuse_type_allowlist():
    kept = filter_discofuse([df_row("SINGLE_APPOSITION")])
    assert len(kept) == 1
    assert filter_discofuse([df_row("PAIR_CONN", connective="however")]) == []
    assert filter_discofuse([df_row("SINGLE_CATAPHORA")]) == []
    assert filter_discofuse([df_row("SINGLE_CONN_START", connective="and")]) == []


def test_discofuse_connective_restriction():
    assert filter_discofuse([df_row("SINGLE_S_COORD", connective="but")]) == []
    assert len(filter_discofuse([df_row("SINGLE_S_COORD", connective="and")])) == 1
    assert len(filter_discofuse([df_row("SINGLE_VP_COORD", connective=", and")])) == 1
    assert filter_discofuse([df_row("SINGLE_S_COORD_ANAPHORA", connective="or")]) == []
    # unrestricted kept types ignore the connective entirely
    assert len(filter_discofuse([df_row("PAIR_NONE", connective="but")])) == 1


def test_discofuse_every_kept_type_passes_with_and():
    rows = [df_row(t, connective="and") for t in sorted(DISCOFUSE_KEEP)]
    assert len(filter_discofuse(rows)) == len(DISCOFUSE_KEEP)


def test_discofuse_pair_construction():
    [pair] = filter_discofuse([
        df_row("PAIR_ANAPHORA", first="Bob runs.", second="Bob jumps.", fused="He runs and jumps.")
    ])
    assert pair.source == "Bob runs. Bob jumps."
    assert pair.target == "He runs and jumps."
    assert pair.meta["discourse_type"] == "PAIR_ANAPHORA"


def test_discofuse_two_sentence_target():
    row = df_row("PAIR_NONE", fused="First part.")
    row["coherent_second_sentence"] = "Second part."
    [pair] = filter_discofuse([row])
    assert pair.target == "First part. Second part."


def test_discofuse_unknown_type_dropped():
    assert filter_discofuse([df_row("SOMETHING_ELSE")]) == []


def test_load_discofuse_tsv(tmp_path):
    path = tmp_path / "df.tsv"
    header = "\t".join([
        "coherent_first_sentence",
        "coherent_second_sentence",
        "incoherent_first_sentence",
        "incoherent_second_sentence",
        "discourse_type",
        "connective_string",
    ])
    row = "\t".join(["Fused.", "", "First.", "Second.", "SINGLE_RELATIVE", ""])
    path.write_text(f"{header}\n{row}\n", encoding="utf-8")
    rows = load_discofuse(str(path))
    assert rows[0]["discourse_type"] == "SINGLE_RELATIVE"
    [pair] = filter_discofuse(rows)
    assert pair.source == "First. Second."
    assert pair.target == "Fused."


def test_pairs_file_round_trip(tmp_path):
    pairs = [
        FusionPair("a x.", "b.", {"x_id": "1"}),
        FusionPair("c y.", "d.", {}),
    ]
    path = tmp_path / "pairs.jsonl"
    save_pairs(pairs, str(path))
    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"source": "a x.", "target": "b.", "meta": {"x_id": "1"}}
    assert load_pairs(str(path)) == pairs


def test_load_pairs_malformed_line(tmp_path):
    path = tmp_path / "pairs.jsonl"
    path.write_text('{"source": "a", "target": "b"}\nnot json\n', encoding="utf-8")
    with pytest.raises(ValueError, match="line 2"):
        load_pairs(str(path))
