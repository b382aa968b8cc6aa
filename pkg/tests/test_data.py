"""Data model and importer tests."""

import json

import pytest

from fusegen.data import (
    DataError,
    Dataset,
    Example,
    Triple,
    import_e2e,
    import_webnlg,
    load_jsonl,
    normalize_entity,
    save_jsonl,
)


def test_normalize_entity_underscores_and_quotes():
    assert normalize_entity("New_Mexico_Territory") == "New Mexico Territory"
    assert normalize_entity('"Bronze"') == "Bronze"
    assert normalize_entity("  a   b\tc ") == "a b c"
    # a lone quote is not a surrounding pair
    assert normalize_entity('"unterminated') == '"unterminated'


def test_triple_fields_trimmed_and_non_empty():
    t = Triple(" A ", "near", "B")
    assert t.subject == "A"
    with pytest.raises(DataError):
        Triple("", "near", "B")
    with pytest.raises(DataError):
        Triple("A", "   ", "B")


def test_triple_dict_round_trip():
    t = Triple("A", "near", "B")
    assert Triple.from_dict(t.as_dict()) == t
    with pytest.raises(DataError):
        Triple.from_dict({"s": "A", "p": "near"})


def test_example_invariants():
    t = Triple("A", "near", "B")
    with pytest.raises(DataError, match="empty triple set"):
        Example(id="x", triples=())
    with pytest.raises(DataError, match="duplicate"):
        Example(id="x", triples=(t, Triple("A", "near", "B")))
    ex = Example(id="x", triples=(t, Triple("A", "far", "C")))
    assert [tr.predicate for tr in ex.triples] == ["near", "far"]


def test_dataset_invariants():
    ex = Example(id="x", triples=(Triple("A", "near", "B"),))
    with pytest.raises(DataError, match="duplicate example id"):
        Dataset((ex, ex))
    with pytest.raises(DataError, match="unknown split"):
        Dataset((ex,), split="validation")


def test_load_jsonl_single_line(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(
        '{"id":"x1","triples":[{"s":"A","p":"near","o":"B"}],"refs":["A is near B."]}\n'
    )
    ds = load_jsonl(str(p))
    assert len(ds) == 1
    assert ds.examples[0].triples == (Triple("A", "near", "B"),)
    assert ds.examples[0].references == ("A is near B.",)


def test_load_jsonl_empty_file(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text("")
    assert len(load_jsonl(str(p))) == 0


def test_load_jsonl_empty_triples_names_line(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"id":"ok","triples":[{"s":"A","p":"b","o":"C"}],"refs":[]}\n'
                 '{"id":"bad","triples":[],"refs":[]}\n')
    with pytest.raises(DataError, match="line 2.*empty triple set"):
        load_jsonl(str(p))


def test_load_jsonl_malformed_line_number(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text('{"id":"a","triples":[{"s":"A","p":"b","o":"C"}]}\nnot json\n')
    with pytest.raises(DataError, match="line 2"):
        load_jsonl(str(p))


def test_load_jsonl_duplicate_id(tmp_path):
    p = tmp_path / "d.jsonl"
    row = '{"id":"x","triples":[{"s":"A","p":"b","o":"C"}],"refs":[]}\n'
    p.write_text(row + row)
    with pytest.raises(DataError, match="duplicate example id"):
        load_jsonl(str(p))


def test_jsonl_round_trip_preserves_surface_forms(tmp_path):
    # Loader must not re-normalize: underscores and quotes written to the
    # interchange file survive a round trip untouched.
    ex = Example(
        id="weird",
        triples=(Triple('has_"odd"_name', "p_red", "  kept  verbatim"),),
        references=('He said "hi".',),
    )
    ds = Dataset((ex,), split="dev")
    p = tmp_path / "d.jsonl"
    save_jsonl(ds, str(p))
    back = load_jsonl(str(p), split="dev")
    assert back.examples == ds.examples
    assert back.split == "dev"


def test_import_e2e_giraffe(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text(
        "mr,ref\n"
        '"name[Giraffe], eatType[pub], near[Raja Indian Cuisine]",'
        '"The Giraffe is a pub near Raja Indian Cuisine."\n'
    )
    ds = import_e2e(str(p))
    assert ds.source == "e2e"
    assert ds.examples[0].triples == (
        Triple("Giraffe", "eatType", "pub"),
        Triple("Giraffe", "near", "Raja Indian Cuisine"),
    )


def test_import_e2e_groups_by_exact_mr(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text(
        "mr,ref\n"
        '"name[A], eatType[pub]","ref one."\n'
        '"name[A], eatType[pub]","ref two."\n'
        '"name[A], eatType[bar]","ref three."\n'
    )
    ds = import_e2e(str(p))
    assert len(ds) == 2
    assert ds.examples[0].references == ("ref one.", "ref two.")


def test_import_e2e_slot_count(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text(
        '"name[X], eatType[pub], food[Chinese], area[riverside], familyFriendly[yes]","r."\n'
    )
    ds = import_e2e(str(p))
    assert len(ds.examples[0].triples) == 4  # 5 slots including name


def test_import_e2e_name_only_is_empty_triple_set(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text('"name[X]","just a name."\n')
    with pytest.raises(DataError, match="empty triple set"):
        import_e2e(str(p))


def test_import_e2e_missing_name(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text('"eatType[pub]","no name here."\n')
    with pytest.raises(DataError, match="name slot"):
        import_e2e(str(p))


def test_import_e2e_bad_fragment_named(tmp_path):
    p = tmp_path / "e2e.csv"
    p.write_text('"name[X], eatType-pub","broken."\n')
    with pytest.raises(DataError, match="eatType-pub"):
        import_e2e(str(p))


WEBNLG_XML = """<?xml version="1.0"?>
<benchmark>
  <entries>
    <entry category="Astronaut" eid="Id1" size="3">
      <modifiedtripleset>
        <mtriple>Albert_Jennings_Fountain | deathPlace | New_Mexico_Territory</mtriple>
        <mtriple>Albert_Jennings_Fountain | birthPlace | New_York_City</mtriple>
        <mtriple>Albert_Jennings_Fountain | birthPlace | Staten_Island</mtriple>
      </modifiedtripleset>
      <lex lid="Id1">Albert Jennings Fountain was born in Staten Island, New York City and died in the New Mexico Territory.</lex>
      <lex lid="Id2">Fountain died in New Mexico Territory.</lex>
    </entry>
    <entry category="Astronaut" eid="Id2" size="1">
      <modifiedtripleset>
        <mtriple>William_Anders | birthPlace | British_Hong_Kong</mtriple>
      </modifiedtripleset>
    </entry>
    <entry category="Astronaut" eid="Id3" size="1">
      <modifiedtripleset>
        <mtriple>broken triple with no pipes</mtriple>
      </modifiedtripleset>
      <lex lid="Id1">ignored.</lex>
    </entry>
  </entries>
</benchmark>
"""


def test_import_webnlg(tmp_path):
    p = tmp_path / "w.xml"
    p.write_text(WEBNLG_XML)
    ds = import_webnlg(str(p))
    assert ds.source == "webnlg"
    assert len(ds) == 2  # broken entry skipped, not fatal
    first = ds.examples[0]
    assert first.triples[0] == Triple(
        "Albert Jennings Fountain", "deathPlace", "New Mexico Territory"
    )
    assert len(first.triples) == 3
    assert len(first.references) == 2
    # entry with no lex kept, refs empty
    assert ds.examples[1].references == ()


def test_import_webnlg_parse_failure(tmp_path):
    p = tmp_path / "w.xml"
    p.write_text("<benchmark><entries>")
    with pytest.raises(DataError, match="parse failure"):
        import_webnlg(str(p))


def test_save_jsonl_lf_endings(tmp_path):
    ds = Dataset((Example(id="x", triples=(Triple("A", "b", "C"),)),))
    p = tmp_path / "d.jsonl"
    save_jsonl(ds, str(p))
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")
    obj = json.loads(raw.decode())
    assert obj == {"id": "x", "triples": [{"s": "A", "p": "b", "o": "C"}], "refs": []}
