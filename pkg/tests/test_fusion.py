"""Fusion backends: identity, rule-based rewriting, and the remote client."""

import pytest

from fusegen.editing import PUNCTUATION, tokenize
from fusegen.fusion import (
    FusionContext,
    Hypothesis,
    IdentityFuser,
    RemoteFuser,
    RuleFuser,
    split_sentences,
)
from fusegen.remote import ProtocolError, TransportError

ANDERS = (
    "William Anders was born in British Hong Kong. "
    "William Anders was a member of the crew of Apollo 8."
)
ANDERS_CONTEXT = FusionContext(
    entities=("William Anders", "British Hong Kong", "Apollo 8"),
    person_entities=frozenset({"William Anders"}),
)

EAGLE = "The Eagle is in the city centre. The Eagle is a coffee shop."
EAGLE_CONTEXT = FusionContext(entities=("The Eagle", "city centre", "coffee shop"))

RULE_WORDS = {"and", "who", "which", ","}


def test_hypothesis_requires_text():
    with pytest.raises(ValueError, match="empty"):
        Hypothesis("")
    with pytest.raises(ValueError, match="empty"):
        Hypothesis("   ")


def test_split_sentences():
    assert split_sentences("A is B. C is D.") == ["A is B.", "C is D."]
    assert split_sentences("One sentence only.") == ["One sentence only."]
    assert split_sentences("  A.   B!  C?  ") == ["A.", "B!", "C?"]


def test_identity_returns_input():
    beam = IdentityFuser().fuse("A. B.", 10)
    assert [h.text for h in beam] == ["A. B."]


def test_identity_single_hypothesis_for_any_beam():
    assert len(IdentityFuser().fuse("anything at all.", 10)) == 1
    assert len(IdentityFuser().fuse("anything at all.", 1)) == 1


def test_identity_rejects_empty_input():
    with pytest.raises(ValueError, match="empty input"):
        IdentityFuser().fuse("", 10)


def test_rules_subject_coordination():
    beam = RuleFuser().fuse(ANDERS, 10, ANDERS_CONTEXT)
    texts = [h.text for h in beam]
    assert (
        "William Anders was born in British Hong Kong, "
        "and was a member of the crew of Apollo 8." in texts
    )


def test_rules_relative_clause_who_for_persons():
    texts = [h.text for h in RuleFuser().fuse(ANDERS, 10, ANDERS_CONTEXT)]
    assert (
        "William Anders, who was a member of the crew of Apollo 8, "
        "was born in British Hong Kong." in texts
    )


def test_rules_relative_clause_which_by_default():
    texts = [h.text for h in RuleFuser().fuse(EAGLE, 10, EAGLE_CONTEXT)]
    assert "The Eagle, which is a coffee shop, is in the city centre." in texts


def test_rules_apposition_on_copula():
    texts = [h.text for h in RuleFuser().fuse(EAGLE, 10, EAGLE_CONTEXT)]
    assert "The Eagle, a coffee shop, is in the city centre." in texts


def test_rules_single_sentence_no_op():
    beam = RuleFuser().fuse("A is near B.", 10, FusionContext(entities=("A", "B")))
    assert [h.text for h in beam] == ["A is near B."]


def test_rules_different_subjects_only_unfused():
    text = "A is near B. C serves food."
    beam = RuleFuser().fuse(text, 10, FusionContext(entities=("A", "B", "C")))
    assert [h.text for h in beam] == [text]
    assert beam[0].backend_score == 0.0


def test_rules_no_entity_context_only_unfused():
    beam = RuleFuser().fuse(EAGLE, 10)
    assert [h.text for h in beam] == [EAGLE]


def test_rules_scores_descend_and_input_is_last():
    beam = RuleFuser().fuse(EAGLE, 10, EAGLE_CONTEXT)
    scores = [h.backend_score for h in beam]
    assert scores == sorted(scores, reverse=True)
    assert beam[-1].text == EAGLE
    assert beam[-1].backend_score == 0.0


def test_rules_beam_truncation():
    full = RuleFuser().fuse(EAGLE, 10, EAGLE_CONTEXT)
    assert len(full) == 4  # coordination, relative, apposition, unfused
    top_two = RuleFuser().fuse(EAGLE, 2, EAGLE_CONTEXT)
    assert [h.text for h in top_two] == [h.text for h in full[:2]]


def test_rules_only_touch_the_last_two_sentences():
    text = "The Eagle serves English food. " + EAGLE
    beam = RuleFuser().fuse(text, 10, EAGLE_CONTEXT)
    fused = [h.text for h in beam if h.text != text]
    assert fused
    for candidate in fused:
        assert candidate.startswith("The Eagle serves English food. ")


def test_rules_longest_leading_entity_wins():
    # "The Eagle Nest" must not be mistaken for its prefix entity "The Eagle"
    context = FusionContext(entities=("The Eagle", "The Eagle Nest"))
    text = "The Eagle Nest is old. The Eagle Nest is a pub."
    texts = [h.text for h in RuleFuser().fuse(text, 10, context)]
    assert "The Eagle Nest is old, and is a pub." in texts


@pytest.mark.parametrize("text,context", [
    (ANDERS, ANDERS_CONTEXT),
    (EAGLE, EAGLE_CONTEXT),
    ("Zizzi is a pub. Zizzi is family friendly.", FusionContext(entities=("Zizzi",))),
    ("A b c. A d e. A f g.", FusionContext(entities=("A",))),
])
def test_rules_never_hallucinate(text, context):
    allowed = {t.surface for t in tokenize(text)} | RULE_WORDS | set(PUNCTUATION)
    for hypothesis in RuleFuser().fuse(text, 10, context):
        assert {t.surface for t in tokenize(hypothesis.text)} <= allowed


def test_remote_fuse_round_trip(stub_server):
    def handler(payload):
        assert payload == {"text": "A. B.", "beam_size": 3}
        return 200, {"hypotheses": [
            {"text": "A and B.", "score": 0.2},
            {"text": "A, B.", "score": 0.7},
        ]}

    stub_server.route("/fuse", handler)
    beam = RemoteFuser(stub_server.url).fuse("A. B.", 3)
    # client re-sorts by score descending regardless of wire order
    assert [(h.text, h.backend_score) for h in beam] == [("A, B.", 0.7), ("A and B.", 0.2)]


def test_remote_fuse_respects_beam_bound(stub_server):
    stub_server.route("/fuse", lambda p: (200, {"hypotheses": [
        {"text": f"h{i}.", "score": 1.0 - i / 10} for i in range(3)
    ]}))
    assert len(RemoteFuser(stub_server.url).fuse("A. B.", 3)) == 3
    with pytest.raises(ProtocolError, match="exceed beam size 2"):
        RemoteFuser(stub_server.url).fuse("A. B.", 2)


def test_remote_fuse_rejects_empty_hypothesis(stub_server):
    stub_server.route("/fuse", lambda p: (200, {"hypotheses": [{"text": " ", "score": 0.5}]}))
    with pytest.raises(ProtocolError, match="empty hypothesis"):
        RemoteFuser(stub_server.url).fuse("A. B.", 10)


def test_remote_fuse_rejects_malformed_payload(stub_server):
    stub_server.route("/fuse", lambda p: (200, {"wrong": []}))
    with pytest.raises(ProtocolError, match="bad /fuse response"):
        RemoteFuser(stub_server.url).fuse("A. B.", 10)


def test_remote_fuse_rejects_bad_score_type(stub_server):
    stub_server.route("/fuse", lambda p: (200, {"hypotheses": [{"text": "x.", "score": "high"}]}))
    with pytest.raises(ProtocolError, match="score"):
        RemoteFuser(stub_server.url).fuse("A. B.", 10)


def test_remote_fuse_transport_error(dead_endpoint):
    with pytest.raises(TransportError):
        RemoteFuser(dead_endpoint, timeout=2.0).fuse("A. B.", 10)


def test_remote_fuse_validates_input_before_network(dead_endpoint):
    with pytest.raises(ValueError, match="empty input"):
        RemoteFuser(dead_endpoint).fuse("  ", 10)
