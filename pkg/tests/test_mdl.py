import math
import random

import pytest

from conceptgraph.core import Concat, ConceptGraph, Repeat
from conceptgraph.errors import (
    InvalidDescription,
    NonPositive,
    ReconstructionMismatch,
    UnknownConcept,
)
from conceptgraph.inducer import Blob, Description, Ref, ingest, parse
from conceptgraph.mdl import (
    DLReport,
    attention,
    blob_cost,
    description_dl,
    escape_cost,
    gamma_len,
    kraft_sum,
    model_dl,
    raw_dl,
    ref_cost,
)


def test_gamma_len_values():
    assert gamma_len(1) == 1
    assert gamma_len(5) == 5
    assert gamma_len(16) == 9
    with pytest.raises(NonPositive):
        gamma_len(0)


def test_raw_dl_values():
    assert raw_dl(4, 2) == pytest.approx(9.0)
    assert raw_dl(0, 7) == pytest.approx(1.0)
    assert raw_dl(3, 4) == pytest.approx(11.0)


def test_ref_and_escape_cost_single_concept():
    g = ConceptGraph("a")  # one expanding concept, w = 1
    assert ref_cost(g, 0) == pytest.approx(-math.log2(2 / 3), abs=1e-9)
    assert escape_cost(g) == pytest.approx(-math.log2(1 / 3), abs=1e-9)
    with pytest.raises(UnknownConcept):
        ref_cost(g, g.pleasure_id)


def test_ref_cost_decreases_with_weight():
    g = ConceptGraph("ab")
    previous = ref_cost(g, 0)
    for _ in range(6):
        g.set_weight(0, g.concepts[0].weight * 2)
        current = ref_cost(g, 0)
        assert current < previous
        previous = current


def test_blob_cost_formula_and_monotonicity():
    g = ConceptGraph("a")  # W = 1, N = 1
    assert blob_cost(g, 2, sigma_size=2) == pytest.approx(math.log2(3) + 3 + 2)
    assert blob_cost(g, 1, sigma_size=1) == pytest.approx(escape_cost(g) + 1)
    for length in range(1, 8):
        assert blob_cost(g, 2 * length) > blob_cost(g, length)


def test_description_dl_single_ref():
    g = ConceptGraph("a")
    expected = gamma_len(2) + ref_cost(g, 0)
    assert description_dl(g, Description((Ref(0),))) == pytest.approx(expected)


def test_description_dl_empty_and_blob():
    g = ConceptGraph("ab")
    assert description_dl(g, Description(())) == pytest.approx(1.0)
    d = Description((Blob(("a", "b")),))
    expected = gamma_len(2) + blob_cost(g, 2)
    assert description_dl(g, d) == pytest.approx(expected)


def test_description_dl_rejects_bad_nodes():
    g = ConceptGraph("ab")
    with pytest.raises(InvalidDescription):
        description_dl(g, Description((Ref(g.pleasure_id),)))
    with pytest.raises(InvalidDescription):
        description_dl(g, Description((Blob(()),)))


def test_model_dl_fresh_graph_is_zero():
    assert model_dl(ConceptGraph("abcd")) == 0.0


def test_model_dl_concat_plugs_current_code_state():
    g = ConceptGraph("ab")
    g.add(Concat((0, 1)))
    # two children coded at the post-add state
    expected = 2 + gamma_len(2) + ref_cost(g, 0) + ref_cost(g, 1)
    assert model_dl(g) == pytest.approx(expected)


def test_model_dl_strictly_increases_per_concept():
    g = ConceptGraph("ab")
    previous = model_dl(g)
    for kind in (Concat((0, 1)), Repeat(0, 3), Concat((1, 0))):
        g.add(kind)
        current = model_dl(g)
        assert current > previous
        previous = current


def test_attention_is_raw_minus_described():
    g = ConceptGraph("ab")
    tokens = ("a", "b")
    desc = parse(g, tokens)
    value = attention(g, tokens, desc)
    assert value == pytest.approx(raw_dl(2, 2) - description_dl(g, desc))


def test_attention_checks_reconstruction():
    g = ConceptGraph("ab")
    with pytest.raises(ReconstructionMismatch):
        attention(g, ("a", "b"), Description((Ref(0),)))


def test_attention_negative_for_all_blob():
    g = ConceptGraph("ab")
    tokens = tuple("abba")
    assert attention(g, tokens, Description((Blob(tokens),))) < 0


def test_attention_invariant_under_symbol_renaming():
    mapping = {"a": "x", "b": "y"}
    episodes = ["abab", "aabb", "ab" * 20]
    g1 = ConceptGraph("ab")
    g2 = ConceptGraph("xy")
    for ep in episodes:
        ingest(g1, ep)
        ingest(g2, "".join(mapping[t] for t in ep))
    probe = "abab"
    renamed = "".join(mapping[t] for t in probe)
    a1 = attention(g1, tuple(probe), parse(g1, probe))
    a2 = attention(g2, tuple(renamed), parse(g2, renamed))
    assert a1 == pytest.approx(a2, abs=1e-9)


def test_kraft_sum_is_exactly_one():
    rng = random.Random(3)
    for _ in range(100):
        sigma = "abcdefgh"[: rng.randint(1, 3)]
        g = ConceptGraph(sigma)
        for _ in range(rng.randint(0, 6)):
            ids = g.parseable_ids()
            g.add(Concat((rng.choice(ids), rng.choice(ids))))
        for c in g.concepts:
            g.set_weight(c.id, rng.random() * 10)
        assert kraft_sum(g) <= 1 + 1e-9
        assert kraft_sum(g) == pytest.approx(1.0, abs=1e-9)


def test_report_formatting_nine_decimals():
    report = DLReport(raw_bits=9.0, described_bits=3.5, model_bits=0.0)
    text = report.as_text()
    assert "raw_bits: 9.000000000" in text
    assert "attention: 5.500000000" in text
