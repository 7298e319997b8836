import itertools

import pytest

from crtool.classify import VERDICTS, Verdict, classify
from crtool.domains import BadDimensions, DomainModel
from crtool.suite import classify_table, golden_cases, models_in_range


@pytest.mark.parametrize(
    "n_plus,verdict",
    [(4, "RegularityGuaranteed"), (3, "RegularityGuaranteed"), (5, "NoTransversalMap"), (2, "CounterexampleRegime")],
)
def test_kind_I_3_3(n_plus, verdict):
    assert classify("I", 3, 3, n_plus).value == verdict


def test_kind_I_symmetric_in_m_n():
    for m, n in itertools.product(range(2, 6), repeat=2):
        for k in range(m + n + 1):
            assert classify("I", m, n, k) == classify("I", n, m, k)


@pytest.mark.parametrize("model", models_in_range(), ids=lambda m: m.label)
def test_total(model):
    n = model.n if model.kind == "I" else None
    for k, t, mi in itertools.product(range(model.ambient_dim), (True, False), (True, False)):
        v = classify(model.kind, model.m, n, k, t, mi)
        assert v.value in VERDICTS
        if v.value != "OutsideTheorem":
            assert v.citation
        if model.kind in ("IV", "Tube"):
            assert v.value != "CounterexampleRegime"
        else:
            assert v.value != "DichotomyRegime"


def test_flags_ignored_for_matrix_kinds():
    for k in range(6):
        verdicts = {classify("II", 5, None, k, t, mi) for t in (True, False) for mi in (True, False)}
        assert len(verdicts) == 1


def test_no_map_above_target_count():
    for model in models_in_range():
        n = model.n if model.kind == "I" else None
        assert classify(model.kind, model.m, n, model.expected_positive + 1).value == "NoTransversalMap"


def test_kind_IV_dichotomy():
    assert classify("IV", 4, None, 2, transversal=False).value == "DichotomyRegime"
    assert classify("IV", 4, None, 2, minimal=False).value == "OutsideTheorem"
    assert classify("Tube", 5, None, 1, transversal=False).value == "DichotomyRegime"


@pytest.mark.parametrize(
    "args",
    [("I", 3, 3, -1), ("I", 1, 3, 0), ("II", 3, None, 0), ("IV", 4, None, 1.5), ("III", 3, None, True), ("V", 3, None, 0)],
)
def test_bad_inputs(args):
    with pytest.raises(BadDimensions):
        classify(*args)


def test_verdict_validation():
    with pytest.raises(ValueError):
        Verdict("Maybe", "x")
    with pytest.raises(ValueError):
        Verdict("RegularityGuaranteed", "")
    assert Verdict("OutsideTheorem", "").to_json() == {"verdict": "OutsideTheorem", "citation": ""}


def test_golden_table():
    cases = golden_cases()
    assert len(cases) >= 50
    for c in cases:
        got = classify(c["kind"], c["m"], c.get("n"), c["n_plus"], c.get("transversal", True), c.get("minimal", True))
        assert got.value == c["verdict"], c
    import json

    assert classify_table(cases) == json.dumps(cases, sort_keys=True)


def test_golden_covers_every_verdict():
    assert {c["verdict"] for c in golden_cases()} == set(VERDICTS)


def test_expected_positive_used_for_tube():
    assert DomainModel("Tube", 5).expected_positive == 3
    assert classify("Tube", 5, None, 3).value == "RegularityGuaranteed"
