import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmgeo.errors import ImplicationViolation, InconclusiveTrend
from mmgeo.mpf import (
    ConditionReport,
    PiecewiseLinear,
    Verdict,
    builtin,
    classify_family,
    family,
    load_function,
    monotone_defect,
    pointwise_limit_probe,
    validate_mpf,
)

import oracles

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("name", ["identity", "min", "ratio", "sqrt", "drop", "sine_ratio"])
def test_catalog_members_are_metric_preserving(name):
    assert validate_mpf(builtin(name)).holds("metric_preserving")


def test_chordal_is_metric_preserving_but_not_increasing():
    r = validate_mpf(builtin("chordal", r=3.0))
    assert r.holds("metric_preserving") and r.holds("nondecreasing") and not r.holds("increasing")


def test_square_is_rejected():
    r = validate_mpf(builtin("square"))
    assert not r.holds("metric_preserving") and not r.holds("subadditive")


def test_nonzero_at_origin_is_rejected():
    F = PiecewiseLinear([0.0, 1.0], [0.5, 1.0])
    r = validate_mpf(F)
    assert not r.holds("zero") and not r.holds("metric_preserving")


def test_vanishing_away_from_origin_is_rejected():
    F = PiecewiseLinear([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 0.0, 1.0])
    r = validate_mpf(F)
    assert not r.holds("vanishing_only_at_0") and not r.holds("metric_preserving")


def test_nonmonotone_but_metric_preserving():
    # a dip that stays above half the supremum keeps every triangle
    F = PiecewiseLinear([0.0, 1.0, 2.0, 2.5, 3.0], [0.0, 1.0, 1.0, 0.6, 1.0])
    r = validate_mpf(F)
    assert r.holds("metric_preserving") and not r.holds("nondecreasing")
    assert r.label == "exact"


def test_monotone_defect():
    F = builtin("drop")  # rises to 2 at s = 2, settles at 1 from s = 3
    assert monotone_defect(F, 2.0) == pytest.approx(1.0)
    assert monotone_defect(F, 1.0) == pytest.approx(0.0)
    assert monotone_defect(F, 5.0) == pytest.approx(0.0)
    assert np.all(monotone_defect(builtin("min"), np.linspace(0, 9, 50)) == 0)


def test_pl_json_roundtrip():
    F = PiecewiseLinear([0.0, 1.0, 2.0], [0.0, 1.5, 1.0], "linear", 0.25)
    G = load_function(json.dumps(F.to_dict()))
    s = np.linspace(0, 10, 101)
    assert np.array_equal(F(s), G(s))
    assert load_function({"builtin": "chordal", "params": {"r": 2.0}})(np.pi * 2.0) == pytest.approx(4.0)


def test_bad_pl_definitions():
    with pytest.raises(ValueError):
        PiecewiseLinear([0.5, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        PiecewiseLinear([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(KeyError):
        builtin("nope")


@pytest.mark.parametrize(
    "name, held",
    [
        ("notch", {"a": True, "i": False, "ii": True, "b": True, "iii": True, "d": False}),
        ("late_bump", {"a": True, "i": False, "ii": False, "b": True, "iii": True, "c": False}),
        ("late_drop", {"a": True, "i": False, "ii": False, "b": False, "iii": True, "c": True}),
        ("identity", {"a": True, "i": True, "ii": True, "b": True, "iii": True, "c": True, "d": True}),
    ],
)
def test_named_families(name, held):
    r = classify_family(family(name))
    for k, v in held.items():
        assert r.holds(k) is v, (name, k)


def test_chordal_family_meets_a_b_d():
    r = classify_family(family("chordal", lam=1.0, exponent=0.5, ns=(1, 2, 5, 10, 50, 100, 1000, 10_000)))
    assert all(r.holds(k) for k in ("a", "b", "d"))


def test_chain_check_raises_on_a_broken_implication():
    v = {k: Verdict(True) for k in ("i", "b", "iii")}
    v["ii"] = Verdict(False)
    with pytest.raises(ImplicationViolation):
        ConditionReport(v).check_chain()
    ConditionReport(v, info={"chain_applies": False}).check_chain()


def test_pointwise_probe_detects_inverse_instability():
    # late_drop dips back to 1 at s = n + 3 while the limit equals 2 from s = 2 on
    res = pointwise_limit_probe(family("late_drop"), [(lambda n: 2.5, 2.5), (lambda n: n + 2.0, 2.0)])
    assert res[0].verdict == "consistent"
    assert res[1].verdict == "inverse-stability violated"


@settings(max_examples=40)
@given(seeds)
def test_corpus_members_are_metric_preserving(seed):
    fam, _ = oracles.random_pl_family(np.random.default_rng(seed))
    for n in (1, 3, 50):
        assert validate_mpf(fam(n)).holds("metric_preserving")
    assert validate_mpf(fam.limit).holds("nondecreasing")


@settings(max_examples=60)
@given(seeds)
def test_chain_holds_on_random_families(seed):
    fam, info = oracles.random_pl_family(np.random.default_rng(seed))
    try:
        r = classify_family(fam)
    except InconclusiveTrend:
        return
    held = [r.holds(k) for k in ("i", "ii", "b", "iii")]
    assert all(r or not l for l, r in zip(held, held[1:])), (info, held)
