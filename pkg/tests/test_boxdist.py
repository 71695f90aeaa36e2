import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmgeo.boxdist import (
    ParameterAlignment,
    box_estimate,
    box_exact,
    box_lower_dd,
    box_oracle_tiny,
    box_refinement_bound,
    box_upper_from_alignment,
    box_upper_from_cert,
    map_cert,
)
from mmgeo.core import EpsMMIsoCert, one_point, uniform_space, validate_space, verify_mm_iso_cert
from mmgeo.errors import CertRejected, InvalidAlignment, TooLarge
from mmgeo.models import two_point

import oracles

seeds = st.integers(0, 2**32 - 1)


def test_identical_spaces_are_at_zero():
    X = validate_space([[0, 1, 3], [1, 0, 2], [3, 2, 0]], [0.2, 0.3, 0.5])
    br = box_estimate(X, X)
    assert br.lower == 0.0 and br.upper == 0.0


def test_two_point_spaces():
    # one pair of the four kept pairs is off by |s - t|, or half the mass goes
    a, b = two_point(1.0), two_point(1.3)
    assert box_exact(a, b) == pytest.approx(0.3)
    a, b = two_point(1.0), two_point(3.0)
    assert box_exact(a, b) == pytest.approx(0.5)
    assert box_exact(one_point(), two_point(0.2)) == pytest.approx(0.2)


@settings(max_examples=40)
@given(seeds)
def test_sandwich_on_tiny_uniform_pairs(seed):
    g = np.random.default_rng(seed)
    X, Y, q = oracles.tiny_uniform_pair(g)
    truth = box_oracle_tiny(X, Y, q)
    br = box_estimate(X, Y, budget=300, seed=seed % 1000)
    assert br.lower - 1e-9 <= truth <= br.upper + 1e-9
    assert box_lower_dd(X, Y) <= truth + 1e-9
    assert truth <= box_refinement_bound(X, Y, q) + 1e-12


@settings(max_examples=30)
@given(seeds)
def test_estimate_is_symmetric(seed):
    g = np.random.default_rng(seed)
    X = oracles.random_space(g, int(g.integers(1, 6)))
    Y = oracles.random_space(g, int(g.integers(1, 6)))
    a, b = box_estimate(X, Y, budget=200), box_estimate(Y, X, budget=200)
    assert (a.lower, a.upper) == (b.lower, b.upper)


@settings(max_examples=30)
@given(seeds)
def test_map_certificates_verify_and_bound(seed):
    g = np.random.default_rng(seed)
    X, Y, f = oracles.perturbed_pair(g)
    cert = map_cert(X, Y, f)
    assert verify_mm_iso_cert(X, Y, cert)
    assert box_upper_from_cert(X, Y, cert) == pytest.approx(3 * cert.eps)
    assert box_estimate(X, Y, budget=300, certs=[cert]).upper <= 3 * cert.eps + 1e-9


def test_bogus_certificate_is_rejected():
    X, Y = two_point(1.0), two_point(2.0)
    with pytest.raises(CertRejected):
        box_upper_from_cert(X, Y, EpsMMIsoCert(np.array([0, 1]), np.array([0, 1]), 0.1))


def test_alignment_checks():
    X, Y = two_point(1.0), two_point(1.2)
    good = ParameterAlignment([0.5, 0.5], [0, 1], [0, 1])
    assert box_upper_from_alignment(X, Y, good) == pytest.approx(0.2)
    assert box_upper_from_alignment(X, Y, good, drop=[1]) == pytest.approx(0.5)
    with pytest.raises(InvalidAlignment):
        box_upper_from_alignment(X, Y, ParameterAlignment([0.7, 0.3], [0, 1], [0, 1]))
    with pytest.raises(InvalidAlignment):
        ParameterAlignment([0.5], [0, 1], [0])
    with pytest.raises(InvalidAlignment):
        box_upper_from_alignment(X, Y, good, drop=[5])
    plan = good.to_plan(2, 2)
    assert np.array_equal(ParameterAlignment.from_plan(plan).to_plan(2, 2), plan)


def test_oracle_limits():
    X = uniform_space(oracles.euclid(np.arange(3.0)[:, None]))
    Y = uniform_space(oracles.euclid(np.arange(4.0)[:, None]))
    with pytest.raises(TooLarge):
        box_oracle_tiny(X, Y, 12)
    with pytest.raises(TooLarge):
        box_oracle_tiny(X, Y, 8)  # 3 does not divide 8


@settings(max_examples=25)
@given(seeds)
def test_reweighting_costs_at_most_twice_prokhorov(seed):
    from mmgeo.probmetrics import prokhorov

    g = np.random.default_rng(seed)
    n = int(g.integers(1, 7))
    X = oracles.random_space(g, n)
    mu, nu = oracles.random_measure(g, n), oracles.random_measure(g, n)
    A, B = validate_space(X.dist, mu), validate_space(X.dist, nu)
    assert box_estimate(A, B, budget=200).upper <= 2 * prokhorov(X.dist, mu, nu) + 1e-6


def test_bracket_to_dict():
    br = box_estimate(two_point(1.0), two_point(1.5), seed=3)
    d = br.to_dict()
    assert set(d) == {"lower", "upper", "method", "seed", "cert"}
    assert d["lower"] <= d["upper"] and br.width >= 0
