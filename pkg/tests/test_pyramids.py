import numpy as np
import pytest

from mmgeo.core import dominates_bruteforce, one_point, uniform_space
from mmgeo.errors import CertRejected
from mmgeo.models import two_point
from mmgeo.mpf import builtin
from mmgeo.pyramids import (
    PyramidApprox,
    build_gaussian_pyramid_approx,
    dist_to_pyramid,
    lipschitz_excess_eps,
    single_linkage_quotients,
    weak_convergence_probe,
)
from mmgeo.transform import transform_pyramid

import oracles


def chain(*ss):
    return PyramidApprox.from_chain([two_point(s) for s in ss])


def test_chain_witnesses_are_checked():
    P = chain(1.0, 2.0, 3.0)
    assert len(P) == 3 and len(P.witnesses) == 2
    with pytest.raises(CertRejected):
        PyramidApprox([two_point(1.0), two_point(2.0)], [np.array([0, 0])])
    with pytest.raises(CertRejected):
        chain(3.0, 1.0)
    with pytest.raises(CertRejected):
        PyramidApprox([two_point(1.0), two_point(2.0)])


def test_json_roundtrip(tmp_path):
    P = chain(0.5, 2.0)
    Q = PyramidApprox.from_json(P.to_json(tmp_path / "p.json"))
    assert all(a == b for a, b in zip(P.chain, Q.chain))
    assert PyramidApprox.from_json(str(tmp_path / "p.json")).to_dict() == P.to_dict()


def test_extended():
    P = chain(1.0).extended(two_point(4.0))
    assert len(P) == 2
    with pytest.raises(CertRejected):
        P.extended(two_point(0.5))


def test_single_linkage_quotients_are_dominated():
    g = np.random.default_rng(0)
    X = uniform_space(oracles.euclid(g.random((7, 2))))
    quotients = single_linkage_quotients(X)
    assert quotients
    for tag, Q in quotients:
        assert tag.startswith("quotient@") and Q.n < X.n
        assert dominates_bruteforce(X, Q) is not None


def test_lipschitz_excess_of_a_contraction_is_zero():
    X, Y = two_point(3.0), two_point(2.0)
    eps, dom = lipschitz_excess_eps(X, Y, np.array([0, 1]))
    assert eps == pytest.approx(0.0) and dom.tolist() == [0, 1]
    # stretching 2 to 3: keep one point (drop mass 1/2) rather than pay the excess 1
    eps, dom = lipschitz_excess_eps(Y, X, np.array([0, 1]))
    assert eps == pytest.approx(0.5) and dom.size == 1


def test_members_and_their_shadows_are_at_zero():
    P = chain(1.0, 2.0, 3.0)
    assert dist_to_pyramid(two_point(3.0), P).upper == 0.0
    assert dist_to_pyramid(two_point(2.5), P).upper == 0.0
    assert dist_to_pyramid(one_point(), P).upper == 0.0


def test_obstruction_after_capping():
    P = chain(0.5, 1.0, 2.0, 3.0, 4.0)
    FP = transform_pyramid(P, builtin("min", c=2.0))
    br = dist_to_pyramid(two_point(2.5), FP)
    assert br.lower >= 0.25 - 1e-12
    assert br.method["lower"].startswith("heuristic")
    assert br.lower <= br.upper


def test_parallel_workers_agree():
    P = chain(0.5, 1.0, 2.0, 3.0)
    probe = uniform_space(oracles.euclid(np.array([[0.0], [1.2], [2.9]])))
    a = dist_to_pyramid(probe, P, seed=4, workers=1)
    b = dist_to_pyramid(probe, P, seed=4, workers=2)
    assert a.to_dict() == b.to_dict()


def test_weak_convergence_verdicts():
    seq = [chain(1.0, s) for s in (2.0, 3.0, 4.0)]
    capped = [transform_pyramid(P, builtin("min", c=2.0)) for P in seq]
    diag = weak_convergence_probe(capped, [two_point(1.5), two_point(2.5)], theta=0.02)
    verdicts = [v["verdict"] for v in diag.verdicts]
    assert verdicts == ["distance -> 0 trend", "bounded away"]
    assert diag.to_dict()["probes"][1]["verdict"]["verdict"] == "bounded away"
    with pytest.raises(ValueError):
        weak_convergence_probe(seq[:2], [two_point(1.0)])


def test_gaussian_chain():
    P = build_gaussian_pyramid_approx(1.0, [1, 2, 4], k=30, seed=1)
    assert len(P) == 3
    assert P.chain[0].diam <= P.chain[2].diam
    Q = build_gaussian_pyramid_approx(1.0, [1, 2], k=20, seed=1, field="C")
    assert len(Q) == 2
    with pytest.raises(ValueError):
        build_gaussian_pyramid_approx(1.0, [2, 1], k=10)
