"""Metric transforms F(X) = (X, F o d_X, m_X) of spaces, chains and indexed families."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FiniteMMSpace, dominates_bruteforce, validate_space, verify_lipschitz_cert
from .errors import BudgetExceeded, MetricViolation, NotNondecreasing, SpaceError
from .mpf import MPFamily, MPFunction


@dataclass(frozen=True, eq=False)
class TransformRecord:
    source: FiniteMMSpace
    function: MPFunction
    result: FiniteMMSpace


def transform_space(X: FiniteMMSpace, F: MPFunction) -> FiniteMMSpace:
    """Apply F entrywise to the distance matrix; weights and labels are kept as they are."""
    d = np.asarray(F(X.dist), dtype=float)
    np.fill_diagonal(d, 0.0)
    try:
        Y = validate_space(d, X.weights, labels=X.labels)
    except SpaceError as exc:
        raise MetricViolation(f"{getattr(F, 'name', F)} broke the metric axioms: {exc}") from exc
    # validate_space copies; hand back the very same weight values
    return FiniteMMSpace(labels=Y.labels, dist=Y.dist, weights=X.weights)


def transform_record(X: FiniteMMSpace, F: MPFunction) -> TransformRecord:
    return TransformRecord(X, F, transform_space(X, F))


def transform_pyramid(P, F: MPFunction):
    """Transform every chain element; refuses functions that are not nondecreasing.

    Each stored witness is re-verified on the transformed spaces.  Should one
    fail, a new witness is searched for by brute force before giving up.
    """
    from .pyramids import PyramidApprox

    if not F.nondecreasing:
        raise NotNondecreasing(f"{getattr(F, 'name', F)} is not nondecreasing")
    chain = [transform_space(X, F) for X in P.chain]
    witnesses = []
    for m, f in enumerate(P.witnesses):
        big, small = chain[m + 1], chain[m]
        if verify_lipschitz_cert(big, small, f):
            witnesses.append(np.asarray(f))
            continue
        try:
            g = dominates_bruteforce(big, small)
        except BudgetExceeded:
            g = None
        if g is None:
            raise MetricViolation(f"domination witness {m} does not survive the transform")
        witnesses.append(g)
    return PyramidApprox(chain, witnesses)


def transform_family(Xs, fam: MPFamily):
    """Apply each member of the family to the space with the same index."""
    return [(n, transform_space(X, fam(n))) for n, X in Xs]
