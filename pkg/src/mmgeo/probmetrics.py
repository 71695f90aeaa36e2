"""Exact Prokhorov distance and Ky Fan metric on finite spaces.

The Prokhorov distance is decided through transport feasibility: for a
threshold ``t`` let ``g(t)`` be one minus the largest mass that can be moved
from ``mu`` to ``nu`` along pairs at distance at most ``t``.  Because the
ball in the definition is open, a value ``eps`` is feasible iff
``g(t) <= eps`` for the largest distance ``t < eps``.  ``g`` is a
nonincreasing step function of ``t``, so the infimum sits either at a
pairwise distance or at one of the deficits ``g`` takes, and a binary
search over the sorted distances finds it exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch

MASS_TOL = 1e-9
_ZERO = 1e-13
_ENUMERATE_LIMIT = 4_000_000


def _prob(v, name):
    v = np.asarray(v, dtype=float).ravel()
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be a nonnegative finite vector")
    return v


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint mass on pairs (i, j); rows follow the first measure, columns the second."""

    plan: np.ndarray

    def check(self, mu, nu, tol=MASS_TOL):
        p = self.plan
        return bool(
            np.all(p >= -tol)
            and np.allclose(p.sum(axis=1), mu, atol=tol, rtol=0)
            and np.allclose(p.sum(axis=0), nu, atol=tol, rtol=0)
        )

    def mass_within(self, dist, t):
        return float(self.plan[dist <= t].sum())


@dataclass(frozen=True, eq=False)
class WeightedDeviation:
    """Deviation values d(f(x), g(x)) with the mass of x."""

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        m = np.asarray(self.masses, dtype=float).ravel()
        if v.shape != m.shape:
            raise DimensionMismatch("values and masses differ in length")
        if np.any(v < 0) or np.any(m < 0):
            raise ValueError("deviations and masses must be nonnegative")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {m.sum()!r}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_maps(cls, mu, f, g, dist):
        f = np.asarray(f, dtype=np.int64)
        g = np.asarray(g, dtype=np.int64)
        return cls(np.asarray(dist)[f, g], mu)


# ------------------------------------------------------------------ general finite spaces

def _flow(dist, mu, nu, t):
    value, plan = _kernels.bipartite_maxflow(dist <= t, mu, nu)
    return value, plan


def _deficit_search(ts, deficit):
    """min over the sorted candidates of the exact infimum.

    ``deficit(k)`` is 1 - (max flow over pairs at distance <= ts[k]).
    Let k* be the first index with ts[k] >= deficit(k); the infimum is
    ts[k*] when k* = 0 and min(ts[k*], deficit(k*-1)) otherwise.
    """
    cache = {}

    def g(k):
        if k not in cache:
            v = deficit(k)
            cache[k] = 0.0 if v < _ZERO else v
        return cache[k]

    lo, hi = 0, len(ts) - 1
    if ts[hi] < g(hi):  # only when the measures have different total mass
        return min(1.0, g(hi)), hi
    while lo < hi:
        mid = (lo + hi) // 2
        if ts[mid] >= g(mid):
            hi = mid
        else:
            lo = mid + 1
    if lo == 0:
        return float(ts[0]), 0
    return float(min(ts[lo], g(lo - 1))), (lo if ts[lo] <= g(lo - 1) else lo - 1)


def prokhorov_flow(dist, mu, nu):
    """Exact Prokhorov distance with the transport behind it.

    Returns ``(value, t, flow)`` where ``flow`` is a partial coupling living on
    pairs at distance at most ``t <= value`` and carrying mass at least
    ``1 - value``.
    """
    d = np.asarray(dist, dtype=float)
    mu = _prob(mu, "mu")
    nu = _prob(nu, "nu")
    n = mu.shape[0]
    if d.shape != (n, n) or nu.shape[0] != n:
        raise DimensionMismatch(f"metric {d.shape} vs measures {mu.shape}, {nu.shape}")
    rows = np.flatnonzero(mu > 0)
    cols = np.flatnonzero(nu > 0)
    sub = np.ascontiguousarray(d[np.ix_(rows, cols)])
    a, b = mu[rows], nu[cols]
    ts = np.unique(np.concatenate([[0.0], sub.ravel()]))

    def deficit(k):
        return 1.0 - _flow(sub, a, b, ts[k])[0]

    value, k = _deficit_search(ts, deficit)
    _, part = _flow(sub, a, b, ts[k])
    flow = np.zeros((n, n))
    flow[np.ix_(rows, cols)] = part
    return min(value, 1.0), float(ts[k]), flow


def prokhorov_with_coupling(dist, mu, nu):
    """Exact Prokhorov distance and a coupling realizing it.

    The coupling is the optimal partial transport completed by the product
    of the leftover masses.
    """
    value, _, flow = prokhorov_flow(dist, mu, nu)
    mu = _prob(mu, "mu")
    nu = _prob(nu, "nu")
    ra = np.maximum(mu - flow.sum(axis=1), 0.0)
    rb = np.maximum(nu - flow.sum(axis=0), 0.0)
    left = ra.sum()
    plan = flow + np.outer(ra, rb) / left if left > 0 else flow
    return value, Coupling(plan)


def prokhorov(dist, mu, nu) -> float:
    """Exact Prokhorov distance between two measures on one finite metric space."""
    return prokhorov_with_coupling(dist, mu, nu)[0]


def prokhorov_between(dist_xy, mu, nu) -> float:
    """Prokhorov distance given only the cross distances between the two supports.

    ``dist_xy[i, j]`` is the distance from atom i of ``mu`` to atom j of ``nu``;
    both measures must live in a common metric space for this to be meaningful.
    """
    sub = np.ascontiguousarray(np.asarray(dist_xy, dtype=float))
    a, b = _prob(mu, "mu"), _prob(nu, "nu")
    ts = np.unique(np.concatenate([[0.0], sub.ravel()]))
    value, _ = _deficit_search(ts, lambda k: 1.0 - _flow(sub, a, b, ts[k])[0])
    return min(value, 1.0)


# ------------------------------------------------------------------ measures on the real line

def _line_prepare(x, mu):
    x = np.asarray(x, dtype=float).ravel()
    mu = _prob(mu, "mu")
    if x.shape != mu.shape:
        raise DimensionMismatch("atoms and masses differ in length")
    keep = mu > 0
    x, mu = x[keep], mu[keep]
    order = np.argsort(x, kind="stable")
    return np.ascontiguousarray(x[order]), np.ascontiguousarray(mu[order])


def prokhorov_line(x, mu, y, nu) -> float:
    """Exact Prokhorov distance between two atomic measures on the real line.

    Same threshold structure as :func:`prokhorov`, with the flow replaced by
    a greedy sweep.  When the number of candidate distances is too large to
    sort, the threshold is located by bisection over the reals instead
    (exact up to floating-point resolution).
    """
    x, mu = _line_prepare(x, mu)
    y, nu = _line_prepare(y, nu)

    def moved(t):
        return _kernels.line_transport(x, mu, y, nu, t)

    if x.shape[0] * y.shape[0] <= _ENUMERATE_LIMIT:
        ts = np.unique(np.concatenate([[0.0], np.abs(x[:, None] - y[None, :]).ravel()]))
        value, _ = _deficit_search(ts, lambda k: 1.0 - moved(ts[k]))
        return min(value, 1.0)
    # eps is feasible iff the deficit over distances strictly below eps is <= eps
    lo, hi = 0.0, 1.0
    if 1.0 - moved(0.0) < _ZERO:
        return 0.0
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if 1.0 - moved(np.nextafter(mid, 0.0)) <= mid:
            hi = mid
        else:
            lo = mid
    return hi


# ------------------------------------------------------------------ Ky Fan

def ky_fan(dev: WeightedDeviation) -> float:
    """Smallest eps >= 0 with mass{deviation > eps} <= eps."""
    v = dev.values
    m = dev.masses
    order = np.argsort(v, kind="stable")
    v, m = v[order], m[order]
    uniq, start = np.unique(v, return_index=True)
    # mass strictly above each distinct value, summed from the top to avoid cancellation
    suffix = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
    above = suffix[np.append(start[1:], v.shape[0])]
    cands = np.concatenate([[0.0], uniq])
    tails = np.concatenate([[suffix[start[0]] if uniq[0] > 0 else above[0]], above])
    return float(np.min(np.maximum(cands, tails)))


def prok_dominates_kyfan_check(mu, f, g, dist):
    """(Prokhorov of the two pushforwards, Ky Fan distance of the maps).

    ``f`` and ``g`` map the atoms of ``mu`` to points of the metric space
    ``dist``.  The first entry never exceeds the second.
    """
    mu = _prob(mu, "mu")
    dist = np.asarray(dist, dtype=float)
    m = dist.shape[0]
    fm = np.bincount(np.asarray(f), weights=mu, minlength=m)
    gm = np.bincount(np.asarray(g), weights=mu, minlength=m)
    return prokhorov(dist, fm, gm), ky_fan(WeightedDeviation.from_maps(mu, f, g, dist))
