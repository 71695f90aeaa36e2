"""Box distance between finite mm-spaces.

Nothing here computes the box distance of large spaces exactly.  What is
available:

* sound upper bounds from explicit parameter alignments, couplings and
  eps-mm-isomorphism certificates (``3 * eps``);
* a sound lower bound from the distance distributions;
* :func:`box_exact`, an exact value for spaces with few point pairs.

For a set ``S`` of point pairs, let ``flow(S)`` be the largest mass of a
partial coupling living on ``S`` and ``dis(S)`` the largest
``|d_X(x, x') - d_Y(y, y')|`` over pairs in ``S``.  Laying the coupling out
on the unit interval turns it into two parameters, and keeping exactly the
mass on ``S`` shows ``box <= max(1 - flow(S), dis(S))``; conversely every
admissible pair of parameters induces such an ``S``.  The exact value is
therefore the minimum over ``S``, which :func:`box_exact` finds by a binary
search over distortion thresholds and maximal cliques of the compatibility
graph.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from . import _kernels
from .core import (
    METRIC_TOL,
    EpsMMIsoCert,
    FiniteMMSpace,
    distance_distribution,
    pushforward,
    verify_mm_iso_cert,
)
from .errors import CertRejected, InvalidAlignment, TooLarge
from .probmetrics import prokhorov, prokhorov_flow, prokhorov_line
from .rng import stream

CLIQUE_LIMIT = 62
PLAN_TOL = 1e-15


# ------------------------------------------------------------------ alignments

@dataclass(frozen=True, eq=False)
class ParameterAlignment:
    """Consecutive intervals of [0, 1) with the X-point and Y-point each one carries."""

    lengths: np.ndarray
    x_idx: np.ndarray
    y_idx: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float).ravel()
        xi = np.asarray(self.x_idx, dtype=np.int64).ravel()
        yi = np.asarray(self.y_idx, dtype=np.int64).ravel()
        if not (lengths.shape == xi.shape == yi.shape):
            raise InvalidAlignment("lengths, x_idx and y_idx must have equal length")
        if np.any(lengths < 0):
            raise InvalidAlignment("negative interval length")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "x_idx", xi)
        object.__setattr__(self, "y_idx", yi)

    def __len__(self):
        return self.lengths.shape[0]

    def check(self, X: FiniteMMSpace, Y: FiniteMMSpace):
        if len(self) == 0:
            raise InvalidAlignment("empty alignment")
        if self.x_idx.min() < 0 or self.x_idx.max() >= X.n or self.y_idx.min() < 0 or self.y_idx.max() >= Y.n:
            raise InvalidAlignment("point index out of range")
        for side, idx, sp in (("X", self.x_idx, X), ("Y", self.y_idx, Y)):
            got = np.bincount(idx, weights=self.lengths, minlength=sp.n)
            if np.abs(got - sp.weights).max() > METRIC_TOL:
                raise InvalidAlignment(f"interval lengths do not reproduce the {side} weights")

    @classmethod
    def from_plan(cls, plan):
        plan = np.asarray(plan, dtype=float)
        xi, yi = np.nonzero(plan > PLAN_TOL)
        return cls(plan[xi, yi], xi, yi)

    def to_plan(self, nx_, ny_):
        plan = np.zeros((nx_, ny_))
        np.add.at(plan, (self.x_idx, self.y_idx), self.lengths)
        return plan

    def to_dict(self):
        return {"lengths": self.lengths.tolist(), "x_idx": self.x_idx.tolist(), "y_idx": self.y_idx.tolist()}


def _drop_mask(drop, size):
    mask = np.zeros(size, dtype=bool)
    if drop is None:
        return mask
    d = np.asarray(drop)
    if d.dtype == bool:
        if d.shape != (size,):
            raise InvalidAlignment("drop mask has the wrong length")
        return d.copy()
    if d.size and (d.min() < 0 or d.max() >= size):
        raise InvalidAlignment("dropped interval index out of range")
    mask[d.astype(np.int64)] = True
    return mask


def box_upper_from_alignment(X: FiniteMMSpace, Y: FiniteMMSpace, align: ParameterAlignment, drop=None) -> float:
    """max(dropped length, largest distortion between kept intervals)."""
    align.check(X, Y)
    dropped = _drop_mask(drop, len(align))
    keep = ~dropped
    worst = float(align.lengths[dropped].sum())
    xi, yi = align.x_idx[keep], align.y_idx[keep]
    if xi.size:
        dis = np.abs(X.dist[np.ix_(xi, xi)] - Y.dist[np.ix_(yi, yi)]).max()
        worst = max(worst, float(dis))
    return worst


def box_upper_from_cert(X: FiniteMMSpace, Y: FiniteMMSpace, cert: EpsMMIsoCert) -> float:
    if not verify_mm_iso_cert(X, Y, cert):
        raise CertRejected("certificate does not verify")
    return 3.0 * cert.eps


# ------------------------------------------------------------------ best kept set for a coupling

def _threshold_search(ts, solve, objective):
    """Binary search for the first threshold not below the dropped mass.

    ``solve(t)`` returns a kept set; ``objective(keep)`` its (dropped, distortion).
    Returns the best (value, keep) seen, which is exact when ``solve`` is.
    """
    best = (math.inf, None)
    seen = {}

    def probe(k):
        if k not in seen:
            keep = solve(ts[k])
            dropped, dis = objective(keep)
            seen[k] = dropped
            nonlocal best
            val = max(dropped, dis)
            if val < best[0]:
                best = (val, keep)
        return seen[k]

    lo, hi = 0, len(ts) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ts[mid] >= probe(mid):
            hi = mid
        else:
            lo = mid + 1
    probe(lo)
    if lo > 0:
        probe(lo - 1)
    return best


def coupling_value(dx, dy, xa, ya, w):
    """Best box bound obtainable by keeping part of a coupling.

    Atoms are (xa[i], ya[i]) with mass w[i].  Exact (weighted clique) when
    there are at most 62 atoms, greedy vertex cover otherwise.  Returns
    ``(value, keep_mask)``.
    """
    xa = np.ascontiguousarray(xa, dtype=np.int64)
    ya = np.ascontiguousarray(ya, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=float)
    total = w.sum()
    m = w.shape[0]
    if m == 0:
        return 1.0, np.zeros(0, dtype=bool)
    delta = np.abs(dx[np.ix_(xa, xa)] - dy[np.ix_(ya, ya)])
    ts = np.unique(np.concatenate([[0.0], delta[np.triu_indices(m, 1)]]))

    def objective(keep):
        idx = np.flatnonzero(keep)
        dis = float(delta[np.ix_(idx, idx)].max()) if idx.size else 0.0
        return max(total - w[idx].sum(), 0.0) + (1.0 - total), dis

    if m <= CLIQUE_LIMIT:
        def solve(t):
            _, mask = _kernels.max_weight_clique(delta <= t, w)
            return ((int(mask) >> np.arange(m)) & 1).astype(bool)
    else:
        dxc = np.ascontiguousarray(dx)
        dyc = np.ascontiguousarray(dy)

        def solve(t):
            return _kernels.greedy_keep(dxc, dyc, xa, ya, w, t)

    return _threshold_search(ts, solve, objective)


def plan_value(X: FiniteMMSpace, Y: FiniteMMSpace, plan):
    """Box bound of a coupling matrix, with the alignment that realizes it."""
    align = ParameterAlignment.from_plan(plan)
    val, keep = coupling_value(X.dist, Y.dist, align.x_idx, align.y_idx, align.lengths)
    return val, align, ~keep


# ------------------------------------------------------------------ lower bound

def box_lower_dd(X: FiniteMMSpace, Y: FiniteMMSpace) -> float:
    """Half the Prokhorov distance between the two distance distributions.

    If parameters agree within eps off a set of measure eps, the two distance
    functions on the unit square agree within eps off a set of measure
    ``2 eps - eps**2``, so their laws are within ``2 eps`` in Prokhorov distance.
    """
    a = distance_distribution(X)
    b = distance_distribution(Y)
    return 0.5 * prokhorov_line(a.values, a.masses, b.values, b.masses)


# ------------------------------------------------------------------ exact values on tiny spaces

def box_exact(X: FiniteMMSpace, Y: FiniteMMSpace, max_pairs: int = 36) -> float:
    """Exact box distance by enumerating maximal compatible pair sets."""
    npairs = X.n * Y.n
    if npairs > max_pairs:
        raise TooLarge(f"{npairs} point pairs exceed the limit {max_pairs}")
    px, py = np.divmod(np.arange(npairs), Y.n)
    delta = np.abs(X.dist[np.ix_(px, px)] - Y.dist[np.ix_(py, py)])
    ts = np.unique(delta)
    a, b = X.weights, Y.weights

    def best_flow(t):
        g = nx.Graph()
        g.add_nodes_from(range(npairs))
        iu, ju = np.nonzero(np.triu(delta <= t, 1))
        g.add_edges_from(zip(iu.tolist(), ju.tolist()))
        top = 0.0
        for clique in nx.find_cliques(g):
            allowed = np.zeros((X.n, Y.n), dtype=bool)
            allowed[px[clique], py[clique]] = True
            top = max(top, _kernels.bipartite_maxflow(allowed, a, b)[0])
        return top

    deficit = {}

    def g(k):
        if k not in deficit:
            deficit[k] = max(1.0 - best_flow(ts[k]), 0.0)
        return deficit[k]

    # g is nonincreasing and vanishes at the largest threshold
    lo, hi = 0, len(ts) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ts[mid] >= g(mid):
            hi = mid
        else:
            lo = mid + 1
    value = float(ts[lo]) if lo == 0 else min(float(ts[lo]), g(lo - 1))
    return min(value, 1.0)


def _is_uniform(X):
    return np.abs(X.weights - 1.0 / X.n).max() <= 1e-12


def box_oracle_tiny(X: FiniteMMSpace, Y: FiniteMMSpace, refinement: int) -> float:
    """Ground truth for tiny uniform spaces (see :func:`box_exact`)."""
    if refinement > 8:
        raise TooLarge("refinement above 8")
    if not (_is_uniform(X) and _is_uniform(Y)):
        raise TooLarge("oracle needs uniform weights")
    if refinement % X.n or refinement % Y.n:
        raise TooLarge("space sizes must divide the refinement")
    return box_exact(X, Y)


def _counts(w, q):
    c = np.rint(np.asarray(w) * q).astype(np.int64)
    if np.abs(c / q - w).max() > 1e-9 or c.sum() != q:
        return None
    return c


def box_refinement_bound(X: FiniteMMSpace, Y: FiniteMMSpace, refinement: int) -> float:
    """Best bound over all bijections of ``refinement`` equal intervals.

    Every bijection is reduced to the coupling it induces; each distinct
    coupling is then scored with its optimal dropped set.
    """
    if refinement > 8:
        raise TooLarge("refinement above 8")
    cx, cy = _counts(X.weights, refinement), _counts(Y.weights, refinement)
    if cx is None or cy is None:
        raise TooLarge("weights are not multiples of 1/refinement")
    xa = np.repeat(np.arange(X.n), cx)
    ya = np.repeat(np.arange(Y.n), cy)
    seen = set()
    best = 1.0
    for perm in itertools.permutations(range(refinement)):
        plan = np.zeros((X.n, Y.n), dtype=np.int64)
        np.add.at(plan, (xa, ya[list(perm)]), 1)
        key = plan.tobytes()
        if key in seen:
            continue
        seen.add(key)
        best = min(best, plan_value(X, Y, plan / refinement)[0])
    return best


# ------------------------------------------------------------------ the estimator

@dataclass
class BoxBracket:
    lower: float
    upper: float
    method: dict
    seed: int | None = None
    cert: object = None
    cert_direction: str | None = None

    @property
    def width(self):
        return self.upper - self.lower

    def to_dict(self):
        cert = self.cert.to_dict() if self.cert is not None else None
        if cert is not None and self.cert_direction:
            cert["direction"] = self.cert_direction
        return {"lower": self.lower, "upper": self.upper, "method": dict(self.method), "seed": self.seed, "cert": cert}


def _rational_counts(X, Y, qmax=64):
    dens = []
    for w in np.concatenate([X.weights, Y.weights]):
        fr = Fraction(float(w)).limit_denominator(qmax)
        if abs(float(fr) - w) > 1e-9:
            return None
        dens.append(fr.denominator)
    q = 1
    for d in dens:
        q = q * d // math.gcd(q, d)
        if q > qmax:
            return None
    cx, cy = _counts(X.weights, q), _counts(Y.weights, q)
    if cx is None or cy is None:
        return None
    return q, cx, cy


def _anneal_restart(args):
    dxa, dys, q, iters, seed, r = args
    g = stream(seed, 101, r)
    perm0 = np.arange(q, dtype=np.int64) if r == 0 else g.permutation(q).astype(np.int64)
    drop0 = np.zeros(q, dtype=np.bool_)
    kinds = g.random(iters)
    ia = g.integers(0, q, iters).astype(np.int64)
    ib = g.integers(0, q, iters).astype(np.int64)
    acc = g.random(iters)
    t0, t1 = 0.25, 1e-4
    temps = t0 * (t1 / t0) ** (np.arange(iters) / max(iters - 1, 1))
    return _kernels.anneal_alignment(dxa, dys, perm0, drop0, kinds, ia, ib, acc, temps)


def _anneal(X, Y, q, cx, cy, iters, seed, restarts=8, workers=1):
    xa = np.repeat(np.arange(X.n), cx)
    ya = np.repeat(np.arange(Y.n), cy)
    dxa = np.ascontiguousarray(X.dist[np.ix_(xa, xa)])
    dys = np.ascontiguousarray(Y.dist[np.ix_(ya, ya)])
    jobs = [(dxa, dys, q, iters, seed, r) for r in range(restarts)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(_anneal_restart, jobs))
    else:
        results = [_anneal_restart(j) for j in jobs]
    best = min(range(restarts), key=lambda r: (results[r][0], r))
    val, perm, drop = results[best]
    align = ParameterAlignment(np.full(q, 1.0 / q), xa, ya[perm])
    return float(val), align, drop.astype(bool)


def map_cert(X: FiniteMMSpace, Y: FiniteMMSpace, f, cutoff=math.inf):
    """Smallest eps for which the point map ``f`` is an eps-mm-isomorphism.

    Returns ``None`` when the Prokhorov part alone already reaches ``cutoff``.
    """
    f = np.asarray(f, dtype=np.int64)
    p = prokhorov(Y.dist, pushforward(f, X.weights, Y.n), Y.weights)
    if p >= cutoff:
        return None
    val, keep = coupling_value(X.dist, Y.dist, np.arange(X.n), f, X.weights)
    return EpsMMIsoCert(f, np.flatnonzero(keep), max(p, val))


def _seed_maps(X, Y, g, count):
    """Monotone rearrangement by eccentricity plus a few random maps."""
    ex = X.dist @ X.weights
    ey = Y.dist @ Y.weights
    ox, oy = np.argsort(ex, kind="stable"), np.argsort(ey, kind="stable")
    cx = np.cumsum(X.weights[ox]) - 0.5 * X.weights[ox]
    cumy = np.cumsum(Y.weights[oy])
    f = np.empty(X.n, dtype=np.int64)
    f[ox] = oy[np.minimum(np.searchsorted(cumy, cx), Y.n - 1)]
    maps = [f]
    for _ in range(count):
        maps.append(g.integers(0, Y.n, X.n).astype(np.int64))
    return maps


def best_map_cert(X: FiniteMMSpace, Y: FiniteMMSpace, budget=1024, seed=0, evals=400):
    """Search point maps X -> Y for the smallest certificate eps.

    Exhaustive when ``|Y|**|X| <= budget``, otherwise hill climbing over
    single-point reassignments from seeded starting maps.
    """
    best = None
    if Y.n ** X.n <= budget:
        for f in itertools.product(range(Y.n), repeat=X.n):
            c = map_cert(X, Y, f, best.eps if best else math.inf)
            if c is not None and (best is None or c.eps < best.eps):
                best = c
        return best
    g = stream(seed, 202)
    used = 0
    for f in _seed_maps(X, Y, g, 3):
        cur = map_cert(X, Y, f)
        used += 1
        improved = True
        while improved and used < evals:
            improved = False
            for x in range(X.n):
                for y in range(Y.n):
                    if y == cur.map[x] or used >= evals:
                        continue
                    h = cur.map.copy()
                    h[x] = y
                    c = map_cert(X, Y, h, cur.eps)
                    used += 1
                    if c is not None and c.eps < cur.eps:
                        cur, improved = c, True
        if best is None or cur.eps < best.eps:
            best = cur
    return best


def nw_corner(a, b):
    """North-west corner coupling of two weight vectors in index order."""
    plan = np.zeros((a.shape[0], b.shape[0]))
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    i = j = 0
    while i < a.shape[0] and j < b.shape[0]:
        s = min(ra[i], rb[j])
        plan[i, j] += s
        ra[i] -= s
        rb[j] -= s
        if ra[i] <= PLAN_TOL:
            i += 1
        else:
            j += 1
    return plan


def _shared_flow_bound(dist, flow):
    """Keep exactly the transported part of a Prokhorov flow on a shared space."""
    xi, yi = np.nonzero(flow > PLAN_TOL)
    kept = flow[xi, yi].sum()
    dis = np.abs(dist[np.ix_(xi, xi)] - dist[np.ix_(yi, yi)]).max() if xi.size else 0.0
    return max(1.0 - kept, float(dis))


def box_estimate(
    X: FiniteMMSpace,
    Y: FiniteMMSpace,
    budget: int = 2000,
    seed: int = 0,
    couplings=(),
    certs=(),
    map_budget: int = 1024,
    restarts: int = 8,
    workers: int = 1,
) -> BoxBracket:
    """Bracket the box distance between two finite mm-spaces.

    Parameters
    ----------
    budget
        Annealing iterations per restart (and the evaluation budget of the
        map hill climb).
    couplings
        Extra coupling matrices of shape (|X|, |Y|) to score.
    certs
        eps-mm-isomorphism certificates for maps X -> Y; each must verify.

    The argument order is canonicalized first, so swapping X and Y gives
    the same bounds.
    """
    swapped = Y.canonical_key() < X.canonical_key()
    A, B = (Y, X) if swapped else (X, Y)
    plans = [np.asarray(p, dtype=float) for p in couplings]
    if swapped:
        plans = [p.T for p in plans]

    lower = box_lower_dd(A, B)
    best = (1.0, "trivial", None, None)

    def offer(val, tag, cert=None, direction=None):
        nonlocal best
        if val < best[0] - 1e-15:
            best = (float(val), tag, cert, direction)

    small = max(A.n, B.n) <= 200
    if small:
        val, align, drop = plan_value(A, B, nw_corner(A.weights, B.weights))
        offer(val, "coupling:nw-corner", align, "first->second")

    if A.n == B.n and np.array_equal(A.dist, B.dist):
        p, _, flow = prokhorov_flow(A.dist, A.weights, B.weights)
        offer(_shared_flow_bound(A.dist, flow), "coupling:prokhorov-shared",
              ParameterAlignment.from_plan(flow), "first->second")

    for i, plan in enumerate(plans):
        if plan.shape != (A.n, B.n):
            raise InvalidAlignment(f"coupling {i} has shape {plan.shape}")
        if np.abs(plan.sum(axis=1) - A.weights).max() > METRIC_TOL or np.abs(plan.sum(axis=0) - B.weights).max() > METRIC_TOL:
            raise InvalidAlignment(f"coupling {i} has wrong marginals")
        val, align, drop = plan_value(A, B, plan)
        offer(val, f"coupling:supplied[{i}]", align, "first->second")

    for cert in certs:
        offer(box_upper_from_cert(X, Y, cert), "cert:supplied", cert, "second->first" if swapped else "first->second")

    rc = _rational_counts(A, B)
    if rc is not None and rc[0] > 1:
        q, cx, cy = rc
        val, align, drop = _anneal(A, B, q, cx, cy, budget, seed, restarts, workers)
        offer(val, "anneal", align, "first->second")
        pval, palign, pdrop = plan_value(A, B, align.to_plan(A.n, B.n))
        offer(pval, "anneal+drop", palign, "first->second")

    if max(A.n, B.n) <= 64:
        for src, dst, direction in ((A, B, "first->second"), (B, A, "second->first")):
            c = best_map_cert(src, dst, map_budget, seed, evals=budget)
            if c is not None:
                offer(3.0 * c.eps, "map-cert", c, direction)

    upper, tag, cert, direction = best
    if swapped and direction is not None:
        direction = "second->first" if direction == "first->second" else "first->second"
    return BoxBracket(
        lower=min(lower, upper),
        upper=upper,
        method={"lower": "distance-distribution", "upper": tag},
        seed=seed,
        cert=cert,
        cert_direction=direction,
    )


def box_estimate_shared(dist, mu, nu, **kw) -> BoxBracket:
    """Bracket for (S, mu) against (S, nu) on a common finite metric space."""
    from .core import validate_space

    d = np.asarray(dist, dtype=float)
    X = validate_space(d, mu)
    Y = validate_space(d, nu)
    rows = np.flatnonzero(np.asarray(mu) > 0)
    cols = np.flatnonzero(np.asarray(nu) > 0)
    _, _, flow = prokhorov_flow(d, mu, nu)
    sub = flow[np.ix_(rows, cols)]
    ra = np.maximum(np.asarray(mu, float)[rows] - sub.sum(axis=1), 0.0)
    rb = np.maximum(np.asarray(nu, float)[cols] - sub.sum(axis=0), 0.0)
    plan = sub + (np.outer(ra, rb) / ra.sum() if ra.sum() > 0 else 0.0)
    br = box_estimate(X, Y, couplings=[plan], **kw)
    direct = _shared_flow_bound_cross(d, rows, cols, sub)
    if direct < br.upper:
        br.upper = direct
        br.lower = min(br.lower, direct)
        br.method = dict(br.method, upper="coupling:prokhorov-shared")
        br.cert = ParameterAlignment.from_plan(sub)
        br.cert_direction = "first->second"
    return br


def _shared_flow_bound_cross(d, rows, cols, sub):
    xi, yi = np.nonzero(sub > PLAN_TOL)
    kept = sub[xi, yi].sum()
    gx, gy = rows[xi], cols[yi]
    dis = np.abs(d[np.ix_(gx, gx)] - d[np.ix_(gy, gy)]).max() if xi.size else 0.0
    return max(1.0 - kept, float(dis))
