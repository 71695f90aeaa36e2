"""Finite chains standing in for pyramids, and distances of probes to them.

A chain ``Y_1 < Y_2 < ...`` in the Lipschitz order, each step carried by an
explicit map ``Y_{m+1} -> Y_m``, represents the pyramid generated by its
members.  Everything dominated by some ``Y_m`` belongs to that pyramid, so
any such space found by search gives an upper bound for the box distance
from a probe to the pyramid.  Lower bounds are only taken over the spaces
actually inspected and are therefore heuristic.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

from . import _kernels
from .boxdist import CLIQUE_LIMIT, BoxBracket, _seed_maps, _threshold_search, box_estimate, box_estimate_shared, box_lower_dd
from .core import (
    FiniteMMSpace,
    dominates_bruteforce,
    one_point,
    pushforward,
    validate_space,
    verify_lipschitz_cert,
)
from .errors import BudgetExceeded, CertRejected
from .models import FIELDS, _uniform, gaussian_points, quotient_distances
from .probmetrics import prokhorov
from .rng import stream

ZERO_TOL = 1e-9


@dataclass(eq=False)
class PyramidApprox:
    """Lipschitz-increasing chain with one verified witness per step.

    ``witnesses[m]`` maps the points of ``chain[m + 1]`` onto ``chain[m]``.
    """

    chain: list
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        self.chain = list(self.chain)
        if not self.chain:
            raise ValueError("a chain needs at least one space")
        self.witnesses = [np.asarray(f, dtype=np.int64) for f in self.witnesses]
        if len(self.witnesses) != len(self.chain) - 1:
            raise CertRejected(f"{len(self.chain)} spaces need {len(self.chain) - 1} witnesses")
        for m, f in enumerate(self.witnesses):
            if not verify_lipschitz_cert(self.chain[m + 1], self.chain[m], f):
                raise CertRejected(f"witness {m} is not a 1-Lipschitz measure-preserving map")

    def __len__(self):
        return len(self.chain)

    @classmethod
    def from_chain(cls, chain, budget=10**6):
        """Find the witnesses by exhaustive search."""
        chain = list(chain)
        ws = []
        for m in range(len(chain) - 1):
            f = dominates_bruteforce(chain[m + 1], chain[m], budget)
            if f is None:
                raise CertRejected(f"chain element {m} is not dominated by element {m + 1}")
            ws.append(f)
        return cls(chain, ws)

    def extended(self, space, witness=None):
        w = witness if witness is not None else dominates_bruteforce(space, self.chain[-1])
        if w is None:
            raise CertRejected("new space does not dominate the last element")
        return PyramidApprox(self.chain + [space], self.witnesses + [w])

    def to_dict(self):
        return {"chain": [X.to_dict() for X in self.chain], "witnesses": [f.tolist() for f in self.witnesses]}

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, data):
        return cls([FiniteMMSpace.from_dict(x) for x in data["chain"]], data["witnesses"])

    @classmethod
    def from_json(cls, source):
        if isinstance(source, str) and source.lstrip().startswith("{"):
            return cls.from_dict(json.loads(source))
        with open(source) as fh:
            return cls.from_dict(json.load(fh))


# ------------------------------------------------------------------ dominated candidates

def single_linkage_quotients(X: FiniteMMSpace, max_levels=8):
    """Quotients of X collapsing its single-linkage clusters at a few levels.

    The quotient distance is the shortest-path metric on clusters, so the
    projection is 1-Lipschitz and each quotient is dominated by X.
    """
    if X.n < 3:
        return []
    off = X.dist[np.triu_indices(X.n, 1)]
    levels = np.unique(off)[:-1]
    if levels.size > max_levels:
        levels = levels[np.linspace(0, levels.size - 1, max_levels).round().astype(int)]
    out = []
    for t in levels:
        nc, lab = connected_components(X.dist <= t, directed=False)
        if nc in (1, X.n):
            continue
        c = np.full((nc, nc), np.inf)
        for i in range(nc):
            for j in range(i + 1, nc):
                c[i, j] = c[j, i] = X.dist[np.ix_(lab == i, lab == j)].min()
        np.fill_diagonal(c, 0.0)
        q = shortest_path(c, method="FW", directed=False)
        w = np.bincount(lab, weights=X.weights, minlength=nc)
        out.append((f"quotient@{t:.6g}", validate_space(q, w, check_triangle=False)))
    return out


def lipschitz_excess_eps(X: FiniteMMSpace, Y: FiniteMMSpace, f):
    """Smallest eps making ``f`` 1-Lipschitz up to eps with Prokhorov defect <= eps.

    Returns ``(eps, domain)``; exact for at most 62 points, ``None`` beyond.
    """
    if X.n > CLIQUE_LIMIT:
        return None
    f = np.asarray(f, dtype=np.int64)
    p = prokhorov(Y.dist, pushforward(f, X.weights, Y.n), Y.weights)
    excess = np.maximum(Y.dist[np.ix_(f, f)] - X.dist, 0.0)
    ts = np.unique(np.concatenate([[0.0], excess[np.triu_indices(X.n, 1)]]))
    w = np.ascontiguousarray(X.weights)

    def solve(t):
        _, mask = _kernels.max_weight_clique(excess <= t, w)
        return ((int(mask) >> np.arange(X.n)) & 1).astype(bool)

    def objective(keep):
        idx = np.flatnonzero(keep)
        return 1.0 - w[idx].sum(), float(excess[np.ix_(idx, idx)].max()) if idx.size else 0.0

    val, keep = _threshold_search(ts, solve, objective)
    return max(p, val), np.flatnonzero(keep)


def _candidate_maps(X, Y, map_budget, seed, extra):
    if Y.n ** X.n <= map_budget:
        return [np.asarray(f, dtype=np.int64) for f in itertools.product(range(Y.n), repeat=X.n)]
    g = stream(seed, 303)
    return _seed_maps(X, Y, g, extra)


def _element_bound(Y, X, m, budget, seed, map_budget, dom_budget):
    """Upper/lower information for the probe Y against chain element X."""
    if Y == X:
        return 0.0, "chain[%d]:equal" % m, 0.0
    try:
        f = dominates_bruteforce(X, Y, dom_budget)
    except BudgetExceeded:
        f = None
    if f is not None:
        return 0.0, f"chain[{m}]:dominated", 0.0

    cands = [(f"chain[{m}]", X)] + [(f"chain[{m}]:{name}", Q) for name, Q in single_linkage_quotients(X)]
    best = (math.inf, "")
    lower = math.inf
    for tag, Z in cands:
        br = box_estimate(Y, Z, budget=budget, seed=seed)
        lower = min(lower, br.lower)
        if br.upper < best[0]:
            best = (br.upper, f"{tag}:{br.method['upper']}")

    # maps X -> Y: exact pushforwards give dominated spaces on Y's points,
    # approximate ones give the 4 eps bound
    for f in _candidate_maps(X, Y, map_budget, seed, extra=8):
        if verify_lipschitz_cert(X, Y, f):
            return 0.0, f"chain[{m}]:dominated", 0.0
        if not np.any(Y.dist[np.ix_(f, f)] > X.dist + ZERO_TOL):
            br = box_estimate_shared(Y.dist, Y.weights, pushforward(f, X.weights, Y.n), budget=budget, seed=seed)
            if br.upper < best[0]:
                best = (br.upper, f"chain[{m}]:pushforward")
            Zlow = validate_space(Y.dist, pushforward(f, X.weights, Y.n), check_triangle=False)
            lower = min(lower, box_lower_dd(Y, Zlow))
        res = lipschitz_excess_eps(X, Y, f)
        if res is not None and 4.0 * res[0] < best[0]:
            best = (4.0 * res[0], f"chain[{m}]:lipschitz-up-to")
    return best[0], best[1], lower


def dist_to_pyramid(
    Y: FiniteMMSpace,
    P: PyramidApprox,
    budget: int = 500,
    seed: int = 0,
    map_budget: int = 4096,
    dom_budget: int = 10**6,
    workers: int = 1,
) -> BoxBracket:
    """Bracket the box distance from Y to the pyramid generated by the chain.

    The upper bound is sound.  The lower bound is the smallest
    distance-distribution bound over every space inspected (chain elements,
    the one-point space, quotients and pushforwards) and is marked heuristic.
    """
    pt = one_point()
    base = box_estimate(Y, pt, budget=budget, seed=seed)
    upper, tag, lower = base.upper, "one-point:" + base.method["upper"], base.lower

    def job(m):
        return _element_bound(Y, P.chain[m], m, budget, seed, map_budget, dom_budget)

    idx = range(len(P.chain))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(job, idx))
    else:
        results = [job(m) for m in idx]
    for u, t, lo in results:
        lower = min(lower, lo)
        if u < upper:
            upper, tag = u, t
    return BoxBracket(
        lower=min(lower, upper),
        upper=upper,
        method={"lower": "heuristic:distance-distribution-over-inspected-candidates", "upper": tag},
        seed=seed,
    )


# ------------------------------------------------------------------ weak convergence

@dataclass
class WeakConvergenceDiagnostic:
    probes: list
    brackets: list  # brackets[p][i] for probe p at index i
    indices: list
    verdicts: list
    theta: float

    def uppers(self, p):
        return [b.upper for b in self.brackets[p]]

    def lowers(self, p):
        return [b.lower for b in self.brackets[p]]

    def to_dict(self):
        return {
            "indices": list(self.indices),
            "theta": self.theta,
            "probes": [
                {
                    "probe": X.to_dict(),
                    "trajectory": [b.to_dict() for b in self.brackets[p]],
                    "verdict": self.verdicts[p],
                }
                for p, X in enumerate(self.probes)
            ],
        }


def _envelope(values):
    """Running minimum: the best bound known up to each index."""
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def _probe_verdict(brs, theta):
    up = _envelope([b.upper for b in brs])
    lo = np.array([b.lower for b in brs])
    tail = lo[len(lo) // 2:]
    if up[-1] <= theta:
        return {"verdict": "distance -> 0 trend", "upper": float(up[-1]), "lower": float(lo[-1]), "theta": theta}
    if tail.min() > theta:
        return {"verdict": "bounded away", "inf_lower": float(tail.min()), "upper": float(up[-1]), "theta": theta}
    return {"verdict": "inconclusive", "upper": float(up[-1]), "lower": float(lo[-1]), "theta": theta}


def weak_convergence_probe(seq, probes, budget=300, seed=0, theta=0.02, indices=None, workers=1):
    """Distance trajectories of each probe to a sequence of pyramids.

    ``seq`` holds PyramidApprox objects or plain spaces (a plain space stands
    for the pyramid it generates).
    """
    seq = [P if isinstance(P, PyramidApprox) else PyramidApprox([P]) for P in seq]
    if len(seq) < 3:
        raise ValueError("trend detection needs at least three indices")
    indices = list(indices) if indices is not None else list(range(len(seq)))
    brackets, verdicts = [], []
    for Y in probes:
        brs = [dist_to_pyramid(Y, P, budget=budget, seed=seed, workers=workers) for P in seq]
        brackets.append(brs)
        verdicts.append(_probe_verdict(brs, theta))
    return WeakConvergenceDiagnostic(list(probes), brackets, indices, verdicts, theta)


# ------------------------------------------------------------------ Gaussian chains

def build_gaussian_pyramid_approx(lam, dims, k, seed=0, field=None) -> PyramidApprox:
    """Chain of empirical Gaussian spaces of increasing dimension.

    One sample in the largest dimension is drawn and each chain element uses
    its leading coordinates, so the coordinate projections act as the
    identity on indices and are exact measure-preserving 1-Lipschitz maps.
    With ``field`` the quotients by the unit scalars are used instead.
    """
    dims = list(dims)
    if any(b <= a for a, b in zip(dims, dims[1:])) or not dims or dims[0] < 1:
        raise ValueError("dims must be positive and strictly increasing")
    d = FIELDS[field] if field else 1
    P = gaussian_points(d * dims[-1], k, lam, seed)
    chain = []
    for n in dims:
        sub = np.ascontiguousarray(P[:, : d * n])
        D = quotient_distances(sub, d) if field else _kernels.pair_norms(sub)[0]
        chain.append(_uniform(D))
    ident = np.arange(k, dtype=np.int64)
    return PyramidApprox(chain, [ident] * (len(chain) - 1))
