"""Finite metric measure spaces, the Lipschitz order and epsilon-mm-isomorphisms."""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (
    AsymmetricMatrix,
    BadWeights,
    BudgetExceeded,
    DegenerateDistance,
    DimensionMismatch,
    NegativeDistance,
    TriangleViolation,
)

METRIC_TOL = 1e-9
MASS_TOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMMSpace:
    """A finite mm-space ``(X, d_X, m_X)`` with every point in the support.

    Construct through :func:`validate_space` (or the helpers built on it); the
    raw constructor does not check anything.
    """

    labels: tuple
    dist: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def diam(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, FiniteMMSpace):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.dist, other.dist)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.labels, self.dist.tobytes(), self.weights.tobytes()))

    def canonical_key(self):
        return (self.n, self.weights.tobytes(), self.dist.tobytes())

    def to_dict(self):
        return {
            "labels": [_jsonable(l) for l in self.labels],
            "dist": self.dist.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, data):
        return validate_space(data["dist"], data["weights"], labels=data.get("labels"))

    @classmethod
    def from_json(cls, source):
        text = Path(source).read_text() if _looks_like_path(source) else source
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(cls, source):
        """Read a labelled matrix: header row of labels, one row per point, weight last."""
        text = Path(source).read_text() if _looks_like_path(source) else source
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        header = rows[0][1:-1]
        labels, dist, weights = [], [], []
        for r in rows[1:]:
            labels.append(r[0].strip())
            dist.append([float(c) for c in r[1:-1]])
            weights.append(float(r[-1]))
        if len(header) != len(labels):
            raise DimensionMismatch("CSV header and row count disagree")
        return validate_space(dist, weights, labels=labels)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([""] + [str(l) for l in self.labels] + ["weight"])
        for lab, row, wt in zip(self.labels, self.dist, self.weights):
            w.writerow([str(lab)] + [repr(float(v)) for v in row] + [repr(float(wt))])
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def _looks_like_path(source):
    if isinstance(source, Path):
        return True
    return isinstance(source, str) and not source.lstrip().startswith(("{", "[")) and "\n" not in source and Path(source).exists()


def validate_space(dist, weights, labels=None, *, check_triangle=True) -> FiniteMMSpace:
    """Check the metric and measure axioms and restrict to the support of the measure.

    Zero-weight points are dropped.  Raises a :class:`~mmgeo.errors.SpaceError`
    subclass naming the violated invariant.
    """
    d = np.asarray(dist, dtype=float)
    w = np.asarray(weights, dtype=float).ravel()
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionMismatch(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if w.shape[0] != n:
        raise DimensionMismatch(f"{n} points but {w.shape[0]} weights")
    if labels is None:
        labels = tuple(range(n))
    else:
        labels = tuple(_jsonable(l) for l in labels)
        if len(labels) != n:
            raise DimensionMismatch(f"{n} points but {len(labels)} labels")
    if n == 0:
        raise BadWeights("empty space")
    if not np.all(np.isfinite(d)):
        raise NegativeDistance("distance matrix has non-finite entries")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise BadWeights("weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > MASS_TOL:
        raise BadWeights(f"weights sum to {w.sum()!r}, not 1")
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise NegativeDistance(f"d[{i},{j}] = {d[i, j]} < 0")
    asym = np.abs(d - d.T)
    if asym.max() > METRIC_TOL:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise AsymmetricMatrix(f"d[{i},{j}] != d[{j},{i}] ({d[i, j]} vs {d[j, i]})")
    if np.abs(np.diag(d)).max() > METRIC_TOL:
        raise DegenerateDistance("nonzero diagonal entry")

    keep = np.flatnonzero(w > 0)
    if keep.shape[0] < n:
        d = d[np.ix_(keep, keep)]
        w = w[keep]
        labels = tuple(labels[i] for i in keep)
    d = 0.5 * (d + d.T) if asym.max() > 0 else d.copy()
    np.fill_diagonal(d, 0.0)
    m = d.shape[0]
    if m > 1:
        off = d + np.eye(m)
        if off.min() <= 0:
            i, j = np.argwhere(off <= 0)[0]
            raise DegenerateDistance(f"distinct points {keep[i]} and {keep[j]} at distance 0")
    if check_triangle and m > 2:
        i, j, k, excess = _kernels.triangle_violation(np.ascontiguousarray(d), METRIC_TOL)
        if i >= 0:
            raise TriangleViolation(keep[i], keep[j], keep[k], excess)
    return FiniteMMSpace(labels=labels, dist=_frozen(d), weights=_frozen(w))


def spot_check_triangle(d, count=200_000, seed=0):
    """Test ``count`` random triples of a large matrix; raises TriangleViolation on a hit.

    Used where the full cubic pass is too slow and the matrix is a metric by
    construction, so the check only guards against construction bugs.
    """
    from .rng import stream

    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n < 3:
        return
    idx = stream(seed, 7).integers(0, n, size=(count, 3))
    i, j, k = idx.T
    excess = d[i, j] - d[i, k] - d[k, j]
    bad = int(np.argmax(excess))
    if excess[bad] > METRIC_TOL:
        raise TriangleViolation(i[bad], j[bad], k[bad], excess[bad])


def uniform_space(dist, labels=None, **kw) -> FiniteMMSpace:
    n = np.asarray(dist).shape[0]
    return validate_space(dist, np.full(n, 1.0 / n), labels=labels, **kw)


def points_space(points, weights=None, **kw) -> FiniteMMSpace:
    """Euclidean distances between the rows of ``points`` (1-d input = points on a line)."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    dm, _ = _kernels.pair_norms(np.ascontiguousarray(p))
    if weights is None:
        weights = np.full(p.shape[0], 1.0 / p.shape[0])
    return validate_space(dm, weights, **kw)


def one_point() -> FiniteMMSpace:
    return validate_space([[0.0]], [1.0])


def pushforward(mapping, weights, size) -> np.ndarray:
    return np.bincount(np.asarray(mapping, dtype=np.int64), weights=weights, minlength=size).astype(float)


# ------------------------------------------------------------------ Lipschitz order

def verify_lipschitz_cert(X: FiniteMMSpace, Y: FiniteMMSpace, mapping) -> bool:
    """True iff ``mapping`` (indices X -> Y) is 1-Lipschitz and pushes m_X to m_Y."""
    f = np.asarray(mapping)
    if f.shape != (X.n,) or not np.issubdtype(f.dtype, np.integer):
        return False
    if f.size and (f.min() < 0 or f.max() >= Y.n):
        return False
    if np.any(Y.dist[np.ix_(f, f)] > X.dist + METRIC_TOL):
        return False
    return bool(np.all(np.abs(pushforward(f, X.weights, Y.n) - Y.weights) <= METRIC_TOL))


def dominates_bruteforce(X: FiniteMMSpace, Y: FiniteMMSpace, budget: int = 10**7):
    """Search for a witness of ``Y < X``: a 1-Lipschitz map X -> Y pushing m_X to m_Y.

    Returns the map (index array) or ``None``.  Exhaustive backtracking; raises
    :class:`BudgetExceeded` when ``|Y|**|X|`` exceeds ``budget``.
    """
    if Y.n ** X.n > budget:
        raise BudgetExceeded(f"|Y|^|X| = {Y.n}^{X.n} exceeds budget {budget}")
    order = np.argsort(-X.weights, kind="stable")
    assign = np.full(X.n, -1, dtype=np.int64)
    load = np.zeros(Y.n)
    dx, dy = X.dist, Y.dist

    def extend(depth):
        if depth == X.n:
            return verify_lipschitz_cert(X, Y, assign)
        x = order[depth]
        placed = order[:depth]
        for y in range(Y.n):
            if load[y] + X.weights[x] > Y.weights[y] + METRIC_TOL:
                continue
            if depth and np.any(dy[y, assign[placed]] > dx[x, placed] + METRIC_TOL):
                continue
            assign[x] = y
            load[y] += X.weights[x]
            if extend(depth + 1):
                return True
            load[y] -= X.weights[x]
            assign[x] = -1
        return False

    if extend(0):
        return assign.copy()
    return None


# ------------------------------------------------------------------ eps-mm-isomorphisms

@dataclass(frozen=True, eq=False)
class EpsMMIsoCert:
    """Point map X -> Y, a nonexceptional domain (indices into X) and its epsilon."""

    map: np.ndarray
    domain: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "map", _frozen(self.map, np.int64))
        object.__setattr__(self, "domain", _frozen(np.unique(np.asarray(self.domain, dtype=np.int64)), np.int64))
        object.__setattr__(self, "eps", float(self.eps))

    def to_dict(self):
        return {"map": self.map.tolist(), "domain": self.domain.tolist(), "eps": self.eps}

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["map"]), np.asarray(data["domain"]), data["eps"])


def verify_mm_iso_cert(X: FiniteMMSpace, Y: FiniteMMSpace, cert: EpsMMIsoCert) -> bool:
    from .probmetrics import prokhorov

    f, dom, eps = cert.map, cert.domain, cert.eps
    if eps < 0 or f.shape != (X.n,):
        return False
    if f.size and (f.min() < 0 or f.max() >= Y.n):
        return False
    if dom.size and (dom.min() < 0 or dom.max() >= X.n):
        return False
    if X.weights[dom].sum() < 1.0 - eps - METRIC_TOL:
        return False
    fd = f[dom]
    if dom.size and np.abs(X.dist[np.ix_(dom, dom)] - Y.dist[np.ix_(fd, fd)]).max() > eps + METRIC_TOL:
        return False
    return prokhorov(Y.dist, pushforward(f, X.weights, Y.n), Y.weights) <= eps + METRIC_TOL


def verify_lipschitz_up_to(X: FiniteMMSpace, Y: FiniteMMSpace, mapping, domain, eps) -> bool:
    """1-Lipschitz up to an additive error ``eps`` on the nonexceptional ``domain``."""
    f = np.asarray(mapping, dtype=np.int64)
    dom = np.asarray(domain, dtype=np.int64)
    if X.weights[dom].sum() < 1.0 - eps - METRIC_TOL:
        return False
    fd = f[dom]
    return not np.any(Y.dist[np.ix_(fd, fd)] > X.dist[np.ix_(dom, dom)] + eps + METRIC_TOL)


# ------------------------------------------------------------------ distance distributions

@dataclass(frozen=True, eq=False)
class DistanceDistribution:
    """Law of d_X under m_X x m_X, as sorted atoms."""

    values: np.ndarray
    masses: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def atoms(self):
        return list(zip(self.values.tolist(), self.masses.tolist()))


def distance_distribution(X: FiniteMMSpace) -> DistanceDistribution:
    vals = X.dist.ravel()
    mass = np.outer(X.weights, X.weights).ravel()
    uniq, inv = np.unique(vals, return_inverse=True)
    agg = np.bincount(inv.ravel(), weights=mass, minlength=uniq.shape[0])
    return DistanceDistribution(values=_frozen(uniq), masses=_frozen(agg))


def subspace_iter_maps(nx, ny):
    """All maps {0..nx-1} -> {0..ny-1} as index tuples (lexicographic)."""
    return itertools.product(range(ny), repeat=nx)
