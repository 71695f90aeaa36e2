"""Metric-preserving functions: representations, validation, monotone defect, family classification.

Two representations are supported.  :class:`PiecewiseLinear` is a
continuous function given by breakpoints starting at ``(0, 0)`` and a tail
that is either constant or linear; every question asked about it here is
answered exactly.  :class:`Analytic` wraps a closed-form builtin and is
checked on a grid, with the known facts (monotonicity, concavity, sup)
recorded in the catalog.

A function ``F`` with ``F(0) = 0`` and ``F > 0`` elsewhere is metric
preserving iff ``F(a) <= F(b) + F(c)`` whenever ``|b - c| <= a <= b + c``.
Subadditivity is the special case ``a = b + c`` and does not suffice on its
own (``F(0.5) = 1, F(1) = 0.2, F(1.5) = 1.1`` is subadditive on those points
but maps the triangle (0.5, 1, 1.5) to (1, 0.2, 1.1)).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ImplicationViolation, InconclusiveTrend
from .rng import stream

TOL = 1e-12
DEFAULT_NS = (1, 2, 5, 10, 20, 50, 100)


# ------------------------------------------------------------------ representations

class MPFunction:
    """Common interface.

    Subclasses provide ``__call__``, ``sup``, ``tail_inf`` and the shape facts
    ``name``, ``nondecreasing``, ``increasing`` and ``concave``.
    """

    def __call__(self, s):
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    def tail_inf(self, s):
        """inf of F over [s, inf)."""
        raise NotImplementedError

    def defect(self, s):
        """Monotone defect F(s) - inf_{s' >= s} F(s') (vectorized)."""
        s = np.asarray(s, dtype=float)
        if self.nondecreasing:
            return np.zeros_like(s)
        return np.maximum(self(s) - self.tail_inf(s), 0.0)

    def knots(self):
        """Points where the exact checks must look (breakpoints), or None."""
        return None


@dataclass(frozen=True, eq=False)
class PiecewiseLinear(MPFunction):
    """Continuous piecewise-linear function on [0, inf).

    ``xs``/``ys`` are the breakpoints (``xs[0] == 0``, strictly increasing);
    beyond ``xs[-1]`` the function is constant (``tail="constant"``) or has
    slope ``slope`` (``tail="linear"``).
    """

    xs: np.ndarray
    ys: np.ndarray
    tail: str = "constant"
    slope: float = 0.0
    name: str = "piecewise-linear"

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).ravel()
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape != ys.shape or xs.size == 0:
            raise ValueError("breakpoint arrays must be nonempty and of equal length")
        if xs[0] != 0.0:
            raise ValueError("first breakpoint must be at s = 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.tail not in ("constant", "linear"):
            raise ValueError(f"unknown tail kind {self.tail!r}")
        slope = float(self.slope) if self.tail == "linear" else 0.0
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "slope", slope)

    @classmethod
    def from_points(cls, points, tail="constant", slope=0.0, name="piecewise-linear"):
        p = np.asarray(points, dtype=float)
        return cls(p[:, 0], p[:, 1], tail, slope, name)

    @classmethod
    def from_dict(cls, data):
        tail = data.get("tail", {"kind": "constant"})
        if isinstance(tail, str):
            tail = {"kind": tail}
        return cls.from_points(data["breakpoints"], tail.get("kind", "constant"), tail.get("slope", 0.0),
                               data.get("name", "piecewise-linear"))

    def to_dict(self):
        return {
            "name": self.name,
            "breakpoints": np.column_stack([self.xs, self.ys]).tolist(),
            "tail": {"kind": self.tail, "slope": self.slope},
        }

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.xs, self.ys)
        if self.slope:
            beyond = s > self.xs[-1]
            out = np.where(beyond, self.ys[-1] + self.slope * (s - self.xs[-1]), out)
        return out if out.ndim else float(out)

    @property
    def slopes(self):
        seg = np.diff(self.ys) / np.diff(self.xs)
        return np.append(seg, self.slope)

    @property
    def nondecreasing(self):
        return bool(np.all(self.slopes >= 0))

    @property
    def increasing(self):
        return bool(np.all(self.slopes > 0))

    @property
    def concave(self):
        return bool(np.all(np.diff(self.slopes) <= TOL))

    @property
    def sup(self):
        if self.slope > 0:
            return math.inf
        return float(self.ys.max())

    def tail_inf(self, s):
        s = np.asarray(s, dtype=float)
        if self.slope < 0:
            return np.full_like(s, -np.inf)
        # suffix minima of breakpoint values; the tail never goes below ys[-1]
        suffix = np.minimum.accumulate(self.ys[::-1])[::-1]
        idx = np.searchsorted(self.xs, s, side="left")
        later = np.where(idx < self.xs.size, suffix[np.minimum(idx, self.xs.size - 1)], np.inf)
        tail_floor = np.where(s > self.xs[-1], self(s), self.ys[-1])
        return np.minimum(np.minimum(self(s), later), tail_floor)

    def knots(self):
        return self.xs

    def describe(self):
        pts = ", ".join(f"({x:g}, {y:g})" for x, y in zip(self.xs, self.ys))
        tail = "constant" if self.tail == "constant" else f"slope {self.slope:g}"
        return f"PL[{pts}; {tail}]"


@dataclass(frozen=True, eq=False)
class Analytic(MPFunction):
    """Closed-form builtin.  Shape facts come from the catalog, not from sampling."""

    name: str
    params: dict
    fn: Callable
    sup_value: float
    limit: float
    nondecreasing: bool = False
    increasing: bool = False
    concave: bool = False
    horizon: float = 100.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self.fn(s)
        return out if np.ndim(out) else float(out)

    @property
    def sup(self):
        return self.sup_value

    def tail_inf(self, s):
        s = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s)
        far = max(self.horizon, 10.0 * float(flat.max()))
        grid = np.linspace(float(flat.min()), far, 200001)
        suffix = np.minimum.accumulate(np.asarray(self(grid))[::-1])[::-1]
        idx = np.minimum(np.searchsorted(grid, flat, side="left"), grid.size - 1)
        out = np.minimum(np.minimum(suffix[idx], np.asarray(self(flat))), self.limit)
        return out.reshape(s.shape)

    def to_dict(self):
        return {"builtin": self.name, "params": dict(self.params)}

    def describe(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({args})" if args else self.name


@dataclass(frozen=True, eq=False)
class Composed(MPFunction):
    """``outer(inner(s))``."""

    outer: MPFunction
    inner: MPFunction

    @property
    def name(self):
        return f"{self.outer.name}o{self.inner.name}"

    def __call__(self, s):
        return self.outer(self.inner(s))

    @property
    def nondecreasing(self):
        return self.outer.nondecreasing and self.inner.nondecreasing

    @property
    def increasing(self):
        return self.outer.increasing and self.inner.increasing

    concave = False

    @property
    def sup(self):
        return self.outer.sup if self.outer.nondecreasing and math.isinf(self.inner.sup) else float("nan")

    def tail_inf(self, s):
        raise NotImplementedError("composed functions do not expose a tail infimum")

    def describe(self):
        return f"({self.outer.describe()}) o ({self.inner.describe()})"


def compose(outer: MPFunction, inner: MPFunction) -> Composed:
    return Composed(outer, inner)


# ------------------------------------------------------------------ catalog

def _chordal_fn(r):
    def f(s):
        return np.where(s <= math.pi * r, 2.0 * r * np.sin(np.minimum(s, math.pi * r) / (2.0 * r)), 2.0 * r)
    return f


def _sine_ratio(s):
    s = np.asarray(s, dtype=float)
    safe = np.maximum(s, 1.0)
    return np.where(s < 1.0, s, (1.0 + safe + np.sin(safe - 1.0) ** 2) / (2.0 * safe))


def identity():
    return PiecewiseLinear([0.0], [0.0], "linear", 1.0, name="identity")


def min_c(c=2.0):
    return PiecewiseLinear([0.0, c], [0.0, c], "constant", name=f"min({c:g})")


def notch(n):
    return PiecewiseLinear([0.0, 2.0, 2.0 + 1.0 / n], [0.0, 2.0, 2.0 - 1.0 / n], name=f"notch[{n}]")


def late_bump(n):
    return PiecewiseLinear([0.0, 2.0, n + 2.0, n + 3.0, n + 4.0], [0.0, 2.0, 2.0, 3.0, 2.0], name=f"late_bump[{n}]")


def late_drop(n):
    return PiecewiseLinear([0.0, 2.0, n + 2.0, n + 3.0], [0.0, 2.0, 2.0, 1.0], name=f"late_drop[{n}]")


def drop():
    return PiecewiseLinear([0.0, 2.0, 3.0], [0.0, 2.0, 1.0], name="drop")


def builtin(name: str, **params) -> MPFunction:
    """Catalog lookup by name: identity, min, ratio, chordal, drop, sine_ratio,
    square, sqrt, notch, late_bump, late_drop."""
    if name == "identity":
        return identity()
    if name == "min":
        return min_c(float(params.get("c", 2.0)))
    if name in ("notch", "late_bump", "late_drop"):
        return {"notch": notch, "late_bump": late_bump, "late_drop": late_drop}[name](int(params["n"]))
    if name == "drop":
        return drop()
    if name == "ratio":
        return Analytic("ratio", {}, lambda s: s / (1.0 + s), 1.0, 1.0, True, True, True)
    if name == "chordal":
        r = float(params["r"])
        return Analytic("chordal", {"r": r}, _chordal_fn(r), 2.0 * r, 2.0 * r, True, False, True,
                        horizon=max(100.0, 4.0 * r))
    if name == "sine_ratio":
        return Analytic("sine_ratio", {}, _sine_ratio, 1.0, 0.5, False, False, False, horizon=1000.0)
    if name == "square":
        return Analytic("square", {}, lambda s: s * s, math.inf, math.inf, True, True, False)
    if name == "sqrt":
        return Analytic("sqrt", {}, np.sqrt, math.inf, math.inf, True, True, True)
    raise KeyError(f"unknown builtin {name!r}")


def load_function(data) -> MPFunction:
    """From the JSON formats: PL ``{breakpoints, tail}`` or ``{builtin, params}``."""
    if isinstance(data, str):
        data = json.loads(data)
    if "builtin" in data:
        return builtin(data["builtin"], **data.get("params", {}))
    return PiecewiseLinear.from_dict(data)


# ------------------------------------------------------------------ reports

@dataclass
class Verdict:
    holds: bool
    evidence: dict = field(default_factory=dict)
    status: str = "exact"

    def to_dict(self):
        return {"holds": self.holds, "status": self.status, "evidence": _clean(self.evidence)}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class ConditionReport:
    """Named verdicts plus context; ``label`` says how much they are worth."""

    verdicts: dict
    label: str = "numerical evidence"
    info: dict = field(default_factory=dict)

    def __getitem__(self, key) -> Verdict:
        return self.verdicts[key]

    def __contains__(self, key):
        return key in self.verdicts

    def holds(self, key) -> bool:
        return self.verdicts[key].holds

    def check_chain(self):
        """(i) => (ii) => (b) => (iii), enforced whenever all four are present."""
        keys = ("i", "ii", "b", "iii")
        if not all(k in self.verdicts for k in keys):
            return
        if self.info.get("chain_applies") is False:
            return
        for lhs, rhs in zip(keys, keys[1:]):
            if self.holds(lhs) and not self.holds(rhs):
                raise ImplicationViolation(f"({lhs}) holds but ({rhs}) does not: {self.to_dict()}")

    def to_dict(self):
        return {"label": self.label, "info": _clean(self.info),
                "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ------------------------------------------------------------------ exact checks for PL

def _pl_subadditivity(F: PiecewiseLinear):
    """min of F(s) + F(t) - F(s + t) over s, t >= 0 with a minimizing pair.

    The function is linear on the cells cut out by s, t and s + t hitting a
    breakpoint, so the minimum over each (pointed) cell is at a vertex.
    """
    b = F.xs
    s1, t1 = np.meshgrid(b, b, indexing="ij")
    diff = b[None, :] - b[:, None]
    ok = diff >= 0
    s2, t2 = np.broadcast_to(b[:, None], diff.shape)[ok], diff[ok]
    s = np.concatenate([s1.ravel(), s2, t2])
    t = np.concatenate([t1.ravel(), t2, s2])
    gap = F(s) + F(t) - F(s + t)
    k = int(np.argmin(gap))
    return float(gap[k]), (float(s[k]), float(t[k]))


def _pl_triplets(F: PiecewiseLinear):
    """min of F(b) + F(c) - F(a) over triangle triplets, with the minimizer.

    Vertices of the arrangement formed by the planes a, b, c = breakpoint and
    the three boundary planes of the triangle cone.
    """
    B = F.xs
    cand = []
    A3, B3, C3 = np.meshgrid(B, B, B, indexing="ij")
    cand.append(np.stack([A3.ravel(), B3.ravel(), C3.ravel()], axis=1))
    P, Q = np.meshgrid(B, B, indexing="ij")
    p, q = P.ravel(), Q.ravel()
    for third in (p + q, np.abs(p - q)):
        cand.append(np.stack([p, q, third], axis=1))  # a, b fixed
        cand.append(np.stack([p, third, q], axis=1))  # a, c fixed
        cand.append(np.stack([third, p, q], axis=1))  # b, c fixed
    z = np.zeros_like(B)
    cand += [np.stack([B, B, z], 1), np.stack([B, z, B], 1), np.stack([z, B, B], 1)]
    pts = np.concatenate(cand)
    a, bb, c = pts.T
    valid = (np.abs(bb - c) <= a + 1e-12) & (a <= bb + c + 1e-12)
    a, bb, c = a[valid], bb[valid], c[valid]
    gap = F(bb) + F(c) - F(a)
    k = int(np.argmin(gap))
    return float(gap[k]), (float(a[k]), float(bb[k]), float(c[k]))


def _grid(F, s_max, h):
    k = int(round(s_max / h))
    return np.arange(k + 1) * h


def validate_mpf(F: MPFunction, s_max: float | None = None, h: float | None = None, seed: int = 0,
                 spot_checks: int = 2000) -> ConditionReport:
    """Check F(0) = 0, positivity, subadditivity and the triangle-triplet condition.

    Piecewise-linear inputs are decided exactly; analytic builtins are
    checked on the grid ``0, h, ..., s_max``.
    """
    exact = isinstance(F, PiecewiseLinear)
    if s_max is None:
        s_max = 2.0 * float(F.knots()[-1]) + 4.0 if exact else 20.0
    if h is None:
        h = s_max / 2000.0
    grid = _grid(F, s_max, h)
    vals = np.asarray(F(grid), dtype=float)
    v = {}
    f0 = float(F(0.0))
    v["zero"] = Verdict(abs(f0) <= TOL, {"F(0)": f0})

    if exact:
        if F.xs.size > 1:
            bad = F.xs[1:][F.ys[1:] <= TOL]
            pos = bad.size == 0 and F.slope >= 0
        else:
            bad, pos = F.xs[:0], F.slope > 0
        v["vanishing_only_at_0"] = Verdict(bool(pos), {"witness": float(bad[0]) if bad.size else None})
        gap, (s, t) = _pl_subadditivity(F)
        v["subadditive"] = Verdict(gap >= -TOL, {"min_gap": gap, "witness": [s, t]})
        tgap, (a, b, c) = _pl_triplets(F)
        v["triangle_triplets"] = Verdict(tgap >= -TOL, {"min_gap": tgap, "witness": [a, b, c]})
    else:
        bad = grid[1:][vals[1:] <= TOL]
        v["vanishing_only_at_0"] = Verdict(bad.size == 0, {"witness": float(bad[0]) if bad.size else None},
                                           "grid")
        k = grid.size
        i, j = np.triu_indices(k // 2 + 1)
        gaps = vals[i] + vals[j] - vals[i + j]
        w = int(np.argmin(gaps))
        v["subadditive"] = Verdict(bool(gaps[w] >= -1e-9), {"min_gap": gaps[w], "witness": [grid[i[w]], grid[j[w]]]},
                                   "grid")
        worst, a, b, c = _kernels.triplet_violation(np.ascontiguousarray(vals))
        v["triangle_triplets"] = Verdict(bool(worst <= 1e-9), {"min_gap": -worst,
                                                               "witness": [grid[a], grid[b], grid[c]]}, "grid")
    v["nondecreasing"] = Verdict(bool(F.nondecreasing), {"source": "representation"})
    v["increasing"] = Verdict(bool(F.increasing), {"source": "representation"})
    base = v["zero"].holds and v["vanishing_only_at_0"].holds
    kelly = base and v["nondecreasing"].holds and v["subadditive"].holds
    accepted = base and (kelly or v["triangle_triplets"].holds)
    v["metric_preserving"] = Verdict(bool(accepted), {
        "monotone_subadditive": bool(kelly),
        "triangle_triplets": v["triangle_triplets"].holds,
        "concave": bool(F.concave),
    }, "exact" if exact else "grid")

    # spot checks of |F(s) - F(t)| <= F(|s - t|) and F(s) <= 2 F(t) for s <= 2t
    g = stream(seed, 303)
    s = g.uniform(0, s_max, spot_checks)
    t = g.uniform(0, s_max, spot_checks)
    fs, ft, fd = F(s), F(t), F(np.abs(s - t))
    lip = np.abs(fs - ft) - fd
    dbl = np.where(s <= 2 * t, fs - 2 * ft, -np.inf)
    v["spot_lipschitz"] = Verdict(bool(lip.max() <= 1e-9),
                                  {"worst": lip.max(), "at": [s[lip.argmax()], t[lip.argmax()]], "n": spot_checks},
                                  "sampled")
    v["spot_doubling"] = Verdict(bool(dbl.max() <= 1e-9),
                                 {"worst": dbl.max(), "at": [s[dbl.argmax()], t[dbl.argmax()]], "n": spot_checks},
                                 "sampled")
    label = "exact" if exact else "numerical evidence"
    return ConditionReport(v, label=label, info={"function": F.describe(), "grid": [0.0, s_max, h]})


def monotone_defect(F: MPFunction, s) -> float:
    """F(s) minus the infimum of F over [s, inf); exact for piecewise-linear F."""
    out = F.defect(np.asarray(s, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------------ families

@dataclass(frozen=True)
class MPFamily:
    name: str
    generator: Callable[[int], MPFunction]
    limit: MPFunction
    ns: tuple = DEFAULT_NS

    def __call__(self, n) -> MPFunction:
        return self.generator(n)


def family(name: str, **params) -> MPFamily:
    """Named families: identity, notch, late_bump, late_drop, chordal (``lam``, ``rule``), constant (``of``)."""
    ns = tuple(params.get("ns", DEFAULT_NS))
    if name == "identity":
        return MPFamily("identity", lambda n: identity(), identity(), ns)
    if name in ("notch", "late_bump", "late_drop"):
        gen = {"notch": notch, "late_bump": late_bump, "late_drop": late_drop}[name]
        return MPFamily(name, gen, min_c(2.0), ns)
    if name == "chordal":
        lam = float(params.get("lam", 1.0))
        expo = float(params.get("exponent", 0.5))
        return MPFamily(f"chordal(lam={lam:g}, n^{expo:g})",
                        lambda n: builtin("chordal", r=lam * n ** expo), identity(), ns)
    if name == "constant":
        F = params["of"] if isinstance(params.get("of"), MPFunction) else load_function(params["of"])
        return MPFamily(f"constant({F.describe()})", lambda n: F, F, ns)
    raise KeyError(f"unknown family {name!r}")


def _trend(condition, values, theta, tol=1e-3):
    """Vanishing verdict for a nonnegative sequence sampled along increasing n.

    Holds when the last value is at most ``theta``.  Fails when it is above
    ``theta`` and the tail is not visibly shrinking (last value at least half
    the envelope over the second half).  Anything else is inconclusive.
    """
    v = np.asarray(values, dtype=float)
    tail = v[len(v) // 2:]
    ups = np.diff(tail)
    if np.any(ups > max(tol, 0.1 * tail.max())) and v[-1] > theta:
        raise InconclusiveTrend(condition, v)
    if v[-1] <= theta:
        return True
    if v[-1] >= 0.5 * tail.max():
        return False
    raise InconclusiveTrend(condition, v)


def _window_points(fs, D, h):
    pts = [np.arange(int(round(D / h)) + 1) * h]
    for F in fs:
        k = F.knots()
        if k is not None:
            pts.append(k[k <= D])
    pts.append([D])
    return np.unique(np.concatenate(pts))


def _sup_defect(F, pts, horizon=None):
    """(sup of the monotone defect, argmax) over ``pts``; over all s >= 0 when ``horizon`` is None and F is PL."""
    if F.nondecreasing:
        return 0.0, None
    if horizon is None and isinstance(F, PiecewiseLinear):
        pts = F.xs
    vals = F.defect(pts)
    k = int(np.argmax(vals))
    return float(vals[k]), float(pts[k])


def _probe_points(F, n):
    """Divergent probe sequences evaluated at index n: linear, geometric, chasing the tail infimum."""
    lin = float(n)
    geo = float(2.0 ** min(n, 40))
    if isinstance(F, PiecewiseLinear):
        later = F.xs[F.xs >= n]
        cands = np.concatenate([[lin], later, [max(lin, F.xs[-1])]])
    else:
        cands = np.linspace(lin, 10.0 * lin + 10.0, 2001)
    chase = float(cands[int(np.argmin(F(cands)))])
    return {"linear": lin, "geometric": geo, "chase": chase}


def classify_family(fam: MPFamily, ns=None, D: float = 3.0, h: float = 0.01, theta: float = 0.02,
                    tol: float = 1e-3) -> ConditionReport:
    """Numerical verdicts for (a)-(d) and (i)-(iii) over a finite index sample.

    (a) uniform deviation on [0, W] where W covers D and the limit's
    breakpoints; (b) sup of the defect over [0, D], cross-checked with
    divergent probe sequences and the monotonicity of the limit; (c) the
    largest sup over the last two indices against sup F; (d), (i), (iii)
    from the representations; (ii) sup of the defect over all s.
    """
    ns = tuple(ns or fam.ns)
    F = fam.limit
    Fs = [fam(n) for n in ns]
    knots = F.knots()
    W = max(D, float(knots[-1]) + 1.0) if knots is not None else D
    win = _window_points([F] + Fs, W, h)
    comp = _window_points([F] + Fs, D, h)
    fvals = F(win)

    dev, dev_at = [], []
    for G in Fs:
        diff = np.abs(G(win) - fvals)
        k = int(np.argmax(diff))
        dev.append(float(diff[k]))
        dev_at.append(float(win[k]))
    a = _trend("a", dev, theta, tol)

    cI, cI_at, gI, gI_at = [], [], [], []
    for G in Fs:
        val, at = _sup_defect(G, comp, horizon=D)
        cI.append(val)
        cI_at.append(at)
        horizon = None if isinstance(G, PiecewiseLinear) else 50.0 * W
        pts = None if horizon is None else np.linspace(0.0, horizon, 20001)
        val, at = _sup_defect(G, pts, horizon=horizon)
        gI.append(val)
        gI_at.append(at)
    compact = _trend("b", cI, theta, tol)
    ii = _trend("ii", gI, theta, tol)

    iii = bool(F.nondecreasing)
    ref = float(np.max(F(comp)))
    probes = {}
    probe_ok = True
    for name in ("linear", "geometric", "chase"):
        seq = []
        for n, G in zip(ns, Fs):
            s_n = _probe_points(G, n)[name]
            seq.append([s_n, float(G(s_n))])
        low = min(v for _, v in seq[-2:])
        ok = low >= ref - theta - dev[-1] - 1e-12
        probes[name] = {"points": seq, "ok": bool(ok)}
        probe_ok &= ok
    if compact and iii and not probe_ok:
        raise InconclusiveTrend("b", [p["points"][-1][1] for p in probes.values()])
    b = bool(compact and probe_ok and iii)

    sups = [G.sup for G in Fs]
    supF = F.sup
    if math.isinf(supF):
        c = True
    else:
        c = bool(max(sups[-2:]) <= supF + theta)
    i = bool(all(G.nondecreasing for G in Fs))
    d = bool(F.increasing)

    def last_witness(vals, ats):
        return {"n": ns[-1], "s": ats[-1], "value": vals[-1]}

    v = {
        "a": Verdict(a, {"sup_deviation": dev, "at": dev_at, "window": [0.0, W], "theta": theta}, "numerical"),
        "b": Verdict(b, {"compact_sup_defect": cI, "at": cI_at, "D": D, "compact_vanishing": compact,
                         "probes": probes, "probe_reference": ref, "limit_nondecreasing": iii,
                         "witness": last_witness(cI, cI_at), "theta": theta}, "numerical"),
        "c": Verdict(c, {"member_sups": sups, "limit_sup": supF, "theta": theta}, "numerical"),
        "d": Verdict(d, {"source": "representation"}),
        "i": Verdict(i, {"nondecreasing": [bool(G.nondecreasing) for G in Fs]}),
        "ii": Verdict(ii, {"sup_defect": gI, "at": gI_at, "witness": last_witness(gI, gI_at), "theta": theta},
                      "numerical"),
        "iii": Verdict(iii, {"source": "representation"}),
    }
    report = ConditionReport(v, info={
        "family": fam.name, "ns": list(ns), "limit": F.describe(),
        "chain_applies": a,
        "note": "verdicts are trend decisions over the sampled indices, not proofs",
    })
    report.check_chain()
    return report


@dataclass
class ProbeResult:
    s: float
    points: list
    value_gaps: list
    arg_gaps: list
    verdict: str

    def to_dict(self):
        return _clean(self.__dict__)


def pointwise_limit_probe(fam: MPFamily, pairs, ns=None, theta: float = 0.02):
    """For each (s_n, s) compare the member at s_n with F(s) and s_n with s along the index sample.

    ``s_n`` may be a number or a callable of n.  A pair whose value gap
    vanishes while the argument gap does not is reported as
    ``"inverse-stability violated"``; this can only happen when F is not
    increasing.
    """
    ns = tuple(ns or fam.ns)
    out = []
    for seq, s in pairs:
        pts = [float(seq(n)) if callable(seq) else float(seq) for n in ns]
        vg = [abs(float(fam(n)(p)) - float(fam.limit(s))) for n, p in zip(ns, pts)]
        ag = [abs(p - s) for p in pts]
        if vg[-1] <= theta and ag[-1] <= theta:
            verdict = "consistent"
        elif vg[-1] <= theta:
            verdict = "inverse-stability violated"
        else:
            verdict = "values do not converge"
        out.append(ProbeResult(float(s), pts, vg, ag, verdict))
    return out
