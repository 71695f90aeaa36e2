"""Samplers for spheres, projective spaces, Gaussian spaces and two-point spaces.

Quotients by the unit scalars of R, C or H use the closed form

    min_{|t| = 1} |z - w t|  =  sqrt(|z|^2 + |w|^2 - 2 |<z, w>|),

where ``<z, w>`` is the real, complex or quaternionic Hermitian product.
Points in F^N are stored as real arrays of shape (k, N * d), the d real
components of each coordinate adjacent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import FiniteMMSpace, one_point, spot_check_triangle, validate_space
from .rng import stream

FIELDS = {"R": 1, "C": 2, "H": 4}
KINDS = ("sphere", "projective", "gaussian", "gaussian_quotient", "two_point")


@dataclass(frozen=True)
class ModelSpec:
    """What to sample.

    ``n`` is the sphere/projective dimension, or the Gaussian dimension over
    the chosen field.  ``radius`` applies to spheres and projective spaces,
    ``lam`` (standard deviation) to Gaussians.
    """

    kind: str
    n: int
    radius: float | None = None
    lam: float | None = None
    field: str | None = None
    flavor: str = "geodesic"
    k: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind != "two_point" and self.k < 2:
            raise ValueError("need at least two samples")
        if self.kind in ("sphere", "projective") and not (self.radius and self.radius > 0):
            raise ValueError("radius must be positive")
        if self.kind in ("gaussian", "gaussian_quotient") and not (self.lam and self.lam > 0):
            raise ValueError("lam must be positive")
        quotient = self.kind in ("projective", "gaussian_quotient")
        if quotient and self.field not in FIELDS:
            raise ValueError("quotient kinds need field R, C or H")
        if not quotient and self.field is not None:
            raise ValueError("field applies to quotient kinds only")
        if self.flavor not in ("geodesic", "euclidean"):
            raise ValueError(f"unknown flavor {self.flavor!r}")

    @property
    def d(self):
        return FIELDS[self.field] if self.field else 1

    def with_(self, **kw):
        return replace(self, **kw)


def sphere_points(dim_ambient, k, radius, seed, key=0):
    """k uniform points on the sphere of the given radius in R^dim_ambient.

    Coordinates are drawn column by column, so for a fixed (seed, key) the
    leading Gaussian coordinates are shared across dimensions.
    """
    z = _columns(stream(seed, 11, key), k, dim_ambient)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    return radius * z / norms


def gaussian_points(dim, k, lam, seed, key=0):
    return lam * _columns(stream(seed, 12, key), k, dim)


def _columns(g, k, dim):
    return np.ascontiguousarray(g.standard_normal((dim, k)).T)


def chord_to_geodesic(chord, plus, radius):
    """Geodesic distance on a sphere from |x - x'| and |x + x'|; stable near 0 and pi."""
    return 2.0 * radius * np.arctan2(chord, plus)


def sphere_distances(P, radius, flavor):
    dm, dp = _kernels.pair_norms(np.ascontiguousarray(P))
    if flavor == "euclidean":
        return dm
    geo = chord_to_geodesic(dm, dp, radius)
    np.fill_diagonal(geo, 0.0)
    return geo


def hermitian_modulus(P, d):
    """|<z_i, z_j>| for all pairs, for rows of P read as vectors over R, C or H."""
    k = P.shape[0]
    if d == 1:
        return np.abs(P @ P.T)
    Z = P.reshape(k, -1, d)
    if d == 2:
        c = Z[..., 0] + 1j * Z[..., 1]
        return np.abs(c @ c.conj().T)
    z0, z1, z2, z3 = (Z[..., i] for i in range(4))
    # components of sum_l conj(w_l) z_l with z = rows, w = columns
    p0 = z0 @ z0.T + z1 @ z1.T + z2 @ z2.T + z3 @ z3.T
    p1 = z1 @ z0.T - z0 @ z1.T - z3 @ z2.T + z2 @ z3.T
    p2 = z2 @ z0.T + z3 @ z1.T - z0 @ z2.T - z1 @ z3.T
    p3 = z3 @ z0.T - z2 @ z1.T + z1 @ z2.T - z0 @ z3.T
    return np.sqrt(p0 * p0 + p1 * p1 + p2 * p2 + p3 * p3)


def quotient_distances(P, d, radius=None, flavor="euclidean"):
    """Distances between orbits of the unit scalars acting on the rows of P.

    Euclidean flavor: the closed form above.  Geodesic flavor (rows on a
    sphere of ``radius``): the geodesic preimage of the Euclidean quotient
    distance, which is the smallest geodesic distance between the orbits.
    """
    sq = np.einsum("ij,ij->i", P, P)
    q = hermitian_modulus(P, d)
    base = sq[:, None] + sq[None, :]
    minus = np.sqrt(np.maximum(base - 2.0 * q, 0.0))
    np.fill_diagonal(minus, 0.0)
    minus = 0.5 * (minus + minus.T)
    if flavor == "euclidean":
        return minus
    plus = np.sqrt(base + 2.0 * q)
    geo = chord_to_geodesic(minus, 0.5 * (plus + plus.T), radius)
    np.fill_diagonal(geo, 0.0)
    return geo


# above this size the cubic triangle pass is replaced by a random-triple check
FULL_TRIANGLE_LIMIT = 1000


def _uniform(dist):
    k = dist.shape[0]
    full = k <= FULL_TRIANGLE_LIMIT
    X = validate_space(dist, np.full(k, 1.0 / k), check_triangle=full)
    if not full:
        spot_check_triangle(X.dist)
    return X


def sample_sphere(spec: ModelSpec, return_points=False):
    """Uniform sample of S^n(r) in R^(n+1) with geodesic or Euclidean distances."""
    if spec.kind != "sphere":
        raise ValueError("sample_sphere needs kind 'sphere'")
    P = sphere_points(spec.n + 1, spec.k, spec.radius, spec.seed)
    X = _uniform(sphere_distances(P, spec.radius, spec.flavor))
    return (X, P) if return_points else X


def sample_projective(spec: ModelSpec, return_points=False):
    """Sample of FP^n(r): points of S^(d(n+1)-1)(r) with orbit distances."""
    if spec.kind != "projective":
        raise ValueError("sample_projective needs kind 'projective'")
    d = spec.d
    P = sphere_points(d * (spec.n + 1), spec.k, spec.radius, spec.seed)
    X = _uniform(quotient_distances(P, d, spec.radius, spec.flavor))
    return (X, P) if return_points else X


def sample_gaussian(spec: ModelSpec, return_points=False):
    """k draws of the centered Gaussian with standard deviation ``lam`` per real coordinate."""
    if spec.kind == "gaussian":
        P = gaussian_points(spec.n, spec.k, spec.lam, spec.seed)
        X = _uniform(_kernels.pair_norms(np.ascontiguousarray(P))[0])
    elif spec.kind == "gaussian_quotient":
        P = gaussian_points(spec.d * spec.n, spec.k, spec.lam, spec.seed)
        X = _uniform(quotient_distances(P, spec.d))
    else:
        raise ValueError("sample_gaussian needs kind 'gaussian' or 'gaussian_quotient'")
    return (X, P) if return_points else X


def sample(spec: ModelSpec):
    if spec.kind == "sphere":
        return sample_sphere(spec)
    if spec.kind == "projective":
        return sample_projective(spec)
    if spec.kind == "two_point":
        return two_point(spec.radius or 0.0)
    return sample_gaussian(spec)


def two_point(s: float) -> FiniteMMSpace:
    """({0, s}, |.|, (delta_0 + delta_s) / 2); a single point when s = 0."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return one_point()
    return validate_space([[0.0, s], [s, 0.0]], [0.5, 0.5], labels=[0.0, float(s)])


# ------------------------------------------------------------------ brute-force orbit distances (checks)

def unit_scalars(d, count, seed=0):
    """A grid of unit scalars: +-1, ``count`` angles on U(1), or ``count`` quaternions."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = 2.0 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    g = stream(seed, 13)
    q = g.standard_normal((count, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def _times_scalar(w, t, d):
    """Right-multiply each F-coordinate of w (length N*d) by the unit scalar t.

    ``t`` may also be a stack of scalars of shape (m, d); the result then has
    shape (m, N*d).
    """
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    T = t[None, :] if single else t
    W = w.reshape(-1, d)
    if d == 1:
        out = W[None, :, 0] * T[:, :1]
        return out[0] if single else out
    cols = [W[None, :, i] for i in range(d)]
    b = [T[:, i, None] for i in range(d)]
    if d == 2:
        a0, a1 = cols
        parts = [a0 * b[0] - a1 * b[1], a0 * b[1] + a1 * b[0]]
    else:
        a0, a1, a2, a3 = cols
        b0, b1, b2, b3 = b
        parts = [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    out = np.stack(parts, axis=-1).reshape(T.shape[0], -1)
    return out[0] if single else out


def orbit_distance_search(z, w, d, count=4096, seed=0, polish=True):
    """min over unit scalars t of |z - w t| by grid search plus a local polish."""
    from scipy.optimize import minimize

    ts = unit_scalars(d, count, seed)
    vals = np.linalg.norm(z[None, :] - _times_scalar(w, ts, d), axis=1)
    best = float(vals.min())
    if not polish or d == 1:
        return best
    t0 = ts[int(np.argmin(vals))]

    if d == 2:
        th0 = math.atan2(t0[1], t0[0])

        def obj(x):
            return np.linalg.norm(z - _times_scalar(w, np.array([math.cos(x[0]), math.sin(x[0])]), 2))
        x0 = [th0]
    else:
        def obj(x):
            return np.linalg.norm(z - _times_scalar(w, x / np.linalg.norm(x), 4))
        x0 = t0
    res = minimize(obj, x0, method="BFGS", options={"gtol": 1e-12})
    return min(best, float(res.fun))
