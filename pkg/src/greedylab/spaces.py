"""Ambient-space geometry for greedy sparse approximation.

Everything lives in R^n equipped either with the euclidean inner-product
norm ("hilbert") or with an l_p norm, 1 < p < inf ("lp").  This module
provides the norm/duality primitives the solvers are built on: inner
products, norms, norming functionals, the one-dimensional rescaling line
search, power-type smoothness parameters, a Monte-Carlo estimator of the
modulus of smoothness, and the closed-form majorant for recursively damped
sequences used by the rate checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HILBERT = "hilbert"
LP = "lp"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class UndefinedFunctionalError(ValueError):
    """Norming functional requested at the zero element."""


def smoothness_params(p: float) -> tuple[float, float]:
    """Power-type smoothness parameters (gamma, q) of the l_p norm.

    The modulus of smoothness of l_p satisfies rho(u) <= gamma * u**q with
    (gamma, q) = (1/p, p) for 1 < p <= 2 and ((p-1)/2, 2) for p >= 2; the
    two branches agree at p = 2, where (gamma, q) = (1/2, 2).
    """
    if not (isinstance(p, (int, float)) and math.isfinite(p) and p > 1.0):
        raise ValueError(f"p must be finite and > 1, got {p!r}")
    p = float(p)
    if p <= 2.0:
        return 1.0 / p, p
    return (p - 1.0) / 2.0, 2.0


@dataclass(frozen=True)
class Geometry:
    """Norm structure of the ambient space.

    ``kind`` is ``"hilbert"`` or ``"lp"``.  ``p`` is the norm exponent
    (2 for Hilbert).  ``gamma`` and ``q`` are the smoothness parameters
    of the norm; the Hilbert case fixes (gamma, q) = (1/2, 2).  ``dim``
    is the registered ambient dimension; it may be None only for
    dimension-free descriptors parsed from serialized metadata.
    """

    kind: str
    p: float
    gamma: float
    q: float
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in (HILBERT, LP):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.kind == HILBERT:
            if (self.p, self.gamma, self.q) != (2.0, 0.5, 2.0):
                raise ValueError("Hilbert geometry requires p=2, gamma=1/2, q=2")
        else:
            if smoothness_params(self.p) != (self.gamma, self.q):
                raise ValueError(
                    f"(gamma, q)={self.gamma, self.q} inconsistent with p={self.p}"
                )
        if not 1.0 < self.q <= 2.0:
            raise ValueError(f"q must lie in (1, 2], got {self.q}")
        if self.dim is not None and self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @property
    def is_hilbert(self) -> bool:
        return self.kind == HILBERT

    def describe(self) -> str:
        """Short label, e.g. ``hilbert`` or ``lp(3)``."""
        if self.is_hilbert:
            return HILBERT
        return f"lp({self.p:g})"


def hilbert(dim: int | None = None) -> Geometry:
    """Euclidean geometry on R^dim."""
    return Geometry(HILBERT, 2.0, 0.5, 2.0, dim)


def lp(p: float, dim: int | None = None) -> Geometry:
    """l_p geometry on R^dim, 1 < p < inf."""
    gamma, q = smoothness_params(p)
    return Geometry(LP, float(p), gamma, q, dim)


class Element:
    """A point of the ambient space: dense coordinates tied to a geometry.

    Coordinates are copied on construction and frozen; Elements are safe
    to share between threads.
    """

    __slots__ = ("coords", "geometry")

    def __init__(self, coords, geometry: Geometry):
        arr = np.array(coords, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coords must be a nonempty 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite")
        if geometry.dim != arr.size:
            raise ValueError(
                f"coords have length {arr.size} but geometry registers dim={geometry.dim}"
            )
        arr.flags.writeable = False
        self.coords = arr
        self.geometry = geometry

    def __len__(self) -> int:
        return self.coords.size

    def __repr__(self) -> str:
        return f"Element({self.coords.tolist()}, {self.geometry.describe()})"


def _check_pair(x: Element, y: Element) -> None:
    if x.geometry != y.geometry:
        raise ValueError("elements live in different geometries")
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} != {len(y)}")


def _norm_arr(v: np.ndarray, geometry: Geometry) -> float:
    if geometry.p == 2.0:
        return math.sqrt(float(v @ v))
    a = np.abs(v)
    return float((a ** geometry.p).sum() ** (1.0 / geometry.p))


def _dual_weight(v: np.ndarray, p: float) -> np.ndarray:
    # coordinate gradient direction of the l_p norm; sign(0) = 0 so zero
    # coordinates contribute nothing, matching the subgradient at 0
    return np.sign(v) * np.abs(v) ** (p - 1.0)


def inner(x: Element, y: Element) -> float:
    """Euclidean inner product <x, y>; defined only in Hilbert geometry."""
    _check_pair(x, y)
    if not x.geometry.is_hilbert:
        raise ValueError("inner product is defined only in Hilbert geometry")
    return float(x.coords @ y.coords)


def norm(x: Element) -> float:
    """Norm of x in its geometry: (sum |x_i|^p)^(1/p), p = 2 for Hilbert."""
    return _norm_arr(x.coords, x.geometry)


def norming_functional(f: Element, g: Element) -> float:
    """Evaluate F_f(g), the norm-one functional peaking at f.

    F_f satisfies F_f(f) = ||f|| and |F_f(g)| <= ||g||.  In Hilbert
    geometry F_f(g) = <f, g>/||f||; in l_p it is the explicit power-law
    form sum_i sign(f_i)|f_i|^(p-1) g_i / ||f||^(p-1).
    """
    _check_pair(f, g)
    nf = _norm_arr(f.coords, f.geometry)
    if nf == 0.0:
        raise UndefinedFunctionalError("norming functional undefined at the zero element")
    if f.geometry.is_hilbert:
        return float(f.coords @ g.coords) / nf
    p = f.geometry.p
    return float(_dual_weight(f.coords, p) @ g.coords) / nf ** (p - 1.0)


def _golden_section(fun, lo: float, hi: float, tol: float) -> float:
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fun(d)
    return 0.5 * (lo + hi)


def _descent_weight(fv: np.ndarray, hv: np.ndarray, p: float, s: float) -> float:
    # proportional to -d/ds ||f - s h||_p (same sign); positive left of the
    # minimizer, negative right of it, continuous for p > 1
    u = fv - s * hv
    return float(_dual_weight(u, p) @ hv)


def _refine_stationary(fv, hv, p: float, s: float, tol: float) -> float:
    # Sharpen the golden-section result to a near-exact stationary point.
    # The descent weight is monotone nonincreasing in s (the objective is
    # convex), so its sign change is the minimizer: bracket it by geometric
    # expansion, then bisect.  Golden section alone localizes the argument
    # only to about sqrt(eps * g / g'') because of comparison noise at the
    # flat bottom, which is far too coarse for the duality checks on
    # well-converged runs.
    v0 = _descent_weight(fv, hv, p, s)
    if v0 == 0.0:
        return s
    step = max(tol, 1e-15 * (1.0 + abs(s)))
    if v0 > 0.0:
        lo, hi = s, s + step
        vhi = _descent_weight(fv, hv, p, hi)
        for _ in range(96):
            if vhi <= 0.0:
                break
            step *= 2.0
            lo, hi = hi, hi + step
            vhi = _descent_weight(fv, hv, p, hi)
        else:
            return s
        if vhi == 0.0:
            return hi
    else:
        hi, lo = s, s - step
        vlo = _descent_weight(fv, hv, p, lo)
        for _ in range(96):
            if vlo >= 0.0:
                break
            step *= 2.0
            hi, lo = lo, lo - step
            vlo = _descent_weight(fv, hv, p, lo)
        else:
            return s
        if vlo == 0.0:
            return lo
    for _ in range(128):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        v = _descent_weight(fv, hv, p, mid)
        if v > 0.0:
            lo = mid
        elif v < 0.0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def _line_search_arr(fv: np.ndarray, hv: np.ndarray, geometry: Geometry, tol: float) -> float:
    hn = _norm_arr(hv, geometry)
    if hn == 0.0:
        raise ValueError("h must be nonzero")
    if geometry.is_hilbert:
        return float(fv @ hv) / float(hv @ hv)
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    p = geometry.p
    # ||f - s h|| >= |s| ||h|| - ||f|| exceeds the value at s = 0 outside
    # this bracket, so the minimizer is always inside it
    bound = 2.0 * _norm_arr(fv, geometry) / hn + 1.0
    s = _golden_section(lambda t: _norm_arr(fv - t * hv, geometry), -bound, bound, tol)
    return _refine_stationary(fv, hv, p, s, tol)


def line_search_scale(f: Element, h: Element, tol: float = 1e-12) -> float:
    """Scalar s minimizing ||f - s h|| in the shared geometry.

    Hilbert geometry uses the closed form <f, h>/||h||^2.  l_p geometry
    minimizes the convex objective by bracketed golden-section search with
    argument tolerance ``tol``, followed by a derivative-sign bisection
    polish.
    """
    _check_pair(f, h)
    return _line_search_arr(f.coords, h.coords, f.geometry, tol)


def lemma_sequence_bound(B: float, r: float, ell: float, r_ks, m: int) -> float:
    """Closed-form majorant for recursively damped nonnegative sequences.

    If a_1 <= B and a_{k+1} <= a_k (1 - (r_{k+1}/r) a_k^ell) with all
    quantities nonnegative, then for m >= 2

        a_m <= max(1, ell^(-1/ell)) r^(1/ell) (r B^-ell + sum_{k=2}^m r_k)^(-1/ell).

    ``r_ks`` supplies r_2, r_3, ... in order and must cover k = 2..m.
    """
    if B <= 0.0 or r <= 0.0 or ell <= 0.0:
        raise ValueError("B, r, ell must be positive")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    rks = np.asarray(r_ks, dtype=float)
    if rks.size < m - 1:
        raise ValueError(f"need r_k for k=2..{m}, got only {rks.size} values")
    if np.any(rks[: m - 1] < 0.0):
        raise ValueError("r_k values must be nonnegative")
    tail = float(rks[: m - 1].sum())
    prefactor = max(1.0, ell ** (-1.0 / ell))
    return prefactor * r ** (1.0 / ell) * (r * B ** (-ell) + tail) ** (-1.0 / ell)


def _unit_rows(rng: np.random.Generator, count: int, geometry: Geometry) -> np.ndarray:
    rows = rng.standard_normal((count, geometry.dim))
    if geometry.p == 2.0:
        norms = np.sqrt((rows * rows).sum(axis=1))
    else:
        norms = (np.abs(rows) ** geometry.p).sum(axis=1) ** (1.0 / geometry.p)
    # a zero gaussian row has probability zero; fall back to a basis vector
    bad = norms == 0.0
    if np.any(bad):
        rows[bad, 0] = 1.0
        norms[bad] = 1.0
    return rows / norms[:, None]


def modulus_estimate(geometry: Geometry, u: float, samples: int, seed: int) -> float:
    """Monte-Carlo lower estimate of the modulus of smoothness at u.

    Maximizes (||f + u g|| + ||f - u g||)/2 - 1 over ``samples`` random
    unit pairs (f, g), so the result never exceeds the true supremum and
    must satisfy estimate <= gamma * u**q.
    """
    if geometry.dim is None:
        raise ValueError("geometry must register an ambient dimension")
    if u <= 0.0:
        raise ValueError(f"u must be positive, got {u}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    F = _unit_rows(rng, samples, geometry)
    G = _unit_rows(rng, samples, geometry)
    plus = F + u * G
    minus = F - u * G
    if geometry.p == 2.0:
        np_ = np.sqrt((plus * plus).sum(axis=1))
        nm = np.sqrt((minus * minus).sum(axis=1))
    else:
        p = geometry.p
        np_ = (np.abs(plus) ** p).sum(axis=1) ** (1.0 / p)
        nm = (np.abs(minus) ** p).sum(axis=1) ** (1.0 / p)
    return float((0.5 * (np_ + nm) - 1.0).max())
