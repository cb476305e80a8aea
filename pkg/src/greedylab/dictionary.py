"""Finite dictionaries of unit-norm atoms: construction, validation, and
greedy/weak atom selection."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .spaces import (
    HILBERT,
    Element,
    Geometry,
    _dual_weight,
    _norm_arr,
    _unit_rows,
    hilbert,
    lp,
)

UNIT_NORM_TOL = 1e-12
_MAX_REDRAWS = 8


class NonSpanningDictionaryError(RuntimeError):
    """Residual is nonzero but every atom has zero dual value."""


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one atom selection.

    ``dual_value`` is the dual at the chosen atom (inner product in
    Hilbert geometry, norming functional of the residual in l_p) and
    ``sup_dual`` the maximum absolute dual over the dictionary, so
    |dual_value| >= t * sup_dual for the weakness parameter used.
    """

    index: int
    dual_value: float
    sup_dual: float


class Dictionary:
    """Ordered finite set of unit-norm atoms in a common geometry.

    Atoms are stored row-major in a read-only (K, n) matrix.  Every atom
    must have unit norm in the dictionary's geometry to within 1e-12.
    """

    __slots__ = ("matrix", "geometry", "label")

    def __init__(self, atoms, geometry: Geometry, label: str = ""):
        A = np.array(atoms, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("atoms must form a nonempty (K, n) matrix")
        if not np.all(np.isfinite(A)):
            raise ValueError("atoms must be finite")
        if geometry.dim != A.shape[1]:
            raise ValueError(
                f"atoms have dimension {A.shape[1]} but geometry registers dim={geometry.dim}"
            )
        norms = np.array([_norm_arr(row, geometry) for row in A])
        worst = float(np.abs(norms - 1.0).max())
        if worst > UNIT_NORM_TOL:
            raise ValueError(f"atoms must be unit norm; worst deviation {worst:.3e}")
        A.flags.writeable = False
        self.matrix = A
        self.geometry = geometry
        self.label = label

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def atom(self, index: int) -> Element:
        return Element(self.matrix[index], self.geometry)

    @property
    def atoms(self) -> list[Element]:
        return [self.atom(i) for i in range(len(self))]

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        """True for a square Hilbert-geometry matrix with Gram ~ identity."""
        if not self.geometry.is_hilbert or len(self) != self.dim:
            return False
        gram = self.matrix @ self.matrix.T
        return float(np.abs(gram - np.eye(len(self))).max()) <= tol

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "kind": self.geometry.kind,
            "p": None if self.geometry.is_hilbert else self.geometry.p,
            "n": self.dim,
            "atoms": [row.tolist() for row in self.matrix],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Dictionary":
        n = int(obj["n"])
        geometry = hilbert(n) if obj["kind"] == HILBERT else lp(float(obj["p"]), n)
        return cls(obj["atoms"], geometry, str(obj.get("label", "")))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "Dictionary":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def build_orthonormal(n: int, geometry: Geometry | None = None, label: str = "orthonormal") -> Dictionary:
    """Standard basis {e_1, ..., e_n}; pairwise orthogonal, unit norm in
    every l_p."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    geometry = geometry if geometry is not None else hilbert(n)
    return Dictionary(np.eye(n), geometry, label)


def build_random_unit(
    n: int,
    K: int,
    seed: int,
    geometry: Geometry | None = None,
    spanning: bool = True,
    label: str = "random_unit",
) -> Dictionary:
    """K atoms drawn uniformly on the unit sphere of the geometry.

    Deterministic given ``seed``.  With ``spanning`` (default) the atom
    matrix is required to have full rank n; rank-deficient draws are
    redrawn a bounded number of times.
    """
    if n < 1 or K < 1:
        raise ValueError(f"n and K must be >= 1, got n={n}, K={K}")
    if spanning and K < n:
        raise ValueError(f"spanning dictionary needs K >= n, got K={K} < n={n}")
    geometry = geometry if geometry is not None else hilbert(n)
    rng = np.random.default_rng(seed)
    for _ in range(_MAX_REDRAWS):
        A = _unit_rows(rng, K, geometry)
        if not spanning or np.linalg.matrix_rank(A) == n:
            return Dictionary(A, geometry, label)
    raise ValueError("failed to draw a spanning dictionary")


def _haar_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def build_union_bases(
    n: int,
    count: int,
    seed: int,
    geometry: Geometry | None = None,
    label: str = "union_bases",
) -> Dictionary:
    """Union of ``count`` bases of R^n: the standard basis first, then
    seeded random rotations of it (K = count * n atoms).

    In Hilbert geometry each block is orthonormal; in l_p geometry the
    rotated atoms are renormalized to unit l_p norm.
    """
    if n < 1 or count < 1:
        raise ValueError(f"n and count must be >= 1, got n={n}, count={count}")
    geometry = geometry if geometry is not None else hilbert(n)
    rng = np.random.default_rng(seed)
    blocks = [np.eye(n)]
    for _ in range(count - 1):
        blocks.append(_haar_rotation(rng, n).T)
    A = np.vstack(blocks)
    if not geometry.is_hilbert and geometry.p != 2.0:
        norms = (np.abs(A) ** geometry.p).sum(axis=1) ** (1.0 / geometry.p)
        A = A / norms[:, None]
    return Dictionary(A, geometry, label)


def _select_arr(residual: np.ndarray, dictionary: Dictionary, t: float) -> SelectionResult:
    if not 0.0 < t <= 1.0:
        raise ValueError(f"weakness parameter t must lie in (0, 1], got {t}")
    geometry = dictionary.geometry
    rnorm = _norm_arr(residual, geometry)
    if rnorm == 0.0:
        raise ValueError("residual is zero; stop the iteration before selecting")
    if geometry.is_hilbert:
        duals = dictionary.matrix @ residual
    else:
        p = geometry.p
        duals = (dictionary.matrix @ _dual_weight(residual, p)) / rnorm ** (p - 1.0)
    absd = np.abs(duals)
    sup = float(absd.max())
    if sup == 0.0:
        raise NonSpanningDictionaryError(
            "all dual values vanish on a nonzero residual; dictionary does not span"
        )
    if t == 1.0:
        index = int(np.argmax(absd))  # first occurrence: lowest index on ties
    else:
        index = int(np.argmax(absd >= t * sup))  # first atom clearing the threshold
    return SelectionResult(index, float(duals[index]), sup)


def select(residual: Element, dictionary: Dictionary, t: float = 1.0) -> SelectionResult:
    """Pick an atom whose dual value is within a factor t of the supremum.

    With t = 1 this is the exact argmax of the absolute dual (lowest index
    on ties); with t < 1 it returns the first atom in order whose absolute
    dual reaches t * sup, which is a valid weak choice that can differ
    from the argmax.
    """
    if residual.geometry != dictionary.geometry:
        raise ValueError("residual and dictionary live in different geometries")
    return _select_arr(residual.coords, dictionary, t)
