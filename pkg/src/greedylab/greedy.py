"""Iterative greedy solvers and their run traces.

The core algorithms are the rescaled pure greedy iteration (strict and
weak) in Hilbert and l_p geometry: each step appends the best-correlated
atom with its natural step size and then rescales the whole iterate by
the scalar that best approximates the target from span{h_m}.  Pure
greedy, orthogonal greedy, and two relaxed-greedy baselines are included
for comparison, along with a certified generator of targets with bounded
coefficient mass.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary, NonSpanningDictionaryError, _select_arr
from .spaces import (
    HILBERT,
    Element,
    Geometry,
    _line_search_arr,
    _norm_arr,
    hilbert,
    lp,
)

STOP_MAX_ITER = "max_iter"
STOP_EXACT = "exact_recovery"
STOP_TOLERANCE = "tolerance"
STOP_ZERO_SUP = "zero_sup_dual"

EXACT_RECOVERY_REL = 1e-13

TRACE_CSV_COLUMNS = ("m", "atom_index", "dual_value", "lambda", "s", "error", "sup_dual")


@dataclass(frozen=True)
class WeaknessSequence:
    """Per-step selection slack t_k in (0, 1].

    ``constant(t)`` emits t forever, ``power_law(c, alpha)`` emits
    c * k**(-alpha), and ``explicit(values)`` cycles through a finite list
    when the iteration outruns it.
    """

    kind: str
    t: float | None = None
    c: float | None = None
    alpha: float | None = None
    values: tuple[float, ...] | None = None

    @classmethod
    def constant(cls, t: float) -> "WeaknessSequence":
        if not 0.0 < t <= 1.0:
            raise ValueError(f"t must lie in (0, 1], got {t}")
        return cls("constant", t=float(t))

    @classmethod
    def power_law(cls, c: float, alpha: float) -> "WeaknessSequence":
        if not 0.0 < c <= 1.0:
            raise ValueError(f"c must lie in (0, 1], got {c}")
        if alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        return cls("power_law", c=float(c), alpha=float(alpha))

    @classmethod
    def explicit(cls, values) -> "WeaknessSequence":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("explicit weakness sequence needs at least one value")
        if any(not 0.0 < v <= 1.0 for v in vals):
            raise ValueError("explicit weakness values must lie in (0, 1]")
        return cls("explicit", values=vals)

    def value(self, k: int) -> float:
        """t_k for step k >= 1."""
        if k < 1:
            raise ValueError(f"step index must be >= 1, got {k}")
        if self.kind == "constant":
            return self.t
        if self.kind == "power_law":
            return self.c * k ** (-self.alpha)
        return self.values[(k - 1) % len(self.values)]

    def prefix(self, m: int) -> np.ndarray:
        """First m values t_1..t_m."""
        return np.array([self.value(k) for k in range(1, m + 1)])

    def to_json(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "t": self.t}
        if self.kind == "power_law":
            return {"kind": "power_law", "c": self.c, "alpha": self.alpha}
        return {"kind": "explicit", "values": list(self.values)}

    @classmethod
    def from_json(cls, obj: dict) -> "WeaknessSequence":
        kind = obj.get("kind")
        if kind == "constant":
            return cls.constant(obj["t"])
        if kind == "power_law":
            return cls.power_law(obj["c"], obj["alpha"])
        if kind == "explicit":
            return cls.explicit(obj["values"])
        raise ValueError(f"unknown weakness sequence kind {kind!r}")


@dataclass(frozen=True)
class IterationRecord:
    """One solver step: chosen atom, step coefficient, rescale factor,
    and the error after the step."""

    m: int
    atom_index: int
    dual_value: float
    lam: float
    s: float
    error: float
    sup_dual: float


@dataclass
class A1Target:
    """Target with a construction certificate: f = sum_i c_i * atom_i with
    sum_i |c_i| = M, so M bounds the coefficient-mass seminorm of f."""

    f: Element
    coeffs: dict[int, float]
    M: float


@dataclass
class RunTrace:
    """Full per-iteration record of one solver run.

    ``weakness``, ``target_id``, and ``target_m`` (the certificate bound
    of the target, when known) travel with the trace so downstream
    verification can apply the correct rate bound.
    """

    algorithm: str
    geometry: Geometry
    records: list[IterationRecord]
    final_approx: Element | None
    stop_reason: str
    weakness: WeaknessSequence | None = None
    target_id: str | None = None
    target_m: float | None = None

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.records])

    def ms(self) -> np.ndarray:
        return np.array([r.m for r in self.records], dtype=int)

    def atom_indices(self) -> list[int]:
        return [r.atom_index for r in self.records]

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "geometry": {
                "kind": self.geometry.kind,
                "p": None if self.geometry.is_hilbert else self.geometry.p,
            },
            "stop_reason": self.stop_reason,
            "records": [
                {
                    "m": r.m,
                    "atom_index": r.atom_index,
                    "dual_value": r.dual_value,
                    "lambda": r.lam,
                    "s": r.s,
                    "error": r.error,
                    "sup_dual": r.sup_dual,
                }
                for r in self.records
            ],
            "ts": None if self.weakness is None else self.weakness.to_json(),
            "target_id": self.target_id,
            "target_m": self.target_m,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunTrace":
        geo = obj["geometry"]
        geometry = hilbert() if geo["kind"] == HILBERT else lp(float(geo["p"]))
        records = [
            IterationRecord(
                int(r["m"]),
                int(r["atom_index"]),
                float(r["dual_value"]),
                float(r["lambda"]),
                float(r["s"]),
                float(r["error"]),
                float(r["sup_dual"]),
            )
            for r in obj["records"]
        ]
        ts = obj.get("ts")
        tm = obj.get("target_m")
        return cls(
            algorithm=str(obj["algorithm"]),
            geometry=geometry,
            records=records,
            final_approx=None,
            stop_reason=str(obj["stop_reason"]),
            weakness=None if ts is None else WeaknessSequence.from_json(ts),
            target_id=obj.get("target_id"),
            target_m=None if tm is None else float(tm),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_CSV_COLUMNS)
        for r in self.records:
            writer.writerow(
                [
                    r.m,
                    r.atom_index,
                    format(r.dual_value, ".17g"),
                    format(r.lam, ".17g"),
                    format(r.s, ".17g"),
                    format(r.error, ".17g"),
                    format(r.sup_dual, ".17g"),
                ]
            )
        return buf.getvalue()


def target_to_json(target: A1Target, target_id: str | None = None) -> dict:
    geometry = target.f.geometry
    return {
        "target_id": target_id,
        "geometry": {"kind": geometry.kind, "p": None if geometry.is_hilbert else geometry.p},
        "n": len(target.f),
        "M": target.M,
        "coeffs": [[int(i), float(v)] for i, v in sorted(target.coeffs.items())],
        "f": target.f.coords.tolist(),
    }


def target_from_json(obj: dict) -> tuple[A1Target, str | None]:
    geo = obj["geometry"]
    n = int(obj["n"])
    geometry = hilbert(n) if geo["kind"] == HILBERT else lp(float(geo["p"]), n)
    f = Element(obj["f"], geometry)
    coeffs = {int(i): float(v) for i, v in obj["coeffs"]}
    return A1Target(f, coeffs, float(obj["M"])), obj.get("target_id")


def make_a1_target(dictionary: Dictionary, sparsity: int, M: float, seed: int) -> A1Target:
    """Draw a certified target: ``sparsity`` distinct atoms with signed
    coefficients whose absolute values sum to M exactly."""
    if not 1 <= sparsity <= len(dictionary):
        raise ValueError(f"sparsity must lie in [1, {len(dictionary)}], got {sparsity}")
    if M <= 0.0:
        raise ValueError(f"M must be positive, got {M}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(dictionary), size=sparsity, replace=False))
    mags = rng.dirichlet(np.ones(sparsity)) * M
    signs = np.where(rng.random(sparsity) < 0.5, -1.0, 1.0)
    c = signs * mags
    fv = c @ dictionary.matrix[idx]
    coeffs = {int(i): float(v) for i, v in zip(idx, c)}
    return A1Target(Element(fv, dictionary.geometry), coeffs, float(M))


def target_from_coeffs(dictionary: Dictionary, coeffs: dict[int, float]) -> A1Target:
    """Certified target from explicit coefficients; M = sum |c_i|."""
    if not coeffs:
        raise ValueError("coeffs must be nonempty")
    for i in coeffs:
        if not 0 <= i < len(dictionary):
            raise ValueError(f"atom index {i} out of range")
    items = sorted((int(i), float(v)) for i, v in coeffs.items())
    fv = np.zeros(dictionary.dim)
    M = 0.0
    for i, v in items:
        fv = fv + v * dictionary.matrix[i]
        M += abs(v)
    return A1Target(Element(fv, dictionary.geometry), dict(items), M)


def _empty_trace(algorithm, f, geometry, ts):
    zero = Element(np.zeros(len(f)), geometry)
    return RunTrace(algorithm, geometry, [], zero, STOP_EXACT, weakness=ts)


def _hilbert_greedy(f, dictionary, ts, m_max, eps, algorithm, rescale):
    if not f.geometry.is_hilbert:
        raise ValueError(f"{algorithm} requires Hilbert geometry")
    if f.geometry != dictionary.geometry:
        raise ValueError("target and dictionary live in different geometries")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    if eps < 0.0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    geometry = f.geometry
    A = dictionary.matrix
    fv = f.coords
    fnorm = math.sqrt(float(fv @ fv))
    if fnorm == 0.0:
        return _empty_trace(algorithm, f, geometry, ts)
    stop_exact = EXACT_RECOVERY_REL * fnorm
    stop_at = max(eps, stop_exact)
    approx = np.zeros_like(fv)
    residual = fv.copy()
    records: list[IterationRecord] = []
    stop_reason = STOP_MAX_ITER
    for m in range(1, m_max + 1):
        t = 1.0 if ts is None else ts.value(m)
        try:
            sel = _select_arr(residual, dictionary, t)
        except NonSpanningDictionaryError:
            stop_reason = STOP_ZERO_SUP
            break
        lam = sel.dual_value
        h = approx + lam * A[sel.index]
        hh = float(h @ h)
        if hh == 0.0:
            # h = 0 only when approx = -lam * atom; the projection onto
            # span{0} is 0
            s = 0.0 if rescale else 1.0
            approx = np.zeros_like(fv)
        elif rescale:
            s = float(fv @ h) / hh
            approx = s * h
        else:
            s = 1.0
            approx = h
        residual = fv - approx
        err = math.sqrt(float(residual @ residual))
        records.append(IterationRecord(m, sel.index, sel.dual_value, lam, s, err, sel.sup_dual))
        if err <= stop_at:
            stop_reason = STOP_EXACT if err <= stop_exact else STOP_TOLERANCE
            break
    return RunTrace(algorithm, geometry, records, Element(approx, geometry), stop_reason, weakness=ts)


def rpga_hilbert(f: Element, dictionary: Dictionary, m_max: int, eps: float = 0.0) -> RunTrace:
    """Rescaled pure greedy run in Hilbert geometry.

    Step m: pick the atom maximizing |<f - f_{m-1}, phi>|, set
    lam = <f - f_{m-1}, phi>, h = f_{m-1} + lam * phi, and rescale by
    s = <f, h>/||h||^2 so f_m = s h is the orthogonal projection of f
    onto span{h}.  Stops at m_max, at error <= eps, or on exact recovery.
    """
    return _hilbert_greedy(f, dictionary, None, m_max, eps, "rpga", rescale=True)


def wrpga_hilbert(
    f: Element, dictionary: Dictionary, ts: WeaknessSequence, m_max: int, eps: float = 0.0
) -> RunTrace:
    """Weak variant of :func:`rpga_hilbert`: at step m any atom whose
    absolute dual reaches t_m times the supremum may be chosen.  With a
    constant sequence of ones the trace is identical to the strict run."""
    if ts is None:
        raise ValueError("weak variant requires a weakness sequence")
    return _hilbert_greedy(f, dictionary, ts, m_max, eps, "wrpga", rescale=True)


def pga_hilbert(f: Element, dictionary: Dictionary, m_max: int, eps: float = 0.0) -> RunTrace:
    """Pure greedy (matching pursuit) baseline: same loop as
    :func:`rpga_hilbert` with the rescale factor forced to 1."""
    return _hilbert_greedy(f, dictionary, None, m_max, eps, "pga", rescale=False)


def _banach_greedy(f, dictionary, ts, m_max, eps, ls_tol, algorithm):
    geometry = f.geometry
    if geometry.is_hilbert:
        raise ValueError(f"{algorithm} requires l_p geometry; use the Hilbert solver")
    if geometry != dictionary.geometry:
        raise ValueError("target and dictionary live in different geometries")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    if eps < 0.0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    gamma, q = geometry.gamma, geometry.q
    scale = (2.0 * gamma * q) ** (1.0 / (1.0 - q))
    exponent = 1.0 / (q - 1.0)
    A = dictionary.matrix
    fv = f.coords
    fnorm = _norm_arr(fv, geometry)
    if fnorm == 0.0:
        return _empty_trace(algorithm, f, geometry, ts)
    stop_exact = EXACT_RECOVERY_REL * fnorm
    stop_at = max(eps, stop_exact)
    approx = np.zeros_like(fv)
    residual = fv.copy()
    res_norm = fnorm
    records: list[IterationRecord] = []
    stop_reason = STOP_MAX_ITER
    for m in range(1, m_max + 1):
        t = 1.0 if ts is None else ts.value(m)
        try:
            sel = _select_arr(residual, dictionary, t)
        except NonSpanningDictionaryError:
            stop_reason = STOP_ZERO_SUP
            break
        F = sel.dual_value
        lam = math.copysign(res_norm * scale * abs(F) ** exponent, F)
        h = approx + lam * A[sel.index]
        if _norm_arr(h, geometry) == 0.0:
            s = 0.0
            approx = np.zeros_like(fv)
        else:
            s = _line_search_arr(fv, h, geometry, ls_tol)
            approx = s * h
        residual = fv - approx
        res_norm = _norm_arr(residual, geometry)
        records.append(IterationRecord(m, sel.index, F, lam, s, res_norm, sel.sup_dual))
        if res_norm <= stop_at:
            stop_reason = STOP_EXACT if res_norm <= stop_exact else STOP_TOLERANCE
            break
    return RunTrace(algorithm, geometry, records, Element(approx, geometry), stop_reason, weakness=ts)


def rpga_banach(
    f: Element, dictionary: Dictionary, m_max: int, eps: float = 0.0, ls_tol: float = 1e-12
) -> RunTrace:
    """Rescaled pure greedy run in l_p geometry.

    Selection uses the norming functional of the residual.  The step
    coefficient is lam = sign(F) ||f - f_{m-1}|| (2 gamma q)^(1/(1-q))
    |F|^(1/(q-1)) where F is the dual at the chosen atom and (gamma, q)
    are the smoothness parameters of the norm; the rescale factor comes
    from the scalar line search, so the iterate is near-stationary:
    F_{f - f_m}(f_m) ~ 0 after every step.
    """
    return _banach_greedy(f, dictionary, None, m_max, eps, ls_tol, "rpga")


def wrpga_banach(
    f: Element,
    dictionary: Dictionary,
    ts: WeaknessSequence,
    m_max: int,
    eps: float = 0.0,
    ls_tol: float = 1e-12,
) -> RunTrace:
    """Weak variant of :func:`rpga_banach`; a constant sequence of ones
    reproduces the strict run exactly."""
    if ts is None:
        raise ValueError("weak variant requires a weakness sequence")
    return _banach_greedy(f, dictionary, ts, m_max, eps, ls_tol, "wrpga")


def oga_hilbert(f: Element, dictionary: Dictionary, m_max: int, eps: float = 0.0) -> RunTrace:
    """Orthogonal greedy baseline: greedy selection on the residual, then
    least-squares re-projection of f onto the span of all selected atoms
    (normal equations, ridge 1e-12 fallback on rank deficiency)."""
    if not f.geometry.is_hilbert:
        raise ValueError("oga requires Hilbert geometry")
    if f.geometry != dictionary.geometry:
        raise ValueError("target and dictionary live in different geometries")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    geometry = f.geometry
    A = dictionary.matrix
    fv = f.coords
    fnorm = math.sqrt(float(fv @ fv))
    if fnorm == 0.0:
        return _empty_trace("oga", f, geometry, None)
    stop_exact = EXACT_RECOVERY_REL * fnorm
    stop_at = max(eps, stop_exact)
    approx = np.zeros_like(fv)
    residual = fv.copy()
    selected: list[int] = []
    records: list[IterationRecord] = []
    stop_reason = STOP_MAX_ITER
    for m in range(1, m_max + 1):
        try:
            sel = _select_arr(residual, dictionary, 1.0)
        except NonSpanningDictionaryError:
            stop_reason = STOP_ZERO_SUP
            break
        selected.append(sel.index)
        S = A[selected]
        gram = S @ S.T
        rhs = S @ fv
        try:
            coef = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            coef = np.linalg.solve(gram + 1e-12 * np.eye(len(selected)), rhs)
        approx = coef @ S
        residual = fv - approx
        err = math.sqrt(float(residual @ residual))
        records.append(IterationRecord(m, sel.index, sel.dual_value, sel.dual_value, 1.0, err, sel.sup_dual))
        if err <= stop_at:
            stop_reason = STOP_EXACT if err <= stop_exact else STOP_TOLERANCE
            break
    return RunTrace("oga", geometry, records, Element(approx, geometry), stop_reason)


def rga_hilbert(f: Element, dictionary: Dictionary, m_max: int, variant: str = "classic") -> RunTrace:
    """Relaxed greedy baseline.

    Both variants start from f_1 = <f, phi_1> phi_1.  For m >= 2 the
    classic variant mixes with weight 1/m toward the atom best correlated
    with the residual; the optimized variant searches all (atom, weight)
    pairs with weight in [0, 1] and takes the best.  The record's ``s``
    field stores the mixing weight.
    """
    if variant not in ("classic", "optimized"):
        raise ValueError(f"variant must be 'classic' or 'optimized', got {variant!r}")
    if not f.geometry.is_hilbert:
        raise ValueError("rga requires Hilbert geometry")
    if f.geometry != dictionary.geometry:
        raise ValueError("target and dictionary live in different geometries")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    algorithm = f"rga_{variant}"
    geometry = f.geometry
    A = dictionary.matrix
    fv = f.coords
    fnorm = math.sqrt(float(fv @ fv))
    if fnorm == 0.0:
        return _empty_trace(algorithm, f, geometry, None)
    stop_exact = EXACT_RECOVERY_REL * fnorm
    approx = np.zeros_like(fv)
    residual = fv.copy()
    records: list[IterationRecord] = []
    stop_reason = STOP_MAX_ITER
    for m in range(1, m_max + 1):
        try:
            sel = _select_arr(residual, dictionary, 1.0)
        except NonSpanningDictionaryError:
            stop_reason = STOP_ZERO_SUP
            break
        if m == 1:
            lam = sel.dual_value
            weight = 1.0
            approx = lam * A[sel.index]
            index, dual, sup = sel.index, sel.dual_value, sel.sup_dual
        elif variant == "classic":
            lam = sel.dual_value
            weight = 1.0 / m
            approx = (1.0 - weight) * approx + weight * A[sel.index]
            index, dual, sup = sel.index, sel.dual_value, sel.sup_dual
        else:
            # joint minimization over atoms and mixing weights a in [0, 1]
            diff = A - approx[None, :]
            num = diff @ residual
            den = (diff * diff).sum(axis=1)
            safe = np.where(den > 0.0, den, 1.0)
            a = np.clip(num / safe, 0.0, 1.0)
            a[den == 0.0] = 0.0
            errsq = float(residual @ residual) - 2.0 * a * num + a * a * den
            j = int(np.argmin(errsq))
            duals = A @ residual
            weight = float(a[j])
            lam = float(duals[j])
            approx = (1.0 - weight) * approx + weight * A[j]
            index, dual, sup = j, float(duals[j]), float(np.abs(duals).max())
        residual = fv - approx
        err = math.sqrt(float(residual @ residual))
        records.append(IterationRecord(m, index, dual, lam, weight if m > 1 else 1.0, err, sup))
        if err <= stop_exact:
            stop_reason = STOP_EXACT
            break
    return RunTrace(algorithm, geometry, records, Element(approx, geometry), stop_reason)


def trace_iterates(trace: RunTrace, dictionary: Dictionary) -> list[np.ndarray]:
    """Reconstruct the iterate sequence f_1, ..., f_m from a trace.

    Replays the recorded (atom, lambda, s) updates with the same float
    operations as the solver, so results match the run bit for bit.  Not
    available for oga, whose iterates are full projections that the
    scalar records do not determine.
    """
    A = dictionary.matrix
    iterates: list[np.ndarray] = []
    approx = np.zeros(dictionary.dim)
    if trace.algorithm in ("rpga", "wrpga", "pga"):
        for r in trace.records:
            h = approx + r.lam * A[r.atom_index]
            approx = r.s * h  # multiplying by the recorded 1.0 is bit-exact
            iterates.append(approx)
    elif trace.algorithm in ("rga_classic", "rga_optimized"):
        for r in trace.records:
            if r.m == 1:
                approx = r.lam * A[r.atom_index]
            else:
                approx = (1.0 - r.s) * approx + r.s * A[r.atom_index]
            iterates.append(approx)
    else:
        raise ValueError(f"iterates of {trace.algorithm!r} cannot be reconstructed from records")
    return iterates
