"""Post-hoc verification of greedy runs: convergence-rate bound checks,
empirical decay-rate fits, and brute-force best-m-term oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .greedy import A1Target, RunTrace, WeaknessSequence
from .spaces import Element, _norm_arr

# absolute slack absorbing float accumulation; the Banach checks run at a
# looser slack because the rescale factor comes from a tolerance-limited
# line search
BOUND_SLACK = {"T31": 1e-9, "T41": 1e-9, "T53": 1e-6, "T61": 1e-6}

ORACLE_SUBSET_LIMIT = 1_000_000


class InsufficientDataError(ValueError):
    """Too few usable records to fit a decay rate."""


class CombinatorialLimitError(ValueError):
    """Exhaustive subset search would exceed the size guard."""


@dataclass(frozen=True)
class BoundReport:
    """Result of checking one rate guarantee over a whole trace.

    ``margin`` is the minimum over recorded steps of bound_m - e_m, and
    ``worst_m`` the step attaining it (0 when no step was checkable).
    """

    theorem: str
    satisfied: bool
    margin: float
    worst_m: int
    slack: float

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "worst_m": self.worst_m,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log error against log m (natural logs)."""

    slope: float
    intercept: float
    r2: float
    m_range: tuple[int, int]

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "m_range": list(self.m_range),
        }


def applicable_theorem(trace: RunTrace) -> str:
    """Which rate guarantee applies to a trace, by algorithm and geometry."""
    key = (trace.algorithm, trace.geometry.is_hilbert)
    table = {
        ("rpga", True): "T31",
        ("wrpga", True): "T41",
        ("rpga", False): "T53",
        ("wrpga", False): "T61",
    }
    if key not in table:
        raise ValueError(f"no rate guarantee for algorithm {trace.algorithm!r}")
    return table[key]


def theorem_bounds(
    theorem: str,
    ms: np.ndarray,
    M: float,
    geometry,
    ts: WeaknessSequence | None,
) -> np.ndarray:
    """Right-hand sides of the rate guarantee at the given step indices.

    T31: M m^(-1/2) for m >= 1.
    T41: M (sum_{k<=m} t_k^2)^(-1/2) for m >= 1.
    T53: M (1 + ((q-1)/q) (2 gamma q)^(1/(1-q)) (m-1))^(1/q - 1) for m >= 2.
    T61: M (t_1^Q + ((q-1)/q) (2 gamma q)^(1/(1-q)) sum_{2<=k<=m} t_k^Q)^(1/q - 1),
         Q = q/(q-1), for m >= 2.
    Steps outside a theorem's range get +inf (never binding).
    """
    ms = np.asarray(ms, dtype=int)
    if theorem == "T31":
        return M / np.sqrt(ms.astype(float))
    if theorem == "T41":
        if ts is None:
            raise ValueError("T41 needs the weakness sequence")
        tks = ts.prefix(int(ms.max()))
        csum = np.cumsum(tks * tks)
        return M / np.sqrt(csum[ms - 1])
    gamma, q = geometry.gamma, geometry.q
    rate = ((q - 1.0) / q) * (2.0 * gamma * q) ** (1.0 / (1.0 - q))
    expo = 1.0 / q - 1.0
    if theorem == "T53":
        vals = M * (1.0 + rate * (ms - 1.0)) ** expo
        return np.where(ms >= 2, vals, np.inf)
    if theorem == "T61":
        if ts is None:
            raise ValueError("T61 needs the weakness sequence")
        Q = q / (q - 1.0)
        tks = ts.prefix(int(ms.max())) ** Q
        inner = tks[0] + rate * (np.cumsum(tks) - tks[0])
        vals = M * inner[ms - 1] ** expo
        return np.where(ms >= 2, vals, np.inf)
    raise ValueError(f"unknown theorem {theorem!r}")


def check_bound(trace: RunTrace, target: A1Target, ts: WeaknessSequence | None = None) -> BoundReport:
    """Check the applicable rate guarantee on a trace of a certified target.

    Selects the theorem from the trace's algorithm and geometry, evaluates
    its bound at every recorded step in range, and reports the worst
    margin.  A failure within slack of a proved guarantee indicates a
    defect, not a tolerance issue.
    """
    tgeo = target.f.geometry
    if trace.geometry.kind != tgeo.kind or (
        not tgeo.is_hilbert and trace.geometry.p != tgeo.p
    ):
        raise ValueError("trace and target geometries do not match")
    theorem = applicable_theorem(trace)
    if ts is None:
        ts = trace.weakness
    if theorem in ("T41", "T61") and ts is None:
        raise ValueError(f"{theorem} needs the weakness sequence used by the run")
    slack = BOUND_SLACK[theorem]
    if not trace.records:
        return BoundReport(theorem, True, math.inf, 0, slack)
    ms = trace.ms()
    errs = trace.errors()
    bounds = theorem_bounds(theorem, ms, target.M, tgeo, ts)
    margins = bounds - errs
    checkable = np.isfinite(bounds)
    if not np.any(checkable):
        return BoundReport(theorem, True, math.inf, 0, slack)
    i = int(np.argmin(np.where(checkable, margins, np.inf)))
    margin = float(margins[i])
    return BoundReport(theorem, margin >= -slack, margin, int(ms[i]), slack)


def fit_rate(trace: RunTrace, m_min: int = 1) -> RateFit:
    """Fit log e_m ~ intercept + slope * log m over usable records.

    Records below m_min or at the exact-recovery floor (relative to the
    largest recorded error) are excluded; at least three usable records
    are required.
    """
    if m_min < 1:
        raise ValueError(f"m_min must be >= 1, got {m_min}")
    ms = trace.ms()
    errs = trace.errors()
    if errs.size:
        floor = 1e-12 * float(errs.max())
        usable = (ms >= m_min) & (errs > floor)
    else:
        usable = np.zeros(0, dtype=bool)
    if int(usable.sum()) < 3:
        raise InsufficientDataError(
            f"need >= 3 usable records with m >= {m_min}, found {int(usable.sum())}"
        )
    x = np.log(ms[usable].astype(float))
    y = np.log(errs[usable])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), r2, (int(ms[usable].min()), int(ms[usable].max())))


def best_mterm_oracle(f: Element, dictionary: Dictionary, m: int) -> tuple[float, tuple[int, ...]]:
    """Exact best m-term approximation error of f from the dictionary.

    Orthonormal dictionaries use the Parseval shortcut (keep the m largest
    coefficients); otherwise every size-m support is tried with a
    least-squares projection, guarded by a subset-count limit.  Returns
    (error, support), ties broken toward the lexicographically smallest
    support.
    """
    if not f.geometry.is_hilbert:
        raise ValueError("best-m-term oracle requires Hilbert geometry")
    if f.geometry != dictionary.geometry:
        raise ValueError("target and dictionary live in different geometries")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    fv = f.coords
    if m == 0:
        return _norm_arr(fv, f.geometry), ()
    K = len(dictionary)
    r = min(m, K)
    A = dictionary.matrix
    if dictionary.is_orthonormal():
        c = A @ fv
        order = np.argsort(-np.abs(c), kind="stable")  # stable: lowest index wins ties
        keep = np.sort(order[:r])
        tail = c[order[r:]]
        return math.sqrt(float(tail @ tail)), tuple(int(i) for i in keep)
    if math.comb(K, r) > ORACLE_SUBSET_LIMIT:
        raise CombinatorialLimitError(
            f"C({K}, {r}) subsets exceed the limit of {ORACLE_SUBSET_LIMIT}"
        )
    best_err = math.inf
    best_support: tuple[int, ...] = ()
    for support in itertools.combinations(range(K), r):
        S = A[list(support)]
        coef, *_ = np.linalg.lstsq(S.T, fv, rcond=None)
        res = fv - coef @ S
        err = math.sqrt(float(res @ res))
        if err < best_err:
            best_err = err
            best_support = support
    return best_err, best_support
