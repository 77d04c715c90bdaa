"""Weight sequences and their growth gauges.

A weight sequence ``M_p`` (``M_0 = 1``) controls derivative growth in the
whole calculus.  This module holds the finite-horizon representation of such
sequences, validators for the three classical growth conditions

* log-convexity              ``M_p^2 <= M_{p-1} M_{p+1}``            (M.1)
* product stability          ``M_p <= c0 H^p min_q M_{p-q} M_q``     (M.2)
* strong non-quasianalyticity  ``sum_{p>q} M_{p-1}/M_p <= c0 q M_q/M_{q+1}``  (M.3)

together with the associated function ``M(rho) = sup_p log+ rho^p / M_p``,
its variant for rescaled denominators ``M_p * prod r_j``, and the sequence
lemmas consumed downstream (quotient-gauge growth, sequence regularization,
inclusion exponents, exterior infimum bounds).

All sequence arithmetic is done in log space: ``p!^2 R_p`` leaves float range
near ``p = 85``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_HORIZON = 64

__all__ = [
    "MalformedSequenceError",
    "WeightSequence",
    "RSequence",
    "Witnesses",
    "ValidationReport",
    "AssocValue",
    "gevrey",
    "counterexample_pair",
    "from_ln_file",
    "validate",
    "associated_function",
    "nrp_associated",
    "regularize_rsequence",
    "gauge_growth_check",
    "inclusion_exponent",
    "inf_bound_check",
    "inf_bound_l_sweep",
]


class MalformedSequenceError(ValueError):
    """Raised for nonpositive entries, M_0 != 1, or a too-short horizon."""


@dataclass(frozen=True)
class Witnesses:
    """Fitted constants for (M.2)/(M.3) on the horizon.

    ``c0`` is the combined witness max(c0_m2, c0_m3); lemma checks that quote
    a single c0 use it.
    """

    c0: float
    H: float
    c0_m2: float
    c0_m3: float


@dataclass(frozen=True)
class WeightSequence:
    """Finite-horizon table of ln M_p with optional rule for quotients beyond it.

    Parameters
    ----------
    ln_M : array of shape (P+1,)
        Natural logs of M_0..M_P.  M_0 must be 1 (ln 0.0).
    label : str
        Human-readable tag used in reports.
    ln_m_rule : callable, optional
        Vectorized ``j -> ln m_j`` valid for arbitrary ``j >= 1``; present for
        generated families (Gevrey, the quasianalytic-boundary fixture) and
        absent for file-loaded tables.  Infinite products (ultrapolynomials)
        need quotients far beyond the horizon.
    witnesses : Witnesses, optional
        Present after validation.
    """

    ln_M: np.ndarray
    label: str = ""
    ln_m_rule: Callable[[np.ndarray], np.ndarray] | None = None
    witnesses: Witnesses | None = None

    def __post_init__(self):
        arr = np.asarray(self.ln_M, dtype=float)
        object.__setattr__(self, "ln_M", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise MalformedSequenceError("need at least M_0, M_1")
        if not np.all(np.isfinite(arr)):
            raise MalformedSequenceError("nonpositive or non-finite entries")
        if abs(arr[0]) > 1e-14:
            raise MalformedSequenceError("M_0 must equal 1")

    @property
    def P(self) -> int:
        return self.ln_M.size - 1

    @property
    def ln_m(self) -> np.ndarray:
        """ln m_p = ln M_p - ln M_{p-1}, p = 1..P (index 0 is m_1)."""
        return np.diff(self.ln_M)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.ln_M)

    @property
    def m(self) -> np.ndarray:
        return np.exp(self.ln_m)

    def ln_quotient(self, j) -> np.ndarray:
        """ln m_j for j >= 1, using the generating rule beyond the horizon."""
        j = np.asarray(j)
        if self.ln_m_rule is not None:
            return self.ln_m_rule(j)
        if np.any(j > self.P):
            raise MalformedSequenceError(
                f"quotient index beyond horizon P={self.P} and no generating rule"
            )
        return self.ln_m[j - 1]

    def with_witnesses(self, w: Witnesses) -> "WeightSequence":
        return replace(self, witnesses=w)

    def assoc_grid(self, rho: np.ndarray) -> np.ndarray:
        """Vectorized associated function max(0, max_p (p ln rho - ln M_p)).

        Truncated at the horizon; use :func:`associated_function` when the
        boundary diagnostic matters.
        """
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        pos = rho > 0
        if np.any(pos):
            ln_rho = np.log(rho[pos])
            p = np.arange(1, self.P + 1)
            vals = ln_rho[..., None] * p - self.ln_M[1:]
            out[pos] = np.maximum(0.0, vals.max(axis=-1))
        return out

    def __repr__(self):
        return f"WeightSequence({self.label or 'anon'}, P={self.P})"


@dataclass(frozen=True)
class RSequence:
    """Positive nondecreasing sequence r_1..r_P (finite-horizon stand-in for
    a sequence increasing to infinity; the proxy invariant is r_P > r_1)."""

    r: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "r", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise MalformedSequenceError("need at least r_1, r_2")
        if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
            raise MalformedSequenceError("entries must be positive finite")
        if np.any(np.diff(arr) < -1e-12 * np.abs(arr[:-1])):
            raise MalformedSequenceError("sequence must be nondecreasing")
        if not arr[-1] > arr[0]:
            raise MalformedSequenceError("r_P must exceed r_1 (growth proxy)")

    @property
    def P(self) -> int:
        return self.r.size

    @property
    def ln_r(self) -> np.ndarray:
        return np.log(self.r)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def gevrey(s: float, P: int = DEFAULT_HORIZON) -> WeightSequence:
    """Gevrey family M_p = (p!)^s."""
    p = np.arange(P + 1)
    ln_M = s * np.array([math.lgamma(k + 1) for k in p])

    def rule(j, _s=s):
        return _s * np.log(np.asarray(j, dtype=float))

    return WeightSequence(ln_M, label=f"gevrey({s})", ln_m_rule=rule)


def _ln_r_counterexample(j: np.ndarray) -> np.ndarray:
    """ln r_j with r_1 = 1 and r_j = j^(1 - 1/(2 sqrt(ln j))) for j >= 2."""
    j = np.asarray(j, dtype=float)
    out = np.zeros_like(j)
    big = j >= 2
    lj = np.log(j[big])
    out[big] = (1.0 - 1.0 / (2.0 * np.sqrt(lj))) * lj
    return out


def counterexample_pair(P: int = DEFAULT_HORIZON) -> tuple[WeightSequence, WeightSequence]:
    """The pair (A_p, M_p) = (p!^2, p!^2 prod r_j) sitting at the boundary of
    the inclusion scale: A_p is inside M_p^lam exactly for lam > 2/3."""
    A = gevrey(2.0, P)
    j = np.arange(1, P + 1)
    ln_R = np.concatenate([[0.0], np.cumsum(_ln_r_counterexample(j))])
    ln_M = A.ln_M + ln_R

    def rule(k):
        k = np.asarray(k, dtype=float)
        return 2.0 * np.log(k) + _ln_r_counterexample(k)

    M = WeightSequence(ln_M, label="counterexample", ln_m_rule=rule)
    return A, M


def counterexample_rsequence(P: int = DEFAULT_HORIZON) -> RSequence:
    j = np.arange(1, P + 1)
    return RSequence(np.exp(_ln_r_counterexample(j)), label="counterexample-r")


def from_ln_file(path, label: str = "") -> WeightSequence:
    """Load a sequence from a one-column text file of ln M_p values."""
    ln_M = np.loadtxt(path, dtype=float, ndmin=1)
    return WeightSequence(ln_M, label=label or str(path))


def extend_horizon(seq: WeightSequence, P_new: int) -> WeightSequence:
    """Regenerate the table out to P_new using the quotient rule."""
    if P_new <= seq.P:
        return seq
    if seq.ln_m_rule is None:
        raise MalformedSequenceError("cannot extend a table-only sequence")
    extra = seq.ln_m_rule(np.arange(seq.P + 1, P_new + 1))
    ln_M = np.concatenate([seq.ln_M, seq.ln_M[-1] + np.cumsum(extra)])
    return replace(seq, ln_M=ln_M, witnesses=None)


def horizon_for_gauge(seq: WeightSequence, rho_max: float, cap: int = 4096) -> int:
    """Smallest horizon whose quotients pass rho_max (the associated-function
    argmax then sits strictly inside)."""
    if seq.ln_m_rule is None:
        return seq.P
    P = seq.P
    while P < cap and float(seq.ln_m_rule(np.array([P]))[0]) < math.log(max(rho_max, 1e-300)):
        P *= 2
    return min(P, cap)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

_H_GRID = np.round(np.arange(10, 41) / 10.0, 10)  # 1.0, 1.1, ..., 4.0


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    violating_index: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    results: dict
    witnesses: Witnesses

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def passed(self, name: str) -> bool:
        return self.results[name].passed


def _fit_m2(ln_M: np.ndarray) -> tuple[float, float]:
    """Grid-search H then minimal c0 >= 1 for (M.2); ties go to smaller H."""
    P = ln_M.size - 1
    p = np.arange(P + 1)
    # min over q of ln M_{p-q} + ln M_q, per p
    ln_minconv = np.array(
        [np.min(ln_M[: k + 1] + ln_M[: k + 1][::-1]) for k in range(P + 1)]
    )
    excess = ln_M - ln_minconv  # needs <= ln c0 + p ln H
    best = None
    for H in _H_GRID:
        ln_c0 = max(0.0, float(np.max(excess - p * math.log(H))))
        if best is None or ln_c0 < best[0] - 1e-12:
            best = (ln_c0, H)
    return math.exp(best[0]), float(best[1])


def _fit_m3(ln_m: np.ndarray) -> tuple[float, int | None, bool]:
    """Minimal c0 for the horizon form of (M.3), plus a divergence trend flag.

    The infinite sum sum_{p>q} 1/m_p only exists when 1/m_p decays; at a
    finite horizon that is tested by comparing consecutive tail blocks.
    """
    inv_m = np.exp(-ln_m)  # 1/m_1 .. 1/m_P
    P = inv_m.size
    # suffix sums S_q = sum_{p=q+1}^P 1/m_p, q = 1..P-1
    suffix = np.concatenate([np.cumsum(inv_m[::-1])[::-1], [0.0]])
    q = np.arange(1, P)
    lhs = suffix[q]             # sum over p >= q+1
    rhs_base = q * inv_m[q]     # q * M_q/M_{q+1} = q / m_{q+1}
    ratios = lhs / rhs_base
    c0 = max(1.0, float(np.max(ratios)))
    worst = int(q[np.argmax(ratios)])
    # convergence trend: the last quarter block must be strictly smaller
    # than the preceding quarter (or already negligible)
    a, b = P // 2, (3 * P) // 4
    block1 = float(np.sum(inv_m[a:b]))
    block2 = float(np.sum(inv_m[b:]))
    divergent = not (block2 < 0.95 * block1 or block2 < 1e-12)
    return c0, worst, divergent


def validate(seq: WeightSequence, conditions: Iterable[str] = ("M1", "M2", "M3")) -> ValidationReport:
    """Check the requested growth conditions and fit witnesses on the horizon.

    For (M.2) the report carries the smallest fitted (c0, H) over the H grid
    (ties to smaller H); for (M.3) the smallest c0 for the truncated sums plus
    a tail-trend divergence flag.  Precondition: P >= 4.
    """
    if seq.P < 4:
        raise MalformedSequenceError("horizon too short for validation (P >= 4)")
    conditions = set(conditions)
    results: dict[str, ConditionResult] = {}

    ln_m = seq.ln_m
    if "M1" in conditions:
        # (M.1) <=> quotients nondecreasing
        diffs = np.diff(ln_m)
        bad = np.nonzero(diffs < -1e-12)[0]
        results["M1"] = ConditionResult(
            "M1", bad.size == 0, int(bad[0] + 2) if bad.size else None,
            detail="quotients m_p nondecreasing",
        )

    c0_m2, H = _fit_m2(seq.ln_M)
    if "M2" in conditions:
        results["M2"] = ConditionResult("M2", True, None, detail=f"c0={c0_m2:.6g}, H={H:g}")

    c0_m3, worst_q, divergent = _fit_m3(ln_m)
    if "M3" in conditions:
        results["M3"] = ConditionResult(
            "M3", not divergent, worst_q if divergent else None,
            detail=f"c0={c0_m3:.6g}" + (", divergent tail" if divergent else ""),
        )

    w = Witnesses(c0=max(c0_m2, c0_m3), H=H, c0_m2=c0_m2, c0_m3=c0_m3)
    return ValidationReport(results=results, witnesses=w)


def m1_direct_check(seq: WeightSequence) -> bool:
    """Direct M_p^2 <= M_{p-1} M_{p+1} test (cross-check for the quotient form)."""
    ln_M = seq.ln_M
    return bool(np.all(2 * ln_M[1:-1] <= ln_M[:-2] + ln_M[2:] + 1e-12))


# ---------------------------------------------------------------------------
# associated functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssocValue:
    """Associated-function value with the truncation diagnostic."""

    value: float
    argmax: int
    at_horizon: bool

    def __float__(self):
        return self.value


def _assoc(ln_denominators: np.ndarray, rho: float) -> AssocValue:
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho == 0.0:
        return AssocValue(0.0, 0, False)
    P = ln_denominators.size - 1
    p = np.arange(P + 1)
    vals = p * math.log(rho) - ln_denominators
    k = int(np.argmax(vals))
    v = float(vals[k])
    if v <= 0.0:
        return AssocValue(0.0, 0, False)
    return AssocValue(v, k, k == P)


def associated_function(seq: WeightSequence, rho: float) -> AssocValue:
    """M(rho) = max(0, max_{p<=P} (p ln rho - ln M_p)).

    Exact whenever the inner max is attained at p < P; ``at_horizon`` marks
    the truncated case (the value is then a lower bound).
    """
    return _assoc(seq.ln_M, rho)


def nrp_associated(seq: WeightSequence, r: RSequence, rho: float) -> AssocValue:
    """Associated function with denominators M_p * prod_{j<=p} r_j."""
    n = min(seq.P, r.P)
    ln_den = seq.ln_M[: n + 1].copy()
    ln_den[1:] += np.cumsum(r.ln_r[:n])
    return _assoc(ln_den, rho)


def nrp_assoc_grid(seq: WeightSequence, r: RSequence, rho: np.ndarray) -> np.ndarray:
    n = min(seq.P, r.P)
    ln_den = seq.ln_M[: n + 1].copy()
    ln_den[1:] += np.cumsum(r.ln_r[:n])
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    pos = rho > 0
    if np.any(pos):
        p = np.arange(1, n + 1)
        vals = np.log(rho[pos])[..., None] * p - ln_den[1:]
        out[pos] = np.maximum(0.0, vals.max(axis=-1))
    return out


# ---------------------------------------------------------------------------
# sequence regularization (product-subadditive envelope)
# ---------------------------------------------------------------------------

def _pav_nonincreasing(delta: np.ndarray) -> np.ndarray:
    """Pool adjacent violators: closest nonincreasing sequence (in L2)."""
    vals = list()
    weights = list()
    for d in delta:
        vals.append(float(d))
        weights.append(1.0)
        while len(vals) > 1 and vals[-2] < vals[-1] - 1e-15:
            v = (vals[-2] * weights[-2] + vals[-1] * weights[-1]) / (weights[-2] + weights[-1])
            w = weights[-2] + weights[-1]
            vals = vals[:-2] + [v]
            weights = weights[:-2] + [w]
    out = []
    for v, w in zip(vals, weights):
        out.extend([v] * int(round(w)))
    return np.array(out)


def product_inequality_violations(k: np.ndarray, horizon: int | None = None) -> int:
    """Count (p, q) with p+q <= P violating
    prod_{j<=p+q} k_j <= 2^(p+q) prod_{j<=p} k_j prod_{j<=q} k_j."""
    ln_k = np.log(np.asarray(k, dtype=float))
    P = ln_k.size if horizon is None else min(horizon, ln_k.size)
    T = np.concatenate([[0.0], np.cumsum(ln_k[:P])])  # T[p] = ln prod_{j<=p}
    count = 0
    for p in range(1, P):
        q = np.arange(1, min(p, P - p) + 1)
        lhs = T[p + q]
        rhs = (p + q) * math.log(2.0) + T[p] + T[q]
        count += int(np.sum(lhs > rhs + 1e-10))
    return count


def regularize_rsequence(k: RSequence) -> RSequence:
    """Shrink k to k' <= k whose log-products are 2^(p+q)-subadditive.

    Construction: pool-adjacent-violators on the increments of ln k gives the
    closest concave log-profile; pointwise min with k restores domination.
    The postcondition is checked exhaustively on the horizon; on failure the
    construction falls back to min(k_p, c sqrt(p)), which satisfies the
    product inequality outright.
    """
    ln_k = k.ln_r
    delta = np.concatenate([[ln_k[0]], np.diff(ln_k)])
    g = np.cumsum(_pav_nonincreasing(delta))
    ln_kp = np.minimum(ln_k, g)
    # nondecreasing repair (min can create dips)
    ln_kp = np.maximum.accumulate(ln_kp)
    ln_kp = np.minimum(ln_kp, ln_k)
    kp = np.exp(ln_kp)
    if product_inequality_violations(kp) > 0 or np.any(kp > k.r * (1 + 1e-12)) or not kp[-1] > kp[0]:
        p = np.arange(1, k.P + 1)
        c = float(np.min(k.r / np.sqrt(p)))
        kp = np.minimum(k.r, c * np.sqrt(p))
    return RSequence(kp, label=f"regularized({k.label or 'r'})")


# ---------------------------------------------------------------------------
# quotient-gauge growth check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeGrowthReport:
    passed: bool
    violating_n: int | None
    max_slack: float
    nrp_passed: bool
    nrp_fitted_c: float
    nrp_violating_n: int | None


def gauge_growth_check(
    seq: WeightSequence,
    m: float,
    nmax: int,
    witnesses: Witnesses | None = None,
    t: RSequence | None = None,
) -> GaugeGrowthReport:
    """Verify M(m m_n) <= 2 (c0 m + 2) n ln H + ln c0 for n <= nmax, and the
    rescaled-gauge branch N_{t_p}(m m_n) <= n ln H + ln c with c fitted on the
    first half of the range and re-verified on all of it.

    Precondition: witnesses present (validated sequence) or passed explicitly.
    """
    w = witnesses or seq.witnesses
    if w is None:
        raise ValueError("sequence must be validated first (witnesses required)")
    if t is None:
        t = RSequence(np.arange(1.0, seq.P + 1.0), label="t_p=p")
    ln_H = math.log(w.H) if w.H > 1 else math.log(1.0 + 1e-9)
    passed, violating, max_slack = True, None, -math.inf
    nrp_vals = []
    for n in range(1, nmax + 1):
        mn = math.exp(seq.ln_quotient(np.array([n]))[0]) if n <= seq.P else None
        if mn is None:
            break
        lhs = associated_function(seq, m * mn).value
        rhs = 2.0 * (w.c0 * m + 2.0) * n * ln_H + math.log(w.c0)
        max_slack = max(max_slack, lhs - rhs)
        if lhs > rhs + 1e-9 and passed:
            passed, violating = False, n
        nrp_vals.append(nrp_associated(seq, t, m * mn).value)
    ns = np.arange(1, len(nrp_vals) + 1)
    vals = np.array(nrp_vals)
    half = max(1, len(vals) // 2)
    ln_c = max(0.0, float(np.max(vals[:half] - ns[:half] * ln_H)))
    resid = vals - ns * ln_H - ln_c
    nrp_ok = bool(np.all(resid <= 1e-9))
    nrp_bad = int(ns[np.argmax(resid)]) if not nrp_ok else None
    return GaugeGrowthReport(passed, violating, max_slack, nrp_ok, math.exp(ln_c), nrp_bad)


# ---------------------------------------------------------------------------
# inclusion exponent
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InclusionFit:
    lam: float
    included: bool
    C: float | None
    L: float | None
    detail: str = ""


@dataclass(frozen=True)
class InclusionReport:
    fits: list
    rho0_bracket: tuple

    def fit_at(self, lam: float) -> InclusionFit:
        for f in self.fits:
            if abs(f.lam - lam) < 1e-12:
                return f
        raise KeyError(lam)


def inclusion_exponent(A: WeightSequence, M: WeightSequence, lam_grid: Sequence[float]) -> InclusionReport:
    """For each lambda, fit minimal (C, L) with A_p <= C L^p M_p^lambda on the
    horizon, or report divergence of A_p/(L^p M_p^lambda).

    Divergence is a horizon-trend call: if the increments of
    s_p = ln A_p - lambda ln M_p are still growing over the last quarter of
    the horizon, no fixed L can dominate and the ratio is flagged divergent.
    Returns a bracketing interval for rho0 = inf{lambda : A_p in M_p^lambda}.
    """
    P = min(A.P, M.P)
    fits = []
    lo, hi = 0.0, 1.0
    for lam in lam_grid:
        s = A.ln_M[: P + 1] - lam * M.ln_M[: P + 1]
        d = np.diff(s)
        tail = np.diff(d[(3 * P) // 4 - 1:])
        still_growing = tail.size > 0 and float(np.mean(tail)) > 1e-12
        if still_growing:
            fits.append(InclusionFit(lam, False, None, None, "increments still growing at horizon"))
            lo = max(lo, lam)
        else:
            ln_L = max(0.0, float(np.max(d[P // 2:])))
            ln_C = max(0.0, float(np.max(s - ln_L * np.arange(P + 1))))
            fits.append(InclusionFit(lam, True, math.exp(ln_C), math.exp(ln_L)))
            hi = min(hi, lam)
    return InclusionReport(fits=fits, rho0_bracket=(lo, hi))


# ---------------------------------------------------------------------------
# exterior infimum bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InfBoundReport:
    l: float
    B: float
    m_tilde: float
    C: float
    fit_ok: bool
    boundary_flags: np.ndarray
    f_values: np.ndarray


_MTILDE_GRID = np.round(np.arange(20, 0, -1) / 20.0, 10)  # 1.0, 0.95, ..., 0.05


def _inf_bound_f(seq: WeightSequence, l: float, B: float, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f(rho) = inf{ M_n / (l^n rho^n) : n <= P, rho >= B m_n } in log space.

    Empty feasible set (rho < B m_1) falls back to n = 1 with a boundary flag.
    """
    ln_m = seq.ln_m
    n = np.arange(1, seq.P + 1)
    ln_rho = np.log(rho)
    terms = seq.ln_M[1:] - n * (math.log(l) + ln_rho[:, None])  # (G, P)
    feasible = ln_rho[:, None] >= math.log(B) + ln_m[None, :] - 1e-12
    boundary = ~feasible[:, 0]
    terms = np.where(feasible, terms, np.inf)
    ln_f = terms.min(axis=1)
    fallback = seq.ln_M[1] - (math.log(l) + ln_rho)
    ln_f = np.where(boundary, fallback, ln_f)
    return ln_f, boundary


def inf_bound_check(
    seq: WeightSequence, l: float, B: float, rho_grid: np.ndarray,
    m_tilde: float | None = None,
) -> InfBoundReport:
    """Fit (C, m_tilde) with f(rho) <= C exp(-M(l m_tilde rho)) on the grid.

    The fit accepts a candidate m_tilde only when the margin
    ln f + M(l m_tilde rho) stops growing over the last quarter of the grid
    (otherwise the bound shape is wrong and the sup is horizon-limited).
    """
    if not (0 < l <= 1):
        raise ValueError("l must lie in (0, 1]")
    if not B > 1:
        raise ValueError("B must exceed 1")
    rho = np.asarray(rho_grid, dtype=float)
    ln_f, boundary = _inf_bound_f(seq, l, B, rho)
    candidates = [m_tilde] if m_tilde is not None else list(_MTILDE_GRID)
    for mt in candidates:
        margin = ln_f + seq.assoc_grid(l * mt * rho)
        tail = margin[(3 * rho.size) // 4:]
        ok = tail.size < 2 or float(np.mean(np.diff(tail))) <= 1e-9
        if ok:
            C = math.exp(float(np.max(margin)))
            return InfBoundReport(l, B, float(mt), C, True, boundary, np.exp(ln_f))
    mt = candidates[-1]
    margin = ln_f + seq.assoc_grid(l * mt * rho)
    return InfBoundReport(l, B, float(mt), math.exp(float(np.max(margin))), False,
                          boundary, np.exp(ln_f))


def inf_bound_l_sweep(seq: WeightSequence, l_list: Sequence[float], B: float,
                      rho_grid: np.ndarray) -> tuple[float, list]:
    """Fit m_tilde per l, take the common (smallest) one, and re-verify it for
    every l.  Returns (common m_tilde, per-l reports at the common value)."""
    fitted = [inf_bound_check(seq, l, B, rho_grid) for l in l_list]
    mt = min(r.m_tilde for r in fitted)
    reports = [inf_bound_check(seq, l, B, rho_grid, m_tilde=mt) for l in l_list]
    return mt, reports
