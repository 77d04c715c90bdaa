"""Entire functions P(z) = prod_{j>=q} (1 + z^2 / (l_j m_j)^2) built on a
weight sequence, with certified truncation, lower-bound gauges, and
Taylor-mode derivatives of 1/P.

The product is accumulated in log space over j <= J; the dropped factors are
restored through the expansion sum_k (-1)^(k+1) z^(2k) S_k / k with
S_k = sum_{j>J} (l_j m_j)^(-2k), summed numerically with an Euler-Maclaurin
remainder.  The reported tail bound is the magnitude of the first neglected
term of that expansion at the working radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import weights as wt

__all__ = [
    "Ultrapolynomial",
    "build",
    "eval_ln",
    "evaluate",
    "lower_bound_check",
    "reciprocal_derivative_check",
    "choose_parameters",
    "ZeroOnGridError",
    "LowerBoundReport",
    "DerivativeBoundReport",
]

_TAIL_ORDER = 4
_CHUNK = 4096


class ZeroOnGridError(ValueError):
    """Evaluation hit a factor zero (possible only off the strip)."""


@dataclass(frozen=True)
class Ultrapolynomial:
    """Truncated factor table plus tail data.

    ``ln_c`` holds ln(l_j m_j) for j = q..J; ``tail_S[k-1]`` is S_k above;
    ``tail_bound`` bounds |ln of dropped factors| at the working radius.
    """

    base: wt.WeightSequence
    q: int
    J: int
    radius: float
    ln_c: np.ndarray
    tail_S: np.ndarray
    tail_bound: float
    l: float | None = None          # Beurling scale
    l_rule: Callable | None = None  # Roumieu: j -> l_j (vectorized)

    @property
    def mode(self) -> str:
        return "beurling" if self.l is not None else "roumieu"


def _factor_scales(seq: wt.WeightSequence, q: int, hi: int, l: float | None,
                   l_rule: Callable | None) -> np.ndarray:
    """ln(l_j m_j) for j = q..hi (inclusive)."""
    j = np.arange(q, hi + 1)
    ln_m = seq.ln_quotient(j)
    if l is not None:
        return math.log(l) + ln_m
    return np.log(l_rule(j)) + ln_m


def _tail_sums(seq, q, J, l, l_rule, orders=_TAIL_ORDER + 1) -> np.ndarray:
    """S_k = sum_{j>J} (l_j m_j)^(-2k) for k = 1..orders, numerically summed to
    8J with an Euler-Maclaurin closure from a local power-law fit."""
    Jbig = 8 * J
    out = np.zeros(orders)
    ln_c_mid = None
    for lo in range(J + 1, Jbig + 1, 65536):
        hi = min(lo + 65536 - 1, Jbig)
        ln_c = _factor_scales(seq, lo, hi, l, l_rule)
        for k in range(1, orders + 1):
            out[k - 1] += float(np.sum(np.exp(-2.0 * k * ln_c)))
    # remainder beyond Jbig via local power law f(j) ~ j^(-alpha)
    t1, t0 = float(Jbig + 1), float(Jbig // 2)
    ln_f1 = -2.0 * _factor_scales(seq, int(t1), int(t1), l, l_rule)[0]
    ln_f0 = -2.0 * _factor_scales(seq, int(t0), int(t0), l, l_rule)[0]
    for k in range(1, orders + 1):
        alpha = -k * (ln_f1 - ln_f0) / math.log(t1 / t0)
        f1 = math.exp(k * ln_f1)
        if alpha <= 1.0:
            raise wt.MalformedSequenceError(
                "sum over 1/(l_j m_j)^2 does not converge; check (M.3)")
        out[k - 1] += f1 * t1 / (alpha - 1.0) + f1 / 2.0 + alpha * f1 / (12.0 * t1)
    return out


def build(seq: wt.WeightSequence, l: float | None = None, q: int = 1,
          l_sequence: wt.RSequence | None = None, radius: float = 50.0,
          J: int | None = None, tail_target: float = 1e-10) -> Ultrapolynomial:
    """Construct the truncated product for Beurling scale ``l`` or a Roumieu
    scale sequence; J grows by doubling until the post-correction tail bound
    at the working radius is below ``tail_target``."""
    if (l is None) == (l_sequence is None):
        raise ValueError("exactly one of l, l_sequence")
    l_rule = None
    if l_sequence is not None:
        r = l_sequence.r

        def l_rule(j, _r=r):
            j = np.asarray(j)
            return _r[np.minimum(j, _r.size) - 1]

    J_try = int(J) if J is not None else 8192
    while True:
        S = _tail_sums(seq, q, J_try, l, l_rule)
        # first neglected expansion term at the working radius
        bound = radius ** (2 * (_TAIL_ORDER + 1)) * S[_TAIL_ORDER] / (_TAIL_ORDER + 1)
        if J is not None or bound <= tail_target or J_try >= 1 << 17:
            break
        J_try *= 2
    ln_c = _factor_scales(seq, q, J_try, l, l_rule)
    return Ultrapolynomial(base=seq, q=q, J=J_try, radius=radius, ln_c=ln_c,
                           tail_S=S[:_TAIL_ORDER], tail_bound=float(bound),
                           l=l, l_rule=l_rule)


def _tail_poly_ln(P: Ultrapolynomial, z2: np.ndarray) -> np.ndarray:
    """Tail contribution to ln P as a polynomial in z^2."""
    acc = np.zeros_like(z2)
    for k in range(_TAIL_ORDER, 0, -1):
        sign = 1.0 if (k + 1) % 2 == 0 else -1.0
        acc = acc * z2 + sign * P.tail_S[k - 1] / k
    return acc * z2


def eval_ln(P: Ultrapolynomial, z) -> np.ndarray:
    """ln P(z), complex for complex input.  Raises on a factor zero."""
    z = np.asarray(z)
    z2 = z.astype(complex) ** 2 if np.iscomplexobj(z) else z.astype(float) ** 2
    out = np.zeros_like(z2)
    c2 = np.exp(2.0 * P.ln_c)
    for lo in range(0, c2.size, _CHUNK):
        w = z2[..., None] / c2[lo:lo + _CHUNK]
        fac = 1.0 + w
        if np.iscomplexobj(fac):
            if np.any(np.abs(fac) < 1e-300):
                raise ZeroOnGridError("evaluation point coincides with a factor zero")
            out = out + np.sum(np.log(fac), axis=-1)
        else:
            if np.any(fac <= 0.0):
                raise ZeroOnGridError("evaluation point coincides with a factor zero")
            out = out + np.sum(np.log1p(w), axis=-1)
    return out + _tail_poly_ln(P, z2)


def evaluate(P: Ultrapolynomial, z) -> np.ndarray:
    """P(z) with relative truncation error <= exp(tail_bound) - 1."""
    return np.exp(eval_ln(P, z))


# ---------------------------------------------------------------------------
# lower bound |P| >= C e^{gauge}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundReport:
    passed: bool
    C: float
    failure_radius: float | None
    margins: np.ndarray


def lower_bound_check(P: Ultrapolynomial, k, grid: np.ndarray,
                      r_sequence: wt.RSequence | None = None) -> LowerBoundReport:
    """Fit C with |P(xi)| >= C e^{M(|xi|/k)} (Beurling; ``k`` a float) or
    >= C e^{N_{k_p}(|xi|)} (Roumieu; pass ``r_sequence``).

    The fit fails when the log-margin is still falling at the edge of the
    grid: no positive C works beyond the reported failure radius.
    """
    grid = np.asarray(grid, dtype=float)
    ln_p = eval_ln(P, grid).real
    if r_sequence is not None:
        gauge = wt.nrp_assoc_grid(P.base, r_sequence, np.abs(grid))
    else:
        # make sure the gauge is not horizon-saturated on this grid
        base = wt.extend_horizon(
            P.base, wt.horizon_for_gauge(P.base, float(np.max(np.abs(grid))) / k))
        gauge = base.assoc_grid(np.abs(grid) / k)
    margin = ln_p - gauge
    i_min = int(np.argmin(margin))
    tail = margin[(4 * grid.size) // 5:]
    falling = tail.size >= 2 and float(np.mean(np.diff(tail))) < -1e-9
    at_edge = i_min >= grid.size - max(2, grid.size // 20)
    passed = not (falling and at_edge)
    return LowerBoundReport(
        passed=passed,
        C=math.exp(float(margin[i_min])),
        failure_radius=float(grid[i_min]) if not passed else None,
        margins=margin,
    )


# ---------------------------------------------------------------------------
# Taylor-mode derivatives of 1/P
# ---------------------------------------------------------------------------

def _ln_jet(P: Ultrapolynomial, x: np.ndarray, K: int) -> np.ndarray:
    """Taylor coefficients of t -> ln P(x + t) up to order K, shape (K+1, n).

    Coefficient n>=1 of each factor ln(c^2 + (x+t)^2) - 2 ln c is
    (-1)^(n-1) (2/n) Re (x - i c)^(-n); the tail polynomial contributes its
    exact binomial expansion.
    """
    x = np.asarray(x, dtype=float)
    jets = np.zeros((K + 1, x.size))
    jets[0] = eval_ln(P, x).real
    c = np.exp(P.ln_c)
    for lo in range(0, c.size, _CHUNK):
        zinv = 1.0 / (x[:, None] - 1j * c[lo:lo + _CHUNK])
        w = zinv.copy()
        for n in range(1, K + 1):
            sign = 1.0 if (n - 1) % 2 == 0 else -1.0
            jets[n] += sign * (2.0 / n) * np.sum(w.real, axis=-1)
            if n < K:
                w = w * zinv
    # tail polynomial sum_k s_k (x+t)^(2k), s_k = (-1)^(k+1) S_k / k
    for k in range(1, _TAIL_ORDER + 1):
        s = (1.0 if (k + 1) % 2 == 0 else -1.0) * P.tail_S[k - 1] / k
        for n in range(1, min(K, 2 * k) + 1):
            jets[n] += s * math.comb(2 * k, n) * x ** (2 * k - n)
    return jets


def _jet_exp(a: np.ndarray) -> np.ndarray:
    """exp of a power series given by coefficient rows a[0..K]."""
    K = a.shape[0] - 1
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for n in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for k in range(1, n + 1):
            acc += k * a[k] * out[n - k]
        out[n] = acc / n
    return out


def reciprocal_jet(P: Ultrapolynomial, x: np.ndarray, K: int) -> np.ndarray:
    """Taylor coefficients of 1/P at the points x: row n is the n-th
    coefficient, so the n-th derivative is n! * row n."""
    return _jet_exp(-_ln_jet(P, x, K))


@dataclass(frozen=True)
class DerivativeBoundReport:
    C: float
    per_order_C: np.ndarray
    r: float
    k: float


def reciprocal_derivative_check(P: Ultrapolynomial, K: int, r: float, k: float,
                                grid: np.ndarray) -> DerivativeBoundReport:
    """Fit C in |d^a (1/P)(x)| <= C a!/r^a e^{-M(|x|/k)} for a <= K on the grid.

    Derivatives come from truncated-jet arithmetic (the product has ~1e4
    factors; symbolic expansion is out of the question).
    """
    if K > 8:
        raise ValueError("derivative order budget is K <= 8")
    grid = np.asarray(grid, dtype=float)
    jets = reciprocal_jet(P, grid, K)
    gauge = P.base.assoc_grid(np.abs(grid) / k)
    per = np.zeros(K + 1)
    for a in range(K + 1):
        deriv = np.abs(jets[a]) * math.factorial(a)
        per[a] = float(np.max(deriv * (r ** a) * np.exp(gauge) / math.factorial(a)))
    return DerivativeBoundReport(C=float(np.max(per)), per_order_C=per, r=r, k=k)


# ---------------------------------------------------------------------------
# parameter search
# ---------------------------------------------------------------------------

class ParameterSearchError(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def choose_parameters(seq: wt.WeightSequence, k, c: float,
                      grid: np.ndarray | None = None, q_max: int = 8,
                      l_halvings: int = 8,
                      k_sequence: wt.RSequence | None = None):
    """Search (l, q) (or (l_p, q)) until the lower bound with target ``k``
    passes on the working grid and no factor zero meets the strip |Im z| <= c.

    Deterministic order: for each q (ascending) l is halved from 1; the first
    admissible pair wins.  Zeros sit at +- i l_j m_j, so the strip condition
    is exactly min_j l_j m_j > c.
    """
    if grid is None:
        grid = np.linspace(0.0, 50.0, 501)
    roumieu = k_sequence is not None
    kp = wt.regularize_rsequence(k_sequence) if roumieu else None
    best = None
    for qq in range(1, q_max + 1):
        l = 1.0
        for _ in range(l_halvings):
            if roumieu:
                l_seq = wt.RSequence(l * kp.r, label="l_p")
                min_scale = float(np.min(l_seq.r[qq - 1:] *
                                         np.exp(seq.ln_quotient(np.arange(qq, kp.P + 1)))))
            else:
                l_seq = None
                min_scale = l * math.exp(float(seq.ln_quotient(np.array([qq]))[0]))
            if min_scale > c * (1.0 + 1e-9):
                P = build(seq, l=None if roumieu else l, q=qq,
                          l_sequence=l_seq, radius=float(np.max(grid)))
                rep = lower_bound_check(P, k, grid, r_sequence=k_sequence if roumieu else None)
                if best is None or rep.C > best[2]:
                    best = ((l_seq if roumieu else l), qq, rep.C)
                if rep.passed and rep.C > 0:
                    return (l_seq if roumieu else l), qq
            l /= 2.0
    raise ParameterSearchError("no (l, q) satisfied the lower bound on the grid", best)
