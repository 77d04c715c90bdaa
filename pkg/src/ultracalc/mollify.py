"""Gevrey-class cutoff machinery.

Radial bump profiles glue 1 to 0 between two radii through the classical
flat function exp(-v^(-1/(s-1))); both transition ends are infinitely flat,
and membership in the Gevrey-s class is checked by fitting |phi^(k)| <=
C h^k (k!)^s numerically.  On top of the profile sit the dyadic-in-m_n
frequency partition, the phase-space excision family used for resummation,
and the off-diagonal cutoff theta built by grid convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.signal import fftconvolve

from . import weights as wt

__all__ = [
    "QuasianalyticOrderError",
    "ResolutionError",
    "BumpProfile",
    "make_bump",
    "dyadic_partition",
    "ExcisionFamily",
    "excision",
    "CutoffSymbol",
    "offdiag_cutoff",
    "derivative_bound_fit",
]


class QuasianalyticOrderError(ValueError):
    """Gevrey order s <= 1 has no compactly supported members."""


class ResolutionError(ValueError):
    """Grid too coarse for the requested mollifier radius."""


_MAX_DERIV = 6


def _profile_lambdas(s: float, K: int = _MAX_DERIV):
    """Symbolically differentiate the two-sided glue
    g(v)/(g(v) + g(1-v)), g(v) = exp(-v^(-1/(s-1))), and lambdify orders 0..K.

    v runs from 1 at the inner radius down to 0 at the outer radius.
    """
    v = sp.Symbol("v", positive=True)
    kappa = sp.Rational(1) / (sp.nsimplify(s, rational=True) - 1)
    g = sp.exp(-v ** (-kappa))
    gm = sp.exp(-(1 - v) ** (-kappa))
    phi = g / (g + gm)
    fns = []
    expr = phi
    for k in range(K + 1):
        fns.append(sp.lambdify(v, expr, modules="numpy"))
        if k < K:
            expr = sp.diff(expr, v)
    return fns


@dataclass(frozen=True)
class BumpProfile:
    """Radial profile equal to 1 on [0, a], 0 on [b, inf), Gevrey of order s.

    Derivatives up to order 6 are evaluated from symbolic formulas; the
    clipped band near v in {0, 1} (where every derivative underflows) is
    mapped to the exact flat values.
    """

    s: float
    a: float
    b: float
    _fns: tuple = field(repr=False, default=())

    def __post_init__(self):
        if self.s <= 1.0:
            raise QuasianalyticOrderError(f"Gevrey order must exceed 1, got {self.s}")
        if not (0.0 <= self.a < self.b):
            raise ValueError("need 0 <= a < b")
        if not self._fns:
            object.__setattr__(self, "_fns", tuple(_profile_lambdas(self.s)))

    def __call__(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def derivative(self, t, k: int) -> np.ndarray:
        """k-th derivative with respect to t (k <= 6)."""
        if k > _MAX_DERIV:
            raise ValueError(f"profile derivatives available up to order {_MAX_DERIV}")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        v = (self.b - t) / (self.b - self.a)
        eps = 1e-9
        inner = v >= 1.0 - eps      # t <= a (plateau 1)
        outer = v <= eps            # t >= b (plateau 0)
        mid = ~(inner | outer)
        out = np.zeros_like(t)
        if k == 0:
            out[inner] = 1.0
        if np.any(mid):
            with np.errstate(all="ignore"):
                vals = self._fns[k](v[mid])
            vals = np.where(np.isfinite(vals), vals, 0.0)
            # chain rule: d/dt = -1/(b-a) d/dv
            out[mid] = vals * (-1.0 / (self.b - self.a)) ** k
        return out


def make_bump(s: float, a: float, b: float) -> BumpProfile:
    """Radial Gevrey-s bump, 1 on [0, a] and 0 on [b, inf)."""
    return BumpProfile(s=s, a=a, b=b)


@dataclass(frozen=True)
class DerivativeFit:
    C: float
    h: float
    ratios: np.ndarray


def derivative_bound_fit(profile: BumpProfile, K: int = _MAX_DERIV,
                         npts: int = 801) -> DerivativeFit:
    """Fit (C, h) with max_t |phi^(k)(t)| <= C h^k (k!)^s for k <= K.

    C is pinned at max(1, sup|phi|) and h chosen minimal; the fit always
    closes on a finite grid, so the informative output is the size of h.
    """
    t = np.linspace(profile.a, profile.b, npts)
    ratios = np.array([
        float(np.max(np.abs(profile.derivative(t, k)))) / math.gamma(k + 1) ** profile.s
        for k in range(K + 1)
    ])
    C = max(1.0, ratios[0])
    h = max((ratios[k] / C) ** (1.0 / k) for k in range(1, K + 1))
    return DerivativeFit(C=C, h=float(h), ratios=ratios)


# ---------------------------------------------------------------------------
# dyadic frequency partition
# ---------------------------------------------------------------------------

# plateau / support radii of the partition profile, stated for the Japanese
# bracket of the scaled variable: <eta> < sqrt(6) -> 1, <eta> > 3 -> 0
_PARTITION_A = math.sqrt(5.0)
_PARTITION_B = math.sqrt(8.0)


@dataclass(frozen=True)
class PartitionPiece:
    """One dyadic piece psi_n(xi), callable on arrays of xi (radially in d=1)."""

    n: int
    scale_hi: float          # R m_{n+1} (or R M_1 for n = 0)
    scale_lo: float | None   # R m_n for n >= 1
    profile: BumpProfile

    def __call__(self, xi) -> np.ndarray:
        xi = np.abs(np.asarray(xi, dtype=float))
        hi = self.profile(xi / self.scale_hi)
        if self.scale_lo is None:
            return hi
        return hi - self.profile(xi / self.scale_lo)

    def support_bracket(self) -> tuple[float, float]:
        """Claimed support in the bracket <xi>: (2 R m_n, 3 R m_{n+1})."""
        lo = 0.0 if self.scale_lo is None else 2.0 * self.scale_lo
        return lo, 3.0 * self.scale_hi


def dyadic_partition(seq: wt.WeightSequence, R: float, N: int,
                     s: float = 2.0) -> list:
    """Pieces psi_0..psi_N with psi_0 = phi(xi/(R M_1)) and
    psi_n = phi(xi/(R m_{n+1})) - phi(xi/(R m_n)); partial sums telescope to
    phi(xi/(R m_{N+1})) exactly.

    Requires R > 1 + 1/M_1 and a horizon covering m_{N+1}.
    """
    M1 = math.exp(seq.ln_M[1])
    if not R > 1.0 + 1.0 / M1:
        raise ValueError(f"R must exceed 1 + 1/M_1 = {1 + 1 / M1:g}")
    if N + 1 > seq.P and seq.ln_m_rule is None:
        raise wt.MalformedSequenceError("horizon too short for the requested N")
    prof = make_bump(s, _PARTITION_A, _PARTITION_B)
    m = np.exp(seq.ln_quotient(np.arange(1, N + 2)))
    pieces = [PartitionPiece(0, R * M1, None, prof)]
    for n in range(1, N + 1):
        pieces.append(PartitionPiece(n, R * m[n], R * m[n - 1], prof))
    return pieces


# ---------------------------------------------------------------------------
# excision family
# ---------------------------------------------------------------------------

class CutoffSymbol:
    """chi(x, xi) = phi(<x>/scale) phi(<xi>/scale), equal to 1 where both
    brackets are at most 2 * scale and 0 where either reaches 3 * scale.

    Provides pointwise evaluation and exact-in-structure derivatives via the
    profile's derivative tables (d = 1).
    """

    def __init__(self, profile: BumpProfile, scale: float):
        self.profile = profile
        self.scale = scale

    def evaluate(self, env) -> np.ndarray:
        X = env["x"][0]
        XI = env["xi"][0]
        bx = np.sqrt(1.0 + np.real(X) ** 2) / self.scale
        bxi = np.sqrt(1.0 + np.real(XI) ** 2) / self.scale
        return self.profile(bx) * self.profile(bxi)

    def _factor_derivs(self, u: np.ndarray, k: int) -> np.ndarray:
        """d^k/du^k of phi(<u>/scale) via Faa di Bruno on g(u) = <u>/scale."""
        b = np.sqrt(1.0 + u * u)
        w = b / self.scale
        if k == 0:
            return self.profile(w)
        # derivatives of the bracket b = sqrt(1+u^2) up to order 6
        c = [b, u / b, 1.0 / b**3, -3.0 * u / b**5, (12.0 * u * u - 3.0) / b**7,
             (-60.0 * u**3 + 45.0 * u) / b**9,
             (360.0 * u**4 - 540.0 * u * u + 45.0) / b**11]
        g = [cv / self.scale for cv in c[: k + 1]]
        # Faa di Bruno with Bell polynomials over partitions, orders <= 6
        return _faa_di_bruno(lambda j, x=w: self.profile.derivative(
            np.atleast_1d(x).ravel(), j).reshape(np.shape(x)), g, k)

    def deriv_eval(self, alpha: int, beta: int, X, XI) -> np.ndarray:
        """D^alpha_xi D^beta_x chi with D = partial / i (scalar indices, d=1)."""
        dx = self._factor_derivs(np.real(X), beta)
        dxi = self._factor_derivs(np.real(XI), alpha)
        return dx * dxi * (1j) ** (-(alpha + beta))


_PARTITIONS: dict = {}


def _int_partitions(k: int):
    if k in _PARTITIONS:
        return _PARTITIONS[k]
    out = []

    def rec(rest, maxpart, current):
        if rest == 0:
            out.append(tuple(current))
            return
        for part in range(min(rest, maxpart), 0, -1):
            rec(rest - part, part, current + [part])

    rec(k, k, [])
    _PARTITIONS[k] = out
    return out


def _faa_di_bruno(outer_deriv, g: list, k: int) -> np.ndarray:
    """d^k/du^k f(g(u)) given outer derivatives f^(j) (callable on the values
    g[0]) and inner derivatives g[1..k]."""
    if k == 0:
        return outer_deriv(0)
    total = np.zeros_like(np.asarray(g[0], dtype=float))
    for partition in _int_partitions(k):
        m = len(partition)
        counts: dict[int, int] = {}
        for part in partition:
            counts[part] = counts.get(part, 0) + 1
        coeff = math.factorial(k)
        for part, cnt in counts.items():
            coeff //= (math.factorial(part) ** cnt) * math.factorial(cnt)
        term = outer_deriv(m)
        for part in partition:
            term = term * g[part]
        total = total + coeff * term
    return total


@dataclass(frozen=True)
class ExcisionFamily:
    """chi_0 = 0 and chi_n at scale R m_n for n = 1..N."""

    base: wt.WeightSequence
    R: float
    N: int
    profile: BumpProfile

    def piece(self, n: int):
        if n < 0:
            raise ValueError("excision index must be nonnegative")
        if n == 0:
            return None  # chi_0 is identically zero
        scale = self.R * math.exp(float(self.base.ln_quotient(np.array([n]))[0]))
        return CutoffSymbol(self.profile, scale)

    def plateau_radius(self, n: int) -> float:
        """chi_n = 1 while both brackets stay at or below this value."""
        if n == 0:
            return 0.0
        return 2.0 * self.R * math.exp(float(self.base.ln_quotient(np.array([n]))[0]))


def excision(seq: wt.WeightSequence, R: float, N: int, s: float = 2.0) -> ExcisionFamily:
    """Excision cutoffs: chi_n = 1 on {<x> <= 2 R m_n, <xi> <= 2 R m_n} and 0
    on {<x> >= 3 R m_n or <xi> >= 3 R m_n}; the profile runs in the bracket
    coordinate so both thresholds hold exactly."""
    prof = make_bump(s, 2.0, 3.0)
    return ExcisionFamily(base=seq, R=R, N=N, profile=prof)


# ---------------------------------------------------------------------------
# off-diagonal cutoff
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffdiagCutoff:
    """theta on the (x, y) grid: 1 deep in Omega_{3r/4}, 0 off Omega_{r/4},
    where Omega_r = {|x - y| > r <x>}."""

    r: float
    axis: np.ndarray
    values: np.ndarray

    def __call__(self, x, y) -> np.ndarray:
        ix = np.searchsorted(self.axis, np.asarray(x, dtype=float))
        iy = np.searchsorted(self.axis, np.asarray(y, dtype=float))
        ix = np.clip(ix, 0, self.axis.size - 1)
        iy = np.clip(iy, 0, self.axis.size - 1)
        return self.values[ix, iy]


def offdiag_cutoff(r: float, axis: np.ndarray, s: float = 2.0) -> OffdiagCutoff:
    """Mollify the indicator of Omega_{r/2} with a radial bump of radius r/16
    by FFT convolution on the (x, y) grid."""
    if not (0.0 < r < 1.0):
        raise ValueError("r must lie in (0, 1)")
    axis = np.asarray(axis, dtype=float)
    dx = float(axis[1] - axis[0])
    radius = r / 16.0
    if dx > radius / 4.0 + 1e-12:
        raise ResolutionError(
            f"grid spacing {dx:g} too coarse for mollifier radius {radius:g}")
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    indicator = (np.abs(X - Y) > (r / 2.0) * np.sqrt(1.0 + X * X)).astype(float)
    prof = make_bump(s, radius / 2.0, radius)
    half = int(math.ceil(radius / dx)) + 2
    u = np.arange(-half, half + 1) * dx
    UU, VV = np.meshgrid(u, u, indexing="ij")
    kernel = prof(np.hypot(UU, VV))
    kernel /= kernel.sum()
    theta = fftconvolve(indicator, kernel, mode="same")
    theta = np.clip(theta, 0.0, 1.0)
    theta[theta < 1e-14] = 0.0  # FFT roundoff below any meaningful level
    return OffdiagCutoff(r=r, axis=axis, values=theta)
