"""Discretized operators: Fourier transform (convention
F f (xi) = int e^{-i x xi} f(x) dx), tau-quantization, kernel <-> symbol
transforms, regularized oscillatory integrals, and the off-diagonal kernel
decay report.

Kernels are computed from closed-form symbols by quadrature of
(2 pi)^{-1} int e^{i t xi} a(x', xi) d xi over a symmetric frequency grid at
half the natural spacing: the symbol is evaluable anywhere, so refining the
quadrature pushes the periodization images of the kernel out to 4L and keeps
the dominant error Fourier truncation, not interpolation or wraparound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import mollify as mf
from . import weights as wt

__all__ = [
    "Grid",
    "GridFunction",
    "TruncationError",
    "DomainError",
    "NoConvergenceError",
    "fourier",
    "inverse_fourier",
    "hermite_testfn",
    "kernel_from_symbol",
    "symbol_from_kernel",
    "op_tau_apply",
    "amplitude_apply",
    "kernel_offdiag_report",
    "pairing",
    "eval_symbol",
]


class TruncationError(ValueError):
    """Samples fail the boundary-decay (Nyquist margin) requirement."""


class DomainError(ValueError):
    """Requested points leave the representable domain."""


class NoConvergenceError(RuntimeError):
    """Cauchy differences of the regularized integral fail to decrease."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L)^d with N points per axis (N a power of two).

    Position spacing is dx = 2L/N and the dual grid has spacing pi/L.
    """

    N: int = 256
    L: float = 12.0
    d: int = 1

    def __post_init__(self):
        if self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        return self.dxi * (np.arange(self.N) - self.N // 2)


@dataclass(frozen=True)
class GridFunction:
    """Sampled complex function with a space tag.

    1d position-tagged functions must decay below 1e-12 (relative to their
    sup) at the domain edge; kernels and symbol tables (2d samples) skip the
    check, since a kernel is large on the diagonal corners by design.
    """

    grid: Grid
    samples: np.ndarray
    space: str = "position"  # position | frequency | kernel | symbol

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", arr)
        if self.space not in ("position", "frequency", "kernel", "symbol"):
            raise ValueError(f"unknown space tag {self.space!r}")
        if self.space == "position" and arr.ndim == 1:
            scale = max(1.0, float(np.max(np.abs(arr))))
            edge = max(abs(arr[0]), abs(arr[-1]))
            if edge > 1e-12 * scale:
                raise TruncationError(
                    f"boundary value {edge:.3e} exceeds decay threshold at |x| = L")

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def l2_norm(self) -> float:
        """Trapezoid L2 norm (position-tagged 1d)."""
        w = np.full(self.samples.shape[-1], self.grid.dx)
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2 * w)))


def pairing(u: GridFunction, v: GridFunction) -> complex:
    """Non-conjugate bilinear pairing <u, v> = int u v dx (trapezoid)."""
    return complex(u.grid.dx * np.sum(u.samples * v.samples))


# ---------------------------------------------------------------------------
# Fourier transform with the e^{-i x xi} convention
# ---------------------------------------------------------------------------

def fourier(u: GridFunction) -> GridFunction:
    """Forward transform onto the dual grid (frequency tag)."""
    if u.space != "position":
        raise ValueError("fourier expects a position-tagged function")
    g = u.grid
    alt = (-1.0) ** np.arange(g.N)
    spec = g.dx * np.exp(-1j * g.x[0] * g.xi) * np.fft.fft(u.samples * alt)
    return GridFunction(g, spec, space="frequency")


def inverse_fourier(uhat: GridFunction) -> GridFunction:
    """Inverse transform; inverse_fourier(fourier(u)) == u to roundoff."""
    if uhat.space != "frequency":
        raise ValueError("inverse_fourier expects a frequency-tagged function")
    g = uhat.grid
    alt = (-1.0) ** np.arange(g.N)
    vals = alt / g.dx * np.fft.ifft(uhat.samples * np.exp(1j * g.x[0] * g.xi))
    return GridFunction(g, vals, space="position")


def hermite_testfn(k: int, grid: Grid) -> GridFunction:
    """L2-normalized Hermite function h_k via the stable recurrence."""
    x = grid.x
    h_prev = np.pi ** (-0.25) * np.exp(-x * x / 2.0)
    if k == 0:
        return GridFunction(grid, h_prev)
    h_cur = math.sqrt(2.0) * x * h_prev
    for n in range(2, k + 1):
        h_cur, h_prev = (x * math.sqrt(2.0 / n) * h_cur
                         - math.sqrt((n - 1) / n) * h_prev), h_cur
    return GridFunction(grid, h_cur)


# ---------------------------------------------------------------------------
# symbol evaluation protocol
# ---------------------------------------------------------------------------

def eval_symbol(sym, X, XI) -> np.ndarray:
    """Evaluate a symbol-like object on broadcastable arrays.

    Accepts expression trees (``.evaluate(env)``), resummed closures, or raw
    callables f(x, xi).
    """
    if hasattr(sym, "evaluate"):
        vals = sym.evaluate({"x": (X,), "xi": (XI,)})
    else:
        vals = sym(X, XI)
    out = np.asarray(vals, dtype=complex)
    if out.shape != np.broadcast_shapes(np.shape(X), np.shape(XI)):
        out = np.broadcast_to(out, np.broadcast_shapes(np.shape(X), np.shape(XI))).copy()
    return out


def eval_amplitude(amp, X, Y, XI) -> np.ndarray:
    if hasattr(amp, "evaluate"):
        vals = amp.evaluate({"x": (X,), "y": (Y,), "xi": (XI,)})
    else:
        vals = amp(X, Y, XI)
    shape = np.broadcast_shapes(np.shape(X), np.shape(Y), np.shape(XI))
    out = np.asarray(vals, dtype=complex)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return out


# ---------------------------------------------------------------------------
# kernel from symbol
# ---------------------------------------------------------------------------

def _fine_xi(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric frequency quadrature at spacing pi/(2L): nodes and trapezoid
    weights.  Symmetry under xi -> -xi makes the discrete transpose identity
    exact for symbols with polynomial growth."""
    N = grid.N
    dxi = math.pi / (2.0 * grid.L)
    k = np.arange(-N, N + 1)
    wts = np.ones(k.size)
    wts[0] = wts[-1] = 0.5
    return k * dxi, wts * dxi


def kernel_from_symbol(sym, tau: float, grid: Grid) -> GridFunction:
    """K_tau(x, y) = [F^{-1}_{xi -> t} a(x', .)](t) at x' = (1-tau) x + tau y,
    t = x - y.

    The (x', t) table is built on an x' grid of spacing dx/2 (so x' lands on
    a node exactly for tau in {0, 1/2, 1}) and the full difference range
    t in (-2L, 2L); off-node x' uses linear interpolation between rows.
    """
    N, L, dx = grid.N, grid.L, grid.dx
    x = grid.x
    xi_f, w_f = _fine_xi(grid)
    # x' rows cover every needed value of (1-tau) x_i + tau x_j
    lo = min((1 - tau) * x[0] + tau * x[0], (1 - tau) * x[0] + tau * x[-1],
             (1 - tau) * x[-1] + tau * x[0], (1 - tau) * x[-1] + tau * x[-1])
    hi = max((1 - tau) * x[0] + tau * x[0], (1 - tau) * x[0] + tau * x[-1],
             (1 - tau) * x[-1] + tau * x[0], (1 - tau) * x[-1] + tau * x[-1])
    step = dx / 2.0
    r0 = math.floor((lo - x[0]) / step - 1e-9)
    r1 = math.ceil((hi - x[0]) / step + 1e-9)
    xprime = x[0] + step * np.arange(r0, r1 + 1)
    t = dx * np.arange(-(N - 1), N)  # all realized differences x_i - y_j
    A = eval_symbol(sym, xprime[:, None], xi_f[None, :])
    E = (w_f[:, None] / (2.0 * math.pi)) * np.exp(1j * np.outer(xi_f, t))
    G = A @ E  # (rows, t)
    I = np.arange(N)
    pos = (1 - tau) * x[I][:, None] + tau * x[None, :]
    rfloat = (pos - xprime[0]) / step
    rnear = np.rint(rfloat)
    snap = np.abs(rfloat - rnear) < 1e-9
    rfloat = np.where(snap, rnear, rfloat)
    rlo = np.clip(np.floor(rfloat).astype(int), 0, xprime.size - 1)
    rhi = np.clip(rlo + 1, 0, xprime.size - 1)
    frac = np.clip(rfloat - rlo, 0.0, 1.0)
    tidx = I[:, None] - I[None, :] + (N - 1)
    K = (1.0 - frac) * G[rlo, tidx] + frac * G[rhi, tidx]
    return GridFunction(grid, K, space="kernel")


# ---------------------------------------------------------------------------
# symbol from kernel
# ---------------------------------------------------------------------------

def _upsample2(samples: np.ndarray) -> np.ndarray:
    """Trigonometric 2x upsampling of a 2d table by spectrum zero-padding
    (Nyquist bins split to keep the interpolant real-symmetric)."""
    n = samples.shape[0]
    spec = np.fft.fftshift(np.fft.fft2(samples))
    pad = np.zeros((2 * n, 2 * n), dtype=complex)
    lo = n - n // 2
    pad[lo:lo + n, lo:lo + n] = spec
    # split the Nyquist row/column
    pad[lo + n, lo:lo + n] = pad[lo, lo:lo + n] / 2.0
    pad[lo, lo:lo + n] /= 2.0
    pad[lo:lo + n + 1, lo + n] = pad[lo:lo + n + 1, lo] / 2.0
    pad[lo:lo + n + 1, lo] /= 2.0
    return np.fft.ifft2(np.fft.ifftshift(pad)) * 4.0


def symbol_from_kernel(K: GridFunction, tau: float) -> GridFunction:
    """a(x, xi) = F_{y -> xi} K(x + tau y, x - (1-tau) y); inverse of
    :func:`kernel_from_symbol` up to discretization.

    The kernel is trig-upsampled so the sample points land on grid nodes for
    tau in {0, 1/2, 1}; elsewhere bilinear interpolation on the fine table.
    Points outside the domain read as 0 (the kernel has decayed there).
    """
    if K.samples.ndim != 2:
        raise DomainError("symbol_from_kernel expects a 2d kernel table")
    g = K.grid
    N, dx = g.N, g.dx
    fine = _upsample2(K.samples)
    step = dx / 2.0
    x = g.x
    y = g.x
    U = x[:, None] + tau * y[None, :]
    V = x[:, None] - (1.0 - tau) * y[None, :]

    def lookup(P, Q):
        pf = (P - x[0]) / step
        qf = (Q - x[0]) / step
        pn, qn = np.rint(pf), np.rint(qf)
        pf = np.where(np.abs(pf - pn) < 1e-9, pn, pf)
        qf = np.where(np.abs(qf - qn) < 1e-9, qn, qf)
        inside = (pf >= 0) & (pf <= 2 * N - 1) & (qf >= 0) & (qf <= 2 * N - 1)
        p0 = np.clip(np.floor(pf).astype(int), 0, 2 * N - 2)
        q0 = np.clip(np.floor(qf).astype(int), 0, 2 * N - 2)
        fp = np.clip(pf - p0, 0.0, 1.0)
        fq = np.clip(qf - q0, 0.0, 1.0)
        vals = ((1 - fp) * (1 - fq) * fine[p0, q0] + fp * (1 - fq) * fine[p0 + 1, q0]
                + (1 - fp) * fq * fine[p0, q0 + 1] + fp * fq * fine[p0 + 1, q0 + 1])
        return np.where(inside, vals, 0.0)

    W = lookup(U, V)  # W[i, j] = K(x_i + tau y_j, x_i - (1-tau) y_j)
    # forward transform in y onto the dual grid
    alt = (-1.0) ** np.arange(N)
    spec = dx * np.exp(-1j * y[0] * g.xi)[None, :] * np.fft.fft(W * alt[None, :], axis=1)
    return GridFunction(g, spec, space="symbol")


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------

def op_tau_apply(sym, tau: float, u: GridFunction, method: str = "kernel") -> GridFunction:
    """Op_tau(a) u by the kernel route, or the tau = 0 spectral fast path
    (2 pi)^{-1} int e^{i x xi} a(x, xi) u^(xi) d xi.  The two routes agree to
    quadrature precision."""
    if u.space != "position":
        raise ValueError("op_tau_apply expects a position-tagged test function")
    g = u.grid
    if method == "spectral":
        if tau != 0.0:
            raise ValueError("the spectral fast path is the tau = 0 quantization")
        uhat = fourier(u)
        A = eval_symbol(sym, g.x[:, None], g.xi[None, :])
        vals = (g.dxi / (2.0 * math.pi)) * np.sum(
            A * uhat.samples[None, :] * np.exp(1j * np.outer(g.x, g.xi)), axis=1)
        return GridFunction(g, vals, space="position")
    if method != "kernel":
        raise ValueError("method must be 'kernel' or 'spectral'")
    K = kernel_from_symbol(sym, tau, g)
    vals = g.dx * (K.samples @ u.samples)
    return GridFunction(g, vals, space="position")


def apply_kernel(K: GridFunction, u: GridFunction) -> GridFunction:
    vals = K.grid.dx * (K.samples @ u.samples)
    return GridFunction(K.grid, vals, space="position")


# ---------------------------------------------------------------------------
# regularized oscillatory integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmplitudeResult:
    values: GridFunction            # at the smallest delta
    deltas: tuple
    cauchy_differences: tuple       # sup |I_{d_{m+1}} - I_{d_m}|
    extrapolated: GridFunction      # Richardson limit in delta^2

    @property
    def limit(self) -> GridFunction:
        return self.extrapolated


def _chi_values(chi, xi: np.ndarray) -> np.ndarray:
    if isinstance(chi, mf.BumpProfile):
        return chi(np.abs(xi)).astype(complex)
    if hasattr(chi, "evaluate"):
        return np.asarray(chi.evaluate({"xi": (xi,)}), dtype=complex)
    return np.asarray(chi(xi), dtype=complex)


def amplitude_apply(amp, u: GridFunction, chi,
                    deltas: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
                    chunk: int = 16) -> AmplitudeResult:
    """I_{chi,delta}(x) = (2 pi)^{-1} iint e^{i(x-y)xi} amp(x,y,xi)
    chi(delta xi) u(y) dy dxi, inner y then outer xi by trapezoid sums.

    The mollifier must satisfy chi(0) = 1.  Returns values at the smallest
    delta, the Cauchy-difference table (which must decrease strictly), and
    the Richardson extrapolation of the delta -> 0 limit.
    """
    c0 = complex(_chi_values(chi, np.zeros(1))[0])
    if abs(c0 - 1.0) > 1e-12:
        raise ValueError(f"mollifier must satisfy chi(0) = 1, got {c0}")
    deltas = tuple(sorted(deltas, reverse=True))
    g = u.grid
    x, y, xi = g.x, g.x, g.xi
    # B[i, k] = dy sum_j e^{-i y_j xi_k} amp(x_i, y_j, xi_k) u_j  (delta-free)
    B = np.empty((g.N, g.N), dtype=complex)
    phase_y = np.exp(-1j * np.outer(y, xi))  # (j, k)
    for lo in range(0, g.N, chunk):
        hi = min(lo + chunk, g.N)
        vals = eval_amplitude(amp, x[lo:hi, None, None], y[None, :, None], xi[None, None, :])
        B[lo:hi] = g.dx * np.einsum("ijk,jk->ik", vals * u.samples[None, :, None], phase_y)
    phase_x = np.exp(1j * np.outer(x, xi))
    results = []
    for d in deltas:
        w = _chi_values(chi, d * xi)
        I_d = (g.dxi / (2.0 * math.pi)) * np.sum(B * w[None, :] * phase_x, axis=1)
        results.append(I_d)
    diffs = tuple(float(np.max(np.abs(results[m + 1] - results[m])))
                  for m in range(len(results) - 1))
    floor = 1e-13 * max(1.0, float(np.max(np.abs(results[-1]))))
    if any(diffs[m + 1] >= diffs[m] and diffs[m + 1] > floor
           for m in range(len(diffs) - 1)):
        raise NoConvergenceError(f"Cauchy differences not decreasing: {diffs}")
    # Neville extrapolation in delta^2
    table = [r.copy() for r in results]
    d2 = [d * d for d in deltas]
    for m in range(1, len(table)):
        for j in range(len(table) - m):
            table[j] = table[j + 1] + (table[j + 1] - table[j]) * (
                d2[j + m] / (d2[j] - d2[j + m]))
    return AmplitudeResult(
        values=GridFunction(g, results[-1], space="position"),
        deltas=deltas,
        cauchy_differences=diffs,
        extrapolated=GridFunction(g, table[0], space="position"),
    )


# ---------------------------------------------------------------------------
# off-diagonal kernel decay report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffdiagReport:
    r: float
    n_points: int
    fit_ok: bool
    C: float | None
    h: float | None
    failure_radius: float | None
    sup_abs: float
    ring_sup: float
    ringing_floor: bool
    excess_over_ring: float


def kernel_offdiag_report(K: GridFunction, r: float, seq: wt.WeightSequence,
                          h_candidates: Sequence[float] = (2.0, 1.0, 0.5, 0.25, 0.125),
                          min_points: int = 100) -> OffdiagReport:
    """Fit constants in |K(x,y)| <= C exp(-M(h |(x,y)|)) over the grid points
    of Omega_r = {|x-y| > r <x>}.

    (C, h): for each h (descending) C is fitted on the inner-radius half and
    validated on the rest; the first h with no violations wins.  A kernel
    whose off-diagonal magnitude sits at the band-limit ringing envelope of
    the discrete delta (the a = 1 kernel) is flagged instead of fitted.
    """
    if K.samples.ndim != 2:
        raise DomainError("expected a 2d kernel table")
    g = K.grid
    X, Y = np.meshgrid(g.x, g.x, indexing="ij")
    mask = np.abs(X - Y) > r * np.sqrt(1.0 + X * X)
    if int(mask.sum()) < min_points:
        raise mf.ResolutionError(f"only {int(mask.sum())} grid points in Omega_r")
    vals = np.abs(K.samples[mask])
    radii = np.hypot(X[mask], Y[mask])
    ring = np.abs(kernel_from_symbol(lambda x, xi: np.ones(np.broadcast_shapes(
        np.shape(x), np.shape(xi))), 0.0, g).samples[mask])
    sup_abs = float(np.max(vals))
    ring_sup = float(np.max(ring))
    ringing_floor = sup_abs <= 2.0 * ring_sup
    excess = float(np.max(vals - ring))
    median = float(np.median(radii))
    inner = radii <= median
    fit_ok, C_fit, h_fit, fail_rad = False, None, None, None
    if not ringing_floor:
        for h in h_candidates:
            gauge = seq.assoc_grid(h * radii)
            ln_C = float(np.max(np.log(np.maximum(vals[inner], 1e-300)) + gauge[inner]))
            bad = np.log(np.maximum(vals, 1e-300)) + gauge > ln_C + 1e-9
            if not np.any(bad):
                fit_ok, C_fit, h_fit = True, math.exp(ln_C), h
                break
            fail_rad = float(np.min(radii[bad]))
    return OffdiagReport(r=r, n_points=int(mask.sum()), fit_ok=fit_ok, C=C_fit,
                         h=h_fit, failure_radius=fail_rad, sup_abs=sup_abs,
                         ring_sup=ring_sup, ringing_floor=ringing_floor,
                         excess_over_ring=excess)
