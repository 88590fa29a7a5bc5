"""Scalar functions of H applied to fields by Chebyshev expansion.

A target function is fitted on an interval containing the spectral enclosure
(cosine-transform collocation at Chebyshev extreme points, degree doubled
until the coefficient tail is below tolerance), then evaluated in the
operator argument by the three-term recurrence

    u_0 = f,   u_1 = W f,   u_{k+1} = 2 W u_k - u_{k-1},
    result = sum_k c_k u_k,     W = (2H - (a+b)) / (b - a),

which needs one operator application per degree and two vectors of state.
Spectral windows are cached on the Hamiltonian so decay experiments can
reuse them across many times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ._kernels import axpy, cheb_step, lincomb
from .dyadic import DyadicSystem
from .hamiltonian import Hamiltonian
from .lattice import Field

WINDOW_TOL = 1e-10
TAIL_WIDTH = 10
M_MAX = 65536


class NonConvergedError(RuntimeError):
    """Chebyshev fit hit the degree cap with its tail above tolerance."""

    def __init__(self, label: str, degree: int, tail: float, tol: float):
        super().__init__(
            f"expansion of {label!r} not converged at degree {degree}: "
            f"relative tail {tail:.3e} > tol {tol:.3e}")
        self.label = label
        self.degree = degree
        self.tail = tail
        self.tol = tol


@dataclass(frozen=True)
class ChebFunction:
    """Immutable fitted expansion sum_k c_k T_k on a fixed interval."""

    label: str
    interval: tuple
    coefficients: np.ndarray
    tol: float
    converged: bool

    def __post_init__(self):
        a, b = self.interval
        if not b > a:
            raise ValueError(f"empty interval [{a}, {b}]")
        if len(self.coefficients) < 2:
            raise ValueError("expansion needs degree >= 1")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def tail_bound(self) -> float:
        tail = self.coefficients[-TAIL_WIDTH:]
        return float(np.abs(tail).max())

    def __call__(self, x):
        """Clenshaw evaluation at scalar points (diagnostics and tests)."""
        a, b = self.interval
        xh = (2.0 * np.asarray(x, dtype=float) - (a + b)) / (b - a)
        c = self.coefficients
        b1 = np.zeros_like(xh, dtype=c.dtype)
        b2 = np.zeros_like(b1)
        for k in range(len(c) - 1, 0, -1):
            b1, b2 = c[k] + 2.0 * xh * b1 - b2, b1
        return c[0] + xh * b1 - b2


def cheb_fit(fn, interval, tol: float = WINDOW_TOL, m_max: int = M_MAX,
             label: str = "custom", scale: float | None = None
             ) -> ChebFunction:
    """Fit fn on [a,b], doubling the degree from 32 until the max absolute
    coefficient over the last 10 indices drops below tol * max|c|.

    When fn has a known natural magnitude (windows and phase factors are
    sup-bounded by 1), pass it as `scale`: the tolerance reference becomes
    max(max|c|, scale), so a function whose restriction to the interval is
    negligibly small converges immediately instead of chasing relative
    accuracy of noise.

    A cap-out is not an exception here: the expansion is returned with
    converged=False and the caller decides (window_project raises, reports
    carry the flag).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    m = 32
    while True:
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * np.arange(m + 1) / m)
        vals = np.asarray(fn(nodes))
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{label!r} not finite on the fit interval")
        c = sfft.dct(vals, type=1) / m
        c[0] *= 0.5
        c[-1] *= 0.5
        maxc = float(np.abs(c).max())
        ref = maxc if scale is None else max(maxc, float(scale))
        if ref == 0.0:
            return ChebFunction(label, (a, b), c[:2], tol, True)
        tail = float(np.abs(c[-TAIL_WIDTH:]).max())
        if tail <= tol * ref:
            keep = np.nonzero(np.abs(c) > tol * ref)[0]
            last = int(keep.max()) if keep.size else 0
            return ChebFunction(label, (a, b),
                                c[:max(2, min(m + 1, last + 1 + TAIL_WIDTH))],
                                tol, True)
        if m >= m_max:
            return ChebFunction(label, (a, b), c, tol, False)
        m *= 2


def expansion_interval(h: Hamiltonian) -> tuple:
    """Spectral enclosure inflated by 1% of its width on each side.

    Chebyshev series diverge exponentially outside their interval, so the
    slack is mandatory, not cosmetic.
    """
    lo, hi = h.enclosure
    margin = 0.01 * (hi - lo)
    return (lo - margin, hi + margin)


def apply_function(h: Hamiltonian, cf: ChebFunction, f: Field) -> Field:
    """cf evaluated in the operator argument, applied to f."""
    if f.grid != h.grid:
        raise ValueError("field lives on a different grid")
    a, b = cf.interval
    lo, hi = h.enclosure
    if not (a <= lo and hi <= b):
        raise ValueError(
            f"expansion interval [{a:.6g}, {b:.6g}] does not enclose the "
            f"spectral range [{lo:.6g}, {hi:.6g}]")
    c = np.ascontiguousarray(cf.coefficients, dtype=np.complex128)
    alpha1 = 2.0 / (b - a)
    alpha2 = -(a + b) / (b - a)

    u0 = f.values.astype(np.complex128, copy=True)
    acc = c[0] * u0
    w = h.apply_values(u0)
    u1 = np.empty_like(u0)
    lincomb(alpha1, w.ravel(), alpha2, u0.ravel(), u1.ravel())
    axpy(c[1], u1.ravel(), acc.ravel())
    a1, a2 = 2.0 * alpha1, 2.0 * alpha2
    work = np.empty_like(u0)
    for k in range(2, len(c)):
        h.apply_values(u1, out=work)
        cheb_step(work.ravel(), u1.ravel(), u0.ravel(), a1, a2,
                  c[k], acc.ravel())
        u0, u1 = u1, u0
    return Field._wrap(h.grid, acc)


def apply_callable(h: Hamiltonian, fn, f: Field, tol: float = WINDOW_TOL,
                   label: str = "custom") -> Field:
    """One-shot fit-and-apply of a scalar function on the enclosure."""
    cf = cheb_fit(fn, expansion_interval(h), tol=tol, label=label)
    if not cf.converged:
        raise NonConvergedError(label, cf.degree, cf.tail_bound, tol)
    return apply_function(h, cf, f)


def _check_resolved(h: Hamiltonian, sys: DyadicSystem):
    lo, hi = h.enclosure
    if sys.resolved_bound < max(hi, -lo):
        raise ValueError(
            f"dyadic system resolves |x| <= {sys.resolved_bound:.6g} but the "
            f"spectral range reaches {max(hi, -lo):.6g}; increase j_max")


def window_function(h: Hamiltonian, sys: DyadicSystem, j: int,
                    tol: float = WINDOW_TOL) -> ChebFunction:
    """Fitted expansion of the j-th window on h's enclosure, cached on h."""
    _check_resolved(h, sys)
    key = ("window", sys.j_max, j, tol)
    cf = h._cheb_cache.get(key)
    if cf is None:
        cf = cheb_fit(lambda x: sys.window(j, x), expansion_interval(h),
                      tol=tol, label=f"window[{j}]", scale=1.0)
        if not cf.converged:
            raise NonConvergedError(f"window[{j}]", cf.degree,
                                    cf.tail_bound, tol)
        h._cheb_cache[key] = cf
    return cf


def window_project(h: Hamiltonian, sys: DyadicSystem, j: int, f: Field,
                   tol: float = WINDOW_TOL) -> Field:
    """The spectral piece phi_j(H) f."""
    return apply_function(h, window_function(h, sys, j, tol), f)


def lp_decompose(h: Hamiltonian, sys: DyadicSystem, f: Field,
                 tol: float = WINDOW_TOL) -> list:
    """All pieces [phi_0(H)f, ..., phi_jmax(H)f]; they sum back to f."""
    return [window_project(h, sys, j, f, tol) for j in range(sys.j_max + 1)]


def coefficient_report(cf: ChebFunction) -> dict:
    """JSON-ready diagnostic of an expansion's coefficient tail."""
    c = np.abs(cf.coefficients)
    return {
        "label": cf.label,
        "interval": [cf.interval[0], cf.interval[1]],
        "degree": cf.degree,
        "tol": cf.tol,
        "converged": cf.converged,
        "max_coefficient": float(c.max()),
        "tail_bound": cf.tail_bound,
        "last_coefficients": [float(v) for v in c[-TAIL_WIDTH:]],
    }
