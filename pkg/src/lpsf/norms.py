"""Scale-decomposed norms adapted to H, and the singular integral
functionals that gate the rough-potential hypotheses in 3d.

Besov: weighted l^q over scales of L^p norms of the spectral pieces.
Triebel-Lizorkin: the same pieces aggregated pointwise in l^q first.
Kato norm: sup_x of the Coulomb-weighted average of |V|, threshold 4*pi.
Rollnik functional: the double integral of |V(x)||V(y)|/|x-y|^2,
threshold (4*pi)^2, estimated by importance-sampled Monte Carlo.

The grid versions replace integrals by cell sums; the singular diagonal
cell is handled with precomputed unit-cube integrals of the kernels
(dropping it would bias both functionals low).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from . import _settings
from .dyadic import DyadicSystem
from .funcalc import WINDOW_TOL, lp_decompose
from .hamiltonian import Hamiltonian
from .lattice import Field, Grid, lp_norm

# Unit-cube kernel integrals (high-resolution quadrature, 7 digits):
#   int_{[-1/2,1/2]^3} dz / |z|   and   int_{[-1/2,1/2]^3} dz / |z|^2
UNIT_CELL_COULOMB = 2.3800774
UNIT_CELL_COULOMB_SQ = 7.6741240
FOUR_PI = 4.0 * math.pi

_DEFAULT_MC_SAMPLES = 200_000


def conjugate_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1; conjugate of 1 is inf and vice versa."""
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def _check_exponent(name: str, value: float):
    if not (value >= 1.0):
        raise ValueError(f"{name} must lie in [1, inf], got {value}")


@dataclass(frozen=True)
class BesovIndex:
    """Smoothness/integrability triple (alpha, p, q)."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        _check_exponent("p", self.p)
        _check_exponent("q", self.q)

    @property
    def p_conjugate(self) -> float:
        return conjugate_exponent(self.p)

    def beta(self, dim: int) -> float:
        """The critical exponent dim * |1/p - 1/2| (zero at p = 2)."""
        inv_p = 0.0 if self.p == math.inf else 1.0 / self.p
        return dim * abs(inv_p - 0.5)


# -- scale-decomposed norms -----------------------------------------------


def besov_from_pieces(pieces: list, idx: BesovIndex) -> float:
    """(sum_j 2^{j alpha q} ||f_j||_p^q)^{1/q} from precomputed pieces."""
    terms = [2.0 ** (j * idx.alpha) * lp_norm(fj, idx.p)
             for j, fj in enumerate(pieces)]
    if idx.q == math.inf:
        return max(terms)
    return float(np.sum(np.asarray(terms) ** idx.q) ** (1.0 / idx.q))


def triebel_from_pieces(pieces: list, idx: BesovIndex) -> float:
    """|| (sum_j (2^{j alpha} |f_j|)^q)^{1/q} ||_p from precomputed pieces."""
    if idx.p == math.inf:
        raise ValueError("the pointwise-aggregated norm is defined for p < inf")
    grid = pieces[0].grid
    stack = np.stack([2.0 ** (j * idx.alpha) * np.abs(fj.values)
                      for j, fj in enumerate(pieces)])
    if idx.q == math.inf:
        pointwise = stack.max(axis=0)
    else:
        pointwise = np.sum(stack ** idx.q, axis=0) ** (1.0 / idx.q)
    return float((np.sum(pointwise ** idx.p) * grid.cell_volume)
                 ** (1.0 / idx.p))


def besov_norm(h: Hamiltonian, sys: DyadicSystem, f: Field, idx: BesovIndex,
               tol: float = WINDOW_TOL) -> float:
    return besov_from_pieces(lp_decompose(h, sys, f, tol), idx)


def triebel_norm(h: Hamiltonian, sys: DyadicSystem, f: Field, idx: BesovIndex,
                 tol: float = WINDOW_TOL) -> float:
    return triebel_from_pieces(lp_decompose(h, sys, f, tol), idx)


@dataclass(frozen=True)
class EmbeddingReport:
    """Outcome of checking B^{alpha,min(p,q)} >= F^{alpha,q} >= B^{alpha,max(p,q)}."""

    idx: BesovIndex
    n_fields: int
    violations: int
    worst_lower_margin: float   # min over fields of (B_min - F) / scale
    worst_upper_margin: float   # min over fields of (F - B_max) / scale

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "alpha": self.idx.alpha, "p": self.idx.p, "q": self.idx.q,
            "n_fields": self.n_fields, "violations": self.violations,
            "worst_lower_margin": self.worst_lower_margin,
            "worst_upper_margin": self.worst_upper_margin,
            "pass": self.passed,
        }


def embedding_check(h: Hamiltonian, sys: DyadicSystem, fields: list,
                    idx: BesovIndex, slack: float = 1e-10,
                    tol: float = WINDOW_TOL) -> EmbeddingReport:
    """Verify the two-sided embedding chain on each field.

    Both inequalities hold with constant exactly 1 (l^q-exponent
    monotonicity on one side, the integral Minkowski inequality on the
    other), so only `slack` relative rounding room is allowed.
    """
    q_lo, q_hi = min(idx.p, idx.q), max(idx.p, idx.q)
    worst_lo, worst_hi = math.inf, math.inf
    violations = 0
    for f in fields:
        pieces = lp_decompose(h, sys, f, tol)
        b_lo = besov_from_pieces(pieces, BesovIndex(idx.alpha, idx.p, q_lo))
        mid = triebel_from_pieces(pieces, idx)
        b_hi = besov_from_pieces(pieces, BesovIndex(idx.alpha, idx.p, q_hi))
        scale = max(b_lo, 1e-300)
        lo_margin = (b_lo - mid) / scale
        hi_margin = (mid - b_hi) / scale
        worst_lo = min(worst_lo, lo_margin)
        worst_hi = min(worst_hi, hi_margin)
        if lo_margin < -slack or hi_margin < -slack:
            violations += 1
    return EmbeddingReport(idx, len(fields), violations,
                           float(worst_lo), float(worst_hi))


# -- singular potential functionals (3d only) -----------------------------


def _require_3d(grid: Grid, what: str):
    if grid.dim != 3:
        raise ValueError(f"{what} uses the 3d Coulomb kernel; grid is "
                         f"{grid.dim}d")


def _offset_radii(grid: Grid) -> np.ndarray:
    """|offset| in physical units on the zero-padded (2N)^3 lattice.

    Index m encodes the signed offset m if m < N else m - 2N, so linear
    (non-periodic) convolution with any kernel of reach < N is exact.
    """
    n = grid.n
    o = np.arange(2 * n)
    o = np.where(o < n, o, o - 2 * n).astype(float) * grid.h
    return np.sqrt(o[:, None, None] ** 2 + o[None, :, None] ** 2
                   + o[None, None, :] ** 2)


def _coulomb_average(v_abs: np.ndarray, grid: Grid,
                     radius: float | None = None) -> np.ndarray:
    """K(x) = sum_{0<|x-y|(<radius)} |V(y)| h^3 / |x-y|  + diagonal cell."""
    n = grid.n
    r = _offset_radii(grid)
    with np.errstate(divide="ignore"):
        ker = np.where(r > 0.0, 1.0 / np.where(r > 0.0, r, 1.0), 0.0)
    if radius is not None:
        ker[r >= radius] = 0.0
    pad = np.zeros((2 * n,) * 3)
    pad[:n, :n, :n] = v_abs
    conv = sfft.irfftn(
        sfft.rfftn(pad, workers=_settings.THREADS)
        * sfft.rfftn(ker, workers=_settings.THREADS),
        s=pad.shape, workers=_settings.THREADS)[:n, :n, :n]
    return conv * grid.h ** 3 + v_abs * (UNIT_CELL_COULOMB * grid.h ** 2)


def kato_norm(v: Field) -> float:
    """sup_x of the Coulomb-weighted cell sum of |V| (3d)."""
    _require_3d(v.grid, "the Kato norm")
    v_abs = np.abs(v.values.real)
    if not v_abs.any():
        return 0.0
    return float(_coulomb_average(v_abs, v.grid).max())


def kato_profile(v: Field, deltas) -> list:
    """[(delta, K(delta))] with K(delta) the radius-truncated Kato norm.

    Requires every delta > h: below one cell the truncated sum holds only
    the diagonal correction and says nothing about the kernel.
    """
    _require_3d(v.grid, "the Kato profile")
    deltas = [float(d) for d in deltas]
    h = v.grid.h
    bad = [d for d in deltas if not d > h]
    if bad:
        raise ValueError(f"profile radii must exceed the grid spacing "
                         f"h = {h:.6g}; got {bad}")
    v_abs = np.abs(v.values.real)
    return [(d, float(_coulomb_average(v_abs, v.grid, radius=d).max()))
            for d in deltas]


def lebesgue_3_2(v: Field) -> float:
    """The L^{3/2} cell-sum norm of V, reported for reference."""
    _require_3d(v.grid, "the reference L^{3/2} norm")
    return float((np.sum(np.abs(v.values.real) ** 1.5)
                  * v.grid.cell_volume) ** (2.0 / 3.0))


@dataclass(frozen=True)
class RollnikEstimate:
    value: float
    stderr: float
    samples: int
    seed: int


def rollnik_functional(v: Field, mc_samples: int = _DEFAULT_MC_SAMPLES,
                       seed: int = 0) -> RollnikEstimate:
    """Monte-Carlo estimate of the double integral of |V(x)||V(y)|/|x-y|^2.

    Both points are importance-sampled from |V| (the estimand is then
    W^2 * E[kernel] with W the total |V| mass), so samples never land
    where V vanishes. The x = y diagonal uses the unit-cell integral of
    1/|z|^2. A counter-based bit generator keyed by `seed` makes the
    estimate bit-for-bit reproducible at any thread count.
    """
    _require_3d(v.grid, "the Rollnik functional")
    if mc_samples < 2:
        raise ValueError("need at least 2 Monte-Carlo samples")
    grid = v.grid
    w = np.abs(v.values.real).ravel() * grid.cell_volume
    total = float(w.sum())
    if total == 0.0:
        return RollnikEstimate(0.0, 0.0, int(mc_samples), int(seed))
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    ix = np.searchsorted(cdf, rng.random(int(mc_samples)), side="right")
    iy = np.searchsorted(cdf, rng.random(int(mc_samples)), side="right")
    dist_sq = np.zeros(int(mc_samples))
    for ax, cx, cy in zip(range(3), np.unravel_index(ix, grid.shape),
                          np.unravel_index(iy, grid.shape)):
        dist_sq += ((cx - cy) * grid.h).astype(float) ** 2
    diag = ix == iy
    with np.errstate(divide="ignore"):
        g = np.where(diag, UNIT_CELL_COULOMB_SQ / grid.h ** 2,
                     1.0 / np.where(diag, 1.0, dist_sq))
    est = total ** 2 * g.mean()
    err = total ** 2 * g.std(ddof=1) / math.sqrt(len(g))
    return RollnikEstimate(float(est), float(err), int(mc_samples), int(seed))


@dataclass(frozen=True)
class PotentialReport:
    """All potential functionals plus the 3d smallness verdict."""

    kato_norm: float
    rollnik: float
    rollnik_stderr: float
    mc_samples: int
    seed: int
    kato_profile: list
    lebesgue_3_2: float
    hypotheses_met: bool

    def to_json(self) -> dict:
        return {
            "kato_norm": self.kato_norm,
            "kato_threshold": FOUR_PI,
            "rollnik": self.rollnik,
            "rollnik_stderr": self.rollnik_stderr,
            "rollnik_threshold": FOUR_PI ** 2,
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "kato_profile": [[d, k] for d, k in self.kato_profile],
            "lebesgue_3_2": self.lebesgue_3_2,
            "hypotheses_met": self.hypotheses_met,
        }

    def summary(self) -> str:
        lines = [
            f"Kato norm      {self.kato_norm:.6g}  (threshold 4*pi = {FOUR_PI:.6g})",
            f"Rollnik        {self.rollnik:.6g} +/- {self.rollnik_stderr:.3g}"
            f"  (threshold (4*pi)^2 = {FOUR_PI ** 2:.6g})",
            f"L^{{3/2}} norm   {self.lebesgue_3_2:.6g}",
            "profile K(delta):",
        ]
        lines += [f"  delta = {d:<10.4g} K = {k:.6g}" for d, k in self.kato_profile]
        lines.append(f"hypotheses met: {self.hypotheses_met}")
        return "\n".join(lines)


def hypothesis_check(v: Field, mc_samples: int = _DEFAULT_MC_SAMPLES,
                     seed: int = 0, deltas=None) -> PotentialReport:
    """Assemble the report; the smallness verdict subtracts nothing from
    the Kato side but adds 3 standard errors to the Monte-Carlo side
    before comparing, so "met" is conservative under sampling noise.
    """
    _require_3d(v.grid, "the hypothesis check")
    if deltas is None:
        ext = v.grid.extent / 2.0
        deltas = [ext / 2 ** k for k in range(4)
                  if ext / 2 ** k > v.grid.h * 1.5]
        if not deltas:
            deltas = [v.grid.h * 1.5]
    kato = kato_norm(v)
    roll = rollnik_functional(v, mc_samples=mc_samples, seed=seed)
    profile = kato_profile(v, deltas)
    met = (kato < FOUR_PI) and (roll.value + 3.0 * roll.stderr < FOUR_PI ** 2)
    return PotentialReport(kato, roll.value, roll.stderr, roll.samples,
                           roll.seed, profile, lebesgue_3_2(v), met)
