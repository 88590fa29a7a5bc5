"""Smooth dyadic partitions of unity on the half line.

The family {phi_j}_{j=0..J} is built from one fixed C^inf cutoff psi:
phi_0 = psi and phi_j(x) = psi(2^-j x) - psi(2^-(j-1) x). Telescoping makes
sum_j phi_j = psi(2^-J x), which equals 1 on |x| <= 2^(J-1), and every window
is a dyadic rescaling of the same bump, so derivative bounds scale like 2^(-kj)
for free. Windows are even (evaluated at |x|) and take values in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def transition(t):
    """C^inf monotone step s: 0 for t <= 0, 1 for t >= 1, all derivatives
    vanishing at both endpoints: s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    out[t <= 0.0] = 0.0
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    with np.errstate(under="ignore"):
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
        out[mid] = a / (a + b)
    return out


def cutoff(x):
    """psi(x) = 1 - s(2|x| - 1): identically 1 on |x| <= 1/2, 0 on |x| >= 1."""
    return 1.0 - transition(2.0 * np.abs(np.asarray(x, dtype=float)) - 1.0)


@dataclass(frozen=True)
class DyadicSystem:
    """Windows phi_j, j = 0..j_max, resolving the band [0, 2^(j_max-1)]."""

    j_max: int

    @property
    def closure_scale(self) -> float:
        return 2.0 ** self.j_max

    @property
    def resolved_bound(self) -> float:
        """Largest lambda with sum_j phi_j(lambda) = 1 guaranteed."""
        return 2.0 ** (self.j_max - 1)

    def window(self, j: int, x):
        """Evaluate phi_j at x (scalar or array); exactly 0 outside the support
        [2^(j-2), 2^j] for j >= 1, and outside [0, 1] for j = 0."""
        if not 0 <= j <= self.j_max:
            raise ValueError(f"window index {j} outside 0..{self.j_max}")
        if j == 0:
            return cutoff(x)
        x = np.asarray(x, dtype=float)
        return cutoff(x * 2.0 ** (-j)) - cutoff(x * 2.0 ** (-(j - 1)))

    def partition_sum(self, x):
        """sum_{j<=j_max} phi_j(x); equals cutoff(2^-j_max x) by telescoping."""
        return cutoff(np.asarray(x, dtype=float) * 2.0 ** (-self.j_max))

    def support(self, j: int) -> tuple:
        if j == 0:
            return (0.0, 1.0)
        return (2.0 ** (j - 2), 2.0 ** j)


def build_dyadic_system(j_max: int) -> DyadicSystem:
    """Dyadic window family with top scale 2^j_max; rejects j_max < 1."""
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    return DyadicSystem(j_max=int(j_max))


def eval_window(sys: DyadicSystem, j: int, x):
    return sys.window(j, x)


def required_j_max(lam_hi: float) -> int:
    """Smallest j_max with 2^(j_max - 1) >= lam_hi (so the partition covers the
    spectrum), never below 1."""
    if lam_hi <= 1.0:
        return 1
    return max(1, math.ceil(math.log2(lam_hi)) + 1)


# ---------------------------------------------------------------------------
# validation

_FD_WEIGHTS = {
    1: (np.array([-0.5, 0.0, 0.5]), 1),
    2: (np.array([1.0, -2.0, 1.0]), 1),
    3: (np.array([-0.5, 1.0, 0.0, -1.0, 0.5]), 2),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 2),
}


def _fd_derivative(fn, x, k, step):
    """Central finite-difference k-th derivative of fn at points x."""
    w, r = _FD_WEIGHTS[k]
    acc = np.zeros_like(x)
    for c, m in zip(w, range(-r, r + 1)):
        if c != 0.0:
            acc += c * fn(x + m * step)
    return acc / step ** k


@dataclass
class DyadicValidation:
    partition_defect: float
    support_violations: int
    derivative_table: list       # rows {k, c_min, c_max, spread}
    passed: bool

    def to_json(self) -> dict:
        return {
            "partition_defect": self.partition_defect,
            "support_violations": self.support_violations,
            "derivative_table": self.derivative_table,
            "pass": self.passed,
        }


def validate_dyadic(sys: DyadicSystem, samples_per_octave: int = 256,
                    defect_tol: float = 1e-10,
                    spread_limit: float = 4.0) -> DyadicValidation:
    """Check the three window conditions by dense sampling.

    Reports the worst partition-of-unity defect on [0, 2^(j_max-1)], the number
    of nonzero evaluations outside the nominal supports, and for k = 0..4 the
    scaled derivative bounds c_k(j) = 2^(kj) max |phi_j^(k)| estimated by
    central differences with step 2^j * 1e-4. The spread max/min of c_k(j) over
    j >= 2 should be O(1): all those windows are rescalings of one bump.
    """
    if samples_per_octave < 16:
        raise ValueError("samples_per_octave must be >= 16")
    J = sys.j_max

    # partition defect on [0, 2^(J-1)]: octave-graded sampling plus [0, 1]
    xs = [np.linspace(0.0, 1.0, samples_per_octave)]
    for j in range(J - 1):
        xs.append(np.geomspace(2.0 ** j, 2.0 ** (j + 1), samples_per_octave))
    x = np.concatenate(xs)
    defect = float(np.max(np.abs(sys.partition_sum(x) - 1.0)))

    # support violations: sample outside each window's support
    violations = 0
    for j in range(J + 1):
        lo, hi = sys.support(j)
        outside = [np.linspace(hi * (1 + 1e-9), hi * 4.0, samples_per_octave)]
        if j >= 1:
            outside.append(np.linspace(0.0, lo * (1 - 1e-9), samples_per_octave))
        vals = sys.window(j, np.concatenate(outside))
        violations += int(np.count_nonzero(vals != 0.0))

    # scaled derivative bounds; sample each window on its own support with
    # matching relative abscissas so c_k(j) is comparable across j
    u = np.linspace(0.2, 1.05, 40 * samples_per_octave)
    table = []
    worst_spread = 0.0
    for k in range(5):
        cs = []
        for j in range(1, J + 1):
            scale = 2.0 ** j
            x_j = u * scale
            if k == 0:
                d = sys.window(j, x_j)
            else:
                d = _fd_derivative(lambda t, jj=j: sys.window(jj, t),
                                   x_j, k, scale * 1e-4)
            cs.append(scale ** k * float(np.max(np.abs(d))))
        cs = np.array(cs)
        c_hi = cs[1:] if J >= 2 else cs     # spread judged over j >= 2
        spread = float(c_hi.max() / c_hi.min())
        worst_spread = max(worst_spread, spread)
        table.append({"k": k, "c_min": float(cs.min()), "c_max": float(cs.max()),
                      "spread": spread})

    passed = (defect <= defect_tol and violations == 0
              and worst_spread <= spread_limit)
    return DyadicValidation(partition_defect=defect,
                            support_violations=violations,
                            derivative_table=table, passed=passed)
