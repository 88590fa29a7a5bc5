"""Decay experiments: confront the short/long-time estimates for
e^{-itH} with measured norms, reporting per-time ratios, fitted
log-log exponents, and stability flags.

The estimates come with unspecified constants, so nothing here asserts a
constant: each experiment reports lhs, rhs, their ratio, the sup ratio,
and a fitted exponent over a declared window, leaving pass/fail to the
calling suite (which checks finiteness, p = 2 collapse, and stability
under grid refinement).
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import canonical_json, content_hash
from .dyadic import DyadicSystem, cutoff
from .evolve import (PHASE_TOL, propagate, propagate_series,
                     wrap_diagnostic)
from .funcalc import (WINDOW_TOL, apply_function, cheb_fit,
                      expansion_interval, lp_decompose)
from .hamiltonian import Hamiltonian
from .lattice import Field, lp_norm
from .norms import (BesovIndex, PotentialReport, besov_from_pieces,
                    conjugate_exponent, hypothesis_check,
                    triebel_from_pieces)


def bracket(t: float) -> float:
    """The smooth time weight (1 + t^2)^{1/2}; equals 1 at t = 0 and
    dominates max(1, |t|)."""
    return math.sqrt(1.0 + float(t) ** 2)


def theory_exponent(dim: int, p: float) -> float:
    """-dim * (1/p - 1/2), the predicted long-time decay rate."""
    inv_p = 0.0 if p == math.inf else 1.0 / p
    return -dim * (inv_p - 0.5)


@dataclass(frozen=True)
class DecayReport:
    experiment: str
    config: dict
    rows: list
    fit_window: tuple | None
    fitted_exponent: tuple | None     # (slope, stderr) or None
    theory_exponent: float
    sup_ratio: float
    flags: dict

    def to_json(self) -> dict:
        fit = None
        if self.fitted_exponent is not None:
            fit = {"slope": self.fitted_exponent[0],
                   "stderr": self.fitted_exponent[1]}
        return {
            "experiment": self.experiment,
            "config": self.config,
            "rows": self.rows,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "fitted_exponent": fit,
            "theory_exponent": self.theory_exponent,
            "sup_ratio": self.sup_ratio,
            "flags": self.flags,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "lhs", "rhs", "ratio"])
        for row in self.rows:
            ratio = "" if row["ratio"] is None else repr(row["ratio"])
            writer.writerow([repr(row["t"]), repr(row["lhs"]),
                             repr(row["rhs"]), ratio])
        return buf.getvalue()


def save_report(report: DecayReport, out_dir: str) -> tuple:
    """Write <experiment>-<confighash>.json and .csv; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    stem = f"{report.experiment}-{content_hash(report.config)[:12]}"
    json_path = os.path.join(out_dir, stem + ".json")
    csv_path = os.path.join(out_dir, stem + ".csv")
    with open(json_path, "w") as fh:
        fh.write(canonical_json(report.to_json()) + "\n")
    with open(csv_path, "w") as fh:
        fh.write(report.to_csv())
    return json_path, csv_path


def fit_exponent(rows, window) -> tuple:
    """Least-squares slope of log lhs vs log t over the window, with the
    usual OLS standard error. Rows are (t, lhs) pairs or report rows."""
    pts = []
    for row in rows:
        t, lhs = (row["t"], row["lhs"]) if isinstance(row, dict) else row
        if window[0] <= t <= window[1]:
            pts.append((float(t), float(lhs)))
    if len(pts) < 5:
        raise ValueError(f"need at least 5 rows inside the fit window, "
                         f"got {len(pts)}")
    if any(lhs <= 0.0 for _, lhs in pts):
        raise ValueError("log fit needs strictly positive lhs values")
    x = np.log([t for t, _ in pts])
    y = np.log([lhs for _, lhs in pts])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("all fit times coincide")
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    n = len(pts)
    stderr = math.sqrt(float(resid @ resid) / ((n - 2) * sxx)) if n > 2 else 0.0
    return slope, stderr


# -- shared assembly ------------------------------------------------------


def _json_num(x):
    # JSON has no infinity; unbounded exponents serialize as "inf"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def _base_config(h: Hamiltonian, **extra) -> dict:
    pot = h.potential_spec.describe() if h.potential_spec is not None \
        else "tabulated"
    cfg = {
        "dim": h.grid.dim,
        "points_per_axis": h.grid.n,
        "extent": h.grid.extent,
        "scheme": h.scheme,
        "potential": pot,
    }
    for key, val in extra.items():
        if isinstance(val, np.ndarray):
            val = [float(v) for v in val]
        cfg[key] = _json_num(val)
    return cfg


def _potential_flag(h: Hamiltonian, potential_report: PotentialReport | None):
    """hypotheses_met for 3d runs (None elsewhere; the smallness
    thresholds are 3d-specific)."""
    if h.grid.dim != 3:
        return None
    if potential_report is None:
        cached = h._cheb_cache.get(("potential-report",))
        if cached is None:
            cached = hypothesis_check(h.potential)
            h._cheb_cache[("potential-report",)] = cached
        potential_report = cached
    return bool(potential_report.hypotheses_met)


def _finish(experiment, config, rows, fit_window, theory, flags,
            t_safe) -> DecayReport:
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    sup_ratio = max(ratios) if ratios else math.nan
    fitted = None
    if fit_window is not None:
        # wrapped tails are excluded from the fit, never from the rows
        hi = min(fit_window[1], t_safe)
        usable = [r for r in rows
                  if fit_window[0] <= r["t"] <= hi and r["lhs"] > 0.0]
        if len(usable) >= 5:
            fitted = fit_exponent(usable, (fit_window[0], hi))
    return DecayReport(experiment, config, rows, fit_window, fitted,
                       theory, float(sup_ratio), flags)


def _check_p_low(p: float):
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"the estimates hold for p in [1, 2], got {p}")


# -- experiments ----------------------------------------------------------


def short_time_experiment(h: Hamiltonian, sys: DyadicSystem, f: Field,
                          p: float, times, *, field_label: str = "field",
                          tol: float = WINDOW_TOL,
                          phase_tol: float = PHASE_TOL,
                          potential_report: PotentialReport | None = None
                          ) -> DecayReport:
    """||u(t)||_{p'} against ||f||_{p'} + t^beta ||f||_{B^{beta,1}_{p'}}
    for t in (0, 1] (both right-hand norms at the conjugate exponent)."""
    _check_p_low(p)
    times = [float(t) for t in times]
    if any(not 0.0 < t <= 1.0 for t in times):
        raise ValueError("short-time runs take times in (0, 1]")
    p_conj = conjugate_exponent(p)
    beta = BesovIndex(0.0, p, 2.0).beta(h.grid.dim)
    pieces = lp_decompose(h, sys, f, tol)
    base = lp_norm(f, p_conj)
    weight = besov_from_pieces(pieces, BesovIndex(beta, p_conj, 1.0))
    wrap = wrap_diagnostic(f, max(times))
    series = propagate_series(h, f, times, tol=phase_tol)
    rows = []
    for t, u in zip(times, series.states):
        lhs = lp_norm(u, p_conj)
        rhs = base + t ** beta * weight
        rows.append({"t": t, "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0.0 else None,
                     "bracket": bracket(t)})
    config = _base_config(h, p=p, p_conjugate=p_conj, beta=beta,
                          times=times, field=field_label,
                          j_max=sys.j_max, wrap=wrap.to_json())
    flags = {"wrapped": wrap.wrapped,
             "negative_spectrum": h.negative_spectrum,
             "hypotheses_met": _potential_flag(h, potential_report),
             "unitary": series.converged}
    return _finish("short-time", config, rows, None, 0.0, flags, wrap.t_safe)


_RHS_VARIANTS = {"b2beta_q1": 1.0, "b2beta_q2": 2.0}


def long_time_experiment(h: Hamiltonian, sys: DyadicSystem, f: Field,
                         p: float, times, rhs_variant: str = "B2beta_q1",
                         *, fit_window: tuple | None = None,
                         field_label: str = "field",
                         tol: float = WINDOW_TOL,
                         phase_tol: float = PHASE_TOL,
                         potential_report: PotentialReport | None = None
                         ) -> DecayReport:
    """||u(t)||_{p'} against <t>^{-dim(1/p-1/2)} ||f||_{B^{2beta,q}_p},
    q = 1 or 2 by variant."""
    _check_p_low(p)
    q = _RHS_VARIANTS.get(rhs_variant.lower())
    if q is None:
        raise ValueError(f"rhs_variant must be one of "
                         f"{sorted(_RHS_VARIANTS)}, got {rhs_variant!r}")
    times = [float(t) for t in times]
    p_conj = conjugate_exponent(p)
    idx = BesovIndex(0.0, p, 2.0)
    beta = idx.beta(h.grid.dim)
    theory = theory_exponent(h.grid.dim, p)
    pieces = lp_decompose(h, sys, f, tol)
    weight = besov_from_pieces(pieces, BesovIndex(2.0 * beta, p, q))
    wrap = wrap_diagnostic(f, max(times))
    series = propagate_series(h, f, times, tol=phase_tol)
    rows = []
    for t, u in zip(times, series.states):
        lhs = lp_norm(u, p_conj)
        rhs = bracket(t) ** theory * weight
        rows.append({"t": t, "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0.0 else None,
                     "bracket": bracket(t)})
    config = _base_config(h, p=p, p_conjugate=p_conj, beta=beta,
                          rhs_variant=rhs_variant, times=times,
                          field=field_label, j_max=sys.j_max,
                          wrap=wrap.to_json())
    flags = {"wrapped": wrap.wrapped,
             "negative_spectrum": h.negative_spectrum,
             "hypotheses_met": _potential_flag(h, potential_report),
             "unitary": series.converged}
    return _finish("long-time", config, rows, fit_window, theory, flags,
                   wrap.t_safe)


def dispersive_scan(h: Hamiltonian, f: Field, p: float, times, *,
                    fit_window: tuple | None = None,
                    field_label: str = "field",
                    phase_tol: float = PHASE_TOL,
                    potential_report: PotentialReport | None = None
                    ) -> DecayReport:
    """The pure L^p -> L^{p'} form: ||u(t)||_{p'} against
    |t|^{-dim(1/p-1/2)} ||f||_p, no scale decomposition on either side."""
    _check_p_low(p)
    times = [float(t) for t in times]
    theory = theory_exponent(h.grid.dim, p)
    if theory < 0.0 and any(t <= 0.0 for t in times):
        raise ValueError("the |t|-power right side needs times > 0")
    p_conj = conjugate_exponent(p)
    base = lp_norm(f, p)
    wrap = wrap_diagnostic(f, max(times))
    series = propagate_series(h, f, times, tol=phase_tol)
    rows = []
    for t, u in zip(times, series.states):
        lhs = lp_norm(u, p_conj)
        rhs = (abs(t) ** theory if t != 0.0 else 1.0) * base
        rows.append({"t": t, "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0.0 else None,
                     "bracket": bracket(t)})
    config = _base_config(h, p=p, p_conjugate=p_conj, times=times,
                          field=field_label, wrap=wrap.to_json())
    flags = {"wrapped": wrap.wrapped,
             "negative_spectrum": h.negative_spectrum,
             "hypotheses_met": _potential_flag(h, potential_report),
             "unitary": series.converged}
    return _finish("dispersive", config, rows, fit_window, theory, flags,
                   wrap.t_safe)


@dataclass(frozen=True)
class ThetaScanReport:
    """Sup of ||psi(theta H) e^{-i t theta H} f||_p / (<t>^beta ||f||_p)
    per theta; the estimate's content is that the sup stays bounded
    uniformly as theta sweeps down to 0."""

    p: float
    beta: float
    thetas: list
    times: list
    n_fields: int
    rows: list
    theta_sups: list                  # aligned with thetas
    sup_ratio: float
    sup_location: dict
    spread: float                     # max theta-sup / min theta-sup

    def to_json(self) -> dict:
        return {
            "p": _json_num(self.p), "beta": self.beta,
            "thetas": self.thetas,
            "times": self.times, "n_fields": self.n_fields,
            "rows": self.rows, "theta_sups": self.theta_sups,
            "sup_ratio": self.sup_ratio, "sup_location": self.sup_location,
            "spread": self.spread,
        }


def lemma_jn_scan(h: Hamiltonian, sys: DyadicSystem, fields, p: float,
                  thetas, times, *, tol: float = WINDOW_TOL
                  ) -> ThetaScanReport:
    """Scan the smoothed low-pass evolution over scaling parameters.

    For each theta the operator is psi(theta H) e^{-i t theta H} with psi
    the system's mother cutoff (supported in |x| <= 1, so theta H is
    band-limited to 1/theta); one expansion per (theta, t) serves every
    field."""
    thetas = [float(v) for v in thetas]
    if any(not 0.0 < v <= 1.0 for v in thetas):
        raise ValueError("theta must lie in (0, 1]")
    times = [float(t) for t in times]
    fields = list(fields)
    beta = BesovIndex(0.0, p, 2.0).beta(h.grid.dim)
    norms0 = [lp_norm(f, p) for f in fields]
    interval = expansion_interval(h)
    rows = []
    theta_sups = []
    best = (-math.inf, None)
    for theta in thetas:
        sup_here = 0.0
        for t in times:
            key = ("lowpass-evolve", theta, t, tol)
            cf = h._cheb_cache.get(key)
            if cf is None:
                cf = cheb_fit(
                    lambda lam: cutoff(theta * lam)
                    * np.exp(-1j * t * theta * lam),
                    interval, tol=tol, scale=1.0,
                    label=f"lowpass-evolve[{theta:.3g},{t:.3g}]")
                h._cheb_cache[key] = cf
            denom_t = bracket(t) ** beta
            for i, (f, n0) in enumerate(zip(fields, norms0)):
                val = lp_norm(apply_function(h, cf, f), p)
                ratio = val / (denom_t * n0) if n0 > 0.0 else None
                rows.append({"theta": theta, "t": t, "field": i,
                             "ratio": ratio})
                if ratio is not None:
                    sup_here = max(sup_here, ratio)
                    if ratio > best[0]:
                        best = (ratio, {"theta": theta, "t": t, "field": i})
        theta_sups.append(sup_here)
    finite = [s for s in theta_sups if s > 0.0]
    spread = max(finite) / min(finite) if finite else math.nan
    return ThetaScanReport(p, beta, thetas, times, len(fields), rows,
                           theta_sups, best[0], best[1] or {},
                           float(spread))


@dataclass(frozen=True)
class SplitReport:
    """The low/high frequency split of u(t) at the crossover scale."""

    t: float
    p: float
    j_t: int
    low_js: list
    high_js: list
    low_norm: float
    high_norm: float
    high_piece_norms: list            # ||phi_j(H)u(t)||_{p'} per high j
    high_terms: list                  # 2^{j beta} ||phi_j(H)f||_{p'} per high j
    high_bound: float                 # t^beta * sum(high_terms)
    reconstruction_rel: float

    def to_json(self) -> dict:
        return {
            "t": self.t, "p": _json_num(self.p), "j_t": self.j_t,
            "low_js": self.low_js, "high_js": self.high_js,
            "low_norm": self.low_norm, "high_norm": self.high_norm,
            "high_piece_norms": self.high_piece_norms,
            "high_terms": self.high_terms, "high_bound": self.high_bound,
            "reconstruction_rel": self.reconstruction_rel,
        }


def split_index(t: float) -> int:
    """floor(-log2 t) + 1: scales with 2^j t <= 1 sit strictly below it."""
    if t <= 0.0:
        raise ValueError("the split needs t > 0")
    return int(math.floor(-math.log2(t))) + 1


def dyadic_split_diagnostic(h: Hamiltonian, sys: DyadicSystem, f: Field,
                            t: float, p: float, *,
                            tol: float = WINDOW_TOL,
                            phase_tol: float = PHASE_TOL) -> SplitReport:
    """Split u(t) into the scales with 2^j t <= 1 and the rest; check the
    two blocks reassemble u(t) and report the high-block bound
    t^beta sum_j 2^{j beta} ||phi_j(H)f||_{p'} next to the measured
    ||high||_{p'} (the two displayed estimates of the short-time proof)."""
    j_t = split_index(t)
    p_conj = conjugate_exponent(p)
    beta = BesovIndex(0.0, p, 2.0).beta(h.grid.dim)
    u = propagate(h, f, t, tol=phase_tol)
    pieces_u = lp_decompose(h, sys, u, tol)
    pieces_f = lp_decompose(h, sys, f, tol)
    low_js = [j for j in range(sys.j_max + 1) if j < j_t]
    high_js = [j for j in range(sys.j_max + 1) if j >= j_t]

    def block(pieces, js):
        acc = np.zeros(h.grid.shape, dtype=np.complex128)
        for j in js:
            acc += pieces[j].values
        return Field._wrap(h.grid, acc)

    low = block(pieces_u, low_js)
    high = block(pieces_u, high_js)
    recon = lp_norm(low + high - u, 2) / lp_norm(u, 2)
    high_piece_norms = [lp_norm(pieces_u[j], p_conj) for j in high_js]
    high_terms = [2.0 ** (j * beta) * lp_norm(pieces_f[j], p_conj)
                  for j in high_js]
    return SplitReport(float(t), p, j_t, low_js, high_js,
                       lp_norm(low, p_conj), lp_norm(high, p_conj),
                       high_piece_norms, high_terms,
                       t ** beta * sum(high_terms), float(recon))


def corollary_experiment(h: Hamiltonian, sys: DyadicSystem, f: Field,
                         idx: BesovIndex, times, space: str = "B", *,
                         fit_window: tuple | None = None,
                         field_label: str = "field",
                         tol: float = WINDOW_TOL,
                         phase_tol: float = PHASE_TOL,
                         potential_report: PotentialReport | None = None
                         ) -> DecayReport:
    """Scale-decomposed decay: the (alpha,p,q) norm of u(t) against
    <t>^{-dim(1/p-1/2)} times the (alpha+2beta,p,q) norm of f. The
    pointwise-aggregated left side (space="F") requires q <= p."""
    _check_p_low(p := idx.p)
    if space not in ("B", "F"):
        raise ValueError(f"space must be 'B' or 'F', got {space!r}")
    if space == "F" and (idx.q > idx.p or idx.p == math.inf):
        raise ValueError("the pointwise-aggregated left side needs "
                         "q <= p < inf")
    times = [float(t) for t in times]
    beta = idx.beta(h.grid.dim)
    theory = theory_exponent(h.grid.dim, p)
    rhs_idx = BesovIndex(idx.alpha + 2.0 * beta, idx.p, idx.q)
    weight = besov_from_pieces(lp_decompose(h, sys, f, tol), rhs_idx)
    wrap = wrap_diagnostic(f, max(times))
    series = propagate_series(h, f, times, tol=phase_tol)
    rows = []
    for t, u in zip(times, series.states):
        pieces_u = lp_decompose(h, sys, u, tol)
        if space == "B":
            lhs = besov_from_pieces(pieces_u, idx)
        else:
            lhs = triebel_from_pieces(pieces_u, idx)
        rhs = bracket(t) ** theory * weight
        rows.append({"t": t, "lhs": lhs, "rhs": rhs,
                     "ratio": lhs / rhs if rhs > 0.0 else None,
                     "bracket": bracket(t)})
    config = _base_config(h, alpha=idx.alpha, p=idx.p, q=idx.q,
                          space=space, beta=beta, times=times,
                          field=field_label, j_max=sys.j_max,
                          wrap=wrap.to_json())
    flags = {"wrapped": wrap.wrapped,
             "negative_spectrum": h.negative_spectrum,
             "hypotheses_met": _potential_flag(h, potential_report),
             "unitary": series.converged}
    return _finish(f"corollary-{space}", config, rows, fit_window, theory,
                   flags, wrap.t_safe)
