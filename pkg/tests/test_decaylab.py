import csv
import io
import math

import numpy as np
import pytest

from lpsf.decaylab import (DecayReport, bracket, corollary_experiment,
                           dispersive_scan, dyadic_split_diagnostic,
                           fit_exponent, lemma_jn_scan, long_time_experiment,
                           save_report, short_time_experiment, split_index,
                           theory_exponent)
from lpsf.dyadic import build_dyadic_system, required_j_max
from lpsf.hamiltonian import assemble
from lpsf.lattice import (Field, PotentialSpec, gaussian_packet, lp_norm,
                          make_grid)
from lpsf.norms import BesovIndex


def _well_operator(n=128, extent=60.0):
    g = make_grid(1, extent, n)
    return assemble(g, PotentialSpec.gaussian_well(-1.0, 1.0), "fourier")


def _system_for(h):
    return build_dyadic_system(required_j_max(h.enclosure[1]))


def _packet(h, momentum=0.0, width=1.5):
    return gaussian_packet(h.grid, (0.0,) * h.grid.dim, width,
                           (momentum,) * h.grid.dim)


def test_bracket_dominates_max():
    assert bracket(0.0) == 1.0
    for t in (0.3, 1.0, 7.5):
        assert bracket(t) == pytest.approx(math.sqrt(1 + t * t))
        assert bracket(t) >= max(1.0, t)


def test_theory_exponent_values():
    assert theory_exponent(1, 1.0) == pytest.approx(-0.5)
    assert theory_exponent(3, 1.0) == pytest.approx(-1.5)
    assert theory_exponent(2, 2.0) == 0.0
    assert theory_exponent(3, math.inf) == pytest.approx(1.5)


def test_split_index_values_and_guard():
    assert split_index(1.0) == 1
    assert split_index(0.5) == 2
    assert split_index(0.25) == 3
    assert split_index(0.3) == 2
    assert split_index(2.0) == 0
    with pytest.raises(ValueError):
        split_index(0.0)


def test_fit_exponent_recovers_power_law():
    times = np.geomspace(1.0, 30.0, 12)
    rows = [(t, 3.7 * t ** -1.5) for t in times]
    slope, stderr = fit_exponent(rows, (0.5, 40.0))
    assert slope == pytest.approx(-1.5, abs=1e-12)
    assert stderr <= 1e-12
    # dict rows and window filtering behave the same
    drows = [{"t": t, "lhs": v} for t, v in rows] + [{"t": 100.0, "lhs": 1.0}]
    slope2, _ = fit_exponent(drows, (0.5, 40.0))
    assert slope2 == pytest.approx(-1.5, abs=1e-12)


def test_fit_exponent_guards():
    rows = [(t, 1.0) for t in (1.0, 2.0, 3.0, 4.0)]
    with pytest.raises(ValueError):
        fit_exponent(rows, (0.0, 10.0))          # only 4 rows
    bad = [(t, -1.0) for t in (1, 2, 3, 4, 5)]
    with pytest.raises(ValueError):
        fit_exponent(bad, (0.0, 10.0))
    same = [(2.0, 1.0)] * 5
    with pytest.raises(ValueError):
        fit_exponent(same, (0.0, 10.0))


def test_short_time_report_shape_and_p2_bound():
    h = _well_operator()
    sys = _system_for(h)
    f = _packet(h)
    times = [0.1, 0.3, 0.5, 1.0]
    rep = short_time_experiment(h, sys, f, 2.0, times, field_label="packet")
    assert rep.experiment == "short-time"
    assert rep.fit_window is None and rep.fitted_exponent is None
    assert [row["t"] for row in rep.rows] == times
    for row in rep.rows:
        assert set(row) == {"t", "lhs", "rhs", "ratio", "bracket"}
        assert row["rhs"] > 0.0
    assert rep.sup_ratio == pytest.approx(
        max(row["ratio"] for row in rep.rows))
    # p = 2: the left side is conserved and the right side adds a whole
    # extra Besov term, so the ratio must sit strictly below one
    assert rep.sup_ratio < 1.0
    assert rep.flags["unitary"]
    assert rep.flags["negative_spectrum"]
    assert rep.flags["hypotheses_met"] is None     # 1d run
    assert rep.config["p"] == 2.0 and rep.config["field"] == "packet"


def test_short_time_input_guards():
    h = _well_operator(n=64)
    sys = _system_for(h)
    f = _packet(h)
    with pytest.raises(ValueError):
        short_time_experiment(h, sys, f, 3.0, [0.5])
    with pytest.raises(ValueError):
        short_time_experiment(h, sys, f, 0.5, [0.5])
    with pytest.raises(ValueError):
        short_time_experiment(h, sys, f, 2.0, [0.5, 1.5])
    with pytest.raises(ValueError):
        short_time_experiment(h, sys, f, 2.0, [0.0, 0.5])


def test_long_time_variant_lookup():
    h = _well_operator(n=64)
    sys = _system_for(h)
    f = _packet(h)
    times = [0.5, 1.0, 2.0]
    one = long_time_experiment(h, sys, f, 2.0, times, "B2beta_q1")
    two = long_time_experiment(h, sys, f, 2.0, times, "b2beta_Q2")
    assert one.experiment == "long-time"
    assert one.config["rhs_variant"] == "B2beta_q1"
    # q = 1 sums piece norms, q = 2 takes the l2 aggregate: rhs can only
    # shrink, so every ratio grows
    for r1, r2 in zip(one.rows, two.rows):
        assert r2["rhs"] <= r1["rhs"] + 1e-12
        assert r2["ratio"] >= r1["ratio"] - 1e-12
    with pytest.raises(ValueError):
        long_time_experiment(h, sys, f, 2.0, times, "bogus")


def test_dispersive_scan_free_slope():
    g = make_grid(1, 300.0, 2048)
    h = assemble(g, PotentialSpec.zero(), "fourier")
    f = gaussian_packet(g, (0.0,), 1.0, (0.0,))
    times = list(np.geomspace(5.0, 20.0, 7))
    rep = dispersive_scan(h, f, 1.0, times, fit_window=(4.0, 25.0))
    assert rep.theory_exponent == pytest.approx(-0.5)
    slope, stderr = rep.fitted_exponent
    # |u(t)|_inf = C (sigma^4 + t^2)^{-1/4} for the free Gaussian: the
    # local slope runs from -0.48 at t = 5 to -0.4994 at t = 20
    assert -0.52 < slope < -0.46
    assert stderr < 0.02
    assert not rep.flags["wrapped"]
    assert math.isfinite(rep.sup_ratio)


def test_dispersive_scan_rejects_nonpositive_times():
    h = _well_operator(n=64)
    f = _packet(h)
    with pytest.raises(ValueError):
        dispersive_scan(h, f, 1.0, [0.0, 1.0])


def test_lemma_scan_structure_and_p2_contraction():
    h = _well_operator(n=96)
    sys = _system_for(h)
    fields = [_packet(h, momentum=0.0), _packet(h, momentum=1.0)]
    thetas = [1.0, 0.5, 0.25]
    times = [0.0, 1.0, 2.0]
    rep = lemma_jn_scan(h, sys, fields, 2.0, thetas, times)
    assert rep.beta == 0.0
    assert len(rep.rows) == len(thetas) * len(times) * len(fields)
    assert len(rep.theta_sups) == len(thetas)
    assert rep.sup_ratio == pytest.approx(max(rep.theta_sups))
    loc = rep.sup_location
    assert set(loc) == {"theta", "t", "field"}
    assert rep.spread == pytest.approx(max(rep.theta_sups)
                                       / min(rep.theta_sups))
    # p = 2: a [0,1]-valued multiplier composed with a unitary group can
    # never beat the plain L^2 norm
    assert rep.sup_ratio <= 1.0 + 1e-8
    blob = rep.to_json()
    assert blob["n_fields"] == 2 and blob["thetas"] == thetas


def test_lemma_scan_rejects_bad_theta():
    h = _well_operator(n=64)
    sys = _system_for(h)
    with pytest.raises(ValueError):
        lemma_jn_scan(h, sys, [_packet(h)], 2.0, [0.5, 1.5], [0.5])
    with pytest.raises(ValueError):
        lemma_jn_scan(h, sys, [_packet(h)], 2.0, [0.0], [0.5])


def test_dyadic_split_consistency():
    h = _well_operator()
    sys = _system_for(h)
    f = _packet(h)
    t, p = 0.3, 2.0
    rep = dyadic_split_diagnostic(h, sys, f, t, p)
    assert rep.j_t == split_index(t)
    assert rep.low_js == list(range(rep.j_t))
    assert rep.high_js == list(range(rep.j_t, sys.j_max + 1))
    assert rep.reconstruction_rel <= 1e-9
    assert len(rep.high_piece_norms) == len(rep.high_js)
    # triangle inequality across the high block
    assert rep.high_norm <= sum(rep.high_piece_norms) + 1e-12
    beta = BesovIndex(0.0, p, 2.0).beta(1)
    assert rep.high_bound == pytest.approx(t ** beta * sum(rep.high_terms))
    blob = rep.to_json()
    for key in ("t", "p", "j_t", "low_norm", "high_norm", "high_bound",
                "reconstruction_rel"):
        assert key in blob


def test_corollary_spaces_and_guards():
    h = _well_operator(n=96)
    sys = _system_for(h)
    f = _packet(h)
    times = [0.5, 1.0, 2.0]
    idx = BesovIndex(0.0, 2.0, 2.0)
    b = corollary_experiment(h, sys, f, idx, times, "B")
    fr = corollary_experiment(h, sys, f, idx, times, "F")
    assert b.experiment == "corollary-B"
    assert fr.experiment == "corollary-F"
    # q = p: the two aggregation orders coincide
    for rb, rf in zip(b.rows, fr.rows):
        assert rf["lhs"] == pytest.approx(rb["lhs"], rel=1e-12)
    with pytest.raises(ValueError):
        corollary_experiment(h, sys, f, idx, times, "X")
    with pytest.raises(ValueError):
        corollary_experiment(h, sys, f, BesovIndex(0.0, 2.0, math.inf),
                             times, "F")
    with pytest.raises(ValueError):
        corollary_experiment(h, sys, f, BesovIndex(0.0, 3.0, 1.0), times)


def test_three_d_runs_report_hypothesis_flag():
    g = make_grid(3, 12.0, 16)
    h = assemble(g, PotentialSpec.smooth_bump(0.4, 1.2), "fourier")
    sys = _system_for(h)
    f = gaussian_packet(g, (0.0,) * 3, 0.9, (0.0,) * 3)
    rep = short_time_experiment(h, sys, f, 2.0, [0.5])
    assert rep.flags["hypotheses_met"] in (True, False)
    # the verdict is cached on the operator and reused
    again = short_time_experiment(h, sys, f, 2.0, [0.5])
    assert again.flags["hypotheses_met"] == rep.flags["hypotheses_met"]


def test_save_report_is_deterministic(tmp_path):
    h = _well_operator(n=64)
    sys = _system_for(h)
    f = _packet(h)
    times = [0.25, 0.5, 1.0]

    def run():
        return short_time_experiment(h, sys, f, 1.0, times)

    a_json, a_csv = save_report(run(), str(tmp_path / "a"))
    b_json, b_csv = save_report(run(), str(tmp_path / "b"))
    with open(a_json, "rb") as fh:
        blob_a = fh.read()
    with open(b_json, "rb") as fh:
        blob_b = fh.read()
    assert blob_a == blob_b
    with open(a_csv) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "lhs", "rhs", "ratio"]
    assert len(rows) == 1 + len(times)
    # repr round-trips the floats exactly
    rep = run()
    assert float(rows[1][1]) == rep.rows[0]["lhs"]
    stem = a_json.rsplit("/", 1)[-1]
    assert stem.startswith("short-time-") and stem.endswith(".json")


def test_report_json_handles_unbounded_exponent():
    h = _well_operator(n=64)
    sys = _system_for(h)
    f = _packet(h)
    rep = short_time_experiment(h, sys, f, 1.0, [0.5])
    assert rep.config["p_conjugate"] == "inf"
    scan = lemma_jn_scan(h, sys, [f], math.inf, [1.0], [0.5])
    assert scan.to_json()["p"] == "inf"


def test_csv_rows_match_report():
    rep = DecayReport("demo", {}, [{"t": 1.0, "lhs": 2.0, "rhs": 4.0,
                                    "ratio": 0.5, "bracket": math.sqrt(2)},
                                   {"t": 2.0, "lhs": 1.0, "rhs": 0.0,
                                    "ratio": None, "bracket": math.sqrt(5)}],
                      None, None, 0.0, 0.5, {})
    text = rep.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[1] == ["1.0", "2.0", "4.0", "0.5"]
    assert rows[2][3] == ""
