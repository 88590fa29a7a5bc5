import numpy as np
import pytest
import sympy

from lpsf.dyadic import (build_dyadic_system, cutoff, required_j_max,
                         transition, validate_dyadic)


def _transition_derivative(k: int):
    """Closed-form k-th derivative of the C^inf step, as a numpy callable."""
    t = sympy.Symbol("t")
    a = sympy.exp(-1 / t)
    b = sympy.exp(-1 / (1 - t))
    s = a / (a + b)
    return sympy.lambdify(t, sympy.diff(s, t, k), "numpy")


def test_transition_endpoints_and_range():
    t = np.linspace(-1.0, 2.0, 301)
    s = transition(t)
    assert np.all(s[t <= 0.0] == 0.0)
    assert np.all(s[t >= 1.0] == 1.0)
    assert np.all((s >= 0.0) & (s <= 1.0))
    mid = np.linspace(0.01, 0.99, 200)
    assert np.all(np.diff(transition(mid)) >= 0.0)
    core = np.linspace(0.2, 0.8, 200)
    assert np.all(np.diff(transition(core)) > 0.0)


def test_transition_symmetry():
    t = np.linspace(0.0, 1.0, 257)
    np.testing.assert_allclose(transition(t) + transition(1.0 - t), 1.0,
                               atol=1e-15)


def test_cutoff_plateau_and_support():
    x = np.linspace(-2.0, 2.0, 801)
    psi = cutoff(x)
    assert np.all(psi[np.abs(x) <= 0.5] == 1.0)
    assert np.all(psi[np.abs(x) >= 1.0] == 0.0)
    np.testing.assert_array_equal(psi, cutoff(-x))


def test_window_supports_are_exact():
    sys = build_dyadic_system(6)
    for j in range(1, 7):
        lo, hi = sys.support(j)
        assert (lo, hi) == (2.0 ** (j - 2), 2.0 ** j)
        x_out = np.concatenate([np.linspace(0, lo * 0.999, 50),
                                np.linspace(hi * 1.001, hi * 3, 50)])
        assert np.all(sys.window(j, x_out) == 0.0)
        x_in = np.geomspace(lo * 1.05, hi * 0.95, 200)
        assert np.all(sys.window(j, x_in) >= 0.0)
        assert sys.window(j, np.array([0.5 * (lo + hi)])) [0] > 0.0


def test_partition_telescopes_exactly():
    sys = build_dyadic_system(5)
    x = np.geomspace(1e-3, 64.0, 2000)
    total = sum(sys.window(j, x) for j in range(6))
    np.testing.assert_allclose(total, cutoff(x / 32.0), atol=1e-14)
    covered = x <= sys.resolved_bound
    np.testing.assert_allclose(total[covered], 1.0, atol=1e-14)


def test_windows_are_rescalings():
    sys = build_dyadic_system(6)
    x = np.geomspace(0.3, 3.0, 400)
    for j in range(1, 6):
        np.testing.assert_allclose(sys.window(j + 1, 2.0 * x * 2.0 ** (j - 1)),
                                   sys.window(j, x * 2.0 ** (j - 1)),
                                   atol=1e-15)


def test_window_peaks_and_disjointness():
    sys = build_dyadic_system(8)
    for j in range(1, 9):
        peak = 2.0 ** (j - 1)
        assert sys.window(j, np.array([peak]))[0] == pytest.approx(1.0)
        for k in range(9):
            if abs(k - j) >= 2:
                assert sys.window(k, np.array([peak]))[0] == 0.0


def test_window_rising_edge_matches_closed_form():
    sys = build_dyadic_system(6)
    s0 = _transition_derivative(0)
    j = 4
    x = np.linspace(2.0 ** (j - 2) * 1.05, 2.0 ** (j - 1) * 0.95, 200)
    u = x / 2.0 ** (j - 2) - 1.0
    np.testing.assert_allclose(sys.window(j, x), s0(u), rtol=1e-8,
                               atol=1e-15)


def test_fd_derivatives_match_closed_form():
    from lpsf.dyadic import _fd_derivative
    sys = build_dyadic_system(6)
    j = 4
    scale = 2.0 ** (j - 2)
    u = np.linspace(0.25, 0.75, 60)
    x = (u + 1.0) * scale
    for k in range(1, 5):
        exact = _transition_derivative(k)(u) / scale ** k
        approx = _fd_derivative(lambda t: sys.window(j, t), x, k,
                                2.0 ** j * 1e-4)
        np.testing.assert_allclose(approx, exact, rtol=2e-3,
                                   atol=1e-6 * np.max(np.abs(exact)))


def test_scaled_derivative_bounds_match_closed_form_sup():
    # every window with j >= 2 is a rescaled copy of one bump, so the
    # scaled bound 2^(kj) sup|phi_j^(k)| equals 4^k sup|s^(k)| exactly
    report = validate_dyadic(build_dyadic_system(6), samples_per_octave=64)
    u = np.linspace(1e-4, 1.0 - 1e-4, 20001)
    for row in report.derivative_table:
        k = row["k"]
        if k == 0:
            continue
        sup = np.max(np.abs(_transition_derivative(k)(u)))
        assert row["c_max"] == pytest.approx(4.0 ** k * sup, rel=2e-3)


def test_required_j_max_values():
    assert required_j_max(0.25) == 1
    assert required_j_max(1.0) == 1
    assert required_j_max(1.5) == 2
    assert required_j_max(2.0) == 2
    assert required_j_max(2.5) == 3
    assert required_j_max(64.0) == 7
    assert required_j_max(65.0) == 8
    # the returned system really covers lam_hi
    for lam in (0.7, 3.9, 17.0, 200.0):
        sys = build_dyadic_system(required_j_max(lam))
        assert sys.resolved_bound >= lam


def test_validation_passes_and_serializes():
    report = validate_dyadic(build_dyadic_system(8), samples_per_octave=64)
    assert report.passed
    assert report.partition_defect <= 1e-10
    assert report.support_violations == 0
    assert len(report.derivative_table) == 5
    blob = report.to_json()
    assert blob["pass"] is True
    assert blob["derivative_table"][4]["k"] == 4


def test_validation_input_checks():
    with pytest.raises(ValueError):
        build_dyadic_system(0)
    sys = build_dyadic_system(3)
    with pytest.raises(ValueError):
        sys.window(4, np.array([1.0]))
    with pytest.raises(ValueError):
        validate_dyadic(sys, samples_per_octave=8)
