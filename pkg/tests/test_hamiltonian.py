import numpy as np
import pytest

from lpsf.hamiltonian import (Hamiltonian, apply, assemble, dense_eig,
                              fd2_symbol_1d, fourier_symbol, spectral_range)
from lpsf.lattice import Field, PotentialSpec, inner, make_grid, sample_potential


def _random_field(g, seed=0):
    rng = np.random.default_rng(seed)
    return Field(g, rng.standard_normal(g.shape)
                 + 1j * rng.standard_normal(g.shape))


def test_fourier_symbol_values():
    g = make_grid(1, 10.0, 8)
    sym = fourier_symbol(g)
    k = np.fft.fftfreq(8, d=g.h)
    np.testing.assert_allclose(sym, (2 * np.pi * k) ** 2)
    g2 = make_grid(2, 10.0, 8)
    sym2 = fourier_symbol(g2)
    np.testing.assert_allclose(sym2, sym[:, None] + sym[None, :])


def test_fd2_symbol_values():
    g = make_grid(1, 10.0, 8)
    sym = fd2_symbol_1d(g)
    k = np.arange(8)
    np.testing.assert_allclose(
        sym, (2.0 / g.h ** 2) * (1.0 - np.cos(2 * np.pi * k / 8)))


@pytest.mark.parametrize("dim,n", [(1, 16), (2, 8), (3, 6)])
@pytest.mark.parametrize("scheme", ["fourier", "fd2"])
def test_apply_matches_dense_matrix(dim, n, scheme):
    g = make_grid(dim, 6.0, n)
    v = sample_potential(PotentialSpec.gaussian_well(-1.5, 1.0), g)
    h = assemble(g, v, scheme)
    f = _random_field(g, seed=dim)
    dense = h.dense_matrix()
    np.testing.assert_allclose(dense, dense.T, atol=1e-12)
    got = h(f).values.ravel()
    want = dense @ f.values.ravel()
    np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-11)


def test_fourier_plane_wave_is_exact_eigenfield():
    g = make_grid(1, 10.0, 32)
    h = assemble(g, PotentialSpec.zero(), "fourier")
    k = 2 * np.pi * 3 / g.extent
    f = Field(g, np.exp(1j * k * g.axis()))
    np.testing.assert_allclose(h(f).values, k ** 2 * f.values, rtol=1e-12)


def test_fd2_apply_is_the_stencil():
    g = make_grid(1, 5.0, 16)
    v = sample_potential(PotentialSpec.gaussian_well(-1.0, 0.8), g)
    h = assemble(g, v, "fd2")
    f = _random_field(g, seed=3)
    u = f.values
    lap = (2 * u - np.roll(u, 1) - np.roll(u, -1)) / g.h ** 2
    np.testing.assert_allclose(h(f).values, lap + v.values * u, rtol=1e-12)


@pytest.mark.parametrize("scheme", ["fourier", "fd2"])
def test_hermiticity(scheme):
    g = make_grid(2, 6.0, 8)
    v = sample_potential(PotentialSpec.smooth_bump(0.7, 2.0), g)
    h = assemble(g, v, scheme)
    f, e = _random_field(g, 1), _random_field(g, 2)
    assert inner(h(f), e) == pytest.approx(inner(f, h(e)), rel=1e-12)


@pytest.mark.parametrize("scheme", ["fourier", "fd2"])
def test_enclosure_contains_spectrum(scheme):
    g = make_grid(1, 30.0, 96)
    v = sample_potential(PotentialSpec.gaussian_well(-2.0, 1.0), g)
    h = assemble(g, v, scheme)
    eig = np.linalg.eigvalsh(h.dense_matrix())
    lo, hi = h.enclosure
    rlo, rhi = h.rigorous_enclosure
    assert rlo <= lo <= eig[0] + 1e-9
    assert eig[-1] <= hi <= rhi
    assert h.lambda_min_estimate == pytest.approx(eig[0], abs=1e-8)


def test_lanczos_tightening_on_large_grid():
    # above the dense-matrix cutoff the bottom end comes from Lanczos
    g = make_grid(1, 100.0, 1024)
    h = assemble(g, PotentialSpec.gaussian_well(-2.0, 1.0), "fourier")
    eig = dense_eig(h)
    truth = eig.eigenvalues[0]
    assert h.lambda_min_estimate == pytest.approx(truth, abs=1e-6)
    assert h.enclosure[0] <= truth
    assert h.negative_spectrum


def test_negative_spectrum_flag():
    g = make_grid(1, 40.0, 128)
    well = assemble(g, PotentialSpec.gaussian_well(-1.0, 1.0), "fourier")
    assert well.negative_spectrum
    free = assemble(g, PotentialSpec.zero(), "fourier")
    assert not free.negative_spectrum
    bump = assemble(g, PotentialSpec.smooth_bump(1.0, 2.0), "fourier")
    assert not bump.negative_spectrum


def test_dense_eig_structure_and_roundtrip():
    g = make_grid(1, 12.0, 24)
    v = sample_potential(PotentialSpec.gaussian_well(-1.0, 1.0), g)
    h = assemble(g, v, "fourier")
    eig = dense_eig(h)
    assert dense_eig(h) is eig            # cached on the operator
    lam = eig.eigenvalues
    assert np.all(np.diff(lam) >= -1e-10)
    # orthonormal under the h^d-weighted inner product
    gram = (eig.vectors.conj().T @ eig.vectors) * g.cell_volume
    np.testing.assert_allclose(gram, np.eye(g.npoints), atol=1e-10)
    f = _random_field(g, 5)
    back = eig.synthesize(eig.coefficients(f))
    np.testing.assert_allclose(back.values, f.values, atol=1e-10)
    # functional calculus sanity: identity function reproduces H f
    hf = eig.apply_scalar(lambda x: x, f)
    np.testing.assert_allclose(hf.values, h(f).values, atol=1e-9)


def test_eigenfields_are_eigenfields():
    g = make_grid(1, 12.0, 16)
    v = sample_potential(PotentialSpec.gaussian_well(-1.0, 1.0), g)
    h = assemble(g, v, "fd2")
    eig = dense_eig(h)
    for k in (0, 3, 15):
        ef = eig.eigenfield(k)
        np.testing.assert_allclose(h(ef).values,
                                   eig.eigenvalues[k] * ef.values, atol=1e-9)


def test_assemble_and_helpers():
    g = make_grid(1, 10.0, 16)
    spec = PotentialSpec.gaussian_well(-1.0, 1.0)
    h = assemble(g, spec, "fourier")
    assert h.potential_spec == spec
    v = sample_potential(spec, g)
    h2 = assemble(g, v, "fourier")
    np.testing.assert_array_equal(h2.potential.values, v.values)
    f = _random_field(g, 8)
    np.testing.assert_array_equal(apply(h, f).values, h(f).values)
    assert spectral_range(h) == h.enclosure


def test_constructor_rejections():
    g = make_grid(1, 10.0, 16)
    v = sample_potential(PotentialSpec.zero(), g)
    with pytest.raises(ValueError):
        Hamiltonian(g, v, scheme="spectral-magic")
    with pytest.raises(ValueError):
        Hamiltonian(g, Field(g, np.full(16, 1j)), scheme="fourier")
    other = make_grid(1, 10.0, 32)
    with pytest.raises(ValueError):
        Hamiltonian(other, v, scheme="fourier")
    h = assemble(g, v, "fourier")
    with pytest.raises(ValueError):
        h(Field(other, np.zeros(32)))


def test_dense_eig_size_guard():
    g = make_grid(3, 8.0, 20)     # 8000 points > default cap
    h = assemble(g, PotentialSpec.zero(), "fourier")
    with pytest.raises(ValueError):
        dense_eig(h)


def test_laplacian_annihilates_constants():
    for scheme in ("fourier", "fd2"):
        g = make_grid(2, 9.0, 10)
        v = sample_potential(PotentialSpec.gaussian_well(-1.0, 1.0), g)
        h = assemble(g, v, scheme)
        one = Field(g, np.ones(g.shape))
        np.testing.assert_allclose(h(one).values, v.values, atol=1e-10)
