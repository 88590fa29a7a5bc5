"""Matrix-free -Laplacian + V on a periodic grid, with a certified spectral
enclosure and a dense eigendecomposition oracle at small scale.

Two discretizations of -Laplacian are kept deliberately:

* "fourier": exact multiplier |2 pi k / L|^2 in frequency space; spectrally
  accurate, and exact on plane waves, so free-propagation tests are exact.
* "fd2": second-order centered stencil with periodic wrap; an independent
  discretization used for cross-checks.

The enclosure starts from the rigorous bracket [min V, lam_max(-Lap) + max V].
The upper end is kept (the symbol bound is sharp up to max V - min V); the
lower end is tightened with a Lanczos estimate of the ground energy, backed
off by the Ritz residual, so bound states introduced by attractive potentials
are located rather than bounded by min V.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft
import scipy.linalg
import scipy.sparse.linalg as spla

from . import _settings
from ._kernels import fd2_apply_1d, fd2_apply_2d, fd2_apply_3d
from .lattice import Field, Grid, PotentialSpec, inner, sample_potential

SCHEMES = ("fourier", "fd2")
_LANCZOS_SEED = 0x1C3B5A
_LANCZOS_TOL = 1e-7
_DENSE_TIGHTEN_LIMIT = 512
_FD2_KERNELS = {1: fd2_apply_1d, 2: fd2_apply_2d, 3: fd2_apply_3d}


def fourier_symbol(grid: Grid) -> np.ndarray:
    """|2 pi k / L|^2 on the FFT frequency lattice, shape grid.shape."""
    k1 = (2.0 * np.pi) * sfft.fftfreq(grid.n, d=grid.h)
    k2 = k1 * k1
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.n
        out = out + k2.reshape(shape)
    return out


def fd2_symbol_1d(grid: Grid) -> np.ndarray:
    """Eigenvalues (2/h^2)(1 - cos(2 pi k / N)) of the 1d periodic FD2 stencil."""
    k = np.arange(grid.n)
    return (2.0 / grid.h ** 2) * (1.0 - np.cos(2.0 * np.pi * k / grid.n))


class Hamiltonian:
    """Immutable matrix-free operator; shareable across threads."""

    def __init__(self, grid: Grid, potential: Field, scheme: str = "fourier",
                 potential_spec: PotentialSpec | None = None):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        if potential.grid != grid:
            raise ValueError("potential sampled on a different grid")
        if not potential.is_real:
            raise ValueError("potential must be real-valued")
        self.grid = grid
        self.scheme = scheme
        self.potential = potential
        self.potential_spec = potential_spec
        self._v = np.ascontiguousarray(potential.values.real)
        self.v_min = float(self._v.min())
        self.v_max = float(self._v.max())
        if scheme == "fourier":
            self._multiplier = fourier_symbol(grid)
            lap_max = grid.dim * (np.pi / grid.h) ** 2
        else:
            self._inv_h2 = 1.0 / grid.h ** 2
            lap_max = grid.dim * 4.0 / grid.h ** 2
        self.lap_max = lap_max
        self.rigorous_enclosure = (self.v_min, lap_max + self.v_max)
        self._cheb_cache: dict = {}
        self._eig = None
        self._tighten()

    # -- application ------------------------------------------------------

    def apply_values(self, values: np.ndarray, out: np.ndarray | None = None
                     ) -> np.ndarray:
        """H acting on a raw complex array of grid shape."""
        if self.scheme == "fourier":
            hat = sfft.fftn(values, workers=_settings.THREADS)
            hat *= self._multiplier
            res = sfft.ifftn(hat, workers=_settings.THREADS, overwrite_x=True)
            res += self._v * values
            if out is not None:
                np.copyto(out, res)
                return out
            return res
        if out is None:
            out = np.empty_like(values, dtype=np.complex128)
        _FD2_KERNELS[self.grid.dim](values, self._v, self._inv_h2, out)
        return out

    def __call__(self, f: Field) -> Field:
        if f.grid != self.grid:
            raise ValueError("field lives on a different grid")
        return Field._wrap(self.grid, self.apply_values(f.values))

    # -- enclosure --------------------------------------------------------

    def _tighten(self):
        lo0, hi0 = self.rigorous_enclosure
        width = max(hi0 - lo0, 1.0)
        n_total = int(np.prod(self.grid.shape))
        if n_total <= _DENSE_TIGHTEN_LIMIT:
            lam_min = float(np.linalg.eigvalsh(self.dense_matrix())[0])
            margin = 1e-12 * width
        else:
            lam_min, resid = self._lanczos_bottom()
            if lam_min is None:
                self.enclosure = (lo0, hi0)
                self.lambda_min_estimate = lo0
                self.negative_spectrum = lo0 < -1e-6 * max(abs(hi0), 1.0)
                return
            # the Ritz value sits above the ground energy; back off by the
            # residual (with 2% slack) to cover it from below
            margin = 1.02 * resid + 1e-9 * width
        self.lambda_min_estimate = lam_min
        self.enclosure = (max(lo0, lam_min - margin), hi0)
        self.negative_spectrum = lam_min < -1e-6 * max(abs(hi0), 1.0)

    def _lanczos_bottom(self):
        """Ground-energy estimate: Lanczos on the nonnegative operator
        hi0 - H, whose top eigenvalue is hi0 - lam_min. Returns
        (estimate, residual norm), or (None, None) if ARPACK returns
        nothing usable."""
        lo0, hi0 = self.rigorous_enclosure
        shape = self.grid.shape
        n_total = int(np.prod(shape))

        def matvec(u):
            arr = np.ascontiguousarray(u.reshape(shape), dtype=np.complex128)
            return (hi0 * arr - self.apply_values(arr)).real.ravel()

        op = spla.LinearOperator((n_total, n_total), matvec=matvec,
                                 dtype=np.float64)
        v0 = np.random.default_rng(_LANCZOS_SEED).standard_normal(n_total)
        try:
            vals, vecs = spla.eigsh(op, k=1, which="LA", v0=v0,
                                    ncv=min(n_total - 1, 48), maxiter=40,
                                    tol=_LANCZOS_TOL)
            theta, y = float(vals[0]), vecs[:, 0]
        except spla.ArpackNoConvergence as exc:
            if len(exc.eigenvalues):
                theta, y = float(exc.eigenvalues[0]), exc.eigenvectors[:, 0]
            else:
                return None, None
        resid = float(np.linalg.norm(matvec(y) - theta * y))
        return hi0 - theta, resid

    # -- dense oracle -----------------------------------------------------

    def dense_matrix(self) -> np.ndarray:
        """Materialize H as a real symmetric matrix (small grids only)."""
        g = self.grid
        if self.scheme == "fourier":
            sym = (2.0 * np.pi * sfft.fftfreq(g.n, d=g.h)) ** 2
            col = sfft.ifft(sym).real
        else:
            col = np.zeros(g.n)
            col[0] = 2.0 / g.h ** 2
            col[1] = col[-1] = -1.0 / g.h ** 2
        lap1 = scipy.linalg.circulant(col)
        eye = np.eye(g.n)
        mats = []
        for ax in range(g.dim):
            parts = [lap1 if a == ax else eye for a in range(g.dim)]
            m = parts[0]
            for pmat in parts[1:]:
                m = np.kron(m, pmat)
            mats.append(m)
        h0 = sum(mats)
        return h0 + np.diag(self._v.ravel())


class EigenDecomposition:
    """Full spectrum of a small H; eigenfields orthonormal in the grid L^2
    inner product. The exact-functional-calculus oracle."""

    def __init__(self, grid: Grid, eigenvalues: np.ndarray, vectors: np.ndarray):
        self.grid = grid
        self.eigenvalues = eigenvalues
        self.vectors = vectors          # columns, L^2-orthonormal

    def eigenfield(self, k: int) -> Field:
        return Field._wrap(self.grid, self.vectors[:, k].reshape(self.grid.shape))

    def coefficients(self, f: Field) -> np.ndarray:
        """<e_k, f> for all k."""
        return (self.vectors.conj().T @ f.values.ravel()) * self.grid.cell_volume

    def synthesize(self, coeffs: np.ndarray) -> Field:
        vals = self.vectors @ coeffs
        return Field._wrap(self.grid, vals.reshape(self.grid.shape))

    def apply_scalar(self, fn, f: Field) -> Field:
        """sum_k fn(lam_k) <e_k, f> e_k  (exact calculus in this basis)."""
        return self.synthesize(np.asarray(fn(self.eigenvalues)) * self.coefficients(f))


def assemble(g: Grid, spec, scheme: str = "fourier") -> Hamiltonian:
    """Build H = -Laplacian + V on g; spec is a PotentialSpec or a real Field."""
    if isinstance(spec, PotentialSpec):
        pot = sample_potential(spec, g)
        return Hamiltonian(g, pot, scheme, potential_spec=spec)
    if isinstance(spec, Field):
        return Hamiltonian(g, spec, scheme)
    raise TypeError(f"expected PotentialSpec or Field, got {type(spec)}")


def apply(h: Hamiltonian, f: Field) -> Field:
    return h(f)


def spectral_range(h: Hamiltonian) -> tuple:
    """Certified [lam_lo, lam_hi] containing the whole discrete spectrum."""
    return h.enclosure


def dense_eig(h: Hamiltonian, max_points: int = 4096) -> EigenDecomposition:
    """Dense symmetric eigendecomposition; rejects grids above max_points."""
    npts = h.grid.npoints
    if npts > max_points:
        raise ValueError(
            f"grid has {npts} points, over the dense-oracle limit {max_points}")
    if h._eig is None:
        mat = h.dense_matrix()
        lam, vecs = scipy.linalg.eigh(mat)
        vecs = np.ascontiguousarray(vecs / h.grid.cell_volume ** 0.5)
        h._eig = EigenDecomposition(h.grid, lam, vecs.astype(np.complex128))
    return h._eig
