import os
import subprocess
import sys

import numpy as np
import pytest

from lpsf._kernels import BACKEND, pykernels

cykernels = pytest.importorskip(
    "lpsf._kernels.cykernels",
    reason="compiled extension not built; parity has nothing to compare")


def _pair(shape, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    v = rng.standard_normal(shape)
    return np.ascontiguousarray(f), np.ascontiguousarray(v)


@pytest.mark.parametrize("dim,shape", [(1, (33,)), (2, (12, 17)),
                                       (3, (6, 7, 8))])
def test_fd2_backends_agree(dim, shape):
    f, v = _pair(shape, dim)
    out_c = np.empty(shape, dtype=np.complex128)
    out_p = np.empty(shape, dtype=np.complex128)
    fn_c = getattr(cykernels, f"fd2_apply_{dim}d")
    fn_p = getattr(pykernels, f"fd2_apply_{dim}d")
    fn_c(f, v, 3.7, out_c)
    fn_p(f, v, 3.7, out_p)
    np.testing.assert_allclose(out_c, out_p, rtol=1e-13, atol=1e-13)


def test_fd2_matches_roll_stencil():
    f, v = _pair((24,), 9)
    out = np.empty_like(f)
    cykernels.fd2_apply_1d(f, v, 2.5, out)
    want = 2.5 * (2 * f - np.roll(f, 1) - np.roll(f, -1)) + v * f
    np.testing.assert_allclose(out, want, rtol=1e-14, atol=1e-14)


def test_lincomb_and_axpy_agree():
    x, _ = _pair((257,), 4)
    y, _ = _pair((257,), 5)
    out_c = np.empty_like(x)
    out_p = np.empty_like(x)
    cykernels.lincomb(1.25, x, -0.5, y, out_c)
    pykernels.lincomb(1.25, x, -0.5, y, out_p)
    np.testing.assert_allclose(out_c, out_p, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(out_c, 1.25 * x - 0.5 * y,
                               rtol=1e-15, atol=1e-15)

    acc_c, acc_p = y.copy(), y.copy()
    c = 0.3 - 0.8j
    cykernels.axpy(c, x, acc_c)
    pykernels.axpy(c, x, acc_p)
    np.testing.assert_allclose(acc_c, acc_p, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(acc_c, y + c * x, rtol=1e-15, atol=1e-15)


def test_cheb_step_semantics_and_parity():
    w, _ = _pair((129,), 6)
    u1, _ = _pair((129,), 7)
    u0, _ = _pair((129,), 8)
    acc, _ = _pair((129,), 10)
    a1, a2, ck = 1.7, -0.9, 0.25 + 0.1j

    u0_c, acc_c = u0.copy(), acc.copy()
    cykernels.cheb_step(w, u1, u0_c, a1, a2, ck, acc_c)
    u0_p, acc_p = u0.copy(), acc.copy()
    pykernels.cheb_step(w, u1, u0_p, a1, a2, ck, acc_p)

    want_next = a1 * w + a2 * u1 - u0
    np.testing.assert_allclose(u0_c, want_next, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(u0_c, u0_p, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(acc_c, acc + ck * want_next,
                               rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(acc_c, acc_p, rtol=1e-14, atol=1e-14)


def test_compiled_backend_is_active_here():
    assert BACKEND == "cython"


_PIPELINE = r"""
import numpy as np
from lpsf import BACKEND
from lpsf.hamiltonian import assemble
from lpsf.evolve import propagate
from lpsf.lattice import PotentialSpec, gaussian_packet, lp_norm, make_grid

g = make_grid(1, 25.0, 64)
h = assemble(g, PotentialSpec.gaussian_well(-1.0, 1.0), "fd2")
f = gaussian_packet(g, (0.0,), 1.5, (0.0,))
u = propagate(h, f, 0.8)
print(BACKEND, repr(lp_norm(u, np.inf)))
"""


def test_fallback_selected_by_env_and_matches():
    def run(env_extra):
        env = dict(os.environ, **env_extra)
        proc = subprocess.run([sys.executable, "-c", _PIPELINE],
                              capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        backend, value = proc.stdout.split()
        return backend, float(value)

    b_c, v_c = run({})
    b_p, v_p = run({"LPSF_NO_EXT": "1"})
    assert b_c == "cython" and b_p == "numpy"
    assert v_p == pytest.approx(v_c, rel=1e-12)
