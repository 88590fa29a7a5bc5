"""Pure-numpy fallback for the compiled kernels.

Mirrors cykernels call for call; used when the extension is not built or when
LPSF_NO_EXT is set. The fused steps here pay one temporary per call.
"""

import numpy as np


def _lap_neg(f):
    # 2d*f - sum of neighbours, periodic
    out = (2 * f.ndim) * f
    for ax in range(f.ndim):
        out -= np.roll(f, 1, axis=ax)
        out -= np.roll(f, -1, axis=ax)
    return out


def fd2_apply_1d(f, v, inv_h2, out):
    np.copyto(out, inv_h2 * _lap_neg(f) + v * f)


def fd2_apply_2d(f, v, inv_h2, out):
    np.copyto(out, inv_h2 * _lap_neg(f) + v * f)


def fd2_apply_3d(f, v, inv_h2, out):
    np.copyto(out, inv_h2 * _lap_neg(f) + v * f)


def lincomb(a, x, b, y, out):
    """out = a*x + b*y"""
    np.multiply(x, a, out=out)
    out += b * y


def axpy(c, x, acc):
    """acc += c*x"""
    acc += c * x


def cheb_step(w, u1, u0, a1, a2, ck, acc):
    """u0 <- a1*w + a2*u1 - u0; acc += ck*u0"""
    t = a1 * w + a2 * u1
    t -= u0
    np.copyto(u0, t)
    acc += ck * t
