"""Kernel backend selection: compiled extension if available, numpy fallback otherwise.

Set LPSF_NO_EXT=1 to force the fallback (used by the benchmark for comparison).
"""

import os

from . import pykernels

if os.environ.get("LPSF_NO_EXT"):
    impl = pykernels
    BACKEND = "numpy"
else:
    try:
        from . import cykernels as impl
        BACKEND = "cython"
    except ImportError:
        impl = pykernels
        BACKEND = "numpy"

fd2_apply_1d = impl.fd2_apply_1d
fd2_apply_2d = impl.fd2_apply_2d
fd2_apply_3d = impl.fd2_apply_3d
lincomb = impl.lincomb
axpy = impl.axpy
cheb_step = impl.cheb_step
