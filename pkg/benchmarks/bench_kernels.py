"""Compare the compiled kernels against the numpy fallback.

Times the six hot kernels head to head at several sizes, then (with
--e2e) a full Chebyshev propagation run through each backend in a
subprocess, since the backend is chosen at import time.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 64,256,1024 --e2e
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from lpsf._kernels import pykernels

try:
    from lpsf._kernels import cykernels
except ImportError:
    cykernels = None


def _best_of(fn, repeat, loops):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        best = min(best, (time.perf_counter() - t0) / loops)
    return best


def _cases(n):
    rng = np.random.default_rng(0)

    def cplx(shape):
        return np.ascontiguousarray(rng.standard_normal(shape)
                                    + 1j * rng.standard_normal(shape))

    n2 = max(4, int(round(n ** 0.5)) * 4)     # 2d side ~ comparable work
    n3 = max(4, int(round(n ** (1 / 3.0)) * 2))
    for dim, shape in ((1, (n,)), (2, (n2, n2)), (3, (n3, n3, n3))):
        f = cplx(shape)
        v = np.ascontiguousarray(rng.standard_normal(shape))
        out = np.empty(shape, dtype=np.complex128)
        yield (f"fd2_apply_{dim}d", f"{'x'.join(map(str, shape))}",
               f"fd2_apply_{dim}d", (f, v, 0.5, out))

    x, y = cplx((n,)), cplx((n,))
    out = np.empty(n, dtype=np.complex128)
    yield ("lincomb", str(n), "lincomb", (1.1, x, -0.3, y, out))
    acc = cplx((n,))
    yield ("axpy", str(n), "axpy", (0.3 - 0.2j, x, acc))
    w, u1, u0 = cplx((n,)), cplx((n,)), cplx((n,))
    acc2 = cplx((n,))
    yield ("cheb_step", str(n), "cheb_step",
           (w, u1, u0, 1.9, -0.95, 0.1 + 0.2j, acc2))


def run_micro(sizes, repeat):
    print(f"{'kernel':<14}{'size':>12}{'numpy':>12}{'cython':>12}"
          f"{'speedup':>10}")
    for n in sizes:
        for name, size, attr, args in _cases(n):
            loops = max(1, min(2000, 200_000 // max(1, n // 10)))
            t_py = _best_of(lambda: getattr(pykernels, attr)(*args),
                            repeat, loops)
            if cykernels is None:
                print(f"{name:<14}{size:>12}{t_py * 1e6:>10.2f}us"
                      f"{'-':>12}{'-':>10}")
                continue
            t_cy = _best_of(lambda: getattr(cykernels, attr)(*args),
                            repeat, loops)
            print(f"{name:<14}{size:>12}{t_py * 1e6:>10.2f}us"
                  f"{t_cy * 1e6:>10.2f}us{t_py / t_cy:>9.2f}x")
        print()


_E2E = r"""
import time
import numpy as np
from lpsf import BACKEND
from lpsf.evolve import propagate
from lpsf.hamiltonian import assemble
from lpsf.lattice import PotentialSpec, gaussian_packet, make_grid

g = make_grid(2, 40.0, 128)
h = assemble(g, PotentialSpec.gaussian_well(-1.0, 1.0), "fd2")
f = gaussian_packet(g, (0.0, 0.0), 1.5, (1.0, 0.0))
propagate(h, f, 0.05)                      # warm the expansion cache
t0 = time.perf_counter()
u = propagate(h, f, 5.0)
dt = time.perf_counter() - t0
print(f"{BACKEND} {dt:.3f}")
"""


def run_e2e():
    print("end-to-end: 2d fd2 propagation to t = 5 on a 128^2 grid")
    results = {}
    for env_extra in ({}, {"LPSF_NO_EXT": "1"}):
        env = dict(os.environ, **env_extra)
        proc = subprocess.run([sys.executable, "-c", _E2E],
                              capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            raise SystemExit(1)
        backend, secs = proc.stdout.split()
        results[backend] = float(secs)
        print(f"  {backend:<8} {float(secs):.3f} s")
    if len(results) == 2:
        print(f"  speedup  {results['numpy'] / results['cython']:.2f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="256,4096,65536",
                    help="comma-separated 1d lengths (2d/3d scaled to "
                         "comparable work)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--e2e", action="store_true",
                    help="also time a full propagation per backend")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    if cykernels is None:
        print("compiled extension not available; timing the fallback only")
    run_micro(sizes, args.repeat)
    if args.e2e:
        run_e2e()


if __name__ == "__main__":
    main()
