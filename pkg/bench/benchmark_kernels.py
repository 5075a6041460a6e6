"""Compare the numba-compiled RK kernel against the pure-numpy fallback.

Workloads are the two hot paths of the simulator: propagating a density
matrix to steady state and recording a two-time correlation trace.  Run:

    python3 bench/benchmark_kernels.py

The selected production path honors MIRRORLESS_PURE_NUMPY=1; this script
always times both implementations directly when numba is importable.
"""

import time

import numpy as np

from mirrorless import build_collapse, build_liouvillian, build_scheme, \
    equal_ground_state
from mirrorless._kernels import (USING_NUMBA, rk45_jit, rk45_numpy,
                                 rk45_record_jit, rk45_record_numpy)
from mirrorless.dynamics import vectorize
from mirrorless.levels import pump_hamiltonian
from mirrorless.spectra import perpendicular_dipole


def sys_setup(fg, fe, omega, delta):
    scheme = build_scheme(fg, fe)
    L = build_liouvillian(pump_hamiltonian(scheme, omega, delta),
                          build_collapse(scheme))
    return scheme, L


def time_fn(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    print(f"numba available: {USING_NUMBA}")
    rows = []
    for fg, fe, omega, delta, tag in ((1, 2, 3.0, 0.0, "8-level"),
                                      (2, 3, 3.0, 0.75, "12-level")):
        scheme, L = sys_setup(fg, fe, omega, delta)
        y0 = vectorize(equal_ground_state(scheme))
        t_grid = np.linspace(0.0, 200.0, 101)
        args_evolve = (L.matrix, y0, t_grid, 1e-9, 1e-12, scheme.dim,
                       50_000_000)

        d_plus = perpendicular_dipole(scheme).d_plus
        w = vectorize(d_plus.conj())
        x0 = vectorize(d_plus @ equal_ground_state(scheme))
        args_corr = (L.matrix, x0, 0.02, 20_001, w, 1e-9, 1e-12, 50_000_000)

        for name, fn_e, fn_c in (("numpy", rk45_numpy, rk45_record_numpy),
                                 ("numba", rk45_jit, rk45_record_jit)):
            if fn_e is None:
                continue
            fn_e(*args_evolve)  # warm (JIT compile on first call)
            fn_c(*args_corr)
            te = time_fn(lambda: fn_e(*args_evolve))
            tc = time_fn(lambda: fn_c(*args_corr))
            rows.append((tag, name, te, tc))

    print(f"{'system':10s} {'path':6s} {'evolve t=200':>14s} "
          f"{'correlation 20k steps':>22s}")
    for tag, name, te, tc in rows:
        print(f"{tag:10s} {name:6s} {te:>12.3f} s {tc:>20.3f} s")
    by = {}
    for tag, name, te, tc in rows:
        by.setdefault(tag, {})[name] = (te, tc)
    for tag, d in by.items():
        if "numpy" in d and "numba" in d:
            print(f"{tag}: numba speedup evolve x{d['numpy'][0] / d['numba'][0]:.1f}, "
                  f"correlation x{d['numpy'][1] / d['numba'][1]:.1f}")


if __name__ == "__main__":
    main()
