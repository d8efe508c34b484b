"""Benchmark the numba kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [--steps N]

Times the two propagation kernels on representative workloads (the 16x16
one-pair superoperator matvec loop and the matrix-form Lindblad stepper at
Fock dimensions 16 and 81) under both backends and prints the speedup.
The numba backend is warmed up first so JIT compilation is not timed.
"""

import argparse
import time

import numpy as np

from pairkin import _kernels
from pairkin.fock import FockSpace, second_quantize
from pairkin.models import Generator
from pairkin.spin import RateParams, make_hamiltonian, preset_state


def workloads(n_steps):
    gen = Generator.haberkorn(make_hamiltonian("st0-mixing", [1.0]),
                              RateParams(1.0, 0.3))
    L = gen.matrix()
    v0 = preset_state("singlet").flatten(order="F")
    yield ("rk4_superop 16x16", lambda: _kernels.rk4_superop(L, v0, 1e-3, n_steps))

    for n_max in (1, 2):
        space = FockSpace(n_max)
        h = np.asarray(second_quantize(make_hamiltonian("st0-mixing", [1.0]),
                                       space).todense())
        a = space._dense_ladder
        coeffs = np.array([1.0, 0.3, 0.3, 0.3])
        rho0 = np.zeros((space.dim, space.dim), dtype=complex)
        rho0[space.strides[0], space.strides[0]] = 1.0
        yield (f"rk4_lindblad dim {space.dim}",
               lambda h=h, a=a, c=coeffs, r=rho0:
               _kernels.rk4_lindblad(h, a, c, r, 1e-3, n_steps))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = ["numpy"]
    if _kernels.HAVE_NUMBA:
        backends.append("numba")
    else:
        print("numba not importable; timing the numpy fallback only")

    print(f"{args.steps} RK4 steps per call, best of {args.repeats}\n")
    print(f"{'workload':<22}" + "".join(f"{b + ' (s)':>14}" for b in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    for name, call in workloads(args.steps):
        row = f"{name:<22}"
        times = []
        for backend in backends:
            _kernels.set_backend(backend)
            call()  # warmup: JIT compile / cache touch
            best = None
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                call()
                dt = time.perf_counter() - t0
                best = dt if best is None else min(best, dt)
            times.append(best)
            row += f"{best:>14.4f}"
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>6.1f}x"
        print(row)
    _kernels.set_backend("numba" if _kernels.HAVE_NUMBA else "numpy")


if __name__ == "__main__":
    main()
