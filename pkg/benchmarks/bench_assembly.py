"""Benchmark: compiled kernels vs the pure-numpy fallback.

Times basis ranking and full Hamiltonian assembly on representative
problem sizes, running each backend in-process via kernels.load_backend.

    python3 benchmarks/bench_assembly.py [--sizes 9x8,14x14] [--repeat 3]
"""

import argparse
import time

import numpy as np

from doublon_ed import ModelParams, build_lattice, enumerate_basis
from doublon_ed import hamiltonian, kernels


def time_best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="9x8,14x14")
    ap.add_argument("--N", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = kernels.load_backend(name)
        except Exception as exc:
            print(f"backend {name}: unavailable ({exc})")

    p = ModelParams(J=1.0, t=2.0, P=4.0, U=8.0, N=args.N)
    header = f"{'case':<20}{'backend':<10}{'rank_many':>12}{'assemble':>12}"
    print(header)
    print("-" * len(header))
    for size in args.sizes.split(","):
        Lx, Ly = (int(v) for v in size.split("x"))
        lat = build_lattice(Lx, Ly, "open", "open")
        fb = enumerate_basis(lat.n_sites, args.N)
        for name, impl in backends.items():
            kernels.impl = impl
            t_rank = time_best(lambda: impl.rank_many(fb.occs, fb.binom), args.repeat)
            t_asm = time_best(lambda: hamiltonian.assemble(p, lat, fb), args.repeat)
            print(f"{size + f' (d={fb.dim})':<20}{name:<10}{t_rank * 1e3:>10.1f}ms"
                  f"{t_asm * 1e3:>10.1f}ms")
    kernels.impl = kernels.load_backend(None)


if __name__ == "__main__":
    main()
