"""Compiled kernels vs the pure-Python fallback.

Times each hot kernel with both backends on identical inputs and checks the
results agree. ``--end-to-end`` additionally times one ESTR repetition in a
subprocess per backend (the backend is chosen at import time).

    python3 benchmarks/bench_kernels.py [--sizes 8,16,32] [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from polarbandit import _fallback
from polarbandit.graph import erdos_renyi

try:
    from polarbandit import _kernels
except ImportError:
    _kernels = None


def _best(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def bench_jacobi(mod, n, rng):
    a = rng.standard_normal((n, n))
    a = np.ascontiguousarray((a + a.T) / 2)
    number = max(1, 2000 // (n * n))
    return _best(lambda: mod.jacobi_eigh(a), number), mod.jacobi_eigh(a)[0]


def bench_chol(mod, n, rng):
    d = 2 * n - 1
    base = np.linalg.cholesky(np.eye(d) * 0.1 + np.diag(rng.random(d)))
    x = rng.standard_normal(d)

    def run():
        lower = base.copy()
        mod.chol_update(lower, x)
        return lower

    return _best(run, 200), run()


def bench_fj(mod, n, rng):
    g = erdos_renyi(n, 0.2, rng)
    indptr, indices, weights = g.csr()
    degree = g.degree()
    s = rng.uniform(-1, 1, n)
    z = s.copy()
    out = np.empty(n)

    def run():
        mod.fj_sweep(z, s, indptr, indices, weights, degree, out)
        return out.copy()

    return _best(run, 500), run()


KERNELS = {"jacobi_eigh": bench_jacobi, "chol_update": bench_chol, "fj_sweep": bench_fj}

E2E = ("import time; from polarbandit.experiment import ExperimentConfig, run_repetition;"
       "from polarbandit import kernels;"
       "cfg = ExperimentConfig(n={n}, K=50, T=2000, seed=1, algorithms=('estr',));"
       "t = time.perf_counter(); run_repetition(cfg, 0);"
       "print(kernels.BACKEND, time.perf_counter() - t)")


def end_to_end(n):
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, POLARBANDIT_PURE=pure)
        out = subprocess.run([sys.executable, "-c", E2E.format(n=n)], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        rows.append((out[0], float(out[1])))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="8,16,32,64")
    parser.add_argument("--end-to-end", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    sizes = [int(v) for v in args.sizes.split(",")]
    print(f"{'kernel':12s} {'n':>4s} {'compiled (us)':>14s} {'python (us)':>12s} "
          f"{'speedup':>8s} {'max diff':>9s}")
    for name, bench in KERNELS.items():
        for n in sizes:
            t_c, r_c = bench(_kernels, n, np.random.default_rng(args.seed))
            t_p, r_p = bench(_fallback, n, np.random.default_rng(args.seed))
            diff = float(np.max(np.abs(np.asarray(r_c) - np.asarray(r_p))))
            print(f"{name:12s} {n:4d} {t_c * 1e6:14.1f} {t_p * 1e6:12.1f} "
                  f"{t_p / t_c:7.1f}x {diff:9.1e}")
    if args.end_to_end:
        print("\none ESTR repetition (K=50, T=2000), n=32")
        for backend, secs in end_to_end(32):
            print(f"  {backend:9s} {secs:7.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
