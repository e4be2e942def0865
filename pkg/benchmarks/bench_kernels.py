"""Compare the compiled Sturm kernels with the numpy fallback.

Times a full eigensolve and a batch of Sturm counts on sampled ensemble
matrices, and checks the two backends agree bit for bit.

    python benchmarks/bench_kernels.py --sizes 250,1000,4000
"""
import argparse
import time

import numpy as np

from betalab import _backend
from betalab.sampling import EnsembleParams, RngStream, sample_ensemble
from betalab.tridiag import _block_eigenvalues, default_tol


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _eigs(kernels, T):
    return _block_eigenvalues(T.diag, T._offsq, default_tol(T), T.pivmin(), kernels)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="250,1000,4000")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--shifts", type=int, default=1000)
    args = p.parse_args()
    if _backend.compiled_kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    print(f"{'N':>6} {'kernel':>10} {'compiled s':>11} {'python s':>10} {'speedup':>8} {'identical':>9}")
    for n in map(int, args.sizes.split(",")):
        T = sample_ensemble(EnsembleParams.fixed_gamma(n, 1.0), RngStream(1))
        xs = np.linspace(-3, 3, args.shifts)
        for name, call in (
            ("counts", lambda k: k.sturm_counts(T.diag, T._offsq, xs, T.pivmin())),
            ("eigensolve", lambda k: _eigs(k, T)),
        ):
            tc, rc = _best(lambda: call(_backend.compiled_kernels), args.repeat)
            tp, rp = _best(lambda: call(_backend.python_kernels), max(1, args.repeat // 3))
            same = np.array_equal(rc, rp)
            print(f"{n:>6} {name:>10} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x {str(same):>9}")


if __name__ == "__main__":
    main()
