"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both implementations are run on identical inputs; the script also checks that
their outputs agree before printing timings.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from kamlattice import _pykernels
from kamlattice.lattice import ell_ball

try:
    from kamlattice import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def mask_inputs(rng, nsup=20000, d=3, R=40, L=10):
    sup = np.sort(np.array([rng.choice(np.arange(-R, R + 1), d, replace=False) for _ in range(nsup)]), axis=1)
    return sup.astype(np.int64), ell_ball(d, L, half=True)


def divisor_inputs(rng, S=20000, T=400, d=2, width=3):
    K = rng.integers(-3, 4, T).astype(np.float64)
    ell = rng.integers(-2, 3, (T, d)).astype(np.float64)
    idx = rng.integers(-1, 6, (T, width)).astype(np.int64)
    sgn = rng.choice([-1.0, 1.0], (T, width))
    w = rng.uniform(1, 10, T)
    lam = rng.uniform(0.1, 1.0, (S, d))
    table = rng.normal(size=(S, 6))
    table[rng.random((S, 6)) < 0.05] = np.nan
    return K, ell, idx, sgn, w, lam, table, 1e-3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    if _ckernels is None:
        print("compiled extension not available; timing the Python fallback only")
    cases = {
        "generic_mask": (lambda k, a: k.generic_mask(*a), mask_inputs(rng)),
        "min_scaled_divisor": (lambda k, a: k.min_scaled_divisor(*a), divisor_inputs(rng)),
    }
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, (call, inputs) in cases.items():
        tp, outp = _best(lambda: call(_pykernels, inputs), args.repeat)
        if _ckernels is None:
            print(f"{name:<20}{tp:>12.4f}{'n/a':>12}{'n/a':>10}")
            continue
        tc, outc = _best(lambda: call(_ckernels, inputs), args.repeat)
        if not np.array_equal(outp, outc) and not np.allclose(outp, outc, rtol=1e-12, atol=0):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<20}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
