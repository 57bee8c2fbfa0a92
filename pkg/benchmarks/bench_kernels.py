"""Compare the compiled and numpy exponent kernels.

Run with ``python benchmarks/bench_kernels.py [--n N] [--repeat R]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from levyscale import _kernels_py
from levyscale.model import model_from_dict

MODELS = {
    "set3": {"components": [{"type": "drift", "mu": 2}, {"type": "gaussian", "sigma": 0.25},
                            {"type": "tempered_stable", "c": 1, "lambda": 1, "alpha": 0.5},
                            {"type": "shifted_exponential", "c": 1, "a": 1}]},
    "rational": {"components": [{"type": "gaussian", "sigma": 0.25}, {"type": "drift", "mu": 2},
                                {"type": "rational", "terms": [
                                    {"a": 1, "rho": 1, "m": 1},
                                    {"a": 0.5, "rho": {"re": 1, "im": -4}, "m": 1},
                                    {"a": 0.5, "rho": {"re": 1, "im": 4}, "m": 1}]}]},
}


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        from levyscale import _kernels as compiled
    except ImportError:
        compiled = None
    rng = np.random.default_rng(1)
    z = 0.1 + rng.uniform(0, 5, args.n) + 1j * rng.uniform(-50, 50, args.n)
    print(f"{'model':<10} {'python [ms]':>12} {'cython [ms]':>12} {'speed-up':>9} {'max diff':>10}")
    for name, spec in MODELS.items():
        m = model_from_dict(spec)
        kinds, params, _, _ = _kernels_py.pack(m)
        t_py = _time(lambda: _kernels_py.psi_packed(kinds, params, z), args.repeat)
        if compiled is None:
            print(f"{name:<10} {1e3 * t_py:12.2f} {'n/a':>12}")
            continue
        t_cy = _time(lambda: compiled.psi_packed(kinds, params, z), args.repeat)
        a = _kernels_py.psi_packed(kinds, params, z)
        b = compiled.psi_packed(kinds, params, z)
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        print(f"{name:<10} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:9.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
