"""Compare the compiled RK4 kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--states M] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from beampencil import _kernels_py

try:
    from beampencil import _kernels
except ImportError:
    _kernels = None


def _inputs(steps, states):
    half = np.linspace(0.0, 1.0, 2 * steps + 1)
    inv_p = np.ascontiguousarray(1.0 / (1.0 + 0.5 * half + 0.25 * half**2))
    r = np.ascontiguousarray(1.0 + half)
    rng = np.random.default_rng(0)
    quad = np.ascontiguousarray(rng.uniform(0.0, 1.0, (states, 4)))
    return inv_p, r, quad, 1.0 / steps


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=32000)
    ap.add_argument("--states", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    inv_p, r, quad, h = _inputs(args.steps, args.states)

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled extension not available; timing the fallback only")

    results = {}
    for name, mod in backends:
        t_sturm = _time(lambda: mod.rk4_sturm(inv_p, -50.0, h, 0.0, 1.0), args.repeat)
        t_beam = _time(lambda: mod.rk4_beam(inv_p, r, h, quad), args.repeat)
        results[name] = (t_sturm, t_beam, mod.rk4_sturm(inv_p, -50.0, h, 0.0, 1.0), mod.rk4_beam(inv_p, r, h, quad))
        print(f"{name:7s} rk4_sturm {t_sturm * 1e3:9.2f} ms   rk4_beam ({args.states} states) {t_beam * 1e3:9.2f} ms")

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speedup  rk4_sturm {py[0] / cy[0]:8.1f}x      rk4_beam {py[1] / cy[1]:8.1f}x")
        d_sturm = max(float(np.max(np.abs(a - b))) for a, b in zip(py[2], cy[2]))
        d_beam = float(np.max(np.abs(py[3] - cy[3])))
        print(f"max abs difference  rk4_sturm {d_sturm:.2e}   rk4_beam {d_beam:.2e}")


if __name__ == "__main__":
    main()
