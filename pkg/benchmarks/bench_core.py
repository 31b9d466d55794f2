"""Compare the compiled core against the numpy fallback.

    python benchmarks/bench_core.py [--repeat N]

Prints best-of-N wall times and the max abs difference between backends.
"""
import argparse
import timeit

import numpy as np

from quadprop import _core_py

try:
    from quadprop import _core
except ImportError:
    _core = None


def cases():
    y = np.linspace(-12, 12, 4096)
    yield "hermite_functions n=60, 4096 pts", (60, y), "hermite_functions"
    yield "hermite_functions n=512, 4096 pts", (512, y), "hermite_functions"
    x = np.linspace(-10, 10, 1024)
    dx = x[1] - x[0]
    psi0 = (2 / np.pi) ** 0.25 * np.exp(-(x - 1) ** 2 + 0.5j * x)
    n_steps = 1024
    coefs = np.tile([1.0, 0.1, 0.05, 0.5, 0.2, 0.0], (n_steps, 1))
    yield "cn_evolve 1024 pts x 1024 steps", (psi0, x, dx, 1.0, 1.0 / n_steps, coefs), "cn_evolve"


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not built; only the fallback is available")
    print(f"{'case':36s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for label, fargs, name in cases():
        py = getattr(_core_py, name)
        t_py = min(timeit.repeat(lambda: py(*fargs), number=1, repeat=args.repeat))
        if _core is None:
            print(f"{label:36s} {t_py:11.4f}")
            continue
        cy = getattr(_core, name)
        t_cy = min(timeit.repeat(lambda: cy(*fargs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(py(*fargs)) - np.asarray(cy(*fargs)))))
        print(f"{label:36s} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
