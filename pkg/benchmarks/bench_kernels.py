"""Compare the compiled and numpy kernel backends.

Usage: ``python3 benchmarks/bench_kernels.py [--sizes 64 128] [--repeat 5]``
"""
import argparse
import timeit

from hyperturb import kernels
from hyperturb.grid import Grid
from hyperturb.initial import initial_field
from hyperturb.model import ModelParams
from hyperturb.solver import TimeControls, run_simulation


def bench(backend, n, repeat):
    p = ModelParams()
    g = Grid((n, n))
    U = initial_field("shear-layer", g, p)
    kern = kernels.get(backend)
    consts = kernels.pack_consts(p)
    inv = tuple(1.0 / h for h in g.dx)
    cases = {
        "wave_speed": lambda: kern.wave_speed(U, 0, consts),
        "hyperbolic_rhs": lambda: kern.hyperbolic_rhs(U, inv, consts, 1.0),
        "relax": lambda: kern.relax(U, 1e-3, consts, 10),
        "run(10 steps)": lambda: run_simulation(U, g, p, TimeControls(max_steps=10),
                                                backend=backend, log_every=10**9),
    }
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in cases.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = kernels.available()
    print(f"backends: {', '.join(names)}")
    print(f"{'grid':>8} {'kernel':>16} " + " ".join(f"{b + ' [ms]':>14}" for b in names)
          + ("     speedup" if len(names) > 1 else ""))
    for n in args.sizes:
        res = {b: bench(b, n, args.repeat) for b in names}
        for case in res[names[0]]:
            times = [res[b][case] for b in names]
            row = f"{n:>4}x{n:<3} {case:>16} " + " ".join(f"{1e3 * t:14.3f}" for t in times)
            if len(names) > 1:
                row += f" {times[0] / times[1]:11.1f}x"
            print(row)


if __name__ == "__main__":
    main()
