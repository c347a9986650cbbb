"""Time the compiled kernel against the numpy fallback.

    python benchmarks/bench_kernels.py --steps 70 500 2000 --repeat 5

Each case starts from a single site in a window just wide enough for the run,
under the gradient 2 pi / 32, and records every step.  Both backends are
checked to give bitwise-identical trajectories before timing.
"""

import argparse
import timeit

import numpy as np

from qwalk import _backend
from qwalk.core import CoinOp, PhaseProfile, Spinor, make_initial


def case(steps):
    state = make_initial(0, Spinor.named("down"), (-steps, steps))
    eu, ev = PhaseProfile.rational(1, 32).factors(state.positions)
    return state, eu, ev


def run(kern, state, eu, ev, steps, every=1):
    rows = steps // every + 1
    U = np.empty((rows, state.u.size), dtype=np.complex128)
    V = np.empty_like(U)
    kern.evolve_kernel(state.u, state.v, CoinOp.balanced().matrix, eu, ev, steps, every, U, V)
    return U, V


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, nargs="+", default=[70, 500, 2000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = _backend.available()
    kernels = {name: _backend.load(name) for name in names}
    print(f"backends: {', '.join(names)}")
    print(f"{'steps':>6} {'sites':>6} " + " ".join(f"{n + ' [ms]':>14}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for steps in args.steps:
        state, eu, ev = case(steps)
        results = {n: run(k, state, eu, ev, steps) for n, k in kernels.items()}
        ref = results[names[0]]
        for n in names[1:]:
            if not (np.array_equal(ref[0], results[n][0]) and np.array_equal(ref[1], results[n][1])):
                raise SystemExit(f"backend {n} disagrees with {names[0]} at {steps} steps")
        times = {}
        for n, k in kernels.items():
            number = max(1, int(2e6 // (steps * steps)))
            best = min(timeit.repeat(lambda: run(k, state, eu, ev, steps), number=number, repeat=args.repeat))
            times[n] = 1e3 * best / number
        line = f"{steps:>6} {state.u.size:>6} " + " ".join(f"{times[n]:>14.3f}" for n in names)
        if len(names) > 1:
            line += f"   {times['numpy'] / times['cython']:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
