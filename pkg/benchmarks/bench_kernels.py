"""Time the compiled and pure-Python kernel backends on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py``; prints median wall time
per call and the speed-up of the compiled backend.
"""
import argparse
import timeit

import numpy as np

from domsched import kernels
from domsched.maxsum import Problem, init_messages
from domsched.network import make_rate_grid
from domsched.scenarios import ApartmentConfig, SyntheticConfig, gen_apartment_drop, gen_synthetic_drop
from domsched.utility import SENTINEL, UtilityKind, build_utility_tables


def sweep_inputs(seed):
    inst, _ = gen_apartment_drop(ApartmentConfig(), seed)
    problem = Problem(inst, build_utility_tables(inst, UtilityKind.log()))
    rng = np.random.default_rng(seed)
    state = init_messages(problem)
    tx_self = rng.normal(size=state.tx_self.shape)
    tx_int = rng.normal(size=state.tx_int.shape)
    return problem.stacked, tx_self, tx_int


def search_inputs(seed, n, K):
    inst, _ = gen_synthetic_drop(SyntheticConfig(n=n), seed, make_rate_grid(K))
    problem = Problem(inst, build_utility_tables(inst, UtilityKind.log()))
    dead = problem.stacked == SENTINEL
    finite = np.where(dead, 0.0, problem.stacked)
    partner = np.where(problem.has_int, problem.sigma, np.arange(n))
    return finite, dead.astype(np.int64), partner


def bench(fn, args, repeat):
    times = timeit.repeat(lambda: fn(*args), number=1, repeat=repeat)
    return float(np.median(times))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    names = [b for b in ("compiled", "python") if b in kernels.BACKENDS]
    cases = [
        ("receiver_sweep n=10 K=25", "receiver_sweep", sweep_inputs(args.seed), args.repeat * 20),
        ("exhaustive_search n=4 K=25", "exhaustive_search", search_inputs(args.seed, 4, 25), args.repeat),
        ("exhaustive_search n=5 K=25", "exhaustive_search", search_inputs(args.seed, 5, 25), args.repeat),
    ]
    print(f"{'case':<30}" + "".join(f"{b:>14}" for b in names) + f"{'speed-up':>10}")
    for label, fn_name, inputs, rep in cases:
        t = {b: bench(getattr(kernels.BACKENDS[b], fn_name), inputs, rep) for b in names}
        ref = [getattr(kernels.BACKENDS[b], fn_name)(*inputs) for b in names]
        same = all(np.array_equal(np.asarray(a[0]), np.asarray(ref[0][0])) for a in ref)
        speed = t["python"] / t["compiled"] if len(names) == 2 else float("nan")
        print(f"{label:<30}" + "".join(f"{t[b] * 1e3:>12.3f}ms" for b in names)
              + f"{speed:>9.1f}x" + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
