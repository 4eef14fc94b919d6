"""Compare the compiled and pure-Python slot loops.

    python3 benchmarks/bench_kernels.py --horizon 100000 --repeat 5

Both backends run the same seeded configuration; the script checks that
their traces agree bit for bit before reporting timings.
"""
import argparse
import time

import numpy as np

from punitive import kernels
from punitive.market import example_one
from punitive.misreport import validate
from punitive.sim import PunitiveSpec, SimConfig, run


def _time(config, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run(config, backend)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "compiled" not in kernels.available():
        raise SystemExit("compiled kernels are not built; nothing to compare")

    model = example_one()
    report = validate([[0.5, 0.5, 0.0], [0.2, 0.6, 0.2], [0.0, 0.4, 0.6]])
    cases = {
        "policy I": SimConfig(model, validate(np.eye(3)), PunitiveSpec("I", 5.0), args.horizon, 1),
        "policy II": SimConfig(model, report, PunitiveSpec("II", 5.0), args.horizon, 1, 2.0),
    }
    print(f"T = {args.horizon}, best of {args.repeat}")
    print(f"{'case':<10} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for name, cfg in cases.items():
        tc, a = _time(cfg, "compiled", args.repeat)
        tp, b = _time(cfg, "python", args.repeat)
        assert np.array_equal(a.u_m_bar, b.u_m_bar) and np.array_equal(a.quote, b.quote)
        # input sampling is shared, so part of each timing is not kernel work
        print(f"{name:<10} {tc * 1e3:>8.1f}ms {tp * 1e3:>8.1f}ms {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
