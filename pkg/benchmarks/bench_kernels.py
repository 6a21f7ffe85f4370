"""Benchmark the compiled chunk kernel against the pure-Python reference.

Both backends must produce bit-identical metrics; this script measures the
throughput gap on a standard grid cell and verifies the equality on the fly.

    python benchmarks/bench_kernels.py --horizon 200000
"""

import argparse
import time

from linksched import FixedPoisson, PolicyConfig, SimConfig, build_grid, run
from linksched.kernels import compiled_available


def bench(horizon: int = 200_000, seed: int = 0, policy: str = "mw_ucb"):
    cfg = SimConfig(topology=build_grid(3, 3), horizon=horizon, seed=seed,
                    arrivals=FixedPoisson(0.11), policy=PolicyConfig(policy),
                    record_decisions=True)
    backends = ["pure"]
    if compiled_available():
        backends.insert(0, "compiled")
    logs = {}
    rows = []
    for backend in backends:
        t0 = time.perf_counter()
        logs[backend] = run(cfg, backend=backend)
        elapsed = time.perf_counter() - t0
        rows.append({
            "backend": backend,
            "seconds": elapsed,
            "slots_per_s": horizon / elapsed,
        })
    reference = logs[backends[-1]]
    for row in rows:
        row["identical"] = logs[row["backend"]].equals(reference)
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--policy", default="mw_ucb",
                        choices=("mw_ucb", "restart_ucb", "idealized_mw"))
    args = parser.parse_args()
    rows = bench(args.horizon, args.seed, args.policy)
    print(f"{'backend':<10} {'seconds':>9} {'slots/s':>12} {'identical':>10}")
    for row in rows:
        print(f"{row['backend']:<10} {row['seconds']:>9.3f} "
              f"{row['slots_per_s']:>12.0f} {str(row['identical']):>10}")
    if len(rows) == 2:
        print(f"speedup: {rows[0]['slots_per_s'] / rows[1]['slots_per_s']:.1f}x")


if __name__ == "__main__":
    main()
