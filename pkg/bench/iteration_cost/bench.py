import time
import argparse
import statistics
from pathlib import Path

import numpy as np

import sublevel
from sublevel import MethodConfig, PhaseTimer
from sublevel.optimizers import STEPS, init_state
from sublevel.problems import SyntheticSpec, objective_from_spec

# ───────────────────── parameter ─────────────────────
M_PER_N: int = 10          # samples per feature
COARSE_FRACTION: float = 0.5
RANK_FRACTION: float = 0.09

TEXT_FILE: Path = Path("iteration_cost.txt")

# ───────────────────── format function ─────────────────────
def format_row(row: list[str], widths: list[int]) -> str:
    return " | ".join(f"{v:<{w}}" for v, w in zip(row, widths))


def method_config(method: str, n: int) -> MethodConfig:
    coarse = max(2, int(COARSE_FRACTION * n + 0.5))
    rank = max(1, int(RANK_FRACTION * n + 0.5))
    match method:
        case "lowrank":
            return MethodConfig("lowrank", coarse_dim=rank)
        case "sigmasvd":
            return MethodConfig("sigmasvd", coarse_dim=coarse, rank=min(rank, coarse - 1))
    return MethodConfig(method)


def time_iteration(method: str, n: int, nruns: int) -> list[float]:
    obj = objective_from_spec("logistic", SyntheticSpec(m=M_PER_N * n, n=n, seed=n), reg=1e-3)
    cfg = method_config(method, n)
    state = init_state(obj, np.zeros(n), cfg)
    step = STEPS[method]

    elapsed_list: list[float] = []
    for _ in range(nruns):
        t0 = time.perf_counter()
        step(state, obj, cfg)
        elapsed_list.append(time.perf_counter() - t0)
    return elapsed_list


# ────────────────────────── CLI entry ──────────────────────────
def main() -> None:
    parser = argparse.ArgumentParser(description="cost of one iteration per method")
    parser.add_argument("-n", "--nruns", type=int, default=5, help="number of repetitions")
    parser.add_argument("--dims", type=int, nargs="+", default=[100, 200, 400, 800])
    parser.add_argument("--methods", nargs="+", default=["newton", "lowrank", "sigmasvd"],
                        choices=sorted(STEPS))
    parser.add_argument("--profile", action="store_true", help="print the phase profile at the end")
    args = parser.parse_args()

    headers = ["version", "method", "n", "min [ms]", "median [ms]", "stdev [ms]"]
    col_widths = [10, 10, 6, 10, 12, 11]

    rows = []
    for n in args.dims:
        for method in args.methods:
            elapsed_list = time_iteration(method, n, args.nruns)
            stdev = statistics.stdev(elapsed_list) if len(elapsed_list) >= 2 else 0.0
            rows.append([
                sublevel.__version__,
                method,
                str(n),
                f"{min(elapsed_list) * 1000:.3f}",
                f"{statistics.median(elapsed_list) * 1000:.3f}",
                f"{stdev * 1000:.3f}",
            ])
            print(format_row(rows[-1], col_widths))

    rule = "-" * (sum(col_widths) + 3 * (len(headers) - 1))
    print("\nBenchmark result:")
    print(format_row(headers, col_widths))
    print(rule)
    for row in rows:
        print(format_row(row, col_widths))

    if args.profile:
        PhaseTimer.summarize()

    # Append to file
    write_header = not TEXT_FILE.exists() or TEXT_FILE.stat().st_size == 0
    with TEXT_FILE.open("a", encoding="utf-8") as f:
        if write_header:
            f.write(format_row(headers, col_widths) + "\n")
            f.write(rule + "\n")
        for row in rows:
            f.write(format_row(row, col_widths) + "\n")


if __name__ == "__main__":
    main()
