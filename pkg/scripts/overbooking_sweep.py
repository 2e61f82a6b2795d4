"""Interaction count, delay and energy of the hybrid market as the overbooking rate rises.

    python3 scripts/overbooking_sweep.py --grid 0,0.1,0.2,0.3
"""
import argparse

from hybridmarket.harness import ScenarioSpec, sweep

METRICS = ("ni", "dip", "ecip", "service_quality")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tasks", type=int, default=30)
    ap.add_argument("--workers", type=int, default=100)
    ap.add_argument("--grid", default="0,0.1,0.2,0.3")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = ScenarioSpec(n_tasks=args.tasks, n_workers=args.workers, trials=args.trials, master_seed=args.seed,
                        methods=("hybrid", "conventional_s"))
    runs = sweep(spec, "tau", [float(v) for v in args.grid.split(",")], jobs=args.jobs)
    print(f"{'tau':>5} {'method':<15}" + "".join(f"{m:>17}" for m in METRICS) + f"{'futures NI':>12}")
    for tau, res in runs:
        fut = res.records["hybrid"][0].ni_futures  # one futures stage per market
        for m in ("hybrid", "conventional_s"):
            extra = f"{fut:12d}" if m == "hybrid" else ""
            print(f"{tau:5.2f} {m:<15}" + "".join(f"{res.mean(m, k):17.1f}" for k in METRICS) + extra)


if __name__ == "__main__":
    main()
