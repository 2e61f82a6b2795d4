"""Service quality, RoSQ and worker utility as the worker pool grows.

    python3 scripts/quality_vs_workers.py --trials 200 --workers 60,80,100,120
"""
import argparse
import time

from hybridmarket.harness import ScenarioSpec, sweep

METHODS = ("conventional_s", "hybrid", "conventional_f", "quality_p", "random_m", "negotiation")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tasks", type=int, default=30)
    ap.add_argument("--workers", default="60,80,100,120")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = ScenarioSpec(n_tasks=args.tasks, n_workers=0, trials=args.trials, master_seed=args.seed, methods=METHODS)
    t0 = time.perf_counter()
    runs = sweep(spec, "n_workers", [int(w) for w in args.workers.split(",")], jobs=args.jobs)
    print(f"{'workers':>7} {'method':<15} {'quality':>9} {'RoSQ':>7} {'FoDSQ':>6} {'utility':>8}")
    for w, res in runs:
        for m in METHODS:
            print(f"{w:>7} {m:<15} {res.mean(m, 'service_quality'):9.1f} {res.mean(m, 'rosq'):7.4f} "
                  f"{res.mean(m, 'fodsq'):6.3f} {res.mean(m, 'worker_utility'):8.1f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
