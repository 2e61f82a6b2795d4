"""Search random small markets for blocking coalitions and print any witnesses.

    python3 scripts/certify_stability.py --instances 150
"""
import argparse
import sys

from hybridmarket.stability import run_certification


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=150)
    ap.add_argument("--max-tasks", type=int, default=6)
    ap.add_argument("--max-workers", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    res = run_certification(args.instances, args.max_tasks, args.max_workers, args.seed)
    print(f"instances {res.instances}, transactions {res.transactions}, witnesses {len(res.findings)}")
    for f in res.findings:
        print("  " + f)
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
