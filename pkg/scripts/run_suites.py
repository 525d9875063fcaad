#!/usr/bin/env python3
"""Run every theorem suite at a fixed seed and print one line per check.

Usage: python scripts/run_suites.py [--seed N] [--budget N]
"""
import argparse
import sys
import time

from bpbpp.cli import run_suite

SUITES = ["smoothness-characterization", "beta", "hilbert", "bilinear", "ck",
          "sums"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=800)
    args = ap.parse_args()

    failures = 0
    for name in SUITES:
        t0 = time.perf_counter()
        status, payload = run_suite(name, seed=args.seed, budget=args.budget)
        dt = time.perf_counter() - t0
        res = payload["suite"]
        print(f"{name:32s} {status:12s} "
              f"{res['passed']:3d} passed {res['failed']:3d} failed "
              f"[{dt:6.1f}s]")
        for check in res["checks"]:
            mark = "ok " if check["ok"] else "FAIL"
            print(f"    {mark} {check['name']}")
        failures += res["failed"]
    return 0 if failures == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
