"""Run every config in a directory and print the consolidated report.

    python scripts/run_suite.py configs/ --out results/
"""
import argparse
import os
import sys
from pathlib import Path

from natmaplab import cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("configs", type=Path)
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="*", help="config stems to run")
    args = ap.parse_args()
    os.environ["NATMAPLAB_OUTPUT_DIR"] = args.out
    status = 0
    for path in sorted(args.configs.glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        print(f"== {path.stem}", flush=True)
        status = max(status, cli.main(["run", str(path)]))
    cli.main(["report", args.out])
    return status


if __name__ == "__main__":
    sys.exit(main())
