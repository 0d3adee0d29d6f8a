"""Command line entry point: ``natmaplab run | report | list-experiments``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid, NatMapError, NoResults
from .experiments import EXPERIMENTS

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 3
    backend: dict = field(default_factory=lambda: {"kind": "exact"})
    grid: dict = field(default_factory=dict)
    c_schedule: list = field(default_factory=list)
    mc_count: int = 20000
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    samples: int | None = None
    output_dir: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid(f"unknown experiment {self.experiment!r}")
        if not isinstance(self.n, int) or not 2 <= self.n <= 4:
            raise ConfigInvalid("n must be 2, 3 or 4")
        if not isinstance(self.backend, dict) or not isinstance(self.grid, dict):
            raise ConfigInvalid("backend and grid must be objects")
        if not isinstance(self.tolerances, dict):
            raise ConfigInvalid("tolerances must be an object")
        if self.mc_count <= 0 or (self.samples is not None and self.samples <= 0):
            raise ConfigInvalid("mc_count and samples must be positive")
        h = self.n - 1
        if any(c <= h for c in self.c_schedule):
            raise ConfigInvalid(f"every c must exceed h = {h}")

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigInvalid("missing field 'experiment'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def output_dir(cfg):
    root = os.environ.get("NATMAPLAB_OUTPUT_DIR") or cfg.output_dir
    return Path(root) / f"{cfg.experiment}_n{cfg.n}_{cfg.hash()[:12]}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def run_experiment(cfg, outdir=None):
    """Run one config, write its artifacts and return ``(result dict, outdir)``."""
    outdir = Path(outdir) if outdir is not None else output_dir(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    lock = outdir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigInvalid(f"{outdir} is locked by another run") from None
    try:
        t0 = time.perf_counter()
        outcome = EXPERIMENTS[cfg.experiment](cfg)
        wall = time.perf_counter() - t0
        rows = [r.to_dict() for r in outcome.rows]
        result = {
            "schema": SCHEMA,
            "experiment": cfg.experiment,
            "n": cfg.n,
            "config": cfg.to_dict(),
            "config_hash": cfg.hash(),
            "checks": rows,
            "verdict": "pass" if rows and all(r["passed"] for r in rows) else "fail",
        }
        (outdir / "result.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
        (outdir / "timing.json").write_text(json.dumps({"wall_seconds": wall}) + "\n")
        for name, (header, table) in outcome.tables.items():
            _write_csv(outdir / f"{name}.csv", header, table)
    finally:
        os.close(fd)
        lock.unlink(missing_ok=True)
    return result, outdir


REPORT_COLUMNS = ["n", "experiment", "check", "measured", "bound", "relation", "passed", "config_hash"]


def collect(directory):
    results = []
    for path in sorted(Path(directory).rglob("result.json")):
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError:
            continue
        if data.get("schema") == SCHEMA:
            results.append(data)
    if not results:
        raise NoResults(f"no result.json files under {directory}")
    rows = []
    for res in sorted(results, key=lambda r: (r["n"], r["experiment"], r["config_hash"])):
        for chk in res["checks"]:
            rows.append([res["n"], res["experiment"], chk["name"], chk["measured"], chk["bound"],
                         chk["relation"], chk["passed"], res["config_hash"][:12]])
    return rows


def report(directory, out=None):
    rows = collect(directory)
    out = Path(out) if out else Path(directory) / "report.csv"
    _write_csv(out, REPORT_COLUMNS, rows)
    return rows, out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def print_table(rows, stream=None):
    stream = sys.stdout if stream is None else stream
    cells = [REPORT_COLUMNS] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(REPORT_COLUMNS))]
    last_n = None
    for i, r in enumerate(cells):
        if i > 0 and rows[i - 1][0] != last_n:
            last_n = rows[i - 1][0]
            print(f"-- n = {last_n}", file=stream)
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)), file=stream)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="natmaplab")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_rep = sub.add_parser("report", help="aggregate result.json files")
    p_rep.add_argument("directory")
    p_rep.add_argument("--out")
    sub.add_parser("list-experiments")
    args = parser.parse_args(argv)

    if args.cmd == "list-experiments":
        for name, fn in EXPERIMENTS.items():
            doc = (fn.__doc__ or "").strip().splitlines()
            print(f"{name:22s} {doc[0] if doc else ''}")
        return EXIT_OK
    if args.cmd == "report":
        try:
            rows, out = report(args.directory, args.out)
        except NoResults as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print_table(rows)
        print(f"wrote {out}")
        return EXIT_OK
    try:
        cfg = ExperimentConfig.load(args.config)
        result, outdir = run_experiment(cfg)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NatMapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for chk in result["checks"]:
        status = "PASS" if chk["passed"] else "FAIL"
        print(f"{status} {chk['name']}: measured={_fmt(chk['measured'])} bound={_fmt(chk['bound'])}"
              + (f" ({chk['error']})" if chk["error"] else ""))
    print(f"verdict: {result['verdict']}  -> {outdir}")
    return EXIT_OK if result["verdict"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
