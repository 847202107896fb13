#!/usr/bin/env python3
"""Run a batch of ``symris`` jobs from a preset file.

Each preset is a TOML file holding an array of ``[[job]]`` tables. A job
names its subcommand in ``command``; every other key is passed on as the
matching command-line flag, so a job reads exactly like a CLI call::

    [[job]]
    command = "scan"
    method = "MI"
    n_qubits = 4
    ancilla = "1..40"

Usage::

    python scripts/reproduce.py scripts/presets/desk.toml --out runs/desk
    python scripts/reproduce.py scripts/presets/full.toml --only convergence --dry-run

Job output directories are taken relative to ``--out``. Jobs already
holding a ``config.json`` are skipped unless ``--force`` is given.
"""

import argparse
import shlex
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from symris.cli import main as symris_main


def job_argv(job: dict, root: Path, workers: int | None) -> list[str]:
    job = dict(job)
    argv = [job.pop("command")]
    job["out"] = str(root / job.get("out", argv[0]))
    if "scan_root" in job:
        job["scan_root"] = str(root / job["scan_root"])
    if workers is not None:
        job.setdefault("workers", workers)
    for key, val in job.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, list):
            argv += [flag, ",".join(map(str, val))]
        else:
            argv += [flag, str(val)]
    return argv


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("preset", type=Path)
    parser.add_argument("--out", type=Path, default=Path("runs"))
    parser.add_argument("--workers", type=int, help="default worker count for jobs that do not set one")
    parser.add_argument("--only", help="comma-separated subcommands to run")
    parser.add_argument("--force", action="store_true", help="rerun jobs whose output exists")
    parser.add_argument("--dry-run", action="store_true", help="print the commands only")
    args = parser.parse_args(argv)

    with open(args.preset, "rb") as fh:
        jobs = tomllib.load(fh).get("job", [])
    only = set(args.only.split(",")) if args.only else None
    failed = 0
    for job in jobs:
        if only and job["command"] not in only:
            continue
        cmd = job_argv(job, args.out, args.workers)
        out = Path(cmd[cmd.index("--out") + 1])
        print("symris " + shlex.join(cmd), flush=True)
        if args.dry_run:
            continue
        if (out / "config.json").exists() and not args.force:
            print(f"  skipped, {out} exists", flush=True)
            continue
        t0 = time.perf_counter()
        code = symris_main(cmd)
        print(f"  exit {code} after {time.perf_counter() - t0:.0f}s", flush=True)
        failed += code != 0
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
