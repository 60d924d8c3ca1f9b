"""Command line front end.

    lab run <scenario.ini> [--level L] [--out dir] [--seed u64]
    lab battery <dir> [--out dir] [--seed u64]
    lab constants <scenario.ini> [--out dir]
    lab sparse <scenario.ini> [--dump-family out.json] [--level L] [--out dir]

Exit codes: 0 all checks pass, 1 at least one quantitative check fails,
2 configuration or scenario error.  LAB_THREADS caps battery parallelism;
reports are byte-identical regardless of the thread count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import glob
import json
import os
import sys
import time

from .bench import Scenario, ScenarioError, parse_scenario, run_scenario
from .frozen import BATTERY_VERSION


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="lab",
        description="numerical checks for sparse domination of "
                    "Orlicz-smooth singular integrals and their commutators")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario_arg=True):
        if scenario_arg:
            p.add_argument("scenario", help="scenario INI file")
        p.add_argument("--level", type=int, default=None,
                       help="override the grid level list with a single level")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for the randomized sampling estimates")

    common(sub.add_parser("run", help="run one scenario"))
    bp = sub.add_parser("battery", help="run every scenario in a directory")
    bp.add_argument("directory", help="directory of .ini scenarios")
    bp.add_argument("--level", type=int, default=None)
    bp.add_argument("--out", default=None)
    bp.add_argument("--seed", type=int, default=0)
    common(sub.add_parser("constants",
                          help="dump the constants table of a scenario"))
    spp = sub.add_parser("sparse", help="build and dump a sparse family")
    common(spp)
    spp.add_argument("--dump-family", default=None, metavar="OUT.json",
                     help="write the cube family with coefficients here")
    return ap


def _load(path: str, level: int | None, seed: int) -> Scenario:
    scn = parse_scenario(path)
    if level is not None:
        scn.levels = (level,)
    scn.seed = seed
    return scn


def _default_out(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0] + ".out"


def _run_one(path: str, level, out, seed, dump_family=None) -> dict:
    scn = _load(path, level, seed)
    out_dir = out or _default_out(path)
    if dump_family is None and scn.kind == "sparse":
        dump_family = os.path.join(out_dir, "family.json")
    t0 = time.monotonic()
    report = run_scenario(scn, out_dir=out_dir, dump_family=dump_family)
    dt = time.monotonic() - t0
    print(f"{scn.name}: {'pass' if report['pass'] else 'FAIL'} "
          f"({dt:.1f}s)", file=sys.stderr)
    return report


def cmd_run(args) -> int:
    report = _run_one(args.scenario, args.level, args.out, args.seed)
    return 0 if report["pass"] else 1


def cmd_constants(args) -> int:
    scn = _load(args.scenario, args.level, args.seed)
    scn.kind = "constants"
    out_dir = args.out or _default_out(args.scenario)
    run_scenario(scn, out_dir=out_dir)
    with open(os.path.join(out_dir, "constants.csv")) as fh:
        sys.stdout.write(fh.read())
    return 0


def cmd_sparse(args) -> int:
    scn = _load(args.scenario, args.level, args.seed)
    if scn.kind != "sparse":
        raise ScenarioError("the sparse command needs a kind = sparse "
                            "scenario")
    report = _run_one(args.scenario, args.level, args.out, args.seed,
                      dump_family=args.dump_family)
    return 0 if report["pass"] else 1


def cmd_battery(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.directory, "*.ini")))
    out_root = args.out or "battery.out"
    os.makedirs(out_root, exist_ok=True)
    threads = max(1, int(os.environ.get("LAB_THREADS", "1")))

    def job(path):
        name = os.path.splitext(os.path.basename(path))[0]
        out_dir = os.path.join(out_root, name)
        scn = _load(path, args.level, args.seed)
        t0 = time.monotonic()
        rep = run_scenario(scn, out_dir=out_dir)
        return name, rep, time.monotonic() - t0

    results = {}
    if threads == 1:
        done = [job(p) for p in paths]
    else:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            done = list(pool.map(job, paths))
    for name, rep, dt in done:
        results[name] = {"kind": rep["kind"], "pass": rep["pass"]}
        print(f"{name}: {'pass' if rep['pass'] else 'FAIL'} ({dt:.1f}s)",
              file=sys.stderr)
    summary = {
        "battery_version": BATTERY_VERSION,
        "scenarios": results,
        "pass": all(v["pass"] for v in results.values()),
    }
    tmp = os.path.join(out_root, "battery.json.tmp")
    with open(tmp, "w") as fh:
        fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    os.replace(tmp, os.path.join(out_root, "battery.json"))
    return 0 if summary["pass"] else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "battery": cmd_battery,
                "constants": cmd_constants, "sparse": cmd_sparse}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
