"""Command line front end.

Subcommands:
  run        execute one experiment from a config file or preset
  exactcheck run the exact rational identity suite on bundled or given fixtures
  presets    list built-in experiment presets

Exit status: 0 all checks passed, 2 a statistical or exact check failed,
1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import exactalg, fields, limitlaw, rng, stats
from .config import ExperimentConfig, load_config
from .exactalg import CheckReport
from .presets import PRESET_NOTES, get_preset, preset_names

SCHEMA_VERSION = 1

BUNDLED_FIXTURES = Path(__file__).parent / "data" / "fixtures"


# ---------------------------------------------------------------------------
# run


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Execute the configured run and return the report document.

    Every number in the report is a function of (config, seed); the thread
    count and the wall clock never enter.
    """
    rep = stats.replicate_stats(
        cfg.spec,
        cfg.window,
        cfg.statistic,
        cfg.replicates,
        cfg.master_seed,
        threads=threads,
    )
    values = rep.values
    ks_results = []
    ecf_grid = []
    all_pass = True

    if cfg.law is not None:
        tol = float(cfg.tolerances.get("ks", 0.02))
        try:
            dist = stats.ks_one_sample(values, lambda x: limitlaw.cdf_limit(cfg.law, x))
            mode = "one_sample"
        except ValueError:
            gen = rng.stream_generator(cfg.master_seed, "reference", 0)
            ref = limitlaw.sample_limit(cfg.law, cfg.reference_draws, gen)
            dist = stats.ks_two_sample(values, ref)
            mode = "two_sample"
        ok = bool(dist <= tol)
        all_pass = all_pass and ok
        ks_results.append(
            {
                "law": limitlaw.law_to_json(cfg.law),
                "mode": mode,
                "distance": dist,
                "tolerance": tol,
                "pass": ok,
            }
        )

    if cfg.t_grid:
        grid = stats.ecf(values, cfg.t_grid)
        reference = None
        if cfg.law is not None:
            try:
                reference = limitlaw.cf_limit(cfg.law, np.asarray(cfg.t_grid))
            except ValueError:
                reference = None
        for i, t in enumerate(cfg.t_grid):
            entry = {
                "t": float(t),
                "empirical": float(grid.values[i]),
                "imag_abs": float(grid.imag_abs[i]),
            }
            if reference is not None:
                entry["reference"] = float(reference[i])
                entry["abs_gap"] = abs(entry["empirical"] - entry["reference"])
            ecf_grid.append(entry)
        if reference is not None:
            tol = float(cfg.tolerances.get("ecf", 0.02))
            gap = max(e["abs_gap"] for e in ecf_grid)
            ok = bool(gap <= tol)
            all_pass = all_pass and ok
            ks_results.append(
                {
                    "law": limitlaw.law_to_json(cfg.law),
                    "mode": "ecf_max_gap",
                    "distance": gap,
                    "tolerance": tol,
                    "pass": ok,
                }
            )

    doc = {
        "schema_version": SCHEMA_VERSION,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "name": cfg.name,
        "spec": fields.spec_to_json(cfg.spec),
        "spec_digest": fields.spec_digest(cfg.spec),
        "window": list(cfg.window.lengths),
        "statistic": cfg.statistic,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "moments": rep.moments(),
        "ks_results": ks_results,
        "ecf_grid": ecf_grid,
        "verdict": "pass" if all_pass else "fail",
        "_values": values,  # stripped before serialization
    }
    return doc


def write_artifacts(doc: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    values = doc.pop("_values")

    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # raw replicate statistics, one per line, in replicate order
    with open(out_dir / "samples.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("value\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")

    with open(out_dir / "ecdf.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("x,cum_prob\n")
        n = values.size
        for i, x in enumerate(np.sort(values)):
            fh.write(f"{float(x)!r},{repr((i + 1) / n)}\n")

    if doc["ecf_grid"]:
        with open(out_dir / "ecf.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("t,ecf_real\n")
            for e in doc["ecf_grid"]:
                fh.write(f"{e['t']!r},{e['empirical']!r}\n")


def cmd_run(args) -> int:
    if bool(args.config) == bool(args.preset):
        print("run needs exactly one of --config PATH or --preset NAME", file=sys.stderr)
        return 1
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 1
    try:
        if args.preset:
            cfg = get_preset(args.preset)
        else:
            cfg = load_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, out_dir=args.out)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        doc = run_experiment(cfg, threads=args.threads)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(cfg.out_dir) if cfg.out_dir else Path("fieldclt-out") / cfg.name
    try:
        write_artifacts(doc, out_dir)
    except OSError as exc:
        print(f"cannot write to {out_dir}: {exc}", file=sys.stderr)
        return 1

    for entry in doc["ks_results"]:
        mark = "PASS" if entry["pass"] else "FAIL"
        print(
            f"[{mark}] {entry['mode']} distance {entry['distance']:.5f}"
            f" (tolerance {entry['tolerance']}) vs {entry['law']['kind']}"
        )
    print(f"{cfg.name}: verdict {doc['verdict']} -> {out_dir}")
    return 0 if doc["verdict"] == "pass" else 2


# ---------------------------------------------------------------------------
# exactcheck


def cmd_exactcheck(args) -> int:
    fdir = Path(args.fixtures) if args.fixtures else BUNDLED_FIXTURES
    if not fdir.is_dir():
        print(f"fixture directory not found: {fdir}", file=sys.stderr)
        return 1
    files = sorted(fdir.glob("*.json"))
    if not files:
        print(f"no fixtures in {fdir}", file=sys.stderr)
        return 1

    reports: list[CheckReport] = []
    for path in files:
        try:
            fix = exactalg.load_fixture(path)
            reports.extend(exactalg.run_fixture(fix))
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            print(f"fixture error in {path.name}: {exc}", file=sys.stderr)
            return 1

    bad = [n for n in range(65) if fields.torus_parity(n) != (1, 0)]
    reports.append(
        CheckReport(
            "torus_parity_powers_0_64",
            "pass" if not bad else "fail",
            {"failing_n": bad} if bad else None,
        )
    )

    failures = 0
    for r in reports:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.identity}")
        if not r.passed:
            failures += 1
            if r.witness is not None:
                print(f"    witness: {json.dumps(r.witness, sort_keys=True)}")
    print(f"{len(reports) - failures}/{len(reports)} exact identities hold")
    return 0 if failures == 0 else 2


# ---------------------------------------------------------------------------
# presets


def cmd_presets(args) -> int:
    for name in preset_names():
        cfg = get_preset(name)
        win = "x".join(str(n) for n in cfg.window.lengths)
        print(f"{name:16s} {win:>14s}  R={cfg.replicates:<6d} {PRESET_NOTES[name]}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fieldclt",
        description="Simulate stationary martingale-difference fields and check their limit laws.",
    )
    sub = p.add_subparsers(dest="command")

    runp = sub.add_parser("run", help="run one experiment from a config file or preset")
    runp.add_argument("--config", metavar="PATH", help="JSON experiment config")
    runp.add_argument("--preset", metavar="NAME", help="built-in preset name")
    runp.add_argument("--seed", type=int, metavar="U64", help="override the master seed")
    runp.add_argument("--out", metavar="DIR", help="override the output directory")
    runp.add_argument("--threads", type=int, default=1, metavar="N",
                      help="worker threads; outputs do not depend on it")

    exp = sub.add_parser("exactcheck", help="run exact rational identity fixtures")
    exp.add_argument("--fixtures", metavar="DIR", help="fixture directory (default: bundled)")

    sub.add_parser("presets", help="list built-in presets")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command == "run":
        return cmd_run(args)
    if args.command == "exactcheck":
        return cmd_exactcheck(args)
    if args.command == "presets":
        return cmd_presets(args)
    parser.print_usage(sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
