"""Command-line front end: config-driven experiments with reproducible runs.

Exit codes: 0 all tests passed, 2 configuration error, 3 numerical failure,
4 statistical test failure.  Each experiment run gets a directory named by a
hash of everything that affects numerics; `--threads` changes wall time only,
never bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, dos
from .config import load_experiment_config, read_config_file
from .experiments import (ConfigError, ExperimentConfig, RUNNERS, sample_key)
from .hamiltonian import PotentialSpec
from .lattice import EmptyBoxError, make_box
from .selftest import run_selftest
from .spectral import ConditioningError, DenseCapError, FactorizationError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_STAT = 0, 2, 3, 4

NUMERIC_ERRORS = (FactorizationError, ConditioningError, DenseCapError,
                  np.linalg.LinAlgError, FloatingPointError)


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _write_samples_csv(path: Path, samples: np.ndarray, columns=None) -> None:
    samples = np.asarray(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if samples.ndim == 1:
            w.writerow(["replicate", "value"])
            for i, v in enumerate(samples):
                w.writerow([i, repr(float(v))])
        else:
            labels = columns if columns is not None else range(samples.shape[1])
            w.writerow(["replicate"] + [f"d{c}" for c in labels])
            for i, row in enumerate(samples):
                w.writerow([i] + [repr(float(v)) for v in row])


def _read_samples_csv(path: Path) -> np.ndarray:
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vals = body[:, 1:]
    return vals[:, 0] if vals.shape[1] == 1 else vals


def expected_sample_keys(name: str, config: ExperimentConfig) -> list:
    """CSV stems an experiment will produce, mirroring the runners' layout."""
    if name == "minami":
        L = config.L_schedule[-1]
        return [sample_key(L, f"h{h}") for h in range(config.minami.n_halvings + 1)]
    if name == "localization":
        radius = max(config.localization.distances) + config.localization.margin
        return [sample_key(radius)]
    if name == "green-decay":
        return [sample_key(max(config.green_decay.distances) + 2)]
    return [sample_key(L) for L in config.L_schedule]


def _write_manifest(run_dir: Path, payload: dict, files: list, status: str,
                    extra=None) -> None:
    manifest = {
        "version": __version__,
        "status": status,
        "config_hash": payload["hash"],
        "experiment": payload["experiment"],
        "config_path": payload["config_path"],
        "master_seed": payload["config"]["master_seed"],
        "synthetic_null": payload["config"]["synthetic_null"],
        "files": files,
        "csv_columns": {"samples": "replicate,value (one column per probe "
                                   "distance for distance-grid experiments)",
                        "dos": "E,f_hat,std_err"},
    }
    if extra:
        manifest.update(extra)
    with open(run_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def cmd_experiment(args) -> int:
    if args.name not in RUNNERS:
        print(f"unknown experiment {args.name!r}; valid names: "
              f"{', '.join(sorted(RUNNERS))}", file=sys.stderr)
        return EXIT_CONFIG
    config = load_experiment_config(
        args.config, seed=args.seed, threads=args.threads,
        synthetic_null=True if args.synthetic_null else None)
    payload = {"experiment": args.name, "config": config.to_json_dict(),
               "config_path": str(args.config)}
    payload["hash"] = _config_hash(
        {"experiment": args.name, "config": payload["config"]})
    run_dir = Path(args.out) / f"{args.name}-{payload['hash']}"
    run_dir.mkdir(parents=True, exist_ok=True)

    keys = expected_sample_keys(args.name, config)
    files = ["manifest.json", "reports.json"] + [f"samples_{k}.csv" for k in keys]
    if args.resume:
        for k in keys:
            path = run_dir / f"samples_{k}.csv"
            if path.is_file():
                config.sample_cache[k] = _read_samples_csv(path)
        if config.sample_cache:
            print(f"resume: loaded {len(config.sample_cache)} cached sample "
                  f"ensemble(s) from {run_dir}")
    _write_manifest(run_dir, payload, files, "partial")

    record = RUNNERS[args.name](config)

    for key, entry in record.per_L.items():
        stem = key if isinstance(key, str) else sample_key(key)
        _write_samples_csv(run_dir / f"samples_{stem}.csv",
                           entry["samples"], entry.get("columns"))
    with open(run_dir / "reports.json", "w") as fh:
        json.dump(record.to_json_dict(), fh, indent=2, sort_keys=True)
    _write_manifest(run_dir, payload, files, "complete",
                    extra={"passed": record.passed,
                           "wall_time": record.wall_time})

    for r in record.reports:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.statistic}: value={r.value:.6g} "
              f"threshold={r.threshold:.6g} n={r.n} {r.notes}")
    print(f"{args.name}: {'all tests passed' if record.passed else 'TESTS FAILED'} "
          f"({run_dir})")
    return EXIT_OK if record.passed else EXIT_STAT


def cmd_dos(args) -> int:
    raw = read_config_file(args.config)
    model_sec = raw.get("model")
    if not isinstance(model_sec, dict):
        raise ConfigError("missing required config section [model]")
    model_sec = dict(model_sec)
    d = model_sec.pop("d", 1)
    hopping = model_sec.pop("hopping", 1.0)
    try:
        spec = PotentialSpec(**{k: tuple(v) if isinstance(v, list) else v
                                for k, v in model_sec.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [model] config: {exc}") from exc
    dos_sec = raw.get("dos", {})
    if "L" not in dos_sec:
        raise ConfigError("dos command requires dos.L (box size)")
    seed = args.seed
    if seed is None:
        seed = raw.get("schedule", {}).get("master_seed", 0)
    grid = raw.get("grid", {})
    edges = None
    if grid:
        for key in ("lo", "hi", "n_bins"):
            if key not in grid:
                raise ConfigError(f"[grid] requires lo, hi, n_bins; missing {key}")
        edges = np.linspace(grid["lo"], grid["hi"], int(grid["n_bins"]) + 1)
    box = make_box(dos_sec["L"], d)
    est = dos.estimate_dos_histogram(
        box, spec, dos_sec.get("n_realizations", 20), seed,
        grid_edges=edges, method=dos_sec.get("method", "auto"), hopping=hopping)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est.write_csv(out / "dos.csv")
    with open(out / "dos.json", "w") as fh:
        json.dump(est.to_json_dict(), fh, indent=2, sort_keys=True)
    print(f"dos: {len(est.grid)} bins over [{est.grid[0]:.4g}, {est.grid[-1]:.4g}], "
          f"total mass {est.total_mass():.6f} ({out / 'dos.csv'})")
    return EXIT_OK


def cmd_selftest(args) -> int:
    if args.config is not None:
        # validating a config is part of the self test when one is supplied
        load_experiment_config(args.config)
    return run_selftest()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="anderson-meso",
        description="Spectral statistics of the Anderson model in mesoscopic "
                    "energy windows: DOS estimation and limit-law experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="TOML (or JSON) config file")
        sp.add_argument("--out", default="runs", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (results are independent of this)")

    sp = sub.add_parser("dos", help="estimate the density of states")
    common(sp)

    sp = sub.add_parser("experiment", help="run one limit-law experiment")
    sp.add_argument("name", help=f"one of: {', '.join(sorted(RUNNERS))}")
    common(sp)
    sp.add_argument("--resume", action="store_true",
                    help="reuse sample CSVs from a previous partial run")
    sp.add_argument("--synthetic-null", action="store_true",
                    help="replace spectral sampling with Poisson draws")

    sp = sub.add_parser("selftest", help="run fast closed-form checks")
    sp.add_argument("--config", default=None,
                    help="optionally validate this config file as well")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dos":
            return cmd_dos(args)
        if args.command == "experiment":
            return cmd_experiment(args)
        return cmd_selftest(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyBoxError as exc:
        print(f"config error (empty box): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
