#!/usr/bin/env python3
"""Print a compact table of the test reports in one or more run directories.

Usage: scripts/summarize_run.py runs/clt-0123456789ab [more run dirs...]
With no arguments, summarizes every run directory under runs/.
"""

import json
import pathlib
import sys


def summarize(run_dir: pathlib.Path) -> bool:
    reports_path = run_dir / "reports.json"
    if not reports_path.is_file():
        print(f"{run_dir}: no reports.json (incomplete run?)")
        return False
    blob = json.loads(reports_path.read_text())
    print(f"\n{blob['name']}  ({run_dir.name})  "
          f"lambda_hat={blob['lambda_hat']:.6g}  wall={blob['wall_time']:.1f}s")
    width = max(len(r["statistic"]) for r in blob["reports"])
    for r in blob["reports"]:
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"  [{mark}] {r['statistic']:<{width}}  "
              f"value={r['value']:<12.6g} threshold={r['threshold']:<12.6g} "
              f"{r['notes']}")
    return bool(blob["passed"])


def main(argv) -> int:
    if argv:
        dirs = [pathlib.Path(a) for a in argv]
    else:
        root = pathlib.Path("runs")
        dirs = sorted(p for p in root.iterdir() if p.is_dir()) if root.is_dir() else []
    if not dirs:
        print("no run directories found")
        return 2
    ok = True
    for d in dirs:
        ok = summarize(d) and ok
    return 0 if ok else 4


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
