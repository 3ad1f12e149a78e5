#!/usr/bin/env python3
"""Schema check for sweep CSVs: <param>,metric,mean,std with all six metrics
present for every parameter value and every cell populated/finite."""

import csv
import math
import sys

EXPECTED_METRICS = ("accuracy", "nmi", "ari", "macro_f1", "modularity", "conductance")


def validate(path):
    """Return a list of problems (empty = valid)."""
    problems = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 4 or header[1:] != ["metric", "mean", "std"]:
            return [f"bad header: {header}"]
        seen = {}
        for i, row in enumerate(reader, start=2):
            if len(row) != 4:
                problems.append(f"line {i}: expected 4 cells, got {len(row)}")
                continue
            value, metric, mean, std = row
            if metric not in EXPECTED_METRICS:
                problems.append(f"line {i}: unknown metric {metric!r}")
            for name, cell in (("value", value), ("mean", mean), ("std", std)):
                try:
                    if not math.isfinite(float(cell)):
                        problems.append(f"line {i}: non-finite {name} {cell!r}")
                except ValueError:
                    problems.append(f"line {i}: unparsable {name} {cell!r}")
            seen.setdefault(value, set()).add(metric)
    for value, metrics in seen.items():
        missing = set(EXPECTED_METRICS) - metrics
        if missing:
            problems.append(f"value {value}: missing metrics {sorted(missing)}")
    if not seen:
        problems.append("no data rows")
    return problems


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: validate_sweep_csv.py <sweep.csv>", file=sys.stderr)
        return 2
    problems = validate(argv[0])
    for p in problems:
        print(p, file=sys.stderr)
    print("OK" if not problems else f"{len(problems)} problem(s)")
    return 0 if not problems else 1


if __name__ == "__main__":
    sys.exit(main())
