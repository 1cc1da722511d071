"""Recompute a train suite's summary table from its raw results CSV.

usage: aggregate_summary.py RESULTS_CSV SUMMARY_CSV [--baseline sampled]
Exits 1 and lists the mismatching cells if any summary value disagrees.
"""

import argparse
import csv
import math
import sys
from collections import OrderedDict


def final_returns(results_path):
    last = OrderedDict()
    with open(results_path, newline="") as f:
        for row in csv.DictReader(f):
            last[(row["noise"], row["source"], row["seed"])] = row
    cells = OrderedDict()
    for (noise, source, _), row in last.items():
        cells.setdefault((noise, source), []).append(float(row["mean_return"]))
    return cells


def check(results_path, summary_path, baseline="sampled", rel_tol=1e-9):
    cells = final_returns(results_path)
    problems = []
    with open(summary_path, newline="") as f:
        rows = list(csv.DictReader(f))
    for row in rows:
        key = (row["noise"], row["source"])
        returns = cells.get(key)
        if returns is None:
            problems.append(f"{key}: no raw records")
            continue
        mean = sum(returns) / len(returns)
        base_returns = cells[(row["noise"], baseline)]
        base = sum(base_returns) / len(base_returns)
        rand = float(row["random_return"])
        if int(row["seeds"]) != len(returns):
            problems.append(f"{key}: seeds {row['seeds']} vs {len(returns)}")
        if not math.isclose(float(row["seed_mean_return"]), mean, rel_tol=rel_tol, abs_tol=1e-12):
            problems.append(f"{key}: seed_mean_return {row['seed_mean_return']} vs {mean}")
        if not math.isclose(float(row["baseline_return"]), base, rel_tol=rel_tol, abs_tol=1e-12):
            problems.append(f"{key}: baseline_return {row['baseline_return']} vs {base}")
        if base == rand:
            if row["normalized_improvement"] != "undefined":
                problems.append(f"{key}: expected an undefined score")
        else:
            score = 100.0 * (mean - base) / abs(base - rand)
            if not math.isclose(float(row["normalized_improvement"]), score, rel_tol=rel_tol, abs_tol=1e-9):
                problems.append(f"{key}: improvement {row['normalized_improvement']} vs {score}")
    return len(rows), problems


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("results")
    parser.add_argument("summary")
    parser.add_argument("--baseline", default="sampled")
    args = parser.parse_args()
    count, problems = check(args.results, args.summary, args.baseline)
    for p in problems:
        print(p)
    print(f"{count} summary rows checked, {len(problems)} mismatches")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
