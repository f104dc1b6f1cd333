#!/usr/bin/env python3
"""Largest-remainder apportionment in exact rational arithmetic.

Writes tests/data/apportion_cases.csv: one row per case with the total, the
integer weights and the expected counts (both ';'-joined). Ties in the
remainder go to the lower index.
"""
import csv
import random
from fractions import Fraction
from pathlib import Path


def apportion(total, weights):
    wsum = sum(weights)
    quotas = [Fraction(total * w, wsum) for w in weights]
    floors = [q.numerator // q.denominator for q in quotas]
    left = total - sum(floors)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[:left]:
        floors[i] += 1
    return floors


def main():
    rng = random.Random(20240611)
    cases = [
        (1000, [76] * 2 + [1] * 8),      # 95% in 2 of 10 cells
        (10, [1, 1, 1]),
        (7, [1, 1, 1, 1, 1, 1, 1, 1]),
        (1, [5, 5]),
        (0, [3, 4]),
        (1001, [76] * 20 + [1] * 80),
    ]
    for _ in range(300):
        n = rng.randint(1, 40)
        weights = [rng.randint(1, 50) for _ in range(n)]
        if rng.random() < 0.3:
            weights = [rng.choice([1, 19]) for _ in range(n)]
        cases.append((rng.randint(0, 20000), weights))
    out = Path(__file__).resolve().parent.parent / "data" / "apportion_cases.csv"
    with out.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["total", "weights", "expected"])
        for total, weights in cases:
            w.writerow([total, ";".join(map(str, weights)),
                        ";".join(map(str, apportion(total, weights)))])


if __name__ == "__main__":
    main()
