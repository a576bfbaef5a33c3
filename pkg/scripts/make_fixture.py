"""Write the bundled 200-row synthetic housing fixture.

The rows mimic the census block-group schema (ranges, rough marginal
shapes, an income-driven target capped at 5.00001) but are not real data.
Output is deterministic for a given seed.

Usage: python scripts/make_fixture.py [--seed 7] [--out PATH]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from tuberegress.dataset import FIXTURE_PATH, RAW_FEATURES, TARGET


def synthesize(n=200, seed=7):
    rng = np.random.default_rng(seed)
    med_inc = np.clip(rng.lognormal(1.25, 0.45, n), 0.5, 15.0)
    age = rng.integers(1, 53, n).astype(float)
    rooms = np.clip(rng.normal(5.2, 1.1, n) + 0.25 * (med_inc - 3.8), 1.5, 12.0)
    bedrms = np.clip(rooms * rng.normal(0.2, 0.02, n), 0.5, None)
    pop = np.round(np.clip(rng.lognormal(7.0, 0.6, n), 10, 20000))
    occup = np.clip(rng.lognormal(1.0, 0.25, n), 1.0, 8.0)
    lat = rng.uniform(32.6, 41.8, n)
    lon = -124.2 + (41.8 - lat) * 0.9 + rng.normal(0, 0.6, n)
    coast = np.abs(lat - 34.05)
    y = 0.45 * med_inc - 0.06 * coast + 0.004 * age + 0.55 + rng.normal(0, 0.35, n)
    y = np.clip(y, 0.15, 5.00001)
    X = np.column_stack([med_inc, age, rooms, bedrms, pop, occup, lat, lon])
    # round like the census release so the CSV stays readable
    X = np.column_stack([np.round(X[:, j], d) for j, d in enumerate((4, 0, 5, 5, 0, 5, 2, 2))])
    return X, np.round(y, 5)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default=str(FIXTURE_PATH))
    args = ap.parse_args()
    X, y = synthesize(seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(RAW_FEATURES) + [TARGET])
        for row, t in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    print(f"wrote {len(y)} rows to {out}")


if __name__ == "__main__":
    main()
