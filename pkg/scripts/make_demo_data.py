#!/usr/bin/env python3
"""Generate the bundled synthetic demo dataset (data/demo_cities.csv).

10,000 synthetic "cities": clustered longitude/latitude per region, a
7-label categorical region column, a heavy-tailed population column, and a
name column for tooltip previews. Fully deterministic (fixed seed), so the
checked-in file can be regenerated bit-identically:

    python3 scripts/make_demo_data.py
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data" / "demo_cities.csv"
SEED = 20240611
ROWS = 10_000

# (label, center lon, center lat, lon spread, lat spread, weight)
REGIONS = [
    ("Africa", 20.0, 5.0, 18.0, 14.0, 0.14),
    ("Antarctica", 0.0, -78.0, 60.0, 4.0, 0.01),
    ("Asia", 95.0, 35.0, 30.0, 14.0, 0.30),
    ("Europe", 15.0, 50.0, 14.0, 7.0, 0.20),
    ("North America", -95.0, 40.0, 22.0, 10.0, 0.18),
    ("Oceania", 145.0, -25.0, 18.0, 9.0, 0.05),
    ("South America", -60.0, -15.0, 12.0, 12.0, 0.12),
]


def main():
    rng = np.random.default_rng(SEED)
    weights = np.array([r[5] for r in REGIONS])
    weights = weights / weights.sum()
    which = rng.choice(len(REGIONS), size=ROWS, p=weights)

    lon = np.empty(ROWS)
    lat = np.empty(ROWS)
    for i, (_, cx, cy, sx, sy, _) in enumerate(REGIONS):
        mask = which == i
        count = int(mask.sum())
        lon[mask] = rng.normal(cx, sx, count)
        lat[mask] = rng.normal(cy, sy, count)
    np.clip(lon, -180.0, 180.0, out=lon)
    np.clip(lat, -89.9, 89.9, out=lat)

    population = np.floor(rng.lognormal(mean=10.0, sigma=1.6, size=ROWS)).astype(np.int64) + 1

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Longitude", "Latitude", "Continent", "Population", "Name"])
        for i in range(ROWS):
            writer.writerow([
                f"{lon[i]:.5f}",
                f"{lat[i]:.5f}",
                REGIONS[which[i]][0],
                int(population[i]),
                f"City {i:05d}",
            ])
    print(f"wrote {OUT} ({ROWS} rows)")


if __name__ == "__main__":
    main()
