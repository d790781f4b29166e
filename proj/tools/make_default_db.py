#!/usr/bin/env python3
"""Regenerates data/default_db.json from the published per-operator frequencies."""
import json
import pathlib

SPATIAL = ["SinglePoint", "SameRow", "RandomSFM", "BulletWake", "ShatteredGlass", "RandomMFM"]
DOMAIN = ["NaN", "Zero", "BitFlip", "InUnitBall", "Random"]

# kind: (spatial percentages, corrupted tensors observed)
ROWS = {
    "Conv2D": ([42.7, 18.7, 0.0, 20.6, 16.2, 1.8], 24273),
    "Add": ([90.3, 1.8, 0.8, 0.0, 0.0, 7.1], 5900),
    "BatchNorm": ([77.8, 2.5, 1.1, 12.7, 1.1, 3.0], 26182),
    "BiasAdd": ([90.1, 1.2, 1.0, 0.2, 0.0, 7.5], 7400),
    "Div": ([84.9, 6.7, 8.4, 0.0, 0.0, 0.0], 4400),
    "Exp": ([91.9, 0.5, 0.0, 0.0, 0.0, 7.5], 6400),
    "LeakyReLU": ([84.5, 1.5, 1.1, 0.0, 0.0, 10.3], 5100),
    "Mul": ([88.4, 0.3, 0.0, 0.0, 0.0, 11.3], 5700),
    "Sigmoid": ([89.7, 1.4, 0.0, 0.0, 0.0, 9.0], 4500),
}

# Value-domain mixes are qualitative readings, not published numbers.
UNIT_BALL_HEAVY = [0.005, 0.01, 0.01, 0.85, 0.125]
ZERO_HEAVY = [0.005, 0.70, 0.01, 0.20, 0.085]
DOMAINS = {
    "Add": ZERO_HEAVY,
    "Exp": ZERO_HEAVY,
    "Div": [0.02, 0.03, 0.40, 0.05, 0.50],
    "Sigmoid": [0.01, 0.02, 0.02, 0.45, 0.50],
}


def entry(spatial, samples, domains, corpus):
    total = sum(spatial)
    return {
        "spatial_freq": {k: round(v / total, 12) for k, v in zip(SPATIAL, spatial)},
        "domain_freq": dict(zip(DOMAIN, domains)),
        "provenance": {"corpus": corpus, "samples": samples},
    }


def main():
    kinds = {
        kind: entry(sp, n, DOMAINS.get(kind, UNIT_BALL_HEAVY), "gpu-fi-yolov3")
        for kind, (sp, n) in ROWS.items()
    }
    fallback = entry([89.7, 1.4, 0.0, 0.0, 0.0, 9.0], 0, DOMAINS["Sigmoid"], "builtin linear-kernel fallback")
    doc = {"schema_version": 1, "kinds": kinds, "fallback": fallback}
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "default_db.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
