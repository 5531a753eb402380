#!/usr/bin/env python3
"""Regenerate the packaged geometry data files.

Writes src/eitdbar/data/act4_organs.json (digitized thorax organ curves in
unit-disc coordinates, DICOM orientation: anterior up, patient left on the
image right) and src/eitdbar/data/chest_boundary.json (a chest-shaped tank
outline with 16 electrodes).  The shipped files are frozen outputs of this
script; rerun only when the geometry should change.
"""

import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "eitdbar" / "data"


def lung(center, semi, rotation, dent_at, n=36, dent=0.22, dent_width=0.75):
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    ang = np.angle(np.exp(1j * (t - dent_at)))
    radial = 1.0 - dent * np.exp(-((ang / dent_width) ** 2))
    x = semi[0] * np.cos(t) * radial
    y = semi[1] * np.sin(t) * radial
    c, s = np.cos(rotation), np.sin(rotation)
    pts = np.stack([center[0] + c * x - s * y, center[1] + s * x + c * y], axis=-1)
    return pts


def superellipse(center, semi, n=28, power=2.0, rotation=0.0):
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    x = semi[0] * np.sign(np.cos(t)) * np.abs(np.cos(t)) ** (2.0 / power)
    y = semi[1] * np.sign(np.sin(t)) * np.abs(np.sin(t)) ** (2.0 / power)
    c, s = np.cos(rotation), np.sin(rotation)
    return np.stack([center[0] + c * x - s * y, center[1] + s * x + c * y], axis=-1)


def organ_template():
    organs = [
        # patient-right lung sits on the image left (DICOM)
        dict(
            name="right_lung",
            probability=0.9,
            conductivity_range=[0.01, 0.2],
            lung=True,
            curve=lung(center=(-0.44, -0.02), semi=(0.21, 0.40), rotation=0.14, dent_at=0.5),
        ),
        dict(
            name="left_lung",
            probability=0.9,
            conductivity_range=[0.01, 0.2],
            lung=True,
            curve=lung(center=(0.44, -0.02), semi=(0.21, 0.40), rotation=-0.14, dent_at=np.pi - 0.5),
        ),
        dict(
            name="spine",
            probability=1.0,
            conductivity_range=[0.01, 0.2],
            curve=superellipse(center=(0.0, -0.50), semi=(0.105, 0.095), power=3.0),
        ),
        dict(
            name="heart",
            probability=0.95,
            conductivity_range=[0.5, 0.8],
            curve=superellipse(center=(0.10, 0.32), semi=(0.185, 0.145), power=2.0, rotation=-0.35),
        ),
        dict(
            name="aorta",
            probability=0.95,
            conductivity_range=[0.5, 0.8],
            curve=superellipse(center=(0.06, -0.16), semi=(0.075, 0.075), n=24),
        ),
    ]
    for o in organs:
        o["curve"] = np.round(o["curve"], 5).tolist()
    return dict(
        name="act4_thorax",
        organs=organs,
        background_range=[0.29, 0.31],
        injury=dict(probability=0.5, conductivity_range=[0.01, 1.5]),
        boundary_noise_std=0.02,
    )


def chest_boundary(n=256, perimeter=1.02, n_electrodes=16, electrode_width=0.02):
    # wide oval with a flattened posterior wall, common for thoracic tanks
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    x = np.cos(t) * (1.0 + 0.04 * np.cos(2 * t))
    y = 0.72 * np.sin(t)
    y = np.where(y < 0, 0.86 * y, y)
    pts = np.stack([x, y], axis=-1)
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    pts *= perimeter / seg.sum()
    # electrode centers by arclength, with a deterministic jitter so they are
    # not exactly equidistant
    rng = np.random.default_rng(20180615)
    jitter = rng.uniform(-0.25, 0.25, n_electrodes) * (perimeter / n_electrodes) * 0.3
    centers = (np.arange(n_electrodes) + 0.5) * perimeter / n_electrodes + jitter
    return dict(
        name="kit4_chest",
        kind="polyline",
        boundary_points=np.round(pts, 6).tolist(),
        electrode_arclengths=np.round(np.sort(centers), 6).tolist(),
        electrode_width=electrode_width,
        perimeter=perimeter,
    )


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    (DATA_DIR / "act4_organs.json").write_text(json.dumps(organ_template(), indent=1))
    (DATA_DIR / "chest_boundary.json").write_text(json.dumps(chest_boundary(), indent=1))
    print(f"wrote {DATA_DIR / 'act4_organs.json'}")
    print(f"wrote {DATA_DIR / 'chest_boundary.json'}")


if __name__ == "__main__":
    main()
