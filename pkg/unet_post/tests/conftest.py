from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from unet_post.eitp import PairRecord, write_pair


def synth_piecewise(rng, n=64, background=0.14):
    truth = np.full((n, n), background)
    X, Y = np.meshgrid(np.linspace(-1, 1, n), np.linspace(-1, 1, n))
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(-0.5, 0.5, 2)
        r = rng.uniform(0.15, 0.3)
        truth = np.where((X - cx) ** 2 + (Y - cy) ** 2 < r**2,
                         rng.choice([0.06, 0.31]), truth)
    return truth


def write_synth_dataset(path: Path, count: int, seed: int = 0, identity: bool = False):
    rng = np.random.default_rng(seed)
    path.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        truth = synth_piecewise(rng)
        recon = gaussian_filter(truth, 3.0) + 0.003 * rng.normal(size=truth.shape)
        recon = np.clip(recon, 1e-3, None)
        if identity:
            truth = recon
        write_pair(
            PairRecord(truth, recon, np.zeros_like(truth), i, 4.5, 0.14, "kit4"),
            path / f"pair_{i:06d}.eitp",
        )
    return path


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    return write_synth_dataset(tmp_path_factory.mktemp("synth"), 64, seed=0)


@pytest.fixture(scope="session")
def identity_dataset(tmp_path_factory):
    return write_synth_dataset(tmp_path_factory.mktemp("ident"), 64, seed=1, identity=True)
