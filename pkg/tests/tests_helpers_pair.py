"""Shared helper: synthetic EITP files for I/O-level tests."""

import numpy as np

from eitdbar.dataset import TrainingPair, write_pair
from eitdbar.dbar import LowPassReconstruction
from eitdbar.grids import SquareGrid
from eitdbar.phantoms import ConductivityImage


def make_synthetic_pair(seed=5, n=64):
    rng = np.random.default_rng(seed)
    grid = SquareGrid(n, 1.0)
    truth = ConductivityImage(grid, 0.1 + rng.uniform(0.0, 1.0, (n, n)), sigma_b=0.14)
    m0 = 1.0 + 0.1 * rng.normal(size=(n, n)) + 0.01j * rng.normal(size=(n, n))
    rec = LowPassReconstruction(grid=grid, m0=m0, sigma_db=0.14 * m0.real**2, sigma_b=0.14)
    return TrainingPair(truth=truth, recon=rec, seed=987 + seed, radius=4.2,
                        sigma_b=0.14, style="kit4")


def make_synthetic_pair_file(path, seed=5, n=64):
    write_pair(make_synthetic_pair(seed=seed, n=n), path)
    return path
