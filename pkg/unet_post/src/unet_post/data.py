"""Dataset loading and normalization for training."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .eitp import PairRecord, load_directory


@dataclass(frozen=True)
class Normalization:
    """One shared (mean, std) for inputs and targets.

    Sharing the statistics keeps the residual variant's identity-at-zero
    exact after denormalization and makes conductivity units round-trip.
    """

    mean: float
    std: float

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean) / self.std

    def decode(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.std + self.mean


class PairTensors:
    """Recon inputs and truth targets as stacked float32 tensors."""

    def __init__(self, records: list[PairRecord]):
        if not records:
            raise ValueError("empty dataset")
        self.inputs = torch.from_numpy(
            np.stack([r.recon for r in records]).astype(np.float32)
        ).unsqueeze(1)
        self.targets = torch.from_numpy(
            np.stack([r.truth for r in records]).astype(np.float32)
        ).unsqueeze(1)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def train_val_split(n: int, val_fraction: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic split: the trailing ceil(n * val_fraction) pairs validate."""
    n_val = max(1, int(np.ceil(n * val_fraction)))
    idx = np.arange(n)
    return idx[: n - n_val], idx[n - n_val :]


def load_training_tensors(
    data_dir: str | Path, val_fraction: float = 0.05
) -> tuple[PairTensors, PairTensors, Normalization]:
    records = load_directory(data_dir)
    if not records:
        raise ValueError(f"no valid EITP pairs found in {data_dir}")
    train_idx, val_idx = train_val_split(len(records), val_fraction)
    train = PairTensors([records[i] for i in train_idx])
    val = PairTensors([records[i] for i in val_idx])
    mean = float(train.inputs.mean())
    std = float(train.inputs.std())
    if std == 0:
        std = 1.0
    return train, val, Normalization(mean=mean, std=std)
