"""Training loop: Adam on the summed squared error over batches."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import Normalization, load_training_tensors
from .model import NetworkSpec, UNet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 200_000  # full-scale default; desk preset below
    batch_size: int = 16
    learning_rate: float = 1e-4
    val_fraction: float = 0.05
    val_interval: int = 200
    seed: int = 0

    @classmethod
    def desk_scale(cls, **kw) -> "TrainConfig":
        return cls(iterations=20_000, **kw)


def train(
    data_dir: str | Path,
    cfg: TrainConfig = TrainConfig(),
    spec: NetworkSpec = NetworkSpec(),
    checkpoint_path: str | Path | None = None,
) -> dict:
    """Train and return the checkpoint dict (optionally saved to disk).

    The checkpoint carries the network weights, the architecture spec, the
    shared normalization statistics, and the recorded loss curves.  The
    validation entries are exact mean squared errors over the entire
    validation set in original conductivity units.
    """
    torch.manual_seed(cfg.seed)
    train_set, val_set, norm = load_training_tensors(data_dir, cfg.val_fraction)
    if len(train_set) < 4:
        raise ValueError(f"dataset too small: {len(train_set)} training pairs")
    log.info("training on %d pairs, validating on %d", len(train_set), len(val_set))
    model = UNet(spec)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    gen = torch.Generator().manual_seed(cfg.seed)
    x_all = norm.encode(train_set.inputs)
    y_all = norm.encode(train_set.targets)
    train_curve: list[tuple[int, float]] = []
    val_curve: list[tuple[int, float]] = []
    for it in range(1, cfg.iterations + 1):
        idx = torch.randint(0, len(train_set), (cfg.batch_size,), generator=gen)
        x = x_all[idx]
        y = y_all[idx]
        opt.zero_grad()
        out = model(x)
        loss = torch.sum((out - y) ** 2)
        loss.backward()
        opt.step()
        if it == 1 or it % cfg.val_interval == 0 or it == cfg.iterations:
            train_curve.append((it, float(loss.detach()) / cfg.batch_size))
            val_curve.append((it, validation_loss(model, val_set, norm)))
            log.info("iter %d: train %.5g, val %.5g", it, train_curve[-1][1], val_curve[-1][1])
    checkpoint = {
        "state_dict": model.state_dict(),
        "spec": spec.to_dict(),
        "normalization": {"mean": norm.mean, "std": norm.std},
        "config": {
            "iterations": cfg.iterations,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "val_fraction": cfg.val_fraction,
            "seed": cfg.seed,
            "n_train": len(train_set),
            "n_val": len(val_set),
        },
        "train_curve": train_curve,
        "val_curve": val_curve,
    }
    if checkpoint_path is not None:
        Path(checkpoint_path).parent.mkdir(parents=True, exist_ok=True)
        torch.save(checkpoint, checkpoint_path)
    return checkpoint


def validation_loss(model: UNet, val_set, norm: Normalization) -> float:
    """Exact mean of || G(input) - target ||_2^2 over the validation set."""
    model.eval()
    total = 0.0
    with torch.no_grad():
        for i in range(0, len(val_set), 32):
            x = norm.encode(val_set.inputs[i : i + 32])
            y = val_set.targets[i : i + 32]
            out = norm.decode(model(x))
            total += float(torch.sum((out - y) ** 2))
    model.train()
    return total / len(val_set)


def load_checkpoint(path: str | Path) -> tuple[UNet, Normalization, dict]:
    ck = torch.load(path, map_location="cpu", weights_only=False)
    spec = NetworkSpec.from_dict(ck["spec"])
    model = UNet(spec)
    model.load_state_dict(ck["state_dict"])
    model.eval()
    norm = Normalization(**ck["normalization"])
    return model, norm, ck


def apply_network(model: UNet, norm: Normalization, image: np.ndarray) -> np.ndarray:
    """Single forward pass on one image (or a batch if 3-d input).

    For the residual variant the physical output is computed as
    input + std * correction, so a zeroed correction branch is exactly the
    identity map (no normalization round-off).
    """
    arr = np.asarray(image, dtype=np.float32)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[None]
    t = torch.from_numpy(arr).unsqueeze(1)
    x = norm.encode(t)
    model.eval()
    with torch.no_grad():
        if model.spec.residual_skip:
            out = t + norm.std * model.correction(x)
        else:
            out = norm.decode(model(x))
    out = out.squeeze(1).numpy().astype(np.float64)
    return out[0] if squeeze else out
