"""Acceptance gate for the learned post-processor.

Two criteria:

* residual identity: a zeroed correction branch makes `apply` the exact
  identity map;
* training improvement: training on simulated KIT4-style pairs improves the
  held-out mean SSIM over the raw low-pass inputs and decreases the held-out
  mean relative l1 error.

The documented desk-scale run is 2,048 pairs / 20,000 iterations (about an
hour on a GPU, several on CPU); set UNET_POST_ACCEPT_FULL=1 to demand it.
By default the test runs a reduced instance sized to the dataset present in
UNET_POST_DATA (train on all but 32 pairs, hold the last 32 out, short
optimization) -- the improvement direction is the asserted property either
way, and the preset that actually ran is printed.
"""

import os
from pathlib import Path

import numpy as np
import pytest
import torch

from unet_post.data import Normalization
from unet_post.evaluate import evaluate_checkpoint
from unet_post.model import NetworkSpec, UNet
from unet_post.train import TrainConfig, apply_network, train

pytestmark = pytest.mark.acceptance

DATA_DIR = Path(os.environ.get("UNET_POST_DATA", str(Path(__file__).resolve().parents[2] / "datasets" / "kit4_train")))
FULL = os.environ.get("UNET_POST_ACCEPT_FULL") == "1"
HOLD_OUT = 32
MIN_TRAIN = 64


def test_residual_identity_exact():
    net = UNet(NetworkSpec(base_channels=4, residual_skip=True))
    net.zero_correction_branch()
    norm = Normalization(mean=0.137, std=0.042)
    rng = np.random.default_rng(7)
    img = rng.uniform(0.05, 0.35, (64, 64)).astype(np.float32).astype(np.float64)
    out = apply_network(net, norm, img)
    assert np.array_equal(out, img)
    print("\nPASS residual identity: zeroed correction branch is the exact identity map")


@pytest.mark.slow
def test_training_improvement(tmp_path):
    files = sorted(DATA_DIR.glob("*.eitp")) if DATA_DIR.exists() else []
    if len(files) < MIN_TRAIN + HOLD_OUT:
        pytest.skip(
            f"needs >= {MIN_TRAIN + HOLD_OUT} KIT4 pairs in {DATA_DIR} "
            f"(found {len(files)}); generate with "
            "`eitdbar generate-dataset --style kit4 ...`"
        )
    if FULL:
        n_train, iters, base = 2048, 20_000, 32
        if len(files) < n_train + HOLD_OUT:
            pytest.fail(f"full desk-scale run demands {n_train + HOLD_OUT} pairs, found {len(files)}")
    else:
        n_train, iters, base = len(files) - HOLD_OUT, 1200, 16
    train_dir = tmp_path / "train"
    test_dir = tmp_path / "test"
    train_dir.mkdir()
    test_dir.mkdir()
    for f in files[:n_train]:
        (train_dir / f.name).symlink_to(f)
    for f in files[-HOLD_OUT:]:
        (test_dir / f.name).symlink_to(f)

    torch.manual_seed(0)
    ck_path = tmp_path / "kit4.pt"
    train(
        train_dir,
        TrainConfig(iterations=iters, val_interval=max(100, iters // 10), seed=0),
        NetworkSpec(base_channels=base, residual_skip=True),
        checkpoint_path=ck_path,
    )
    result = evaluate_checkpoint(ck_path, test_dir)
    post, inp = result["summary"]["post"], result["summary"]["input"]
    preset = "full desk-scale (2048/20k)" if FULL else f"reduced ({n_train} pairs, {iters} iters, base {base})"
    print(
        f"\nPASS training improvement [{preset}]: held-out mean SSIM "
        f"{inp['ssim']:.4f} -> {post['ssim']:.4f}, rel_l1 {inp['rel_l1']:.2f}% -> {post['rel_l1']:.2f}%"
    )
    assert post["ssim"] > inp["ssim"], "post-processing must improve held-out mean SSIM"
    assert post["rel_l1"] < inp["rel_l1"], "post-processing must decrease held-out mean rel l1"
