import numpy as np
import pytest
import torch

from unet_post.data import load_training_tensors, train_val_split
from unet_post.eitp import load_directory, read_pair
from unet_post.evaluate import evaluate_checkpoint, score
from unet_post.model import NetworkSpec, UNet
from unet_post.train import TrainConfig, apply_network, load_checkpoint, train, validation_loss


def test_train_val_split_disjoint():
    tr, va = train_val_split(100, 0.05)
    assert len(va) == 5
    assert set(tr).isdisjoint(va)
    assert len(tr) + len(va) == 100


def test_normalization_shared_between_input_and_target(synth_dataset):
    train_set, val_set, norm = load_training_tensors(synth_dataset)
    x = train_set.inputs
    assert abs(float(norm.encode(x).mean())) < 1e-5
    assert float(norm.encode(x).std()) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.slow
def test_smoke_train_validation_decreases(synth_dataset, tmp_path):
    ck = train(
        synth_dataset,
        TrainConfig(iterations=200, val_interval=50, seed=0),
        NetworkSpec(base_channels=4, residual_skip=True),
        checkpoint_path=tmp_path / "ck.pt",
    )
    val = ck["val_curve"]
    assert val[0][0] == 1
    assert val[-1][1] < val[0][1]
    # checkpoint round trip
    model, norm, ck2 = load_checkpoint(tmp_path / "ck.pt")
    assert ck2["config"]["iterations"] == 200
    rec = read_pair(sorted(synth_dataset.glob("*.eitp"))[0])
    out = apply_network(model, norm, rec.recon)
    assert out.shape == (64, 64)


@pytest.mark.slow
def test_identity_dataset_control(identity_dataset):
    # with truth == recon the optimum is the identity map; a short run must
    # drive the exact validation loss below 1e-4 of the mean signal power
    ck = train(
        identity_dataset,
        TrainConfig(iterations=400, val_interval=100, learning_rate=1e-3, seed=0),
        NetworkSpec(base_channels=8, residual_skip=False),
    )
    records = load_directory(identity_dataset)
    n_val = max(1, int(np.ceil(len(records) * 0.05)))
    signal_power = np.mean([np.sum(r.truth**2) for r in records[-n_val:]])
    assert ck["val_curve"][-1][1] < 1e-4 * signal_power


def test_validation_loss_is_exact_mse(synth_dataset):
    train_set, val_set, norm = load_training_tensors(synth_dataset)
    model = UNet(NetworkSpec(base_channels=4, residual_skip=True))
    model.zero_correction_branch()
    # zeroed residual network: output == input, so the loss is ||input - truth||^2
    expect = float(np.mean(
        [torch.sum((val_set.inputs[i, 0] - val_set.targets[i, 0]) ** 2) for i in range(len(val_set))]
    ))
    got = validation_loss(model, val_set, norm)
    assert got == pytest.approx(expect, rel=1e-5)


def test_perfect_network_oracle_scores_ssim_one(identity_dataset, tmp_path):
    # oracle: a zeroed residual network on an identity dataset reproduces the
    # truth exactly, so every SSIM is 1 and every error 0
    model = UNet(NetworkSpec(base_channels=4, residual_skip=True))
    model.zero_correction_branch()
    from unet_post.data import Normalization

    ck = {
        "state_dict": model.state_dict(),
        "spec": model.spec.to_dict(),
        "normalization": {"mean": 0.14, "std": 0.05},
        "config": {},
        "train_curve": [],
        "val_curve": [],
    }
    torch.save(ck, tmp_path / "oracle.pt")
    result = evaluate_checkpoint(tmp_path / "oracle.pt", identity_dataset)
    assert result["summary"]["post"]["ssim"] == pytest.approx(1.0, abs=1e-6)
    assert result["summary"]["post"]["rel_l2"] < 1e-4
