import numpy as np
import pytest
import torch

from unet_post.data import Normalization
from unet_post.model import NetworkSpec, UNet
from unet_post.train import apply_network


def small_spec(residual=True, base=4):
    return NetworkSpec(base_channels=base, residual_skip=residual)


def test_spec_channels_double_per_level():
    spec = NetworkSpec()
    assert spec.channels() == [32, 64, 128, 256, 512]
    assert spec.kernel_size == 5
    assert spec.pool_levels == 4


def test_output_shape_matches_input():
    torch.manual_seed(0)
    for residual in (False, True):
        net = UNet(small_spec(residual))
        x = torch.randn(2, 1, 64, 64)
        assert net(x).shape == x.shape


def test_rejects_wrong_image_size():
    net = UNet(small_spec())
    with pytest.raises(ValueError):
        net(torch.randn(1, 1, 32, 32))


def test_residual_identity_with_zeroed_branch():
    net = UNet(small_spec(residual=True))
    net.zero_correction_branch()
    norm = Normalization(mean=0.137, std=0.031)
    rng = np.random.default_rng(0)
    img = rng.uniform(0.05, 0.35, (64, 64))
    out = apply_network(net, norm, img)
    # exact at float32 resolution of the input
    assert np.array_equal(out, img.astype(np.float32).astype(np.float64))
    zero = np.zeros((64, 64))
    assert np.array_equal(apply_network(net, norm, zero), zero)


def test_nonresidual_zeroed_branch_is_not_identity():
    net = UNet(small_spec(residual=False))
    net.zero_correction_branch()
    norm = Normalization(mean=0.1, std=0.05)
    img = np.full((64, 64), 0.2)
    out = apply_network(net, norm, img)
    assert np.allclose(out, norm.mean)  # decode(0)


def test_batch_of_one_matches_batched_row():
    torch.manual_seed(1)
    net = UNet(small_spec())
    norm = Normalization(mean=0.14, std=0.05)
    rng = np.random.default_rng(1)
    batch = rng.uniform(0.05, 0.3, (3, 64, 64))
    full = apply_network(net, norm, batch)
    single = apply_network(net, norm, batch[1])
    assert np.array_equal(full[1], single)


def test_transpose_upsample_variant_runs():
    net = UNet(NetworkSpec(base_channels=4, upsample="transpose"))
    assert net(torch.randn(1, 1, 64, 64)).shape == (1, 1, 64, 64)
