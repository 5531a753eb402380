"""Learned post-processing of low-pass EIT reconstructions."""

from .eitp import PairRecord, read_pair, write_pair
from .model import NetworkSpec, UNet
from .train import TrainConfig, apply_network, load_checkpoint, train
from .evaluate import evaluate_checkpoint, rel_error, score, ssim

__version__ = "0.1.0"
