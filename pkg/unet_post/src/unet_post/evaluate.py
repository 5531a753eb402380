"""Reconstruction quality metrics, matching the simulator's definitions.

SSIM: mean local index with an 11x11 Gaussian window (sigma 1.5), stability
constants K1 = 0.01, K2 = 0.03, dynamic range = max - min of the truth
image.  Relative errors are percentages 100 ||a - b||_p / ||b||_p.
Report rows are "ssim,rel_l1,rel_l2,mask" like the simulator's evaluate
command prints.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


_WINDOW = _gaussian_window()


def ssim(a: np.ndarray, b: np.ndarray, data_range: float | None = None) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("ssim inputs must have equal shapes")
    if data_range is None:
        data_range = float(b.max() - b.min()) or 1e-12
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    pad = SSIM_WINDOW // 2

    def filt(x):
        return convolve(x, _WINDOW, mode="reflect")

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    s = num / den
    # mean over windows fully inside the image, as the windowed definition intends
    return float(s[pad:-pad, pad:-pad].mean())


def rel_error(a: np.ndarray, b: np.ndarray, p: int) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    return float(100.0 * np.linalg.norm(a - b, ord=p) / np.linalg.norm(b, ord=p))


@dataclass(frozen=True)
class PairScores:
    ssim: float
    rel_l1: float
    rel_l2: float

    def row(self) -> str:
        return f"{self.ssim:.4f},{self.rel_l1:.2f},{self.rel_l2:.2f},full-square"


def score(recon: np.ndarray, truth: np.ndarray) -> PairScores:
    return PairScores(
        ssim=ssim(recon, truth),
        rel_l1=rel_error(recon, truth, 1),
        rel_l2=rel_error(recon, truth, 2),
    )


def evaluate_checkpoint(checkpoint_path: str | Path, data_dir: str | Path) -> dict:
    """Per-pair scores of the post-processed and raw reconstructions."""
    from .eitp import load_directory
    from .train import apply_network, load_checkpoint

    model, norm, _ = load_checkpoint(checkpoint_path)
    records = load_directory(data_dir)
    if not records:
        raise ValueError(f"no pairs in {data_dir}")
    rows = []
    for rec in records:
        post = apply_network(model, norm, rec.recon)
        rows.append({
            "post": score(post, rec.truth),
            "input": score(rec.recon, rec.truth),
        })
    summary = {}
    for key in ("post", "input"):
        summary[key] = {
            "ssim": float(np.mean([r[key].ssim for r in rows])),
            "rel_l1": float(np.mean([r[key].rel_l1 for r in rows])),
            "rel_l2": float(np.mean([r[key].rel_l2 for r in rows])),
        }
    return {"rows": rows, "summary": summary, "count": len(rows)}
