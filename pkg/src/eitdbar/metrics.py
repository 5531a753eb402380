"""Image-quality metrics and truth-image construction.

SSIM uses the standard Gaussian-window parameters (11x11 window, sigma 1.5,
K1 = 0.01, K2 = 0.03); the dynamic range defaults to max - min of the truth
image and is recorded in every report.  Relative errors are percentages
100 ||a - b||_p / ||b||_p over the chosen node mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

from .errors import ValidationError
from .grids import SquareGrid
from .phantoms import ConductivityImage, InclusionSpec, rasterize

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class EvalReport:
    ssim: float
    rel_l1: float  # percent
    rel_l2: float  # percent
    masked: str  # "full-square" | "disc"
    data_range: float

    def to_text(self) -> str:
        return (
            f"ssim: {self.ssim:.4f}\n"
            f"rel_l1_percent: {self.rel_l1:.2f}\n"
            f"rel_l2_percent: {self.rel_l2:.2f}\n"
            f"mask: {self.masked}\n"
            f"data_range: {self.data_range:.6g}\n"
        )

    def to_row(self) -> str:
        return f"{self.ssim:.4f},{self.rel_l1:.2f},{self.rel_l2:.2f},{self.masked}"


def ssim(a: np.ndarray, b: np.ndarray, data_range: float | None = None) -> float:
    """Mean local SSIM with a Gaussian window; b is the truth by convention."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("ssim inputs must have equal shapes")
    if data_range is None:
        data_range = float(b.max() - b.min())
        if data_range == 0:
            data_range = max(abs(float(b.max())), 1e-12)
    return float(
        structural_similarity(
            a,
            b,
            win_size=SSIM_WINDOW,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=SSIM_K1,
            K2=SSIM_K2,
            data_range=data_range,
        )
    )


def rel_error(a: np.ndarray, b: np.ndarray, p: int, mask: np.ndarray | None = None) -> float:
    """100 * ||a - b||_p / ||b||_p over the masked nodes; b is the truth."""
    if p not in (1, 2):
        raise ValidationError("p must be 1 or 2")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("rel_error inputs must have equal shapes")
    if mask is not None:
        a, b = a[mask], b[mask]
    denom = np.linalg.norm(b.ravel(), ord=p)
    if denom == 0:
        raise ValidationError("truth image has zero norm on the mask")
    return float(100.0 * np.linalg.norm((a - b).ravel(), ord=p) / denom)


def disc_mask(grid: SquareGrid, radius: float = 1.0) -> np.ndarray:
    X, Y = grid.mesh()
    return X * X + Y * Y <= radius * radius


def evaluate_images(
    recon: np.ndarray,
    truth: np.ndarray,
    grid: SquareGrid | None = None,
    mask: str = "full-square",
    data_range: float | None = None,
) -> EvalReport:
    """SSIM plus relative l1/l2 errors of a reconstruction against its truth."""
    if mask not in ("full-square", "disc"):
        raise ValidationError("mask must be 'full-square' or 'disc'")
    node_mask = None
    if mask == "disc":
        if grid is None:
            raise ValidationError("disc mask needs the grid")
        node_mask = disc_mask(grid)
    truth = np.asarray(truth, dtype=float)
    if data_range is None:
        data_range = float(truth.max() - truth.min()) or 1e-12
    return EvalReport(
        ssim=ssim(recon, truth, data_range=data_range),
        rel_l1=rel_error(recon, truth, 1, node_mask),
        rel_l2=rel_error(recon, truth, 2, node_mask),
        masked=mask,
        data_range=data_range,
    )


def build_truth_image(
    specs: list[InclusionSpec],
    measured_values: dict[str, float],
    grid: SquareGrid,
    background: float,
) -> ConductivityImage:
    """Truth image with measured conductivities assigned per named region.

    Split regions (e.g. injured lungs) get the measured value over the whole
    sub-region.  Non-finite measured values (perfect conductors) cannot be
    rasterized and are rejected.
    """
    for name, value in measured_values.items():
        if not np.isfinite(value) or value <= 0:
            raise ValidationError(
                f"region {name!r} has a non-rasterizable conductivity {value!r}"
            )

    def lookup(name: str) -> float:
        if name not in measured_values:
            raise ValidationError(f"no measured value for region {name!r}")
        return float(measured_values[name])

    out = []
    for spec in specs:
        v = lookup(spec.name)
        split = spec.split
        if split is not None:
            split = type(split)(
                split.angle,
                split.offset,
                lookup(split.pos_label or spec.name),
                lookup(split.neg_label or spec.name),
                split.pos_label,
                split.neg_label,
            )
        out.append(
            InclusionSpec(
                kind=spec.kind,
                name=spec.name,
                conductivity=v,
                center=spec.center,
                semi_axes=spec.semi_axes,
                rotation=spec.rotation,
                vertices=spec.vertices,
                split=split,
            )
        )
    return rasterize(out, background, grid)
