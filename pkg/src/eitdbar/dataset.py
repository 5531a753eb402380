"""Training-pair generation and the bit-exact "EITP" pair container.

One pair = (unscaled truth conductivity, low-pass reconstruction) on matched
64x64 grids over [-1, 1]^2.  The pipeline per pair, fully determined by
(master_seed, index):

  phantom draw -> boundary scaling -> scattering transform tau on the
  simulation k-grid -> T = -4 pi i conj(k) tau -> random truncation radius
  R_n -> bilinear resample to the output k-grid on [-R_n, R_n]^2 ->
  threshold/truncation -> spectral-variable solve -> sigma_db rescaled by
  the boundary conductivity.

EITP file layout (all little-endian):

  bytes 0-3    magic "EITP"
  bytes 4-5    u16 version (1)
  byte  6      u8 endian flag (0 = little; anything else is rejected)
  byte  7      u8 style (0 = ACT4, 1 = KIT4)
  bytes 8-15   u32 ny, u32 nx
  then         truth, recon, imag(m0) arrays as f64 row-major
  then         u64 pair seed, f64 R_n, f64 sigma_b
  trailer      u32 CRC32 of all prior bytes
"""

from __future__ import annotations

import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beltrami import BeltramiCoefficient, CgoSolverConfig, beltrami_scattering
from .dbar import DbarSolveConfig, LowPassReconstruction, reconstruct
from .errors import ConvergenceError, ValidationError
from .grids import SquareGrid
from .phantoms import (
    ConductivityImage,
    OrganTemplate,
    generate_act4_phantom,
    generate_kit4_phantom,
    scaled_conductivity_on,
)
from .scattering import resample, tau_to_T, truncate_threshold

log = logging.getLogger(__name__)

MAGIC = b"EITP"
VERSION = 1
STYLE_CODES = {"act4": 0, "kit4": 1}
STYLE_NAMES = {v: k for k, v in STYLE_CODES.items()}


@dataclass(frozen=True)
class DatasetConfig:
    style: str  # "act4" | "kit4"
    count: int
    master_seed: int = 0
    sim_k_n: int = 32
    sim_k_half_width: float = 5.0
    radius_range: tuple[float, float] = (3.5, 5.0)
    out_k_n: int = 64
    thresh: float = 24.0
    z_n: int = 64
    cgo: CgoSolverConfig = field(default_factory=CgoSolverConfig)
    solver_tol: float = 1e-6
    max_pair_retries: int = 3

    def __post_init__(self):
        if self.style not in STYLE_CODES:
            raise ValidationError(f"unknown style {self.style!r}")
        lo, hi = self.radius_range
        if not (0 < lo <= hi <= self.sim_k_half_width + 1e-12):
            raise ValidationError("radius_range must lie in (0, sim k-grid half-width]")

    @classmethod
    def act4(cls, count: int = 4096, master_seed: int = 0, **kw) -> "DatasetConfig":
        return cls(style="act4", count=count, master_seed=master_seed,
                   sim_k_half_width=5.0, radius_range=(3.5, 5.0), **kw)

    @classmethod
    def kit4(cls, count: int = 15360, master_seed: int = 0, **kw) -> "DatasetConfig":
        return cls(style="kit4", count=count, master_seed=master_seed,
                   sim_k_half_width=5.5, radius_range=(4.0, 5.5), **kw)

    def to_json_dict(self) -> dict:
        return {
            "style": self.style,
            "count": self.count,
            "master_seed": self.master_seed,
            "sim_k_n": self.sim_k_n,
            "sim_k_half_width": self.sim_k_half_width,
            "radius_range": list(self.radius_range),
            "out_k_n": self.out_k_n,
            "thresh": self.thresh,
            "z_n": self.z_n,
            "cgo_box_n": self.cgo.box_n,
            "cgo_box_half_width": self.cgo.box_half_width,
            "solver_tol": self.solver_tol,
        }


@dataclass(frozen=True)
class TrainingPair:
    truth: ConductivityImage  # unscaled (S/m)
    recon: LowPassReconstruction
    seed: int
    radius: float  # R_n actually used
    sigma_b: float
    style: str

    def __post_init__(self):
        if self.truth.grid != self.recon.grid:
            raise ValidationError("truth and reconstruction grids differ")


def pair_seed(master_seed: int, index: int, attempt: int = 0) -> int:
    """Stable u64 stream key for one pair."""
    ss = np.random.SeedSequence((master_seed, index, attempt))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def pair_from_specs(
    specs,
    sigma_b: float,
    cfg: DatasetConfig,
    radius: float,
    seed: int = 0,
) -> TrainingPair:
    """Run the simulation pipeline for explicit inclusion specs (test hook)."""
    z_grid = SquareGrid(cfg.z_n, 1.0)
    truth = _raster_truth(specs, sigma_b, z_grid)
    box_grid = SquareGrid(cfg.cgo.box_n, cfg.cgo.box_half_width)
    sigma_box = scaled_conductivity_on(box_grid, specs, sigma_b)
    mu = BeltramiCoefficient(box_grid, (1.0 - sigma_box.values) / (1.0 + sigma_box.values))
    sim_grid = SquareGrid(cfg.sim_k_n, cfg.sim_k_half_width, include_origin=True)
    tau = beltrami_scattering(mu, sim_grid, cfg.cgo)
    T = tau_to_T(tau)
    out_grid = SquareGrid(cfg.out_k_n, radius, include_origin=True)
    T = truncate_threshold(resample(T, out_grid), radius, cfg.thresh)
    recon = reconstruct(T, sigma_b, DbarSolveConfig(z_grid=z_grid, tol=cfg.solver_tol))
    return TrainingPair(truth=truth, recon=recon, seed=seed, radius=radius,
                        sigma_b=sigma_b, style=cfg.style)


def _raster_truth(specs, sigma_b: float, grid: SquareGrid) -> ConductivityImage:
    from .phantoms import rasterize

    return rasterize(specs, sigma_b, grid)


def generate_pair(index: int, cfg: DatasetConfig, template: OrganTemplate | None = None) -> TrainingPair:
    """Deterministic pair for (cfg.master_seed, index); retries with derived seeds on solver failure."""
    if index >= cfg.count:
        raise ValidationError(f"index {index} out of range for count {cfg.count}")
    last_exc: Exception | None = None
    for attempt in range(cfg.max_pair_retries):
        seed = pair_seed(cfg.master_seed, index, attempt)
        rng = np.random.default_rng(np.random.SeedSequence((cfg.master_seed, index, attempt)))
        try:
            if cfg.style == "act4":
                image, specs = generate_act4_phantom(rng, template=template)
            else:
                image, specs = generate_kit4_phantom(rng)
            radius = float(rng.uniform(*cfg.radius_range))
            return pair_from_specs(specs, image.sigma_b, cfg, radius, seed=seed)
        except ConvergenceError as exc:
            log.warning("pair %d attempt %d failed: %s", index, attempt, exc)
            last_exc = exc
    raise ConvergenceError(
        f"pair {index} failed {cfg.max_pair_retries} attempts: {last_exc}"
    )


# ---------------------------------------------------------------------------
# EITP container


def pair_to_bytes(pair: TrainingPair) -> bytes:
    ny, nx = pair.truth.values.shape
    head = struct.pack(
        "<4sHBBII", MAGIC, VERSION, 0, STYLE_CODES[pair.style], ny, nx
    )
    body = (
        pair.truth.values.astype("<f8").tobytes()
        + pair.recon.sigma_db.astype("<f8").tobytes()
        + pair.recon.m0.imag.astype("<f8").tobytes()
        + struct.pack("<Qdd", pair.seed & 0xFFFFFFFFFFFFFFFF, pair.radius, pair.sigma_b)
    )
    payload = head + body
    return payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def write_pair(pair: TrainingPair, path: str | Path) -> None:
    """Atomic write (temp file + rename) of one EITP container."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(pair_to_bytes(pair))
    os.replace(tmp, path)


def read_pair(path: str | Path) -> TrainingPair:
    raw = Path(path).read_bytes()
    if len(raw) < 16 + 24 + 4:
        raise ValidationError(f"{path}: truncated EITP file")
    payload, crc_bytes = raw[:-4], raw[-4:]
    (crc_stored,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise ValidationError(f"{path}: checksum mismatch")
    magic, version, endian, style_code, ny, nx = struct.unpack("<4sHBBII", payload[:16])
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported version {version}")
    if endian != 0:
        raise ValidationError(f"{path}: foreign byte order flag {endian}")
    if style_code not in STYLE_NAMES:
        raise ValidationError(f"{path}: unknown style code {style_code}")
    n_arr = ny * nx * 8
    expected = 16 + 3 * n_arr + 24
    if len(payload) != expected:
        raise ValidationError(f"{path}: size {len(payload)} does not match dims {ny}x{nx}")
    off = 16
    truth = np.frombuffer(payload, "<f8", ny * nx, off).reshape(ny, nx).copy()
    recon = np.frombuffer(payload, "<f8", ny * nx, off + n_arr).reshape(ny, nx).copy()
    m0_imag = np.frombuffer(payload, "<f8", ny * nx, off + 2 * n_arr).reshape(ny, nx).copy()
    seed, radius, sigma_b = struct.unpack("<Qdd", payload[16 + 3 * n_arr :])
    grid = SquareGrid(ny, 1.0)
    if sigma_b <= 0:
        raise ValidationError(f"{path}: non-positive sigma_b")
    re_m0 = np.sqrt(np.maximum(recon / sigma_b, 0.0))
    rec = LowPassReconstruction(
        grid=grid,
        m0=re_m0 + 1j * m0_imag,
        sigma_db=recon,
        sigma_b=sigma_b,
    )
    truth_img = ConductivityImage(grid, truth, sigma_b=sigma_b, scaled=False)
    return TrainingPair(
        truth=truth_img,
        recon=rec,
        seed=int(seed),
        radius=float(radius),
        sigma_b=float(sigma_b),
        style=STYLE_NAMES[style_code],
    )


def pair_filename(index: int) -> str:
    return f"pair_{index:06d}.eitp"


def generate_dataset(
    cfg: DatasetConfig,
    out_dir: str | Path,
    resume: bool = True,
    template: OrganTemplate | None = None,
) -> Path:
    """Write cfg.count pairs plus a manifest; resumable; >1% failures aborts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failures: list[dict] = []
    seeds: dict[str, int] = {}
    max_failures = max(1, int(0.01 * cfg.count))
    for index in range(cfg.count):
        path = out / pair_filename(index)
        if resume and path.exists():
            try:
                read_pair(path)
                seeds[str(index)] = pair_seed(cfg.master_seed, index)
                continue
            except ValidationError:
                log.warning("rewriting invalid pair file %s", path)
        try:
            pair = generate_pair(index, cfg, template=template)
        except ConvergenceError as exc:
            failures.append({"index": index, "error": str(exc)})
            if len(failures) > max_failures:
                raise ConvergenceError(
                    f"aborting: {len(failures)} failed pairs out of {index + 1} attempted"
                )
            continue
        write_pair(pair, path)
        seeds[str(index)] = pair.seed
        if (index + 1) % 10 == 0:
            log.info("dataset: %d/%d pairs written", index + 1, cfg.count)
    manifest = {
        "config": cfg.to_json_dict(),
        "pair_seeds": seeds,
        "failures": failures,
        "format_version": VERSION,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return out
