"""Reader/writer for the EITP training-pair container.

Implemented against the published byte layout so this package has no code
dependency on the simulator:

  bytes 0-3    magic "EITP"
  bytes 4-5    u16 version (1), little-endian
  byte  6      u8 endian flag (0 = little; others rejected)
  byte  7      u8 style (0 = ACT4, 1 = KIT4)
  bytes 8-15   u32 ny, u32 nx
  then         truth, recon, imag(m0) arrays, f64 little-endian row-major
  then         u64 pair seed, f64 truncation radius, f64 sigma_b
  trailer      u32 CRC32 of all preceding bytes
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"EITP"
VERSION = 1
STYLES = {0: "act4", 1: "kit4"}


class EitpError(ValueError):
    pass


@dataclass(frozen=True)
class PairRecord:
    truth: np.ndarray
    recon: np.ndarray
    m0_imag: np.ndarray
    seed: int
    radius: float
    sigma_b: float
    style: str


def read_pair(path: str | Path) -> PairRecord:
    raw = Path(path).read_bytes()
    if len(raw) < 44:
        raise EitpError(f"{path}: truncated file")
    payload, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise EitpError(f"{path}: checksum mismatch")
    magic, version, endian, style, ny, nx = struct.unpack("<4sHBBII", payload[:16])
    if magic != MAGIC:
        raise EitpError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise EitpError(f"{path}: unsupported version {version}")
    if endian != 0:
        raise EitpError(f"{path}: foreign byte order")
    if style not in STYLES:
        raise EitpError(f"{path}: unknown style code {style}")
    n_arr = ny * nx * 8
    if len(payload) != 16 + 3 * n_arr + 24:
        raise EitpError(f"{path}: bad payload size for {ny}x{nx}")
    arrays = [
        np.frombuffer(payload, "<f8", ny * nx, 16 + i * n_arr).reshape(ny, nx).copy()
        for i in range(3)
    ]
    seed, radius, sigma_b = struct.unpack("<Qdd", payload[16 + 3 * n_arr :])
    return PairRecord(arrays[0], arrays[1], arrays[2], int(seed), float(radius),
                      float(sigma_b), STYLES[style])


def write_pair(record: PairRecord, path: str | Path) -> None:
    ny, nx = record.truth.shape
    style_code = {v: k for k, v in STYLES.items()}[record.style]
    payload = struct.pack("<4sHBBII", MAGIC, VERSION, 0, style_code, ny, nx)
    for arr in (record.truth, record.recon, record.m0_imag):
        payload += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    payload += struct.pack("<Qdd", record.seed & 0xFFFFFFFFFFFFFFFF, record.radius, record.sigma_b)
    Path(path).write_bytes(payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def load_directory(path: str | Path, skip_invalid: bool = True) -> list[PairRecord]:
    """All valid pairs in a dataset directory, sorted by filename."""
    out = []
    files = sorted(Path(path).glob("*.eitp"))
    for f in files:
        try:
            out.append(read_pair(f))
        except EitpError:
            if not skip_invalid:
                raise
            import logging

            logging.getLogger(__name__).warning("skipping invalid pair file %s", f)
    return out
