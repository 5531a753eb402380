"""Low-pass conductivity reconstruction from scattering data.

For each image point z the spectral-variable equation

    m(z, kappa) = 1 + (1/4 pi^2) int T(k) e(z, -k) / ((kappa - k) conj(k))
                      * conj(m(z, k)) dk_1 dk_2

is solved as a real-linear system: the Cauchy kernel 1/(pi k) is applied by
FFT convolution on a zero-padded lattice (pad factor >= 2.3 makes the
discrete convolution exact, i.e. free of wrap-around), and the unknown is
restricted to the nodes where T is nonzero plus the origin -- the fixed
point determines m elsewhere, so the restriction is exact, not an
approximation.  The conductivity is recovered from the origin value:

    sigma_db(z) = sigma_b * (Re m(z, 0))^2,

with the imaginary part of m(z, 0) kept as a diagnostic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len

from .errors import ConvergenceError, ValidationError
from .grids import SquareGrid
from .scattering import ScatteringData
from .solver import DEFAULT_MAX_ITER, DEFAULT_RESTART, DEFAULT_TOL, gmres_real

log = logging.getLogger(__name__)


def _default_z_grid() -> SquareGrid:
    return SquareGrid(64, 1.0)


@dataclass(frozen=True)
class DbarSolveConfig:
    z_grid: SquareGrid = field(default_factory=_default_z_grid)
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    restart: int = DEFAULT_RESTART
    pad_factor: float = 2.3
    max_failed_fraction: float = 0.01


@dataclass(frozen=True)
class LowPassReconstruction:
    """Per-node m(z,0) and the rescaled conductivity image."""

    grid: SquareGrid
    m0: np.ndarray = field(repr=False)
    sigma_db: np.ndarray = field(repr=False)
    sigma_b: float
    failed_nodes: tuple = ()
    max_imag: float = 0.0
    imag_flagged: bool = False


class _DbarWorkspace:
    """Kernel FFT and support bookkeeping shared by all z for one T."""

    def __init__(self, T: ScatteringData, cfg: DbarSolveConfig):
        if T.flavor not in ("T", "texp"):
            raise ValidationError(f"scattering flavor {T.flavor!r} cannot feed the dbar solve")
        self.cfg = cfg
        grid = T.grid
        if not grid.include_origin:
            raise ValidationError("dbar solve expects a k-grid containing the origin node")
        self.grid = grid
        n = grid.n
        dx = grid.spacing
        K = grid.nodes_complex()
        # T(k)/(4 pi conj(k)) with the origin forced to zero
        with np.errstate(divide="ignore", invalid="ignore"):
            tprime = np.where(K != 0, T.values / (4.0 * np.pi * np.conj(K)), 0.0)
        support = tprime != 0
        oy, ox = grid.origin_index()
        support[oy, ox] = True
        self.iy, self.ix = np.nonzero(support)
        self.k_s = K[self.iy, self.ix]
        self.tprime_s = tprime[self.iy, self.ix]
        self.origin_pos = int(np.flatnonzero((self.iy == oy) & (self.ix == ox))[0])
        # padded lattice: exact (non-circular) discrete convolution
        pad = next_fast_len(int(np.ceil(cfg.pad_factor * n)))
        self.pad = pad
        d = np.fft.fftfreq(pad, d=1.0 / pad) * dx
        DX, DY = np.meshgrid(d, d)
        disp = DX + 1j * DY
        with np.errstate(divide="ignore", invalid="ignore"):
            green = np.where(disp != 0, 1.0 / (np.pi * disp), 0.0)
        self.green_hat = np.fft.fft2(green) * dx * dx
        self._buf = np.zeros((pad, pad), dtype=complex)

    def solve_at(self, z: complex) -> complex:
        cfg = self.cfg
        if self.k_s.size == 1:
            return 1.0 + 0.0j  # T identically zero
        v_s = self.tprime_s * np.exp(-2j * (self.k_s * z).real)
        iy, ix, buf = self.iy, self.ix, self._buf

        def matvec(m_s: np.ndarray) -> np.ndarray:
            buf[iy, ix] = v_s * np.conj(m_s)
            conv = np.fft.ifft2(self.green_hat * np.fft.fft2(buf))
            return m_s - conv[iy, ix]

        rhs = np.ones(self.k_s.size, dtype=complex)
        m_s, info = gmres_real(matvec, rhs, tol=cfg.tol, restart=cfg.restart, max_iter=cfg.max_iter)
        if not info.converged:
            raise ConvergenceError(
                f"dbar solve failed at z={z:+.4f} (residual {info.residual:.2e})",
                residual=info.residual,
            )
        return complex(m_s[self.origin_pos])


def solve_dbar_at(z: complex, T: ScatteringData, cfg: DbarSolveConfig = DbarSolveConfig()) -> complex:
    """m(z, 0) for a single image point."""
    return _DbarWorkspace(T, cfg).solve_at(complex(z))


def reconstruct(
    T: ScatteringData, sigma_b: float, cfg: DbarSolveConfig = DbarSolveConfig()
) -> LowPassReconstruction:
    """Run the spectral solve over every z node and rescale by sigma_b."""
    if not (sigma_b > 0 and np.isfinite(sigma_b)):
        raise ValidationError("sigma_b must be positive and finite")
    ws = _DbarWorkspace(T, cfg)
    zg = cfg.z_grid
    Z = zg.nodes_complex()
    m0 = np.ones_like(Z, dtype=complex)
    failed: list[tuple[int, int]] = []
    total = zg.n * zg.n
    for iy in range(zg.n):
        for ix in range(zg.n):
            try:
                m0[iy, ix] = ws.solve_at(complex(Z[iy, ix]))
            except ConvergenceError:
                failed.append((iy, ix))
        if (iy + 1) % 16 == 0:
            log.info("dbar reconstruction: %d/%d rows", iy + 1, zg.n)
    if len(failed) > cfg.max_failed_fraction * total:
        raise ConvergenceError(
            f"{len(failed)}/{total} image nodes failed the dbar solve"
        )
    re = m0.real
    sigma_db = sigma_b * re * re
    max_imag = float(np.max(np.abs(m0.imag)))
    flagged = bool(max_imag > 0.1 * np.max(np.abs(re)))
    return LowPassReconstruction(
        grid=zg,
        m0=m0,
        sigma_db=sigma_db,
        sigma_b=float(sigma_b),
        failed_nodes=tuple(failed),
        max_imag=max_imag,
        imag_flagged=flagged,
    )
