"""CGO solutions of the Beltrami equation and the scattering transform tau(k).

For a conductivity with sigma = 1 near the boundary, the coefficient
mu = (1 - sigma)/(1 + sigma) is compactly supported and the two families of
complex geometric optics solutions f = exp(ikz) M(z, k) satisfy

    dbar_z f = +/- mu conj(d_z f),        M -> 1 as |z| -> inf.

Writing M = 1 + P phi with P the Cauchy transform (dbar^{-1}) and
phi = dbar_z M reduces the problem to a single real-linear equation for the
compactly supported density phi:

    phi + i conj(k) beta conj(P phi) - beta conj(S phi) = -i conj(k) beta,

with beta = (+/-) mu exp(-i(kz + conj(kz))) and S the Beurling transform.
P and S are Fourier multipliers on a periodic box strictly larger than
supp(mu), and the equation is solved by GMRES on the real embedding.

The scattering transform is the total integral of the density difference:

    conj(tau(k)) = (1/2pi) int dbar_z [M_plus - M_minus] dz
                 = (1/2pi) sum (phi_plus - phi_minus) * cell_area,

computed from phi directly because the plane identity dbar M = phi is exact,
whereas re-differentiating the periodized M spectrally would drop the
constant Fourier mode of phi.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError
from .grids import (
    ComplexField,
    SquareGrid,
    beurling_multiplier,
    cauchy_solve_multiplier,
)
from .solver import DEFAULT_MAX_ITER, DEFAULT_RESTART, DEFAULT_TOL, gmres_real
from .scattering import ScatteringData

log = logging.getLogger(__name__)

SUPPORT_RADIUS = 0.95


@dataclass(frozen=True)
class BeltramiCoefficient:
    """Real coefficient mu(z) on a grid, |mu| < 1, vanishing outside the support disc."""

    grid: SquareGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValidationError("mu shape does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValidationError("mu contains non-finite values")
        if np.max(np.abs(v)) >= 1.0:
            raise ValidationError("ellipticity violated: |mu| must be < 1")
        object.__setattr__(self, "values", v)

    @property
    def kappa(self) -> float:
        """Ellipticity bound: max |mu|."""
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class CgoSolverConfig:
    box_half_width: float = 2.1
    box_n: int = 128
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    restart: int = DEFAULT_RESTART


@dataclass(frozen=True)
class CgoSolution:
    """One CGO solution M(., k) for a fixed frequency and sign."""

    k: complex
    sign: int
    M: ComplexField
    dbar_density: ComplexField  # dbar_z M on the plane (supported in supp(mu))
    residual: float
    boundary_band_mean: complex  # mean of M over the outermost node band


def beltrami_coefficient(sigma) -> BeltramiCoefficient:
    """mu = (1 - sigma)/(1 + sigma), nodewise, for a boundary-scaled conductivity."""
    if not getattr(sigma, "scaled", True):
        raise ValidationError("conductivity must be scaled to boundary value 1 first")
    vals = np.asarray(sigma.values, dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValidationError("conductivity must be positive and finite")
    mu = (1.0 - vals) / (1.0 + vals)
    return BeltramiCoefficient(sigma.grid, mu)


class _CgoWorkspace:
    """Precomputed box-grid quantities shared by per-k solves of one mu."""

    def __init__(self, mu: BeltramiCoefficient, cfg: CgoSolverConfig):
        self.cfg = cfg
        if mu.grid.half_width >= cfg.box_half_width:
            self.grid = mu.grid
            self.mu = mu.values
        else:
            self.grid = SquareGrid(cfg.box_n, cfg.box_half_width)
            self.mu = _resample_real(mu.values, mu.grid, self.grid)
        Z = self.grid.nodes_complex()
        self.Z = Z
        radii = np.abs(Z)
        self.support = self.mu != 0.0
        if not np.any(self.support):
            self.support_idx = None
        else:
            if radii[self.support].max() > SUPPORT_RADIUS + 2 * self.grid.spacing:
                raise ValidationError("mu must vanish outside the support disc")
            self.support_idx = np.flatnonzero(self.support.ravel())
        self.p_mult = cauchy_solve_multiplier(self.grid)
        self.s_mult = beurling_multiplier(self.grid)
        self.band = radii >= self.grid.half_width - 4 * self.grid.spacing

    def solve(self, k: complex, sign: int) -> CgoSolution:
        cfg = self.cfg
        n = self.grid.n
        if self.support_idx is None or self.support_idx.size == 0:
            ones = ComplexField(self.grid, np.ones((n, n), dtype=complex))
            zeros = ComplexField(self.grid, np.zeros((n, n), dtype=complex))
            return CgoSolution(k, sign, ones, zeros, 0.0, 1.0 + 0.0j)
        # beta = sign * mu * e(z, -k); e(z, k) = exp(i(kz + conj(kz)))
        phase = np.exp(-2j * (k * self.Z).real)
        beta = sign * self.mu * phase
        ikbar_beta = 1j * np.conj(k) * beta
        idx = self.support_idx
        beta_s = beta.ravel()[idx]
        ikb_s = ikbar_beta.ravel()[idx]
        rhs = -ikb_s

        def matvec(phi_s: np.ndarray) -> np.ndarray:
            full = np.zeros(n * n, dtype=complex)
            full[idx] = phi_s
            ph = np.fft.fft2(full.reshape(n, n))
            p_val = np.fft.ifft2(self.p_mult * ph).ravel()[idx]
            s_val = np.fft.ifft2(self.s_mult * ph).ravel()[idx]
            return phi_s + ikb_s * np.conj(p_val) - beta_s * np.conj(s_val)

        phi_s, info = gmres_real(matvec, rhs, tol=cfg.tol, restart=cfg.restart, max_iter=cfg.max_iter)
        if not info.converged:
            raise ConvergenceError(
                f"CGO solve failed at k={k:+.3f}, sign={sign:+d} "
                f"(residual {info.residual:.2e})",
                residual=info.residual,
            )
        phi = np.zeros(n * n, dtype=complex)
        phi[idx] = phi_s
        phi = phi.reshape(n, n)
        omega = np.fft.ifft2(self.p_mult * np.fft.fft2(phi))
        M = 1.0 + omega
        band_mean = complex(M[self.band].mean())
        return CgoSolution(
            k,
            sign,
            ComplexField(self.grid, M),
            ComplexField(self.grid, phi),
            info.residual,
            band_mean,
        )


def _resample_real(values: np.ndarray, src: SquareGrid, dst: SquareGrid) -> np.ndarray:
    """Bilinear resample of a real field between grids, zero outside the source."""
    from scipy.interpolate import RegularGridInterpolator

    c = src.coords()
    interp = RegularGridInterpolator(
        (c, c), np.asarray(values, dtype=float), method="linear", bounds_error=False, fill_value=0.0
    )
    X, Y = dst.mesh()
    pts = np.stack([Y.ravel(), X.ravel()], axis=-1)
    return interp(pts).reshape(dst.n, dst.n)


def solve_cgo(
    mu: BeltramiCoefficient,
    k: complex,
    sign: int,
    cfg: CgoSolverConfig = CgoSolverConfig(),
) -> CgoSolution:
    """Solve for M_{sign*mu}(., k) on a periodic box containing supp(mu)."""
    if sign not in (+1, -1):
        raise ValidationError("sign must be +1 or -1")
    if not np.isfinite(k):
        raise ValidationError("k must be finite")
    return _CgoWorkspace(mu, cfg).solve(complex(k), sign)


def beltrami_scattering(
    mu: BeltramiCoefficient,
    k_grid: SquareGrid,
    cfg: CgoSolverConfig = CgoSolverConfig(),
    radius: float | None = None,
) -> ScatteringData:
    """Scattering transform tau on a k-grid, zero outside |k| <= radius.

    Solves both CGO families at every node with |k| <= radius (default: the
    grid half-width).  Any per-node solver failure aborts the whole transform
    with the list of offending nodes.
    """
    R = float(radius if radius is not None else k_grid.half_width)
    if R <= 0 or R > k_grid.half_width * np.sqrt(2) + 1e-12:
        raise ValidationError("truncation radius must be positive and on-grid")
    ws = _CgoWorkspace(mu, cfg)
    area = ws.grid.cell_area()
    K = k_grid.nodes_complex()
    tau = np.zeros_like(K, dtype=complex)
    active = np.abs(K) <= R
    n_active = int(active.sum())
    failures: list[str] = []
    done = 0
    for iy, ix in zip(*np.nonzero(active)):
        k = complex(K[iy, ix])
        try:
            sol_p = ws.solve(k, +1)
            sol_m = ws.solve(k, -1)
        except ConvergenceError as exc:
            failures.append(f"k={k:+.4f}: {exc}")
            continue
        diff = sol_p.dbar_density.values - sol_m.dbar_density.values
        tau[iy, ix] = np.conj(diff.sum() * area / (2.0 * np.pi))
        done += 1
        if done % 200 == 0:
            log.info("scattering transform: %d/%d nodes", done, n_active)
    if failures:
        raise ConvergenceError(
            f"{len(failures)}/{n_active} scattering nodes failed: " + "; ".join(failures[:5])
        )
    return ScatteringData(grid=k_grid, values=tau, radius=R, flavor="tau")
