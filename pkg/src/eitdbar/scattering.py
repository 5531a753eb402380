"""Scattering-data containers and transforms between their flavors.

Three flavors share one container: ``tau`` (Beltrami transform), ``T``
(Schroedinger transform, T = -4 pi i conj(k) tau) and ``texp`` (the
boundary-integral approximation computed from measured DN matrices).
Values are identically zero outside the truncation radius; the node at
k = 0 is always treated as 0 wherever a division by conj(k) occurs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grids import SquareGrid

FLAVORS = ("tau", "T", "texp")
DEFAULT_THRESHOLD = 24.0


@dataclass(frozen=True)
class ScatteringData:
    """Complex samples on a k-grid, supported in |k| <= radius."""

    grid: SquareGrid
    values: np.ndarray = field(repr=False)
    radius: float = 0.0
    flavor: str = "T"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValidationError(f"unknown flavor {self.flavor!r}")
        if not (self.radius > 0):
            raise ValidationError("truncation radius must be positive")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValidationError("scattering values do not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValidationError("scattering data contains non-finite values")
        # enforce the support invariant on construction
        K = self.grid.nodes_complex()
        v = np.where(np.abs(K) <= self.radius, v, 0.0)
        object.__setattr__(self, "values", v)


def tau_to_T(tau: ScatteringData) -> ScatteringData:
    """Map the Beltrami transform to the Schroedinger one: T(k) = -4 pi i conj(k) tau(k)."""
    if tau.flavor != "tau":
        raise ValidationError(f"expected flavor 'tau', got {tau.flavor!r}")
    K = tau.grid.nodes_complex()
    T = -4j * np.pi * np.conj(K) * tau.values
    return ScatteringData(tau.grid, T, radius=tau.radius, flavor="T")


def T_to_tau(T: ScatteringData) -> ScatteringData:
    """Inverse of :func:`tau_to_T` away from k = 0 (the origin maps to 0)."""
    if T.flavor != "T":
        raise ValidationError(f"expected flavor 'T', got {T.flavor!r}")
    K = T.grid.nodes_complex()
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(K != 0, T.values / (-4j * np.pi * np.conj(K)), 0.0)
    return ScatteringData(T.grid, tau, radius=T.radius, flavor="tau")


def truncate_threshold(
    T: ScatteringData, R_n: float, thresh: float = DEFAULT_THRESHOLD
) -> ScatteringData:
    """Zero nodes with |Re T| or |Im T| above thresh, or |k| > R_n; radius becomes R_n."""
    if not (0 < R_n <= T.radius + 1e-12):
        raise ValidationError(f"R_n must satisfy 0 < R_n <= radius={T.radius}")
    v = T.values.copy()
    bad = (np.abs(v.real) > thresh) | (np.abs(v.imag) > thresh)
    v[bad] = 0.0
    return ScatteringData(T.grid, v, radius=float(R_n), flavor=T.flavor)


def resample(T: ScatteringData, new_grid: SquareGrid) -> ScatteringData:
    """Bilinear resample of Re and Im onto a new grid; zero outside the source box."""
    from scipy.interpolate import RegularGridInterpolator

    c = T.grid.coords()
    pts_x, pts_y = new_grid.mesh()
    query = np.stack([pts_y.ravel(), pts_x.ravel()], axis=-1)
    out = np.empty(new_grid.n * new_grid.n, dtype=complex)
    for part, target in (("real", 0), ("imag", 1)):
        interp = RegularGridInterpolator(
            (c, c),
            getattr(T.values, part),
            method="linear",
            bounds_error=False,
            fill_value=0.0,
        )
        if target == 0:
            out = interp(query).astype(complex)
        else:
            out += 1j * interp(query)
    radius = float(min(T.radius, new_grid.half_width))
    return ScatteringData(new_grid, out.reshape(new_grid.n, new_grid.n), radius=radius, flavor=T.flavor)


def texp_from_dn(L_meas, layout, k_grid: SquareGrid, R_meas: float) -> ScatteringData:
    """Boundary-integral scattering data from a DN matrix on electrode data.

    For each node 0 < |k| <= R_meas,

        texp(k) = sum_l w_l exp(i conj(k) conj(z_l))
                  * [ (DN psi_k)(z_l) - i k nu_l exp(i k z_l) ],

    where z_l are electrode centers on the boundary rescaled to maximal
    radial component 1, w_l the electrode arclengths on that boundary,
    nu_l the outward unit normals, and psi_k the samples of exp(ikz)
    mean-subtracted and projected onto the span of the current-pattern
    basis before the DN matrix is applied.
    """
    if R_meas <= 0:
        raise ValidationError("R_meas must be positive")
    if getattr(L_meas, "scaling_state", None) != "unit-domain-unit-sigma":
        raise ValidationError("DN matrix must be scaled to the unit-radius, unit-sigma problem")
    basis = L_meas.basis
    if basis is None:
        raise ValidationError("DN matrix carries no current-pattern basis")
    B = np.asarray(basis.patterns, dtype=float)
    if np.linalg.matrix_rank(B) < B.shape[1]:
        raise ValidationError("current-pattern basis is rank deficient")
    r0 = layout.max_radius
    z = layout.electrode_centers_complex() / r0
    w = layout.arclengths / r0
    nu = layout.normals_complex()

    K = k_grid.nodes_complex()
    active = (np.abs(K) <= R_meas) & (K != 0)
    kk = K[active]
    # psi rows: samples of exp(ikz) per active k
    psi = np.exp(1j * np.outer(kk, z))
    psi_t = psi - psi.mean(axis=1, keepdims=True)
    coeff = psi_t @ B  # projection onto the pattern span (B has orthonormal columns)
    dn_applied = coeff @ L_meas.entries.T @ B.T  # density samples at electrodes
    lambda1 = 1j * kk[:, None] * nu[None, :] * psi
    integrand = np.exp(1j * np.outer(np.conj(kk), np.conj(z))) * (dn_applied - lambda1)
    t_active = integrand @ w
    t = np.zeros_like(K, dtype=complex)
    t[active] = t_active
    return ScatteringData(k_grid, t, radius=float(R_meas), flavor="texp")
