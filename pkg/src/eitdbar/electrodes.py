"""Electrode-level data handling: layouts, current-pattern bases, ND/DN matrices.

Conventions (fixed here and relied on everywhere downstream):

* A current pattern column holds samples of the applied boundary current
  density at the electrode centers.  Pattern bases store unit-l2, zero-sum
  vectors.
* The ND matrix is built from (currents, voltages) column pairs as

      R(m, n) = sum_l phi_l^m v_l^n / |e_l|,

  with phi^m the m-th current column normalized so that
  sum_l (phi_l^m)^2 / |e_l| = 1 and v^n the matching voltage column
  mean-subtracted and divided by the same normalization factor as its
  current column.  With this bookkeeping the homogeneous unit disc gives
  eigenvalues 1/n in the trigonometric basis.
* ``scale_to_unit`` transplants a measured ND matrix to the unit-radius,
  unit-boundary-conductivity problem via R_unit = (sigma0 / r0) R_raw.

The forward simulator solves the continuum Neumann problem with conservative
second-order finite differences on a polar grid (circular tanks only); it
exists to exercise the measured-data path without hardware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ValidationError
from .phantoms import ConductivityImage

MAX_CONDITION_NUMBER = 1e12


# ---------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class ElectrodeLayout:
    """Parameterized closed boundary with L electrodes along it."""

    kind: str  # "circle" | "polyline"
    widths: np.ndarray  # electrode arclengths (meters)
    radius: float | None = None
    electrode_angles: np.ndarray | None = None  # circle layouts
    boundary_points: np.ndarray | None = None  # polyline layouts, (N, 2) closed
    electrode_positions: np.ndarray | None = None  # polyline: arclength of centers
    name: str = ""

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float)
        if np.any(w <= 0):
            raise ValidationError("electrode widths must be positive")
        object.__setattr__(self, "widths", w)
        if self.kind == "circle":
            if self.radius is None or self.radius <= 0:
                raise ValidationError("circle layout needs a positive radius")
            ang = np.asarray(self.electrode_angles, dtype=float)
            object.__setattr__(self, "electrode_angles", ang)
            if ang.shape != w.shape:
                raise ValidationError("one width per electrode required")
            gaps = np.diff(np.sort(ang % (2 * np.pi)))
            gaps = np.append(gaps, 2 * np.pi + np.sort(ang % (2 * np.pi))[0] - np.sort(ang % (2 * np.pi))[-1])
            if np.any(gaps * self.radius < w.max()):
                raise ValidationError("electrodes overlap along the boundary")
        elif self.kind == "polyline":
            pts = np.asarray(self.boundary_points, dtype=float)
            pos = np.asarray(self.electrode_positions, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 8:
                raise ValidationError("polyline layout needs an (N, 2) boundary, N >= 8")
            # store counter-clockwise
            area2 = np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
            if area2 < 0:
                pts = pts[::-1].copy()
            object.__setattr__(self, "boundary_points", pts)
            object.__setattr__(self, "electrode_positions", pos)
            if pos.shape != w.shape:
                raise ValidationError("one width per electrode required")
            order = np.argsort(pos)
            gaps = np.diff(pos[order])
            if np.any(gaps < (w[order][:-1] + w[order][1:]) / 2):
                raise ValidationError("electrodes overlap along the boundary")
        else:
            raise ValidationError(f"unknown layout kind {self.kind!r}")

    @property
    def L(self) -> int:
        return len(self.widths)

    @property
    def arclengths(self) -> np.ndarray:
        return self.widths

    @property
    def max_radius(self) -> float:
        if self.kind == "circle":
            return float(self.radius)
        p = self.boundary_points
        return float(np.max(np.hypot(p[:, 0], p[:, 1])))

    # -- polyline parameterization helpers

    def _cumlen(self) -> np.ndarray:
        p = self.boundary_points
        seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def _point_at(self, s: np.ndarray) -> np.ndarray:
        cum = self._cumlen()
        total = cum[-1]
        p = np.vstack([self.boundary_points, self.boundary_points[:1]])
        s = np.mod(s, total)
        x = np.interp(s, cum, p[:, 0])
        y = np.interp(s, cum, p[:, 1])
        return np.stack([x, y], axis=-1)

    def electrode_centers_complex(self) -> np.ndarray:
        if self.kind == "circle":
            return self.radius * np.exp(1j * self.electrode_angles)
        pts = self._point_at(self.electrode_positions)
        return pts[:, 0] + 1j * pts[:, 1]

    def normals_complex(self) -> np.ndarray:
        """Outward unit normals at electrode centers, from the parameterization."""
        if self.kind == "circle":
            return np.exp(1j * self.electrode_angles)
        total = self._cumlen()[-1]
        h = total / (4 * len(self.boundary_points))
        fwd = self._point_at(self.electrode_positions + h)
        bwd = self._point_at(self.electrode_positions - h)
        tang = (fwd - bwd) / (2 * h)
        tang = tang / np.linalg.norm(tang, axis=1, keepdims=True)
        normal = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)  # CCW boundary: rotate -90 deg
        centers = self._point_at(self.electrode_positions)
        centroid = self.boundary_points.mean(axis=0)
        flip = np.sum(normal * (centers - centroid), axis=1) < 0
        normal[flip] *= -1.0
        nu = normal[:, 0] + 1j * normal[:, 1]
        if np.max(np.abs(np.abs(nu) - 1)) > 1e-10:
            raise ValidationError("normals failed the unit-length check")
        return nu


def circular_layout(L: int, radius: float, electrode_width: float, start_angle: float = 0.0, name: str = "") -> ElectrodeLayout:
    angles = start_angle + 2 * np.pi * np.arange(L) / L
    return ElectrodeLayout(
        kind="circle",
        widths=np.full(L, float(electrode_width)),
        radius=float(radius),
        electrode_angles=angles,
        name=name or f"circle_L{L}",
    )


def act4_layout() -> ElectrodeLayout:
    """32-electrode circular tank, radius 0.15 m, electrode width 0.025 m."""
    return circular_layout(32, 0.15, 0.025, name="act4_circle")


def kit4_circle_layout() -> ElectrodeLayout:
    """16-electrode circular tank, radius 0.14 m, electrode width 0.025 m."""
    return circular_layout(16, 0.14, 0.025, name="kit4_circle")


def kit4_chest_layout() -> ElectrodeLayout:
    """16-electrode chest-shaped tank (perimeter 1.02 m) from the packaged outline."""
    text = resources.files("eitdbar.data").joinpath("chest_boundary.json").read_text()
    d = json.loads(text)
    return ElectrodeLayout(
        kind="polyline",
        widths=np.full(len(d["electrode_arclengths"]), float(d["electrode_width"])),
        boundary_points=np.asarray(d["boundary_points"], dtype=float),
        electrode_positions=np.asarray(d["electrode_arclengths"], dtype=float),
        name=d.get("name", "chest"),
    )


# ---------------------------------------------------------------------------
# current-pattern bases


def _gram_schmidt(columns: np.ndarray) -> np.ndarray:
    """Orthonormalize columns in order; rejects rank deficiency."""
    q = columns.astype(float).copy()
    for j in range(q.shape[1]):
        for i in range(j):
            q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
        norm = np.linalg.norm(q[:, j])
        if norm < 1e-12:
            raise ValidationError("pattern set is rank deficient")
        q[:, j] /= norm
    return q


@dataclass(frozen=True)
class CurrentPatternBasis:
    """num_LI orthonormal, zero-sum pattern vectors of length L."""

    kind: str  # "trigonometric" | "adjacent"
    patterns: np.ndarray = field(repr=False)
    angles: np.ndarray | None = None  # electrode angles the patterns were sampled at

    def __post_init__(self):
        p = np.asarray(self.patterns, dtype=float)
        if np.max(np.abs(p.sum(axis=0))) > 1e-9:
            raise ValidationError("patterns must sum to zero")
        gram = p.T @ p
        if np.max(np.abs(gram - np.eye(p.shape[1]))) > 1e-9:
            raise ValidationError("patterns must be orthonormal")
        object.__setattr__(self, "patterns", p)

    @property
    def L(self) -> int:
        return self.patterns.shape[0]

    @property
    def num_li(self) -> int:
        return self.patterns.shape[1]

    @classmethod
    def trigonometric(cls, layout: ElectrodeLayout) -> "CurrentPatternBasis":
        """cos(n theta), sin(n theta) for n = 1..L/2 (cos only at n = L/2)."""
        if layout.kind == "circle":
            theta = layout.electrode_angles
        else:
            total = layout._cumlen()[-1]
            theta = 2 * np.pi * layout.electrode_positions / total
        L = layout.L
        cols = []
        for n in range(1, L // 2 + 1):
            cols.append(np.cos(n * theta))
            if n < L // 2:
                cols.append(np.sin(n * theta))
        raw = np.stack(cols, axis=-1)
        raw -= raw.mean(axis=0, keepdims=True)
        return cls(kind="trigonometric", patterns=_gram_schmidt(raw), angles=np.asarray(theta))

    @classmethod
    def adjacent(cls, L: int) -> "CurrentPatternBasis":
        """Skip-0 dipoles (+1, -1) on neighboring electrodes, orthonormalized in order."""
        raw = np.zeros((L, L - 1))
        for m in range(L - 1):
            raw[m, m] = 1.0
            raw[m + 1, m] = -1.0
        return cls(kind="adjacent", patterns=_gram_schmidt(raw))


# ---------------------------------------------------------------------------
# ND / DN matrices


@dataclass(frozen=True)
class NdMatrix:
    entries: np.ndarray = field(repr=False)
    basis: CurrentPatternBasis | None
    scaling_state: str = "raw"  # "raw" | "unit-domain-unit-sigma"
    r0: float | None = None
    sigma0: float | None = None

    def asymmetry(self) -> float:
        a = self.entries
        return float(np.linalg.norm(a - a.T) / np.linalg.norm(a))


@dataclass(frozen=True)
class DnMatrix:
    entries: np.ndarray = field(repr=False)
    basis: CurrentPatternBasis | None
    scaling_state: str = "raw"
    r0: float | None = None
    sigma0: float | None = None
    condition_number: float = 0.0


def build_nd_matrix(
    currents: np.ndarray,
    voltages: np.ndarray,
    layout: ElectrodeLayout,
    basis: CurrentPatternBasis | None = None,
) -> NdMatrix:
    """ND matrix R(m,n) = sum_l phi^m_l v^n_l / |e_l| from current/voltage columns."""
    C = np.asarray(currents, dtype=float)
    V = np.asarray(voltages, dtype=float)
    if C.shape != V.shape or C.shape[0] != layout.L:
        raise ValidationError("currents/voltages must both be (L, num_LI)")
    if np.linalg.matrix_rank(C) < C.shape[1]:
        raise ValidationError("current pattern set is rank deficient")
    w = layout.arclengths
    V = V - V.mean(axis=0, keepdims=True)
    norms = np.sqrt(np.sum(C * C / w[:, None], axis=0))
    phi = C / norms[None, :]
    v = V / norms[None, :]
    R = phi.T @ (v / w[:, None])
    return NdMatrix(entries=R, basis=basis, scaling_state="raw")


def scale_to_unit(R: NdMatrix, r0: float, sigma0: float) -> NdMatrix:
    """Transplant to the unit-max-radius, unit-boundary-conductivity problem."""
    if R.scaling_state != "raw":
        raise ValidationError("ND matrix is already scaled")
    if not (r0 > 0 and sigma0 > 0):
        raise ValidationError("r0 and sigma0 must be positive")
    return replace(
        R,
        entries=(sigma0 / r0) * R.entries,
        scaling_state="unit-domain-unit-sigma",
        r0=float(r0),
        sigma0=float(sigma0),
    )


def fit_sigma0(R_meas: NdMatrix, R_homog: NdMatrix) -> float:
    """Best constant-conductivity fit: least-squares scalar a in R_meas ~ a R_homog, sigma0 = 1/a."""
    if R_meas.scaling_state != "raw" or R_homog.scaling_state != "raw":
        raise ValidationError("fit_sigma0 expects raw (unscaled) matrices")
    if R_meas.entries.shape != R_homog.entries.shape:
        raise ValidationError("matrices must share basis and layout")
    num = float(np.sum(R_meas.entries * R_homog.entries))
    den = float(np.sum(R_homog.entries * R_homog.entries))
    if num <= 0:
        raise ValidationError("non-physical fit: <R_meas, R_homog> must be positive")
    return den / num


def invert_nd(R: NdMatrix) -> DnMatrix:
    cond = float(np.linalg.cond(R.entries))
    if not np.isfinite(cond) or cond > MAX_CONDITION_NUMBER:
        raise ValidationError(f"ND matrix is too ill-conditioned to invert (cond={cond:.2e})")
    return DnMatrix(
        entries=np.linalg.inv(R.entries),
        basis=R.basis,
        scaling_state=R.scaling_state,
        r0=R.r0,
        sigma0=R.sigma0,
        condition_number=cond,
    )


def voltage_to_current_basis(
    applied_voltages: np.ndarray, measured_currents: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize current-applied data from voltage-applied measurements.

    Given columns of applied voltage patterns and the currents they drove,
    re-expresses the dataset in an orthonormalized current basis: the output
    currents are the orthonormalized measured currents, the output voltages
    the matching linear combinations of the applied voltages (linearity of
    the forward map), mean-subtracted.
    """
    V = np.asarray(applied_voltages, dtype=float)
    I = np.asarray(measured_currents, dtype=float)
    if V.shape != I.shape:
        raise ValidationError("voltage and current arrays must have equal shapes")
    if np.linalg.matrix_rank(I) < I.shape[1]:
        raise ValidationError("measured current map is singular (dead channel?)")
    I = I - I.mean(axis=0, keepdims=True)
    basis = _gram_schmidt(I)
    alpha, *_ = np.linalg.lstsq(I, basis, rcond=None)
    synth_v = V @ alpha
    synth_v -= synth_v.mean(axis=0, keepdims=True)
    return basis, synth_v


# ---------------------------------------------------------------------------
# continuum forward solver (circular tanks)


def _trig_interpolant(samples: np.ndarray, sample_angles: np.ndarray, eval_angles: np.ndarray) -> np.ndarray:
    """Band-limited interpolation of samples on equispaced angles."""
    L = len(samples)
    start = sample_angles[0]
    coeff = np.fft.fft(samples) / L
    modes = np.fft.fftfreq(L, d=1.0 / L)
    phase = np.exp(1j * np.outer(eval_angles - start, modes))
    # split the Nyquist mode symmetrically so the result is real
    if L % 2 == 0:
        ny = L // 2
        phase[:, ny] = np.cos(ny * (eval_angles - start))
    return np.real(phase @ coeff)


def _is_equispaced_circle(layout: ElectrodeLayout) -> bool:
    if layout.kind != "circle":
        return False
    d = np.diff(layout.electrode_angles)
    return bool(np.allclose(d, d[0], atol=1e-12))


def _pattern_density(
    layout: ElectrodeLayout,
    basis: CurrentPatternBasis,
    pattern: np.ndarray,
    theta: np.ndarray,
) -> np.ndarray:
    """Boundary current density for one pattern, sampled at the solver angles.

    Trigonometric patterns on an equispaced circular layout are applied as
    their band-limited interpolants (the continuum pattern); everything else
    uses the gap model: the pattern value on each electrode arc, zero in the
    gaps.
    """
    if basis.kind == "trigonometric" and _is_equispaced_circle(layout):
        return _trig_interpolant(pattern, layout.electrode_angles, theta)
    g = np.zeros_like(theta)
    half = layout.widths / (2.0 * layout.radius)
    for ell in range(layout.L):
        d = np.angle(np.exp(1j * (theta - layout.electrode_angles[ell])))
        g[np.abs(d) <= half[ell]] = pattern[ell]
    return g


class DiscForwardSolver:
    """Conservative polar-grid FD solver for div(sigma grad u) = 0 on a disc.

    Neumann data sigma du/dnu = g on r = r0; the potential is fixed by an
    area-mean-zero constraint (Lagrange multiplier).  sigma is sampled from a
    unit-square conductivity image mapped onto the disc of radius r0.
    """

    def __init__(self, sigma: ConductivityImage, r0: float, n_r: int = 128, n_theta: int = 256):
        from scipy.interpolate import RegularGridInterpolator

        self.r0 = float(r0)
        self.n_r, self.n_theta = n_r, n_theta
        self.dr = self.r0 / n_r
        self.dth = 2.0 * np.pi / n_theta
        self.r = (np.arange(n_r) + 0.5) * self.dr
        self.theta = np.arange(n_theta) * self.dth
        c = sigma.grid.coords()
        interp = RegularGridInterpolator(
            (c, c), sigma.values, method="linear", bounds_error=False, fill_value=None
        )

        def sample(r_vals, th_vals):
            R, TH = np.meshgrid(r_vals, th_vals, indexing="ij")
            X = R * np.cos(TH) / self.r0
            Y = R * np.sin(TH) / self.r0
            return interp(np.stack([Y.ravel(), X.ravel()], axis=-1)).reshape(R.shape)

        self.sig = sample(self.r, self.theta)
        self.sig_bdry = sample(np.array([self.r0]), self.theta)[0]
        self._factorized = self._assemble()

    def _assemble(self):
        n_r, n_th = self.n_r, self.n_theta
        dr, dth = self.dr, self.dth
        r = self.r
        sig = self.sig

        def harmonic(a, b):
            return 2.0 * a * b / (a + b)

        idx = lambda i, j: i * n_th + (j % n_th)
        rows, cols, vals = [], [], []

        def add(i, j, i2, j2, v):
            rows.append(idx(i, j))
            cols.append(idx(i2, j2))
            vals.append(v)

        for i in range(n_r):
            r_out = (i + 1) * dr
            for j in range(n_th):
                # radial coupling to i+1 (interior faces only; the outer face
                # carries the known Neumann flux)
                if i < n_r - 1:
                    a = dth * r_out * harmonic(sig[i, j], sig[i + 1, j]) / dr
                    add(i, j, i, j, -a)
                    add(i, j, i + 1, j, a)
                    add(i + 1, j, i + 1, j, -a)
                    add(i + 1, j, i, j, a)
                # angular coupling to j+1 (periodic)
                b = dr * harmonic(sig[i, j], sig[i, (j + 1) % n_th]) / (r[i] * dth)
                add(i, j, i, j, -b)
                add(i, j, i, j + 1, b)
                add(i, j + 1, i, j + 1, -b)
                add(i, j + 1, i, j, b)
        n = n_r * n_th
        K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        area = np.repeat(r * dr * dth, n_th)
        K_aug = sp.bmat([[K, area[:, None]], [area[None, :], None]], format="csc")
        return spla.splu(K_aug)

    def solve(self, g: np.ndarray) -> np.ndarray:
        """Boundary potential trace u(r0, theta) for current density g(theta)."""
        g = g - g.mean()
        rhs = np.zeros(self.n_r * self.n_theta + 1)
        rhs[(self.n_r - 1) * self.n_theta : self.n_r * self.n_theta] = -self.dth * self.r0 * g
        u = self._factorized.solve(rhs)[:-1].reshape(self.n_r, self.n_theta)
        return u[-1] + 0.5 * self.dr * g / self.sig_bdry


def simulate_electrode_data(
    sigma: ConductivityImage,
    layout: ElectrodeLayout,
    basis: CurrentPatternBasis,
    n_r: int = 128,
    n_theta: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuum-model electrode data: (density-sample currents, voltages).

    Voltages are the potential trace at electrode centers, mean-subtracted
    per pattern.  Circular layouts only.
    """
    if layout.kind != "circle":
        raise ValidationError("the forward simulator supports circular layouts only")
    solver = DiscForwardSolver(sigma, layout.radius, n_r=n_r, n_theta=n_theta)
    currents = basis.patterns.copy()
    voltages = np.empty_like(currents)
    for m in range(currents.shape[1]):
        g = _pattern_density(layout, basis, currents[:, m], solver.theta)
        trace = solver.solve(g)
        v = _trig_interpolant(trace, solver.theta, layout.electrode_angles)
        voltages[:, m] = v - v.mean()
    return currents, voltages


# ---------------------------------------------------------------------------
# measurement files


MEASUREMENT_FORMAT_VERSION = 1


def save_measurements(
    path: str | Path,
    layout: ElectrodeLayout,
    basis_kind: str,
    currents: np.ndarray,
    voltages: np.ndarray,
    r0: float,
    sigma0: float | None = None,
    applied: str = "current",
) -> None:
    """Write a structured-text (JSON) measurement container."""
    if applied not in ("current", "voltage"):
        raise ValidationError("applied must be 'current' or 'voltage'")
    d = {
        "format": "eitdbar-measurements",
        "version": MEASUREMENT_FORMAT_VERSION,
        "layout": _layout_to_dict(layout),
        "basis_kind": basis_kind,
        "applied": applied,
        "L": int(np.asarray(currents).shape[0]),
        "num_LI": int(np.asarray(currents).shape[1]),
        "currents": np.asarray(currents).tolist(),
        "voltages": np.asarray(voltages).tolist(),
        "r0": float(r0),
        "sigma0": None if sigma0 is None else float(sigma0),
    }
    Path(path).write_text(json.dumps(d))


def load_measurements(path: str | Path) -> dict:
    d = json.loads(Path(path).read_text())
    if d.get("format") != "eitdbar-measurements" or d.get("version") != MEASUREMENT_FORMAT_VERSION:
        raise ValidationError(f"{path}: not a measurement container of a supported version")
    d["currents"] = np.asarray(d["currents"], dtype=float)
    d["voltages"] = np.asarray(d["voltages"], dtype=float)
    d["layout"] = _layout_from_dict(d["layout"])
    return d


def _layout_to_dict(layout: ElectrodeLayout) -> dict:
    d = {"kind": layout.kind, "widths": layout.widths.tolist(), "name": layout.name}
    if layout.kind == "circle":
        d["radius"] = layout.radius
        d["electrode_angles"] = layout.electrode_angles.tolist()
    else:
        d["boundary_points"] = layout.boundary_points.tolist()
        d["electrode_positions"] = layout.electrode_positions.tolist()
    return d


def _layout_from_dict(d: dict) -> ElectrodeLayout:
    if d["kind"] == "circle":
        return ElectrodeLayout(
            kind="circle",
            widths=np.asarray(d["widths"], dtype=float),
            radius=float(d["radius"]),
            electrode_angles=np.asarray(d["electrode_angles"], dtype=float),
            name=d.get("name", ""),
        )
    return ElectrodeLayout(
        kind="polyline",
        widths=np.asarray(d["widths"], dtype=float),
        boundary_points=np.asarray(d["boundary_points"], dtype=float),
        electrode_positions=np.asarray(d["electrode_positions"], dtype=float),
        name=d.get("name", ""),
    )
