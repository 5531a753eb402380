"""Randomized conductivity phantoms and rasterization.

Two families are generated on the unit disc (tank coordinates scaled so the
maximal radial component is 1):

* thorax phantoms built from a template of digitized organ curves whose
  boundary points are perturbed with Gaussian noise, with optional lung
  "injuries" across a random horizontal dividing line;
* ellipse phantoms with one to three non-overlapping inclusions, optionally
  split in two by a random line with both parts at least a quarter of the
  inclusion area.

All draws come from an explicit ``numpy.random.Generator`` so phantoms are
bit-reproducible from a seed.  Conductivities are in S/m until
:func:`scale_to_unit_boundary` divides by the boundary value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from matplotlib.path import Path as MplPath
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import ValidationError
from .grids import SquareGrid

SUPPORT_RADIUS = 0.95


# ---------------------------------------------------------------------------
# images


@dataclass(frozen=True)
class ConductivityImage:
    """Real conductivity samples on a square grid.

    ``sigma_b`` is the constant conductivity near the domain boundary
    (S/m).  ``scaled`` marks images normalized to boundary value 1 and
    extended by 1 outside the physical domain.
    """

    grid: SquareGrid
    values: np.ndarray = field(repr=False)
    sigma_b: float = 1.0
    scaled: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValidationError("image shape does not match grid")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValidationError("conductivity must be positive and finite")
        object.__setattr__(self, "values", v)
        if self.scaled:
            X, Y = self.grid.mesh()
            outside = X * X + Y * Y > SUPPORT_RADIUS**2
            if np.any(v[outside] != 1.0):
                raise ValidationError("scaled image must equal 1 outside the support disc")


def scale_to_unit_boundary(phantom: ConductivityImage) -> ConductivityImage:
    """Divide by the boundary conductivity and extend by 1 outside the unit disc."""
    if phantom.scaled:
        raise ValidationError("phantom is already scaled")
    if not (phantom.sigma_b > 0):
        raise ValidationError("sigma_b must be positive")
    vals = phantom.values / phantom.sigma_b
    X, Y = phantom.grid.mesh()
    vals = np.where(X * X + Y * Y > 1.0, 1.0, vals)
    return ConductivityImage(phantom.grid, vals, sigma_b=phantom.sigma_b, scaled=True)


# ---------------------------------------------------------------------------
# inclusion geometry


@dataclass(frozen=True)
class SplitSpec:
    """Division of an inclusion by the line {p : p . n(angle) = offset}.

    Optional side labels name the sub-regions (used when assigning measured
    conductivities to truth images, e.g. an injured lung part).
    """

    angle: float
    offset: float
    cond_pos: float  # side with p . n >= offset
    cond_neg: float
    pos_label: str | None = None
    neg_label: str | None = None

    def side_masks(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        proj = np.cos(self.angle) * X + np.sin(self.angle) * Y
        pos = proj >= self.offset
        return pos, ~pos


@dataclass(frozen=True)
class InclusionSpec:
    """One inclusion: an ellipse or a closed polygon, with optional split."""

    kind: str  # "ellipse" | "polygon"
    name: str
    conductivity: float
    center: tuple[float, float] | None = None
    semi_axes: tuple[float, float] | None = None
    rotation: float = 0.0
    vertices: np.ndarray | None = None
    split: SplitSpec | None = None

    def __post_init__(self):
        if self.kind not in ("ellipse", "polygon"):
            raise ValidationError(f"unknown inclusion kind {self.kind!r}")
        if not (self.conductivity > 0 and np.isfinite(self.conductivity)):
            raise ValidationError("inclusion conductivity must be positive and finite")
        if self.kind == "ellipse":
            a, b = self.semi_axes
            if not (0 < a < 1 and 0 < b < 1):
                raise ValidationError("ellipse semi-axes must lie in (0, 1)")
            if np.max(np.abs(self.boundary_points(64))) > SUPPORT_RADIUS + 1e-12:
                raise ValidationError("ellipse must lie inside the support disc")
        else:
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValidationError("polygon needs an (N, 2) vertex array, N >= 3")
            object.__setattr__(self, "vertices", v)
            if np.max(np.hypot(v[:, 0], v[:, 1])) > SUPPORT_RADIUS + 1e-12:
                raise ValidationError("polygon must lie inside the support disc")

    def boundary_points(self, m: int = 256) -> np.ndarray:
        """m boundary samples as complex numbers."""
        if self.kind == "ellipse":
            t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
            a, b = self.semi_axes
            u = a * np.cos(t) + 1j * b * np.sin(t)
            return (self.center[0] + 1j * self.center[1]) + u * np.exp(1j * self.rotation)
        v = self.vertices
        return v[:, 0] + 1j * v[:, 1]

    def contains(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.kind == "ellipse":
            a, b = self.semi_axes
            dx, dy = X - self.center[0], Y - self.center[1]
            c, s = np.cos(-self.rotation), np.sin(-self.rotation)
            xr = c * dx - s * dy
            yr = s * dx + c * dy
            return (xr / a) ** 2 + (yr / b) ** 2 <= 1.0
        path = MplPath(self.vertices)
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        return path.contains_points(pts).reshape(X.shape)

    def paint(self, X: np.ndarray, Y: np.ndarray, out: np.ndarray) -> None:
        inside = self.contains(X, Y)
        if self.split is None:
            out[inside] = self.conductivity
        else:
            pos, neg = self.split.side_masks(X, Y)
            out[inside & pos] = self.split.cond_pos
            out[inside & neg] = self.split.cond_neg


def rasterize(specs: list[InclusionSpec], background: float, grid: SquareGrid) -> ConductivityImage:
    """Node value = conductivity of the innermost (last-listed) containing inclusion."""
    if grid.half_width < 1.0:
        raise ValidationError("raster grid must cover [-1, 1]^2")
    X, Y = grid.mesh()
    vals = np.full((grid.n, grid.n), float(background))
    for spec in specs:
        spec.paint(X, Y, vals)
    return ConductivityImage(grid, vals, sigma_b=float(background), scaled=False)


def scaled_conductivity_on(
    grid: SquareGrid, specs: list[InclusionSpec], sigma_b: float
) -> ConductivityImage:
    """Boundary-scaled conductivity on an arbitrary covering grid.

    Inside the unit disc: rasterized value / sigma_b; outside: exactly 1.
    Used to place phantoms on the CGO solver's computational box without
    resampling an already-rasterized image.
    """
    img = rasterize(specs, sigma_b, grid)
    X, Y = grid.mesh()
    vals = np.where(X * X + Y * Y > 1.0, 1.0, img.values / sigma_b)
    return ConductivityImage(grid, vals, sigma_b=sigma_b, scaled=True)


# ---------------------------------------------------------------------------
# thorax template


@dataclass(frozen=True)
class OrganCurve:
    name: str
    probability: float
    conductivity_range: tuple[float, float]
    curve: np.ndarray
    is_lung: bool = False

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValidationError("organ probability must lie in [0, 1]")
        lo, hi = self.conductivity_range
        if not (0 < lo <= hi):
            raise ValidationError("bad conductivity range")
        object.__setattr__(self, "curve", np.asarray(self.curve, dtype=float))


@dataclass(frozen=True)
class OrganTemplate:
    """Named organ curves with inclusion probabilities and conductivity windows."""

    organs: tuple[OrganCurve, ...]
    background_range: tuple[float, float]
    injury_probability: float
    injury_range: tuple[float, float]
    boundary_noise_std: float

    @classmethod
    def from_dict(cls, d: dict) -> "OrganTemplate":
        organs = tuple(
            OrganCurve(
                name=o["name"],
                probability=float(o["probability"]),
                conductivity_range=tuple(o["conductivity_range"]),
                curve=np.asarray(o["curve"], dtype=float),
                is_lung=bool(o.get("lung", False)),
            )
            for o in d["organs"]
        )
        return cls(
            organs=organs,
            background_range=tuple(d["background_range"]),
            injury_probability=float(d["injury"]["probability"]),
            injury_range=tuple(d["injury"]["conductivity_range"]),
            boundary_noise_std=float(d["boundary_noise_std"]),
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "OrganTemplate":
        if path is None:
            text = resources.files("eitdbar.data").joinpath("act4_organs.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(json.loads(text))


def _smooth_closed(points: np.ndarray) -> np.ndarray:
    """3-point moving average along a closed curve."""
    return (np.roll(points, 1, axis=0) + points + np.roll(points, -1, axis=0)) / 3.0


def _valid_polygon(points: np.ndarray) -> bool:
    if np.max(np.hypot(points[:, 0], points[:, 1])) > SUPPORT_RADIUS:
        return False
    return ShapelyPolygon(points).is_valid


def generate_act4_phantom(
    rng: np.random.Generator,
    template: OrganTemplate | None = None,
    grid: SquareGrid | None = None,
    max_noise_retries: int = 20,
) -> tuple[ConductivityImage, list[InclusionSpec]]:
    """Thorax phantom: perturbed organ curves, random conductivities, lung injuries."""
    template = template or OrganTemplate.load()
    grid = grid or SquareGrid(64, 1.0)
    background = rng.uniform(*template.background_range)
    specs: list[InclusionSpec] = []
    for organ in template.organs:
        if rng.uniform() >= organ.probability:
            continue
        conductivity = rng.uniform(*organ.conductivity_range)
        for attempt in range(max_noise_retries):
            noisy = organ.curve + rng.normal(0.0, template.boundary_noise_std, organ.curve.shape)
            noisy = _smooth_closed(noisy)
            if _valid_polygon(noisy):
                break
        else:
            raise ValidationError(
                f"could not draw a valid perturbed boundary for {organ.name!r} "
                f"in {max_noise_retries} tries"
            )
        split = None
        if organ.is_lung and rng.uniform() < template.injury_probability:
            y_min, y_max = noisy[:, 1].min(), noisy[:, 1].max()
            line = rng.uniform(y_min, y_max)
            injure_top = rng.uniform() < 0.5
            injury_value = rng.uniform(*template.injury_range)
            injury_label = f"{organ.name}_injury"
            split = SplitSpec(
                angle=np.pi / 2.0,
                offset=line,
                cond_pos=injury_value if injure_top else conductivity,
                cond_neg=conductivity if injure_top else injury_value,
                pos_label=injury_label if injure_top else organ.name,
                neg_label=organ.name if injure_top else injury_label,
            )
        specs.append(
            InclusionSpec(
                kind="polygon",
                name=organ.name,
                conductivity=conductivity,
                vertices=noisy,
                split=split,
            )
        )
    return rasterize(specs, background, grid), specs


# ---------------------------------------------------------------------------
# ellipse phantoms

# largest |offset| (in unit-circle coordinates) whose smaller segment still
# holds a quarter of the area: solve (acos d - d sqrt(1-d^2))/pi = 1/4
_QUARTER_AREA_OFFSET = 0.40397


def _ellipses_overlap(a: InclusionSpec, b: InclusionSpec, m: int = 256) -> bool:
    pa = a.boundary_points(m)
    pb = b.boundary_points(m)
    if a.contains(pb.real, pb.imag).any() or b.contains(pa.real, pa.imag).any():
        return True
    ca = np.array([a.center[0]]), np.array([a.center[1]])
    cb = np.array([b.center[0]]), np.array([b.center[1]])
    return bool(a.contains(*cb)[0] or b.contains(*ca)[0])


def _split_for_ellipse(rng: np.random.Generator, spec: InclusionSpec, background: float) -> SplitSpec:
    """Random dividing line through the ellipse with both parts >= 1/4 of its area."""
    gamma = rng.uniform(0.0, 2.0 * np.pi)
    for _ in range(200):
        d = rng.uniform(-1.0, 1.0)
        if abs(d) <= _QUARTER_AREA_OFFSET:
            break
        gamma = rng.uniform(0.0, 2.0 * np.pi)
    else:
        d = 0.0
    # map the line {u . n = d} from unit-circle coordinates to the plane
    a, b = spec.semi_axes
    n_u = np.array([np.cos(gamma), np.sin(gamma)])
    rot = spec.rotation
    R = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
    m_vec = R @ (n_u / np.array([a, b]))
    norm = np.hypot(*m_vec)
    angle = float(np.arctan2(m_vec[1], m_vec[0]))
    offset = (d + m_vec @ np.asarray(spec.center)) / norm
    if rng.uniform() < 0.5:
        # one part matches the background
        if rng.uniform() < 0.5:
            cond_pos, cond_neg = background, spec.conductivity
        else:
            cond_pos, cond_neg = spec.conductivity, background
    else:
        above = rng.uniform(0.29, 0.34)
        below = rng.uniform(0.05, 0.075)
        if rng.uniform() < 0.5:
            cond_pos, cond_neg = above, below
        else:
            cond_pos, cond_neg = below, above
    return SplitSpec(angle=angle, offset=float(offset), cond_pos=cond_pos, cond_neg=cond_neg)


def generate_kit4_phantom(
    rng: np.random.Generator,
    grid: SquareGrid | None = None,
    max_place_retries: int = 200,
    max_phantom_retries: int = 50,
) -> tuple[ConductivityImage, list[InclusionSpec]]:
    """One to three non-overlapping random ellipses, possibly split in two."""
    grid = grid or SquareGrid(64, 1.0)
    background = rng.uniform(0.13, 0.145)
    n_incl = int(rng.integers(1, 4))
    for _ in range(max_phantom_retries):
        specs: list[InclusionSpec] = []
        failed = False
        for i in range(n_incl):
            placed = None
            for _ in range(max_place_retries):
                a = rng.uniform(0.2, 0.35)
                b = rng.uniform(0.2, 0.35)
                rho = rng.uniform(0.0, 0.6)
                theta = rng.uniform(0.0, 2.0 * np.pi)
                rot = rng.uniform(0.0, 2.0 * np.pi)
                center = (rho * np.cos(theta), rho * np.sin(theta))
                try:
                    candidate = InclusionSpec(
                        kind="ellipse",
                        name=f"ellipse_{i}",
                        conductivity=1.0,  # placeholder until the value draw below
                        center=center,
                        semi_axes=(a, b),
                        rotation=rot,
                    )
                except ValidationError:
                    continue  # not contained in the support disc
                if any(_ellipses_overlap(candidate, s) for s in specs):
                    continue
                placed = candidate
                break
            if placed is None:
                failed = True
                break
            conductive = rng.uniform() < 0.5
            value = rng.uniform(0.29, 0.34) if conductive else rng.uniform(0.05, 0.075)
            spec = InclusionSpec(
                kind="ellipse",
                name=f"ellipse_{i}",
                conductivity=float(value),
                center=placed.center,
                semi_axes=placed.semi_axes,
                rotation=placed.rotation,
            )
            if rng.uniform() < 1.0 / 3.0:
                spec = replace(spec, split=_split_for_ellipse(rng, spec, background))
            specs.append(spec)
        if not failed:
            return rasterize(specs, background, grid), specs
    raise ValidationError(
        f"could not place {n_incl} non-overlapping ellipses in {max_phantom_retries} phantom retries"
    )
