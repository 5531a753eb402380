"""Uniform square grids, spectral derivatives and FFT-based periodic convolution.

Conventions used throughout the package:

* A grid with ``n`` points per side and half-width ``h`` covers the square
  ``[-h, h]^2`` with spacing ``dx = 2h/n``.  Two node layouts exist:
  cell-centered nodes ``(-h + (j + 1/2) dx)`` which avoid the origin, and
  origin-inclusive nodes ``(-h + j dx)`` which contain 0 exactly (the layout
  used for spectral-variable grids, where the origin must be addressable).
* Field arrays are indexed ``values[iy, ix]`` (row-major, x fastest).
* The forward FFT carries no scale factor; the inverse carries ``1/n^2``.
  This matches ``numpy.fft`` and is relied on by every kernel below.
* Convolution kernels are sampled on the displacement lattice ``m * dx``
  in FFT ordering (wrap-around negative displacements), so that
  ``ifft2(fft2(kernel) * fft2(f)) * dx^2`` approximates the continuous
  convolution integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SquareGrid:
    """Uniform n-by-n grid on the square [-half_width, half_width]^2."""

    n: int
    half_width: float
    include_origin: bool = False

    def __post_init__(self):
        if not _is_power_of_two(self.n) or self.n < 16:
            raise ValidationError(f"grid size must be a power of two >= 16, got {self.n}")
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise ValidationError(f"half_width must be positive and finite, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    def coords(self) -> np.ndarray:
        """1-D node coordinates along one axis."""
        j = np.arange(self.n, dtype=float)
        if self.include_origin:
            return (j - self.n // 2) * self.spacing
        return (j + 0.5 - self.n / 2.0) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays with X[iy, ix] = coords()[ix], Y[iy, ix] = coords()[iy]."""
        c = self.coords()
        return np.meshgrid(c, c)

    def nodes_complex(self) -> np.ndarray:
        """Nodes as complex numbers x + iy, shaped (n, n)."""
        X, Y = self.mesh()
        return X + 1j * Y

    def cell_area(self) -> float:
        return self.spacing ** 2

    def origin_index(self) -> tuple[int, int]:
        """(iy, ix) of the node at the origin; rejects grids without one."""
        if not self.include_origin:
            raise ValidationError("grid does not contain the origin as a node")
        return (self.n // 2, self.n // 2)

    def displacement_coords(self) -> np.ndarray:
        """Displacements m*dx in FFT ordering (0, dx, ..., -dx), one axis."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return m * self.spacing

    def displacement_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.displacement_coords()
        return np.meshgrid(d, d)

    def freqs(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular frequencies (XI_X, XI_Y) matching fft2 of a field array."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        return np.meshgrid(xi, xi)


@dataclass(frozen=True)
class ComplexField:
    """Complex samples attached to a grid, one value per node."""

    grid: SquareGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValidationError(f"field shape {v.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    def copy_with(self, values: np.ndarray) -> "ComplexField":
        return ComplexField(self.grid, values)


def dbar_symbol(grid: SquareGrid) -> np.ndarray:
    """Fourier multiplier of d-bar = (d/dx + i d/dy)/2 on the grid torus."""
    XI_X, XI_Y = grid.freqs()
    return 0.5j * (XI_X + 1j * XI_Y)


def dbar_derivative(f: ComplexField) -> ComplexField:
    """Spectral d-bar derivative of a field treated as periodic on the torus."""
    fh = np.fft.fft2(f.values)
    out = np.fft.ifft2(dbar_symbol(f.grid) * fh)
    return ComplexField(f.grid, out)


def dbar_inverse(f: ComplexField) -> ComplexField:
    """Inverse of the d-bar multiplier with the zero mode zeroed.

    Recovers a zero-mean field g from f = dbar(g); the constant component is
    not recoverable and is set to zero.
    """
    sym = dbar_symbol(f.grid)
    fh = np.fft.fft2(f.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        gh = np.where(sym != 0, fh / sym, 0.0)
    return ComplexField(f.grid, np.fft.ifft2(gh))


def kernel_spectrum_from_samples(grid: SquareGrid, samples: np.ndarray) -> ComplexField:
    """Spectrum of a convolution kernel given its displacement-lattice samples.

    ``samples[iy, ix]`` is the kernel at displacement
    ``(displacement_coords()[ix], displacement_coords()[iy])``.  The cell-area
    weight is folded in so that ``periodic_convolve`` approximates the
    continuous integral.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (grid.n, grid.n):
        raise ValidationError("kernel sample shape does not match grid")
    return ComplexField(grid, np.fft.fft2(samples) * grid.cell_area())


def cauchy_kernel_spectrum(grid: SquareGrid) -> ComplexField:
    """Spectrum of the Cauchy/Green kernel 1/(pi d) with the singular sample zeroed."""
    DX, DY = grid.displacement_mesh()
    d = DX + 1j * DY
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(d != 0, 1.0 / (np.pi * d), 0.0)
    return kernel_spectrum_from_samples(grid, g)


def periodic_convolve(kernel_spectrum: ComplexField, f: ComplexField) -> ComplexField:
    """Circular convolution via FFT: ifft2(kernel_spectrum * fft2(f)).

    ``kernel_spectrum`` must come from :func:`kernel_spectrum_from_samples`
    (or be an identity-like multiplier); it already carries the cell-area
    scaling, so the result approximates ``(kernel * f)(x) = int kernel(x-y) f(y) dy``.
    """
    if kernel_spectrum.grid != f.grid:
        raise ValidationError("kernel and field grids do not match")
    out = np.fft.ifft2(kernel_spectrum.values * np.fft.fft2(f.values))
    return ComplexField(f.grid, out)


def cauchy_solve_multiplier(grid: SquareGrid) -> np.ndarray:
    """Fourier multiplier of the periodic Cauchy transform P = dbar^{-1}.

    P inverts d-bar on zero-mean fields; the zero mode maps to 0.
    """
    sym = dbar_symbol(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(sym != 0, 1.0 / sym, 0.0)
    return mult


def beurling_multiplier(grid: SquareGrid) -> np.ndarray:
    """Fourier multiplier of the Beurling transform S = d o P (maps dbar g -> d g)."""
    XI_X, XI_Y = grid.freqs()
    xic = XI_X + 1j * XI_Y
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(xic != 0, np.conj(xic) / xic, 0.0)
    return mult
