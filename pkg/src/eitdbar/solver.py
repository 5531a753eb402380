"""Krylov solver for real-linear operator equations.

The integral equations solved in this package have the form

    x + A1 x + A2 conj(x) = b,    x complex,

which is linear over the reals but not over the complex numbers.  The solver
stacks real and imaginary parts into a real vector of length 2N and runs
restarted GMRES on that embedding.  Residuals are tracked per inner step and
are nonincreasing by construction (Givens least-squares update).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, ValidationError
from .grids import ComplexField

DEFAULT_TOL = 1e-6
DEFAULT_RESTART = 30
DEFAULT_MAX_ITER = 500


class RealLinearOperator:
    """Callable contract x -> A1 x + A2 conj(x) on complex fields.

    Subclasses implement :meth:`apply`; evaluation must be deterministic and
    side-effect free (additivity over real scalar combinations follows).
    """

    def apply(self, x: ComplexField) -> ComplexField:
        raise NotImplementedError

    def __call__(self, x: ComplexField) -> ComplexField:
        return self.apply(x)


@dataclass(frozen=True)
class MatrixRealLinearOperator(RealLinearOperator):
    """Dense x -> A1 x + A2 conj(x) acting on flattened field values."""

    a1: np.ndarray
    a2: np.ndarray

    def apply_vector(self, x: np.ndarray) -> np.ndarray:
        return self.a1 @ x + self.a2 @ np.conj(x)

    def apply(self, x: ComplexField) -> ComplexField:
        v = x.values.ravel()
        return x.copy_with(self.apply_vector(v).reshape(x.values.shape))

    def real_embedding(self) -> np.ndarray:
        """The equivalent real matrix acting on [Re x; Im x]."""
        r1, i1 = self.a1.real, self.a1.imag
        r2, i2 = self.a2.real, self.a2.imag
        top = np.hstack([r1 + r2, -(i1 - i2)])
        bot = np.hstack([i1 + i2, r1 - r2])
        return np.vstack([top, bot])


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual: float
    residual_history: list


def gmres_real(
    matvec: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    tol: float = DEFAULT_TOL,
    restart: int = DEFAULT_RESTART,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, SolveInfo]:
    """Restarted GMRES on complex vectors through the real embedding.

    ``matvec`` maps complex (N,) -> complex (N,) and must be real-linear.
    Returns x with ||op(x) - b|| <= tol * ||b||, or raises nothing here:
    convergence status is reported in :class:`SolveInfo` and enforcement is
    left to the caller (see :func:`solve_real_linear`).
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    n = b.size

    def mv_real(u: np.ndarray) -> np.ndarray:
        x = u[:n] + 1j * u[n:]
        y = matvec(x)
        return np.concatenate([y.real, y.imag])

    b_real = np.concatenate([b.real, b.imag])
    norm_b = np.linalg.norm(b_real)
    history: list = []
    if norm_b == 0.0:
        return np.zeros(n, dtype=complex), SolveInfo(True, 0, 0.0, history)

    m = 2 * n
    x = np.zeros(m)
    total_iters = 0
    resid = 1.0
    history.append(resid)
    while total_iters < max_iter:
        r = (b_real - mv_real(x)) if total_iters else b_real.copy()
        beta = np.linalg.norm(r)
        resid = beta / norm_b
        if resid <= tol:
            break
        k_max = min(restart, max_iter - total_iters)
        V = np.empty((k_max + 1, m))
        H = np.zeros((k_max + 1, k_max))
        cs = np.zeros(k_max)
        sn = np.zeros(k_max)
        g = np.zeros(k_max + 1)
        g[0] = beta
        V[0] = r / beta
        k_used = 0
        breakdown = False
        for j in range(k_max):
            w = mv_real(V[j])
            # modified Gram-Schmidt
            for i in range(j + 1):
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            h_next = np.linalg.norm(w)
            H[j + 1, j] = h_next
            if h_next > 0:
                V[j + 1] = w / h_next
            else:
                breakdown = True  # Krylov space exhausted: solution is exact
            # apply stored Givens rotations to the new column
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j] = H[j, j] / denom if denom else 1.0
            sn[j] = H[j + 1, j] / denom if denom else 0.0
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k_used = j + 1
            total_iters += 1
            resid = abs(g[j + 1]) / norm_b
            history.append(resid)
            if resid <= tol or breakdown or total_iters >= max_iter:
                break
        # solve the small triangular system and update x
        if k_used > 0:
            y = np.zeros(k_used)
            for i in range(k_used - 1, -1, -1):
                y[i] = (g[i] - H[i, i + 1 : k_used] @ y[i + 1 : k_used]) / H[i, i]
            x = x + y @ V[:k_used]
        if resid <= tol or breakdown:
            break
    x_c = x[:n] + 1j * x[n:]
    return x_c, SolveInfo(resid <= tol, total_iters, float(resid), history)


def solve_real_linear(
    op: RealLinearOperator,
    rhs: ComplexField,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    restart: int = DEFAULT_RESTART,
) -> ComplexField:
    """Solve op(x) = rhs to relative residual tol; raises ConvergenceError on failure."""
    shape = rhs.values.shape
    grid = rhs.grid

    def mv(v: np.ndarray) -> np.ndarray:
        fld = ComplexField(grid, v.reshape(shape))
        return op.apply(fld).values.ravel()

    x, info = gmres_real(mv, rhs.values.ravel(), tol=tol, restart=restart, max_iter=max_iter)
    if not info.converged:
        raise ConvergenceError(
            f"GMRES did not reach tol={tol} in {info.iterations} iterations "
            f"(residual {info.residual:.3e})",
            residual=info.residual,
        )
    return ComplexField(grid, x.reshape(shape))
