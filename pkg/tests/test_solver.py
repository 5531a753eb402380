import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitdbar.errors import ConvergenceError
from eitdbar.grids import ComplexField, SquareGrid
from eitdbar.solver import (
    MatrixRealLinearOperator,
    gmres_real,
    solve_real_linear,
)


class _ScaledIdentity:
    def __init__(self, c):
        self.c = c

    def apply(self, x):
        return x.copy_with(self.c * x.values)


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return ComplexField(grid, rng.normal(size=(grid.n, grid.n)) + 1j * rng.normal(size=(grid.n, grid.n)))


def test_identity_solve():
    g = SquareGrid(16, 1.0)
    rhs = _random_field(g)
    x = solve_real_linear(_ScaledIdentity(1.0), rhs, tol=1e-12)
    assert np.max(np.abs(x.values - rhs.values)) < 1e-10


def test_scaled_identity_solve():
    g = SquareGrid(16, 1.0)
    rhs = _random_field(g, seed=3)
    x = solve_real_linear(_ScaledIdentity(2.0), rhs, tol=1e-12)
    assert np.max(np.abs(x.values - rhs.values / 2.0)) < 1e-10


def test_dense_real_linear_matches_direct_embedding_solve():
    # oracle: direct dense solve of the 16x16 real embedding of an 8x8 system
    rng = np.random.default_rng(42)
    n = 8
    a1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 4 * np.eye(n)
    a2 = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    op = MatrixRealLinearOperator(a1, a2)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    emb = op.real_embedding()
    u = np.linalg.solve(emb, np.concatenate([b.real, b.imag]))
    x_direct = u[:n] + 1j * u[n:]
    # sanity: the embedding really represents the operator
    assert np.max(np.abs(op.apply_vector(x_direct) - b)) < 1e-10
    x_iter, info = gmres_real(op.apply_vector, b, tol=1e-13, restart=20, max_iter=200)
    assert info.converged
    assert np.max(np.abs(x_iter - x_direct)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(
    alpha=st.floats(-2, 2, allow_nan=False),
    beta=st.floats(-2, 2, allow_nan=False),
    seed=st.integers(0, 2**16),
)
def test_real_linear_operator_additivity(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    n = 6
    op = MatrixRealLinearOperator(
        rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)),
        rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)),
    )
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    y = rng.normal(size=n) + 1j * rng.normal(size=n)
    lhs = op.apply_vector(alpha * x + beta * y)
    rhs = alpha * op.apply_vector(x) + beta * op.apply_vector(y)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.max(np.abs(rhs)))


def test_residual_history_monotone_and_final_residual_enforced():
    rng = np.random.default_rng(5)
    n = 40
    a1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 10 * np.eye(n)
    a2 = 0.2 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    op = MatrixRealLinearOperator(a1, a2)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    x, info = gmres_real(op.apply_vector, b, tol=1e-10, restart=8, max_iter=400)
    assert info.converged
    hist = np.array(info.residual_history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert np.linalg.norm(op.apply_vector(x) - b) <= 1e-10 * np.linalg.norm(b) * 1.01


def test_nonconvergence_raises_with_residual():
    rng = np.random.default_rng(1)
    n = 30
    # nearly singular complex-linear map makes 3 iterations hopeless
    a1 = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    op = MatrixRealLinearOperator(a1, np.zeros((n, n)))
    g = SquareGrid(16, 1.0)

    class FieldOp:
        def apply(self, x):
            v = x.values.ravel()[: n]
            out = x.values.copy().ravel()
            out[:n] = op.apply_vector(v)
            return x.copy_with(out.reshape(x.values.shape))

    rhs = _random_field(g, seed=9)
    with pytest.raises(ConvergenceError) as err:
        solve_real_linear(FieldOp(), rhs, tol=1e-14, max_iter=3)
    assert err.value.residual is not None
    assert err.value.residual > 0


def test_zero_rhs_returns_zero():
    b = np.zeros(10, dtype=complex)
    x, info = gmres_real(lambda v: 2 * v, b, tol=1e-8)
    assert info.converged
    assert np.all(x == 0)
