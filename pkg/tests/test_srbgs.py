import numpy as np
import pytest

from potts_flow.grid import materialize_dense
from potts_flow.oracle import psd_check
from potts_flow.srbgs import HelmholtzOp, helmholtz_dense, srbgs_apply, srbgs_splitting_gap


def test_single_pixel_is_exact():
    op = HelmholtzOp(0.4, 0.2, (1, 1))
    assert srbgs_apply(op, np.zeros((1, 1)), np.zeros((1, 1)))[0, 0] == 0.0
    assert srbgs_apply(op, np.array([[0.2]]), np.zeros((1, 1)))[0, 0] == pytest.approx(0.5, rel=1e-15)


def test_invalid_operators():
    with pytest.raises(ValueError):
        HelmholtzOp(0.0, 1.0, (3, 3))
    with pytest.raises(ValueError):
        HelmholtzOp(1.0, -1.0, (3, 3))
    with pytest.raises(ValueError):
        srbgs_apply(HelmholtzOp(1.0, 1.0, (3, 3)), np.zeros((3, 3)), np.zeros((3, 4)))


def test_fixed_point(rng):
    op = HelmholtzOp(2.0, 1.0, (7, 5))
    x = rng.standard_normal((7, 5))
    np.testing.assert_allclose(srbgs_apply(op, op(x), x), x, atol=1e-14, rtol=0)


def test_converges_as_solver(rng):
    op = HelmholtzOp(0.4, 0.2, (16, 12))
    b = rng.standard_normal((16, 12))
    x = np.zeros_like(b)
    for _ in range(500):
        x = srbgs_apply(op, b, x)
    assert np.linalg.norm(op(x) - b) < 1e-10


def test_leading_axes(rng):
    op = HelmholtzOp(1.0, 0.5, (4, 6))
    b = rng.standard_normal((3, 4, 6))
    x = rng.standard_normal((3, 4, 6))
    out = srbgs_apply(op, b, x)
    for i in range(3):
        np.testing.assert_array_equal(out[i], srbgs_apply(op, b[i], x[i]))


def test_matches_dense_operator(rng):
    op = HelmholtzOp(2.0, 1.0, (3, 4))
    x = rng.standard_normal((3, 4))
    np.testing.assert_allclose(helmholtz_dense(op) @ x.ravel(), op(x).ravel(), atol=1e-13)


def test_gap_single_pixel_is_zero():
    assert np.array_equal(srbgs_splitting_gap(HelmholtzOp(0.4, 0.2, (1, 1))), np.zeros((1, 1)))


def test_gap_3x3_is_psd_and_symmetric():
    gap = srbgs_splitting_gap(HelmholtzOp(1.0, 1.0, (3, 3)))
    np.testing.assert_allclose(gap, gap.T, atol=1e-14, rtol=0)
    assert psd_check(gap)[1] >= -1e-10


def _sweep_matrix(op):
    """Dense ``M^{-1}`` recovered column by column from the sweep with ``x = 0``."""
    return materialize_dense(lambda b: srbgs_apply(op, b, np.zeros_like(b)), op.shape)


@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 5), (4, 4)])
def test_gap_matches_inverse_of_sweep(shape):
    op = HelmholtzOp(2.0, 1.0, shape)
    m = np.linalg.inv(_sweep_matrix(op))
    np.testing.assert_allclose(srbgs_splitting_gap(op), m - helmholtz_dense(op), atol=1e-12)


def test_implicit_preconditioner_is_symmetric(rng):
    op = HelmholtzOp(0.4, 0.2, (4, 3))
    minv = _sweep_matrix(op)
    u, v = rng.standard_normal((2, 12))
    assert np.dot(minv @ u, v) == pytest.approx(np.dot(u, minv @ v), rel=1e-12)


def test_gap_size_guard():
    with pytest.raises(ValueError):
        srbgs_splitting_gap(HelmholtzOp(1.0, 1.0, (7, 6)))
