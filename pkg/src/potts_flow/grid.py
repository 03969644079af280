"""Finite-difference calculus on pixel grids.

Scalar fields are ``(..., H, W)`` float64 arrays; vector fields carry an extra
component axis in front of the grid axes, ``(..., 2, H, W)`` with index 0 the
x-component (along columns) and index 1 the y-component (along rows).
"""
from typing import Callable, NamedTuple, Sequence

import numpy as np

#: Largest number of grid pixels :func:`materialize_dense` will expand.
MAX_DENSE_PIXELS = 64


def gradient(u):
    """Forward differences with Neumann boundary (last difference is zero)."""
    u = np.asarray(u, dtype=np.float64)
    g = np.zeros(u.shape[:-2] + (2,) + u.shape[-2:])
    g[..., 0, :, :-1] = u[..., :, 1:] - u[..., :, :-1]
    g[..., 1, :-1, :] = u[..., 1:, :] - u[..., :-1, :]
    return g


def divergence(q):
    """Negative adjoint of :func:`gradient`, so that ``<grad u, q> = -<u, div q>``."""
    q = np.asarray(q, dtype=np.float64)
    qx = q[..., 0, :, :]
    qy = q[..., 1, :, :]
    d = np.zeros(qx.shape)
    # x part: backward difference, q_x(., W-1) never enters
    d[..., :, :-1] += qx[..., :, :-1]
    d[..., :, 1:] -= qx[..., :, :-1]
    d[..., :-1, :] += qy[..., :-1, :]
    d[..., 1:, :] -= qy[..., :-1, :]
    return d


def laplacian(u):
    """Five-point Neumann Laplacian, defined as ``divergence(gradient(u))``."""
    return divergence(gradient(u))


def tv_norm(u):
    """Isotropic total variation: sum of pixelwise gradient magnitudes."""
    g = gradient(u)
    return float(np.sqrt(g[..., 0, :, :] ** 2 + g[..., 1, :, :] ** 2).sum())


def neg_laplacian(u):
    """``-laplacian(u)``, i.e. ``div* div`` acting on scalar fields."""
    return -laplacian(u)


class NormEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def estimate_operator_norm(op: Callable, shape: Sequence[int], max_iters: int = 1000,
                           tol: float = 1e-10, seed: int = 0) -> NormEstimate:
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    The returned value is a Rayleigh quotient, hence never above the true
    largest eigenvalue (up to rounding).

    Parameters
    ----------
    op : callable
        Linear map taking and returning arrays of ``shape``.
    shape : tuple of int
        Shape of the fields ``op`` acts on.
    max_iters : int
        Iteration cap; ``converged`` is False when it is hit.
    tol : float
        Stop when two successive estimates differ by less than this.
    seed : int
        Seed for the starting vector.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(tuple(shape))
    x /= np.linalg.norm(x)
    prev = None
    est = 0.0
    for k in range(1, max_iters + 1):
        y = op(x)
        est = float(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return NormEstimate(0.0, True, k)
        if prev is not None and abs(est - prev) < tol:
            return NormEstimate(est, True, k)
        prev = est
        x = y / ny
    return NormEstimate(est, False, max_iters)


def materialize_dense(op: Callable, shape: Sequence[int]):
    """Dense matrix of ``op`` in the row-major canonical basis of ``shape``.

    The last two entries of ``shape`` are the grid; leading entries (labels,
    vector components) are allowed. Refuses grids above
    :data:`MAX_DENSE_PIXELS` pixels.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2:
        raise ValueError("shape needs at least (height, width)")
    if shape[-1] * shape[-2] > MAX_DENSE_PIXELS:
        raise ValueError(f"grid {shape[-2]}x{shape[-1]} too large to materialize "
                         f"(limit {MAX_DENSE_PIXELS} pixels)")
    n = int(np.prod(shape))
    m = np.empty((n, n))
    e = np.zeros(n)
    for b in range(n):
        e[b] = 1.0
        m[:, b] = np.asarray(op(e.reshape(shape)), dtype=np.float64).ravel()
        e[b] = 0.0
    return m
