"""Symmetric red-black Gauss-Seidel for ``T = gamma*I - nu*Laplacian``.

Red pixels are those with ``(i + j)`` even. One application performs a
forward sweep (red, then black) followed by a backward sweep (black, then
red), which is the preconditioner ``M = (D - E) D^{-1} (D - E^T)`` of ``T``
in red-black ordering.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import laplacian

MAX_GAP_SIDE = 6


@dataclass(frozen=True)
class HelmholtzOp:
    gamma: float
    nu: float
    shape: tuple

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    def __call__(self, x):
        return self.gamma * x - self.nu * laplacian(x)


@lru_cache(maxsize=32)
def _stencil(shape):
    h, w = shape
    deg = np.full((h, w), 4.0)
    deg[0, :] -= 1
    deg[-1, :] -= 1
    deg[:, 0] -= 1
    deg[:, -1] -= 1
    ii, jj = np.indices((h, w))
    red = (ii + jj) % 2 == 0
    return deg, red, ~red


def _neighbor_sum(x):
    s = np.zeros_like(x)
    s[..., 1:, :] += x[..., :-1, :]
    s[..., :-1, :] += x[..., 1:, :]
    s[..., :, 1:] += x[..., :, :-1]
    s[..., :, :-1] += x[..., :, 1:]
    return s


def srbgs_apply(op: HelmholtzOp, b, x):
    """One symmetric red-black Gauss-Seidel step: ``x + M^{-1}(b - T x)``.

    ``b`` and ``x`` may carry leading axes (one system per label); each
    ``(H, W)`` slice is relaxed independently.
    """
    b = np.asarray(b, dtype=np.float64)
    x = np.array(x, dtype=np.float64)
    if b.shape != x.shape or b.shape[-2:] != op.shape:
        raise ValueError(f"shape mismatch: b {b.shape}, x {x.shape}, op {op.shape}")
    deg, red, black = _stencil(op.shape)
    diag = op.gamma + op.nu * deg
    for mask in (red, black, red):
        # the backward black sweep would repeat the forward one verbatim
        # (red is unchanged in between), so only three half-sweeps run
        relaxed = (b + op.nu * _neighbor_sum(x)) / diag
        x = np.where(mask, relaxed, x)
    return x


def _dense_blocks(op: HelmholtzOp):
    """``T`` split as ``D - E - E^T`` in red-black order, plus the permutation."""
    h, w = op.shape
    n = h * w
    deg, red, _ = _stencil(op.shape)
    order = np.concatenate([np.flatnonzero(red.ravel()), np.flatnonzero(~red.ravel())])
    t = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            a = i * w + j
            t[a, a] = op.gamma + op.nu * deg[i, j]
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ni, nj = i + di, j + dj
                if 0 <= ni < h and 0 <= nj < w:
                    t[a, ni * w + nj] = -op.nu
    t_rb = t[np.ix_(order, order)]
    d = np.diag(np.diag(t_rb))
    e = -np.tril(t_rb, -1)
    return t, d, e, order


def srbgs_splitting_gap(op: HelmholtzOp):
    """Dense ``M - T = E D^{-1} E^T`` in row-major pixel order.

    Its smallest eigenvalue certifies ``M >= T``. Refuses grids larger than
    6x6.
    """
    h, w = op.shape
    if h > MAX_GAP_SIDE or w > MAX_GAP_SIDE:
        raise ValueError(f"grid {h}x{w} too large for the dense splitting gap")
    _, d, e, order = _dense_blocks(op)
    gap_rb = e @ np.diag(1.0 / np.diag(d)) @ e.T
    inv = np.argsort(order)
    return gap_rb[np.ix_(inv, inv)]


def helmholtz_dense(op: HelmholtzOp):
    """Dense ``T`` in row-major pixel order (small grids only)."""
    h, w = op.shape
    if h > MAX_GAP_SIDE or w > MAX_GAP_SIDE:
        raise ValueError(f"grid {h}x{w} too large for a dense operator")
    return _dense_blocks(op)[0]
