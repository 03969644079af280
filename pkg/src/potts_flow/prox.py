"""Pointwise projections and resolvents shared by all solvers."""
import numpy as np


def project_ball(q, alpha):
    """Project each pixel's 2-vector onto the Euclidean ball of radius ``alpha``.

    ``q`` has shape ``(..., 2, H, W)``. ``alpha == 0`` maps everything to zero.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    q = np.asarray(q, dtype=np.float64)
    if alpha == 0:
        return np.zeros_like(q)
    mag = np.sqrt(q[..., 0, :, :] ** 2 + q[..., 1, :, :] ** 2)
    scale = np.maximum(1.0, mag / alpha)
    return q / scale[..., None, :, :]


def project_cap(p, cap):
    """Pointwise ``min(p, cap)``; shapes must agree exactly."""
    p = np.asarray(p, dtype=np.float64)
    cap = np.asarray(cap, dtype=np.float64)
    if p.shape != cap.shape:
        raise ValueError(f"shape mismatch: field {p.shape} vs cap {cap.shape}")
    return np.minimum(p, cap)


def resolvent_source(p_tilde, a2, c):
    """Resolvent of the source term ``-<1, p_s>`` under the weight ``a2 * c``."""
    if a2 <= 0 or c <= 0:
        raise ValueError("a2 and c must be positive")
    return (np.asarray(p_tilde, dtype=np.float64) + 1.0) / (a2 * c)


def project_simplex(v, axis=0):
    """Euclidean projection onto the probability simplex along ``axis``.

    Sort-and-threshold method; exact up to rounding.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[axis] < 2:
        raise ValueError("simplex projection needs at least two components")
    w = np.moveaxis(v, axis, -1)
    # the projection commutes with adding a constant to every component;
    # shifting by the max keeps the threshold free of cancellation error
    w = w - w.max(axis=-1, keepdims=True)
    n = w.shape[-1]
    s = -np.sort(-w, axis=-1)
    css = np.cumsum(s, axis=-1) - 1.0
    ks = np.arange(1, n + 1)
    active = s - css / ks > 0
    # active is a prefix; its length is the number of positive entries
    k = np.count_nonzero(active, axis=-1)
    theta = np.take_along_axis(css, (k - 1)[..., None], axis=-1) / k[..., None]
    out = np.maximum(w - theta, 0.0)
    return np.moveaxis(out, -1, axis)
