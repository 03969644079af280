"""Exhaustive oracles for tiny instances and a dense PSD check.

These evaluate the model energies directly and share only the gradient
stencil with the solvers.
"""
import itertools

import numpy as np

from .grid import gradient

MAX_MINCUT_PIXELS = 12
MAX_POTTS_CONFIGS = 10 ** 6
_CHUNK = 1 << 14


def _tv_batch(u):
    g = gradient(u)
    return np.sqrt(g[..., 0, :, :] ** 2 + g[..., 1, :, :] ** 2).sum(axis=(-2, -1))


def binary_energy(u, prob):
    """Min-cut energy of (possibly batched) labelings ``u`` in {0, 1}."""
    u = np.asarray(u, dtype=np.float64)
    data = ((1.0 - u) * prob.C_s + u * prob.C_t).sum(axis=(-2, -1))
    return data + prob.alpha * _tv_batch(u)


def potts_energy_of_labels(labels, prob):
    """Potts energy of integer label fields, shape ``(..., H, W)``."""
    labels = np.asarray(labels)
    onehot = (labels[..., None, :, :] == np.arange(prob.n)[:, None, None]).astype(np.float64)
    data = (onehot * prob.costs).sum(axis=(-3, -2, -1))
    return data + prob.alpha * _tv_batch(onehot).sum(axis=-1)


def brute_force_mincut(prob):
    """Global binary min-cut optimum by enumeration.

    Returns ``(labeling, energy)``; ties resolve to the lexicographically
    smallest labeling in row-major pixel order.
    """
    h, w = prob.shape
    npix = h * w
    if npix > MAX_MINCUT_PIXELS:
        raise ValueError(f"{npix} pixels exceed the enumeration limit {MAX_MINCUT_PIXELS}")
    # itertools.product enumerates in lexicographic order
    cands = np.array(list(itertools.product((0.0, 1.0), repeat=npix))).reshape(-1, h, w)
    e = binary_energy(cands, prob)
    k = int(np.argmin(e))
    return cands[k], float(e[k])


def brute_force_potts(prob):
    """Global binary Potts optimum by enumeration; returns ``(labels, energy)``."""
    h, w = prob.shape
    npix, n = h * w, prob.n
    if n ** npix > MAX_POTTS_CONFIGS:
        raise ValueError(f"{n}^{npix} labelings exceed the enumeration limit {MAX_POTTS_CONFIGS}")
    best_e, best = np.inf, None
    it = itertools.product(range(n), repeat=npix)
    while True:
        chunk = list(itertools.islice(it, _CHUNK))
        if not chunk:
            break
        labels = np.array(chunk).reshape(-1, h, w)
        e = potts_energy_of_labels(labels, prob)
        k = int(np.argmin(e))
        # strict comparison keeps the earliest (lexicographically smallest) minimizer
        if e[k] < best_e:
            best_e, best = float(e[k]), labels[k]
    return best, best_e


def psd_check(m, tol=1e-10):
    """``(min_eig >= -tol, min_eig)`` for a symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
        raise ValueError("matrix is not symmetric within 1e-12")
    lam = float(np.linalg.eigvalsh(m)[0])
    return lam >= -tol, lam


def pixel_coupling(n):
    """Per-pixel ``A*A`` for ``A = [I_n, -1_n]`` acting on ``(p_1..p_n, p_s)``."""
    m = np.zeros((n + 1, n + 1))
    m[:n, :n] = np.eye(n)
    m[:n, n] = -1.0
    m[n, :n] = -1.0
    m[n, n] = n
    return m


def block_preconditioner_gap(n, a1=2.0, a2=None):
    """Per-pixel ``A_tilde - A*A`` with ``A_tilde = diag(a1, ..., a1, a2)``."""
    a2 = 2.0 * n if a2 is None else a2
    return np.diag([a1] * n + [a2]) - pixel_coupling(n)
