"""Data terms and synthetic benchmark images."""
import numpy as np


def build_two_label_costs(f, mu_fg=1.0, mu_bg=0.0):
    """``C_s = |f - mu_bg|``, ``C_t = |f - mu_fg|``.

    Foreground (``u = 1``) pays ``C_t``, so it is cheap where ``f`` is near
    ``mu_fg``.
    """
    for name, mu in (("mu_fg", mu_fg), ("mu_bg", mu_bg)):
        if not 0 <= mu <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {mu}")
    f = np.asarray(f, dtype=np.float64)
    return np.abs(f - mu_bg), np.abs(f - mu_fg)


def build_potts_costs(f, means):
    """``rho(l_i, x) = |f(x) - means[i]|`` stacked along axis 0."""
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 1 or means.size < 2:
        raise ValueError("need at least two label means")
    f = np.asarray(f, dtype=np.float64)
    return np.abs(f[None, :, :] - means[:, None, None])


DISK_INSIDE, DISK_OUTSIDE = 0.6, 0.4
QUADRANT_MEANS = (0.1, 0.35, 0.65, 0.9)


def disk_image(size=64, noise=0.1, seed=0, inside=DISK_INSIDE, outside=DISK_OUTSIDE):
    """Disk of radius ``size/3`` plus Gaussian noise, clipped to [0, 1].

    The default contrast (0.6 vs 0.4) keeps the data term comparable to the
    TV term at alpha = 0.5, so the instance is not solved by saturation alone.
    """
    ii, jj = np.indices((size, size))
    c = (size - 1) / 2.0
    f = np.where(((ii - c) ** 2 + (jj - c) ** 2) <= (size / 3.0) ** 2, inside, outside)
    rng = np.random.default_rng(seed)
    return np.clip(f + noise * rng.standard_normal(f.shape), 0.0, 1.0)


def quadrant_image(size=64, means=QUADRANT_MEANS, noise=0.1, seed=0):
    """Four quadrants of the given means, a disk of the first mean in the middle, plus noise."""
    if len(means) != 4:
        raise ValueError("quadrant_image needs exactly four means")
    h = size // 2
    f = np.empty((size, size))
    f[:h, :h], f[:h, h:], f[h:, :h], f[h:, h:] = means
    ii, jj = np.indices((size, size))
    c = (size - 1) / 2.0
    f[((ii - c) ** 2 + (jj - c) ** 2) <= (size / 6.0) ** 2] = means[0]
    rng = np.random.default_rng(seed)
    return np.clip(f + noise * rng.standard_normal(f.shape), 0.0, 1.0)


def disk_problem(size=64, alpha=0.5, noise=0.1, seed=0):
    """The fixed synthetic two-label benchmark instance."""
    from .binary import TwoLabelProblem
    f = disk_image(size, noise, seed)
    return TwoLabelProblem(*build_two_label_costs(f, DISK_INSIDE, DISK_OUTSIDE), alpha)


def quadrant_problem(size=64, alpha=0.5, noise=0.1, seed=0, means=QUADRANT_MEANS):
    """The fixed synthetic four-label benchmark instance."""
    from .potts import PottsProblem
    f = quadrant_image(size, means, noise, seed)
    return PottsProblem(build_potts_costs(f, means), alpha)
