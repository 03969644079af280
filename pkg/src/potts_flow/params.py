"""Solver parameters and their admissibility checks."""
import math
from dataclasses import dataclass, replace
from typing import Optional

ALGORITHMS = ("padmm-ty", "rpadmm-i", "rpadmm-ii", "rpdrq", "alg1")

#: Upper limit for the multiplier relaxation ``r`` of rpADMM-I.
GOLDEN = (math.sqrt(5.0) + 1.0) / 2.0


@dataclass(frozen=True)
class SolverParams:
    """Step sizes, preconditioner weights and stopping controls.

    ``sigma``/``tau`` left as None resolve to the per-algorithm defaults in
    :meth:`step_sizes`.
    """
    c: float = 0.3
    a: float = 8.0
    a_tilde: float = 2.0
    rho: float = 1.9
    r: float = 1.618
    sigma: Optional[float] = None
    tau: Optional[float] = None
    eps: float = 1e-4
    max_iters: int = 10000

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.a >= 8:
            raise ValueError(f"a must be >= 8 (div*div <= 8I), got {self.a}")
        if not self.a_tilde >= 2:
            raise ValueError(f"a_tilde must be >= 2, got {self.a_tilde}")
        if not 0 < self.rho < 2:
            raise ValueError(f"rho must lie in (0, 2), got {self.rho}")
        if not 0 < self.r < GOLDEN:
            raise ValueError(f"r must lie in (0, {GOLDEN:.6f}), got {self.r}")
        for name in ("sigma", "tau"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")

    def with_(self, **kw):
        return replace(self, **kw)

    def step_sizes(self, algorithm, n_labels=None):
        """Resolved ``(sigma, tau)`` for rpdrq or alg1.

        ``n_labels`` None means the two-label model. Raises ValueError when
        alg1 would violate ``sigma*tau*L^2 <= 1`` (``L^2 = 10`` for two labels,
        ``9 + n`` otherwise).
        """
        if algorithm == "rpdrq":
            if n_labels is None:
                return (0.2 if self.sigma is None else self.sigma,
                        1.0 if self.tau is None else self.tau)
            return (5.0 if self.sigma is None else self.sigma,
                    0.4 if self.tau is None else self.tau)
        if algorithm == "alg1":
            l2 = 10.0 if n_labels is None else 9.0 + n_labels
            sigma = 0.4 if self.sigma is None else self.sigma
            tau = 1.0 / (l2 * sigma) if self.tau is None else self.tau
            # small slack so that tau = 1/(L^2 sigma) itself passes
            if sigma * tau * l2 > 1.0 + 1e-12:
                raise ValueError(f"alg1 needs sigma*tau <= 1/{l2:g}, got {sigma * tau:g}")
            return sigma, tau
        raise ValueError(f"{algorithm} has no primal-dual step sizes")


@dataclass(frozen=True)
class BlockPreconditioner:
    """Diagonal weights for the multi-label ADMM variants.

    ``a`` weights the flow block, ``a1`` the label fields ``p_i`` and ``a2``
    the source field ``p_s``. Feasibility requires a >= 8, a1 >= 2, a2 >= 2n.
    """
    a: float = 8.0
    a1: float = 2.0
    a2: Optional[float] = None

    def resolve(self, n):
        a2 = 2.0 * n if self.a2 is None else self.a2
        if not self.a >= 8:
            raise ValueError(f"a must be >= 8, got {self.a}")
        if not self.a1 >= 2:
            raise ValueError(f"a1 must be >= 2, got {self.a1}")
        if not a2 >= 2 * n:
            raise ValueError(f"a2 must be >= 2n = {2 * n}, got {a2}")
        return BlockPreconditioner(self.a, self.a1, a2)


def check_algorithm(name):
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return name
