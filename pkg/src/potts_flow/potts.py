"""n-label convex relaxed Potts model via continuous max-flow.

Label-indexed fields are stacked along axis 0: ``u``, ``p`` and costs are
``(n, H, W)``, flows ``q`` are ``(n, 2, H, W)``. Flow conservation reads
``div q_i + p_i - p_s = 0`` for every label ``i``.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .grid import divergence, gradient, tv_norm
from .params import BlockPreconditioner, SolverParams, check_algorithm
from .prox import project_ball, project_cap, project_simplex
from .srbgs import HelmholtzOp, srbgs_apply
from .trace import iterate


@dataclass(frozen=True)
class PottsProblem:
    costs: np.ndarray
    alpha: float

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float64)
        if costs.ndim != 3 or costs.shape[0] < 2:
            raise ValueError(f"costs must be (n >= 2, H, W), got {costs.shape}")
        if not np.isfinite(costs).all():
            raise ValueError("costs must be finite")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        object.__setattr__(self, "costs", costs)

    @property
    def n(self):
        return self.costs.shape[0]

    @property
    def shape(self):
        return self.costs.shape[1:]


@dataclass(frozen=True)
class PottsState:
    u: np.ndarray
    p: np.ndarray
    p_s: np.ndarray
    q: np.ndarray
    q_bar: Optional[np.ndarray] = None
    p_bar: Optional[np.ndarray] = None
    p_s_bar: Optional[np.ndarray] = None
    u_bar: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, n, shape):
        shape = tuple(shape)
        un = np.zeros((n,) + shape)
        qn = np.zeros((n, 2) + shape)
        z = np.zeros(shape)
        return cls(un, un.copy(), z, qn, qn.copy(), un.copy(), z.copy(), un.copy())


def energy_potts(u, prob: PottsProblem):
    """Relaxed Potts energy of ``u`` after per-pixel simplex projection."""
    uh = project_simplex(u, axis=0)
    return float((uh * prob.costs).sum() + prob.alpha * tv_norm(uh))


def residual(state: PottsState):
    """Largest per-label norm of ``div q_i + p_i - p_s``."""
    r = divergence(state.q) + state.p - state.p_s
    return float(np.sqrt((r ** 2).sum(axis=(1, 2))).max())


def flow_operator(u):
    """``K u = (-grad u_i, u_i, -sum_i u_i)`` for the primal-dual splittings."""
    return -gradient(u), np.array(u, dtype=np.float64), -u.sum(axis=0)


def flow_adjoint(q, p, p_s):
    """``K* (q, p, p_s) = div q_i + p_i - p_s``."""
    return divergence(q) + p - p_s


def _flow_step(state, prob, c, a):
    g = gradient(divergence(state.q) + state.p - state.p_s - state.u / c)
    return project_ball(state.q + g / a, prob.alpha)


def step_padmm_ty_multi(state: PottsState, prob: PottsProblem, params: SolverParams):
    """Sequential multi-block ADMM (no convergence guarantee)."""
    c, n = params.c, prob.n
    q = _flow_step(state, prob, c, params.a)
    dq = divergence(q)
    p = project_cap(state.p_s - dq + state.u / c, prob.costs)
    p_s = (p + dq - state.u / c).sum(axis=0) / n + 1.0 / (n * c)
    u = state.u - c * (p - p_s + dq)
    return replace(state, u=u, p=p, p_s=p_s, q=q)


def step_rpadmm_i_multi(state: PottsState, prob: PottsProblem, params: SolverParams,
                        pc: BlockPreconditioner = BlockPreconditioner()):
    """Block-preconditioned ADMM with relaxation ``r`` on the multipliers."""
    pc = pc.resolve(prob.n)
    c = params.c
    q = _flow_step(state, prob, c, pc.a)
    dq = divergence(q)
    p, p_s, u = state.p, state.p_s, state.u
    new_p = project_cap(p - (p - p_s - u / c + dq) / pc.a1, prob.costs)
    new_ps = p_s + (dq.sum(axis=0) + (p - p_s - u / c).sum(axis=0) + 1.0 / c) / pc.a2
    new_u = u - params.r * c * (dq + new_p - new_ps)
    return replace(state, u=new_u, p=new_p, p_s=new_ps, q=q)


def step_rpadmm_ii_multi(state: PottsState, prob: PottsProblem, params: SolverParams,
                         pc: BlockPreconditioner = BlockPreconditioner()):
    """Block-preconditioned ADMM with Eckstein-Bertsekas relaxation ``rho``.

    The multiplier update is ``u - c((Ap+) - (1-rho)(Ap) + rho Bq+)``, the
    generic relaxed form. The variant with ``rho`` multiplying ``Ap+`` has
    fixed points that violate flow conservation (``literal_u`` in the
    test transcriptions).
    """
    pc = pc.resolve(prob.n)
    c, rho = params.c, params.rho
    q = _flow_step(state, prob, c, pc.a)
    dq = divergence(q)
    p, p_s, u = state.p, state.p_s, state.u
    new_p = project_cap(p - (rho * (p - p_s) - u / c + rho * dq) / pc.a1, prob.costs)
    new_ps = p_s + ((rho * dq).sum(axis=0) + (rho * (p - p_s) - u / c).sum(axis=0) + 1.0 / c) / pc.a2
    new_u = u - c * (rho * dq + (new_p - new_ps) - (1.0 - rho) * (p - p_s))
    return replace(state, u=new_u, p=new_p, p_s=new_ps, q=q)


def step_rpdrq_multi(state: PottsState, prob: PottsProblem, params: SolverParams):
    """Relaxed Douglas-Rachford with one sRBGS sweep on ``sigma*tau*T0``,
    ``T0 = (n+1)I - Laplacian`` per label."""
    sigma, tau = params.step_sizes("rpdrq", prob.n)
    n, rho, st = prob.n, params.rho, sigma * tau
    qb, pb, psb, u = state.q_bar, state.p_bar, state.p_s_bar, state.u
    # -sigma*tau*(K*K - T0) u_i = sigma*tau*((n-1) u_i - sum_{j != i} u_j)
    b = -sigma * flow_adjoint(qb, pb, psb) + st * (n * u - u.sum(axis=0))
    op = HelmholtzOp((n + 1) * st, st, prob.shape)
    u = srbgs_apply(op, b, u)
    q = qb - tau * gradient(u)
    p = pb + tau * u
    p_s = psb - tau * u.sum(axis=0)
    new_qb = qb + rho * (project_ball(2 * q - qb, prob.alpha) - q)
    new_pb = pb + rho * (project_cap(2 * p - pb, prob.costs) - p)
    new_psb = psb + rho * ((2 * p_s - psb + tau) - p_s)
    return replace(state, u=u, p=p, p_s=p_s, q=q, q_bar=new_qb, p_bar=new_pb, p_s_bar=new_psb)


def step_alg1_multi(state: PottsState, prob: PottsProblem, params: SolverParams):
    """Chambolle-Pock step; requires ``(9+n) sigma tau <= 1``."""
    sigma, tau = params.step_sizes("alg1", prob.n)
    ub = state.u_bar
    q = project_ball(state.q - sigma * gradient(ub), prob.alpha)
    p = project_cap(state.p + sigma * ub, prob.costs)
    p_s = state.p_s - sigma * ub.sum(axis=0) + sigma
    u = state.u - tau * (divergence(q) + p - p_s)
    return replace(state, u=u, p=p, p_s=p_s, q=q, u_bar=2 * u - state.u)


STEPS = {
    "padmm-ty": step_padmm_ty_multi,
    "rpadmm-i": step_rpadmm_i_multi,
    "rpadmm-ii": step_rpadmm_ii_multi,
    "rpdrq": step_rpdrq_multi,
    "alg1": step_alg1_multi,
}

REFERENCE_ITERS = 30000


def compute_reference_energy(prob: PottsProblem, params: SolverParams, iters: Optional[int] = None):
    """Energy after a long rPDRQ run (``max(30000, 10*max_iters)`` by default)."""
    if iters is None:
        iters = max(REFERENCE_ITERS, 10 * params.max_iters)
    params = params.with_(sigma=None, tau=None)
    state = PottsState.zeros(prob.n, prob.shape)
    for _ in range(iters):
        state = step_rpdrq_multi(state, prob, params)
    return energy_potts(state.u, prob)


def run_potts(algorithm: str, prob: PottsProblem, params: SolverParams,
              reference_energy: Optional[float] = None, self_stop: bool = False,
              pc: BlockPreconditioner = BlockPreconditioner(),
              state: Optional[PottsState] = None):
    """Multi-label counterpart of :func:`potts_flow.binary.run`."""
    check_algorithm(algorithm)
    if algorithm in ("rpdrq", "alg1"):
        params.step_sizes(algorithm, prob.n)
    if algorithm in ("rpadmm-i", "rpadmm-ii"):
        pc = pc.resolve(prob.n)
        step = lambda s: STEPS[algorithm](s, prob, params, pc)  # noqa: E731
    else:
        step = lambda s: STEPS[algorithm](s, prob, params)  # noqa: E731
    if reference_energy is None and not self_stop:
        reference_energy = compute_reference_energy(prob, params)
    if state is None:
        state = PottsState.zeros(prob.n, prob.shape)
    return iterate(algorithm, state, step, lambda s: energy_potts(s.u, prob), residual,
                   params.eps, params.max_iters, reference_energy, self_stop)


def argmax_label(u):
    """Per-pixel index of the largest ``u_i`` (lowest index on ties)."""
    return np.argmax(np.asarray(u), axis=0)


def labels_to_indicator(labels, n):
    """One-hot ``(n, H, W)`` stack for an integer label field."""
    labels = np.asarray(labels)
    return (labels[None, :, :] == np.arange(n)[:, None, None]).astype(np.float64)
