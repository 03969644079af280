"""Two-label continuous max-flow / min-cut solvers.

Flow conservation is ``div q + p_t - p_s = 0`` with multiplier ``u``; ``u`` is
the relaxed labeling (1 = foreground, sink side).
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .grid import divergence, gradient, tv_norm
from .params import SolverParams, check_algorithm
from .prox import project_ball, project_cap
from .srbgs import HelmholtzOp, srbgs_apply
from .trace import iterate


@dataclass(frozen=True)
class TwoLabelProblem:
    C_s: np.ndarray
    C_t: np.ndarray
    alpha: float

    def __post_init__(self):
        cs = np.asarray(self.C_s, dtype=np.float64)
        ct = np.asarray(self.C_t, dtype=np.float64)
        if cs.ndim != 2 or cs.shape != ct.shape:
            raise ValueError(f"capacity fields must be equal-shape 2-D arrays, got {cs.shape} and {ct.shape}")
        if not (np.isfinite(cs).all() and np.isfinite(ct).all()):
            raise ValueError("capacities must be finite")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        object.__setattr__(self, "C_s", cs)
        object.__setattr__(self, "C_t", ct)

    @property
    def shape(self):
        return self.C_s.shape


@dataclass(frozen=True)
class TwoLabelState:
    u: np.ndarray
    p_s: np.ndarray
    p_t: np.ndarray
    q: np.ndarray
    # Douglas-Rachford shadow variables, and the alg1 extrapolation u_bar
    q_bar: Optional[np.ndarray] = None
    p_t_bar: Optional[np.ndarray] = None
    p_s_bar: Optional[np.ndarray] = None
    u_bar: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, shape):
        z = np.zeros(shape)
        zq = np.zeros((2,) + tuple(shape))
        return cls(z, z.copy(), z.copy(), zq, zq.copy(), z.copy(), z.copy(), z.copy())


def energy_primal(u, prob: TwoLabelProblem):
    """Relaxed min-cut energy of ``clip(u, 0, 1)``."""
    uc = np.clip(u, 0.0, 1.0)
    data = ((1.0 - uc) * prob.C_s + uc * prob.C_t).sum()
    return float(data + prob.alpha * tv_norm(uc))


def dual_energy(state: TwoLabelState):
    """Total source flow ``sum p_s``."""
    return float(state.p_s.sum())


def residual(state: TwoLabelState):
    """Euclidean norm of the flow-conservation violation."""
    return float(np.linalg.norm(divergence(state.q) + state.p_t - state.p_s))


def _flow_step(state, prob, c, a):
    # q + (1/a) grad(div q + p_t - p_s - u/c), then projection
    g = gradient(divergence(state.q) + state.p_t - state.p_s - state.u / c)
    return project_ball(state.q + g / a, prob.alpha)


def step_padmm_ty(state: TwoLabelState, prob: TwoLabelProblem, params: SolverParams):
    """Multi-block ADMM with one-step projection for ``q`` (no convergence proof)."""
    c = params.c
    q = _flow_step(state, prob, c, params.a)
    dq = divergence(q)
    p_s = project_cap(state.p_t + dq - state.u / c + 1.0 / c, prob.C_s)
    p_t = project_cap(p_s - dq + state.u / c, prob.C_t)
    u = state.u - c * (p_t - p_s + dq)
    return replace(state, u=u, p_s=p_s, p_t=p_t, q=q)


def step_rpadmm_i(state: TwoLabelState, prob: TwoLabelProblem, params: SolverParams):
    """Preconditioned ADMM with Fortin-Glowinski relaxation ``r`` on the multiplier."""
    c, at = params.c, params.a_tilde
    q = _flow_step(state, prob, c, params.a)
    dq = divergence(q)
    p_t, p_s, u = state.p_t, state.p_s, state.u
    new_pt = project_cap(p_t - (p_t - p_s) / at + (-dq + u / c) / at, prob.C_t)
    new_ps = project_cap(p_s - (p_s - p_t) / at + (dq - u / c + 1.0 / c) / at, prob.C_s)
    new_u = u - params.r * c * (new_pt - new_ps + dq)
    return replace(state, u=new_u, p_s=new_ps, p_t=new_pt, q=q)


def step_rpadmm_ii(state: TwoLabelState, prob: TwoLabelProblem, params: SolverParams):
    """Preconditioned ADMM with Eckstein-Bertsekas relaxation ``rho``."""
    c, at, rho = params.c, params.a_tilde, params.rho
    q = _flow_step(state, prob, c, params.a)
    dq = divergence(q)
    p_t, p_s, u = state.p_t, state.p_s, state.u
    new_pt = project_cap(p_t - rho / at * (p_t - p_s) + (-rho * dq + u / c) / at, prob.C_t)
    new_ps = project_cap(p_s - rho / at * (p_s - p_t) + (rho * dq - u / c + 1.0 / c) / at, prob.C_s)
    new_u = u - c * ((new_pt - new_ps) - (1.0 - rho) * (p_t - p_s) + rho * dq)
    return replace(state, u=new_u, p_s=new_ps, p_t=new_pt, q=q)


def step_rpdrq(state: TwoLabelState, prob: TwoLabelProblem, params: SolverParams):
    """Relaxed Douglas-Rachford step, preconditioned by one sRBGS sweep on
    ``sigma*tau*(2I - Laplacian)``."""
    sigma, tau = params.step_sizes("rpdrq")
    rho = params.rho
    qb, ptb, psb = state.q_bar, state.p_t_bar, state.p_s_bar
    op = HelmholtzOp(2.0 * sigma * tau, sigma * tau, prob.shape)
    b = -sigma * (divergence(qb) + ptb - psb)
    u = srbgs_apply(op, b, state.u)
    q = qb - tau * gradient(u)
    p_t = ptb + tau * u
    p_s = psb - tau * u
    new_qb = qb + rho * (project_ball(2 * q - qb, prob.alpha) - q)
    new_ptb = ptb + rho * (project_cap(2 * p_t - ptb, prob.C_t) - p_t)
    new_psb = psb + rho * (project_cap(2 * p_s - psb + tau, prob.C_s) - p_s)
    return replace(state, u=u, p_s=p_s, p_t=p_t, q=q,
                   q_bar=new_qb, p_t_bar=new_ptb, p_s_bar=new_psb)


def step_alg1(state: TwoLabelState, prob: TwoLabelProblem, params: SolverParams):
    """Chambolle-Pock primal-dual step with extrapolated ``u_bar``."""
    sigma, tau = params.step_sizes("alg1")
    ub = state.u_bar
    q = project_ball(state.q - sigma * gradient(ub), prob.alpha)
    p_t = project_cap(state.p_t + sigma * ub, prob.C_t)
    p_s = project_cap(state.p_s - sigma * ub + sigma, prob.C_s)
    u = state.u - tau * (divergence(q) + p_t - p_s)
    return replace(state, u=u, p_s=p_s, p_t=p_t, q=q, u_bar=2 * u - state.u)


STEPS = {
    "padmm-ty": step_padmm_ty,
    "rpadmm-i": step_rpadmm_i,
    "rpadmm-ii": step_rpadmm_ii,
    "rpdrq": step_rpdrq,
    "alg1": step_alg1,
}

#: rPDRQ iterations used for the reference energy when none is supplied.
REFERENCE_ITERS = 30000


def compute_reference_energy(prob: TwoLabelProblem, params: SolverParams, iters: Optional[int] = None):
    """Primal energy after a long rPDRQ run (``max(30000, 10*max_iters)`` by default)."""
    if iters is None:
        iters = max(REFERENCE_ITERS, 10 * params.max_iters)
    params = params.with_(sigma=None, tau=None)
    state = TwoLabelState.zeros(prob.shape)
    for _ in range(iters):
        state = step_rpdrq(state, prob, params)
    return energy_primal(state.u, prob)


def run(algorithm: str, prob: TwoLabelProblem, params: SolverParams,
        reference_energy: Optional[float] = None, self_stop: bool = False,
        state: Optional[TwoLabelState] = None):
    """Iterate ``algorithm`` from zero until the relative energy error is below ``params.eps``.

    Returns ``(state, trace)``; ``trace.converged`` flags whether the
    tolerance was met within ``params.max_iters``.
    """
    step = STEPS[check_algorithm(algorithm)]
    if algorithm in ("rpdrq", "alg1"):
        params.step_sizes(algorithm)
    if reference_energy is None and not self_stop:
        reference_energy = compute_reference_energy(prob, params)
    if state is None:
        state = TwoLabelState.zeros(prob.shape)
    return iterate(algorithm, state, lambda s: step(s, prob, params),
                   lambda s: energy_primal(s.u, prob), residual,
                   params.eps, params.max_iters, reference_energy, self_stop)


def threshold(u, beta=0.5):
    """Binary labeling ``u >= beta`` (ties go to foreground)."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    return (np.asarray(u) >= beta).astype(np.float64)
