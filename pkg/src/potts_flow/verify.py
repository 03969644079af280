"""Machine checks of the feasibility conditions and oracle agreement.

Each check returns ``(name, passed, detail)``; :func:`run_all` drives the
``potts-flow verify`` command.
"""
import numpy as np

from . import binary, potts
from .grid import divergence, estimate_operator_norm, gradient, materialize_dense, neg_laplacian
from .oracle import (block_preconditioner_gap, brute_force_mincut, brute_force_potts,
                     binary_energy, potts_energy_of_labels, psd_check)
from .params import SolverParams
from .srbgs import HelmholtzOp, srbgs_splitting_gap

SRBGS_COEFFS = ((0.4, 0.2), (2.0, 1.0), (5 * 0.4 * 5, 0.4 * 5))


def check_adjoint(trials=50, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        h, w = rng.integers(1, 65, size=2)
        u = rng.standard_normal((h, w))
        q = rng.standard_normal((2, h, w))
        lhs = abs(np.vdot(gradient(u), q) + np.vdot(u, divergence(q)))
        worst = max(worst, lhs / (np.linalg.norm(u) * np.linalg.norm(q) + 1))
    return "gradient/divergence adjointness", worst <= 1e-10, f"max scaled gap {worst:.2e}"


def check_norm_bound(sides=(2, 3, 16, 64, 128)):
    vals = {}
    for s in sides:
        vals[s] = estimate_operator_norm(neg_laplacian, (s, s), max_iters=2000, tol=1e-12).value
    ok = all(v <= 8 + 1e-9 for v in vals.values()) and vals[max(sides)] >= 7.5
    detail = ", ".join(f"{s}x{s}: {v:.6f}" for s, v in vals.items())
    return "||div* div|| <= 8", ok, detail


def check_two_label_block():
    ok, lam = psd_check(block_preconditioner_gap(1, 2.0, 2.0))
    return "2I_2 >= A*A", ok, f"min eig {lam:.3e}"


def check_block_preconditioner(ns=(2, 3, 4, 6)):
    lams = {n: psd_check(block_preconditioner_gap(n))[1] for n in ns}
    sharp = {n: psd_check(block_preconditioner_gap(n, 2.0, 2 * n - 0.5))[1] for n in ns}
    ok = all(v >= -1e-10 for v in lams.values()) and any(v < -1e-10 for v in sharp.values())
    detail = ", ".join(f"n={n}: {v:.2e}" for n, v in lams.items())
    return "A_tilde >= A*A (a1=2, a2=2n)", ok, detail


def t0_gap(n, shape):
    """Dense ``T0 - K*K`` over ``n`` label fields on ``shape``."""
    full = (n,) + tuple(shape)

    def kk(u):
        return potts.flow_adjoint(*potts.flow_operator(u))

    def t0(u):
        return neg_laplacian(u) + (n + 1) * u

    return materialize_dense(t0, full) - materialize_dense(kk, full)


def check_t0(ns=(2, 3, 4), sides=(1, 2, 3, 4)):
    worst = np.inf
    for n in ns:
        for h in sides:
            for w in sides:
                worst = min(worst, psd_check(t0_gap(n, (h, w)))[1])
    return "T0 >= K*K", worst >= -1e-10, f"min eig {worst:.3e}"


def check_srbgs(max_side=6):
    worst = np.inf
    for gamma, nu in SRBGS_COEFFS:
        for h in range(1, max_side + 1):
            for w in range(1, max_side + 1):
                gap = srbgs_splitting_gap(HelmholtzOp(gamma, nu, (h, w)))
                worst = min(worst, psd_check(gap)[1])
    return "M_sRBGS >= T", worst >= -1e-10, f"min eig {worst:.3e}"


def _converged_binary(prob, algorithm, eps=1e-8, cap=200000):
    params = SolverParams(eps=eps, max_iters=cap)
    state, _ = binary.run(algorithm, prob, params, self_stop=True)
    return state.u


def check_threshold_oracle(count=5, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        prob = binary.TwoLabelProblem(rng.random((3, 3)), rng.random((3, 3)), (0.0, 0.2, 0.5)[k % 3])
        _, e_opt = brute_force_mincut(prob)
        for algo in ("rpadmm-i", "rpadmm-ii", "rpdrq", "alg1"):
            u = binary.threshold(_converged_binary(prob, algo), 0.5)
            worst = max(worst, abs(float(binary_energy(u, prob)) - e_opt))
    return "thresholding recovers binary optimum", worst <= 1e-6, f"max gap {worst:.2e}"


def check_potts_sandwich(count=3, seed=0):
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(count):
        prob = potts.PottsProblem(rng.random((3, 2, 3)), 0.5)
        _, e_opt = brute_force_potts(prob)
        state, _ = potts.run_potts("rpadmm-ii", prob, SolverParams(eps=1e-10, max_iters=200000),
                                   self_stop=True)
        e_rel = potts.energy_potts(state.u, prob)
        e_round = float(potts_energy_of_labels(potts.argmax_label(state.u), prob))
        ok &= e_rel <= e_opt + 1e-6 and e_round >= e_opt - 1e-6
    return "relaxed <= binary optimum <= rounded", ok, f"{count} instances"


CHECKS = (check_adjoint, check_norm_bound, check_two_label_block, check_block_preconditioner,
          check_t0, check_srbgs, check_threshold_oracle, check_potts_sandwich)


def run_all():
    return [chk() for chk in CHECKS]
