from dataclasses import replace

import numpy as np
import pytest

from potts_flow import binary
from potts_flow.binary import TwoLabelProblem, TwoLabelState
from potts_flow.data import disk_problem
from potts_flow.grid import divergence
from potts_flow.oracle import binary_energy, brute_force_mincut
from potts_flow.params import SolverParams

CONVERGENT = ("rpadmm-i", "rpadmm-ii", "rpdrq", "alg1")
ADMM_FAMILY = ("padmm-ty", "rpadmm-i", "rpadmm-ii")


def pixel_problem(cs=0.7, ct=0.3, alpha=0.5):
    return TwoLabelProblem(np.array([[cs]]), np.array([[ct]]), alpha)


def scalar(a):
    return float(np.asarray(a).ravel()[0])


def test_problem_validation():
    with pytest.raises(ValueError):
        TwoLabelProblem(np.zeros((2, 2)), np.zeros((2, 3)), 0.5)
    with pytest.raises(ValueError):
        TwoLabelProblem(np.zeros((2, 2)), np.zeros((2, 2)), -1.0)
    with pytest.raises(ValueError):
        TwoLabelProblem(np.array([[np.nan]]), np.zeros((1, 1)), 0.5)


def test_energy_examples():
    prob = pixel_problem()
    assert binary.energy_primal(np.ones((1, 1)), prob) == pytest.approx(0.3, abs=1e-15)
    assert binary.energy_primal(np.zeros((1, 1)), prob) == pytest.approx(0.7, abs=1e-15)
    big = TwoLabelProblem(np.full((2, 2), 0.7), np.full((2, 2), 0.3), 0.5)
    assert binary.energy_primal(np.array([[1.0, 1.0], [0.0, 0.0]]), big) == pytest.approx(3.0, abs=1e-14)


def test_energy_clips_to_unit_interval():
    prob = pixel_problem()
    assert binary.energy_primal(np.array([[1.7]]), prob) == binary.energy_primal(np.ones((1, 1)), prob)
    assert binary.energy_primal(np.array([[-0.2]]), prob) == binary.energy_primal(np.zeros((1, 1)), prob)


def test_residual_examples():
    assert binary.residual(TwoLabelState.zeros((3, 3))) == 0.0
    s = TwoLabelState.zeros((1, 1))
    s = replace(s, p_t=np.array([[0.3]]), p_s=np.array([[0.7]]))
    assert binary.residual(s) == pytest.approx(0.4, abs=1e-15)
    s2 = replace(TwoLabelState.zeros((2, 2)), p_t=np.full((2, 2), 0.4), p_s=np.full((2, 2), 0.4))
    assert binary.residual(s2) == 0.0


# Hand-derived first steps from zero on a single pixel (no gradient terms),
# C_s = 0.7, C_t = 0.3, c = 0.3.

def test_worked_step_padmm_ty():
    s = binary.step_padmm_ty(TwoLabelState.zeros((1, 1)), pixel_problem(), SolverParams())
    assert scalar(s.p_s) == pytest.approx(0.7, abs=1e-15)
    assert scalar(s.p_t) == pytest.approx(0.3, abs=1e-15)
    assert scalar(s.u) == pytest.approx(0.12, abs=1e-12)
    assert not s.q.any()


def test_worked_step_rpadmm_i():
    s = binary.step_rpadmm_i(TwoLabelState.zeros((1, 1)), pixel_problem(), SolverParams())
    assert scalar(s.p_t) == 0.0
    assert scalar(s.p_s) == pytest.approx(0.7, abs=1e-15)
    assert scalar(s.u) == pytest.approx(1.618 * 0.3 * 0.7, abs=1e-12)
    assert scalar(s.u) == pytest.approx(0.33978, abs=1e-12)


def test_worked_step_rpadmm_ii():
    s = binary.step_rpadmm_ii(TwoLabelState.zeros((1, 1)), pixel_problem(), SolverParams())
    assert scalar(s.p_t) == 0.0
    assert scalar(s.p_s) == pytest.approx(0.7, abs=1e-15)
    assert scalar(s.u) == pytest.approx(0.21, abs=1e-12)


def test_worked_step_rpdrq():
    s = binary.step_rpdrq(TwoLabelState.zeros((1, 1)), pixel_problem(), SolverParams())
    for name in ("u", "p_t", "p_s", "p_t_bar"):
        assert scalar(getattr(s, name)) == 0.0
    assert scalar(s.p_s_bar) == pytest.approx(1.33, abs=1e-12)


def test_worked_step_alg1():
    params = SolverParams(sigma=0.4, tau=0.25)
    s = binary.step_alg1(TwoLabelState.zeros((1, 1)), pixel_problem(), params)
    assert scalar(s.p_t) == 0.0
    assert scalar(s.p_s) == pytest.approx(0.4, abs=1e-15)
    assert scalar(s.u) == pytest.approx(0.1, abs=1e-12)
    assert scalar(s.u_bar) == pytest.approx(0.2, abs=1e-12)


def test_alg1_default_step_product():
    sigma, tau = SolverParams().step_sizes("alg1")
    assert sigma == 0.4
    assert sigma * tau == pytest.approx(0.1, rel=1e-15)


def random_state(rng, shape):
    z = lambda: rng.standard_normal(shape)  # noqa: E731
    zq = lambda: rng.standard_normal((2,) + shape)  # noqa: E731
    return TwoLabelState(z(), z(), z(), zq(), zq(), z(), z(), z())


def random_problem(rng, shape, alpha=0.3):
    return TwoLabelProblem(rng.random(shape), rng.random(shape), alpha)


@pytest.mark.parametrize("algo", ADMM_FAMILY + ("alg1",))
def test_feasibility_after_step(rng, algo):
    prob = random_problem(rng, (6, 5))
    s = random_state(rng, (6, 5))
    for _ in range(3):
        s = binary.STEPS[algo](s, prob, SolverParams())
        assert np.sqrt((s.q ** 2).sum(axis=0)).max() <= prob.alpha + 1e-12
        assert (s.p_t <= prob.C_t + 1e-12).all()
        assert (s.p_s <= prob.C_s + 1e-12).all()


def test_r_enters_only_the_multiplier(rng):
    prob = random_problem(rng, (5, 5))
    s = random_state(rng, (5, 5))
    a = binary.step_rpadmm_i(s, prob, SolverParams(r=1.618))
    b = binary.step_rpadmm_i(s, prob, SolverParams(r=1.0))
    for name in ("q", "p_t", "p_s"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_allclose(a.u - s.u, 1.618 * (b.u - s.u), rtol=1e-13, atol=1e-15)


def test_rho_one_gives_unrelaxed_multiplier(rng):
    prob = random_problem(rng, (5, 4))
    s = random_state(rng, (5, 4))
    params = SolverParams(rho=1.0)
    out = binary.step_rpadmm_ii(s, prob, params)
    expected = s.u - params.c * (out.p_t - out.p_s + divergence(out.q))
    np.testing.assert_allclose(out.u, expected, atol=1e-13)
    # with rho = 1 rpADMM-II coincides with rpADMM-I at r = 1
    ref = binary.step_rpadmm_i(s, prob, SolverParams(r=1.0))
    for name in ("q", "p_t", "p_s", "u"):
        np.testing.assert_allclose(getattr(out, name), getattr(ref, name), atol=1e-13)


def test_rpdrq_rho_one_is_plain_reflection(rng):
    prob = random_problem(rng, (4, 4))
    s = random_state(rng, (4, 4))
    out = binary.step_rpdrq(s, prob, SolverParams(rho=1.0))
    tau = 1.0
    np.testing.assert_allclose(out.p_t_bar, np.minimum(2 * out.p_t - s.p_t_bar, prob.C_t) - out.p_t + s.p_t_bar,
                               atol=1e-14)
    np.testing.assert_allclose(out.p_s_bar,
                               np.minimum(2 * out.p_s - s.p_s_bar + tau, prob.C_s) - out.p_s + s.p_s_bar,
                               atol=1e-14)


def saddle_state():
    """Exact saddle point of the single-pixel problem C_s = 0.7, C_t = 0.3."""
    one, p = np.ones((1, 1)), np.full((1, 1), 0.3)
    z = np.zeros((1, 1))
    zq = np.zeros((2, 1, 1))
    return TwoLabelState(u=one, p_s=p, p_t=p, q=zq, q_bar=zq,
                         p_t_bar=p - 1.0, p_s_bar=p + 1.0, u_bar=one + z)


@pytest.mark.parametrize("algo", binary.STEPS)
def test_fixed_point_at_saddle(algo):
    s = saddle_state()
    out = binary.STEPS[algo](s, pixel_problem(), SolverParams())
    for name in ("u", "p_s", "p_t", "q"):
        np.testing.assert_allclose(getattr(out, name), getattr(s, name), atol=1e-15)


@pytest.mark.parametrize("algo", binary.STEPS)
def test_single_pixel_converges_to_min_capacity(algo):
    _, trace = binary.run(algo, pixel_problem(), SolverParams(eps=1e-9, max_iters=20000),
                          reference_energy=0.3)
    assert trace.converged
    assert trace.final_energy == pytest.approx(0.3, abs=1e-9)


@pytest.mark.parametrize("algo", binary.STEPS)
def test_huge_eps_stops_after_one_iteration(algo):
    prob = random_problem(np.random.default_rng(3), (4, 4))
    _, trace = binary.run(algo, prob, SolverParams(eps=1e6), reference_energy=1.0)
    assert trace.iterations == 1 and trace.converged


def test_run_not_converged_flag():
    prob = random_problem(np.random.default_rng(4), (8, 8))
    _, trace = binary.run("rpadmm-ii", prob, SolverParams(eps=1e-14, max_iters=5), reference_energy=1.0)
    assert not trace.converged and trace.iterations == 5


def test_run_rejects_unknown_algorithm():
    with pytest.raises(ValueError):
        binary.run("newton", pixel_problem(), SolverParams(), reference_energy=0.3)


def test_self_stop_starts_at_second_iteration():
    _, trace = binary.run("rpdrq", pixel_problem(), SolverParams(eps=1e-12, max_iters=3000),
                          self_stop=True)
    assert trace.records[0].rel_err == np.inf
    assert trace.final_energy == pytest.approx(0.3, abs=1e-9)


def test_all_algorithms_agree_on_random_16x16():
    prob = random_problem(np.random.default_rng(7), (16, 16), alpha=0.15)
    e_ref = binary.compute_reference_energy(prob, SolverParams(), iters=5000)
    energies = []
    for algo in binary.STEPS:
        _, trace = binary.run(algo, prob, SolverParams(eps=1e-6, max_iters=50000), e_ref)
        assert trace.converged, algo
        energies.append(trace.final_energy)
    assert (max(energies) - min(energies)) / min(energies) <= 1e-5
    # the optimum is not one of the two constant cuts
    assert e_ref < min(prob.C_s.sum(), prob.C_t.sum()) - 1.0


@pytest.mark.slow
@pytest.mark.parametrize("algo", CONVERGENT)
def test_residual_decay_32x32(algo):
    prob = disk_problem(32)
    s = TwoLabelState.zeros(prob.shape)
    params = SolverParams()
    for _ in range(5000):
        s = binary.STEPS[algo](s, prob, params)
    assert binary.residual(s) < 1e-3


def test_duality_sandwich(rng):
    prob = disk_problem(16)
    state, _ = binary.run("rpadmm-ii", prob, SolverParams(eps=1e-10, max_iters=50000), self_stop=True)
    dual = binary.dual_energy(state)
    primal = binary.energy_primal(state.u, prob)
    assert dual <= primal + 1e-6
    assert (primal - dual) / primal <= 1e-3
    # weak duality against arbitrary binary labelings
    labelings = rng.integers(0, 2, size=(200,) + prob.shape).astype(float)
    assert dual <= binary_energy(labelings, prob).min() + 1e-6


def test_threshold_rule():
    assert binary.threshold(np.array([[0.5]]))[0, 0] == 1.0
    assert binary.threshold(np.array([[0.49]]))[0, 0] == 0.0
    u = np.array([[0.0, 1.0], [1.0, 0.0]])
    for beta in (0.1, 0.5, 0.9):
        assert np.array_equal(binary.threshold(u, beta), u)
    with pytest.raises(ValueError):
        binary.threshold(u, 1.0)


@pytest.mark.parametrize("seed", range(4))
def test_thresholding_matches_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    prob = random_problem(rng, (3, 3), alpha=(0.0, 0.2, 0.5, 0.3)[seed])
    _, e_opt = brute_force_mincut(prob)
    state, _ = binary.run("rpadmm-ii", prob, SolverParams(eps=1e-10, max_iters=200000), self_stop=True)
    assert binary.energy_primal(state.u, prob) <= e_opt + 1e-8
    e = float(binary_energy(binary.threshold(state.u, 0.5), prob))
    assert e == pytest.approx(e_opt, abs=1e-8)


def test_isotropic_tv_integrality_gap_example():
    # A one-pixel hole costs sqrt(2) + 2 under isotropic forward differences
    # instead of 4, so the relaxed minimizer is fractional and no threshold
    # recovers the binary optimum (all ones, energy 3.791).
    cs = np.array([[0.792, 0.278, 0.583], [0.736, 0.25, 0.731], [0.797, 0.522, 0.644]])
    ct = np.array([[0.026, 0.377, 0.322], [0.359, 0.925, 0.941], [0.059, 0.584, 0.198]])
    prob = TwoLabelProblem(cs, ct, 0.2)
    labels, e_opt = brute_force_mincut(prob)
    assert np.array_equal(labels, np.ones((3, 3)))
    assert e_opt == pytest.approx(3.791, abs=1e-12)
    state, _ = binary.run("rpdrq", prob, SolverParams(eps=1e-14, max_iters=100000), self_stop=True)
    assert binary.energy_primal(state.u, prob) < e_opt - 5e-3
    assert state.u[1, 1] == pytest.approx(0.0, abs=1e-6)
    best = min(float(binary_energy(binary.threshold(state.u, b), prob)) for b in np.linspace(0.01, 0.99, 99))
    assert best > e_opt + 5e-3
