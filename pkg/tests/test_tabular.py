import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropic_sac.errors import ConfigError, ContractError, DomainError, InfeasibleError, SizeError
from entropic_sac.tabular import (
    FiniteMdp, boltzmann_policy, brute_force_primal, dual_function, dual_solve_step, entropy_gap,
    evaluate_recursion, load_mdp, marginals, policy_entropy_terms, random_mdp, solve_dual,
    uniform_policy, verify_duality_report,
)
from entropic_sac.tabular.duality import ALPHA_LO, expected_return, greedy_policy, simplex_grid


def random_policy(rng, mdp):
    return rng.dirichlet(np.ones(mdp.n_actions), size=(mdp.horizon + 1, mdp.n_states))


def value_iteration(mdp):
    v = np.zeros(mdp.n_states)
    for _ in range(mdp.horizon + 1):
        v = (mdp.reward + mdp.transition @ v).max(axis=1)
    return float(mdp.initial_dist @ v)


# --- FiniteMdp --------------------------------------------------------------

def test_mdp_validation():
    p = np.full((2, 2, 2), 0.5)
    with pytest.raises(ConfigError):
        FiniteMdp(p * 1.1, np.zeros((2, 2)), np.array([0.5, 0.5]), 1)
    with pytest.raises(ConfigError):
        FiniteMdp(p, np.zeros((2, 2)), np.array([0.6, 0.5]), 1)
    with pytest.raises(ConfigError):
        FiniteMdp(p, np.array([[0.0, np.inf], [0.0, 0.0]]), np.array([0.5, 0.5]), 1)
    with pytest.raises(ConfigError):
        FiniteMdp(p, np.zeros((2, 2)), np.array([0.5, 0.5]), -1)


def test_mdp_json_round_trip(tmp_path):
    mdp = random_mdp(np.random.default_rng(0), 3, 2, 2)
    path = tmp_path / "mdp.json"
    path.write_text(json.dumps(mdp.to_document()))
    back = load_mdp(path)
    assert np.array_equal(back.transition, mdp.transition) and back.horizon == 2


# --- marginals ---------------------------------------------------------------

def test_single_state_marginal_is_one():
    mdp = FiniteMdp(np.ones((1, 2, 1)), np.array([[1.0, 0.0]]), np.array([1.0]), 4)
    d = marginals(mdp, uniform_policy(mdp)).state
    assert np.array_equal(d, np.ones((5, 1)))


def test_doubly_stochastic_chain_keeps_uniform_marginal():
    p = np.array([[[0.3, 0.7], [0.6, 0.4]], [[0.7, 0.3], [0.4, 0.6]]])
    mdp = FiniteMdp(p, np.zeros((2, 2)), np.array([0.5, 0.5]), 5)
    m = marginals(mdp, uniform_policy(mdp))
    np.testing.assert_allclose(m.state, 0.5, atol=1e-15)
    np.testing.assert_allclose(m.state_action.sum(axis=(1, 2)), 1.0, atol=1e-15)


def test_marginals_match_monte_carlo():
    rng = np.random.default_rng(11)
    mdp = random_mdp(rng, 3, 2, 3)
    policy = random_policy(rng, mdp)
    n = 10**6
    rho = marginals(mdp, policy).state_action

    def draw(probs):  # one categorical draw per row of probs
        return (rng.random(len(probs))[:, None] > np.cumsum(probs, axis=1)).sum(axis=1)

    s = draw(np.broadcast_to(mdp.initial_dist, (n, 3)))
    for t in range(mdp.horizon + 1):
        a = draw(policy[t][s])
        freq = np.bincount(s * 2 + a, minlength=6).reshape(3, 2) / n
        se = np.sqrt(rho[t] * (1 - rho[t]) / n)
        assert (np.abs(freq - rho[t]) <= 3 * se + 1e-12).all(), t
        s = draw(mdp.transition[s, a])


def test_horizon_mismatch_is_contract_error():
    mdp = random_mdp(np.random.default_rng(0), 2, 2, 2)
    with pytest.raises(ContractError):
        marginals(mdp, np.full((2, 2, 2), 0.5))


# --- entropy terms -----------------------------------------------------------

def test_uniform_two_action_entropy_is_ln2():
    mdp = random_mdp(np.random.default_rng(1), 2, 2, 2)
    gap = entropy_gap(mdp, uniform_policy(mdp), 0.0)
    np.testing.assert_allclose(gap.h, math.log(2), atol=1e-15)


def test_deterministic_policy_has_zero_gap():
    mdp = random_mdp(np.random.default_rng(2), 2, 2, 1)
    pi = np.zeros((2, 2, 2))
    pi[..., 0] = 1.0
    assert np.array_equal(entropy_gap(mdp, pi, 0.0).h, np.zeros(2))


def test_entropy_terms_match_direct_summation():
    rng = np.random.default_rng(3)
    mdp = random_mdp(rng, 3, 3, 2)
    pi = random_policy(rng, mdp)
    rho = marginals(mdp, pi).state_action
    direct = [sum(rho[t, s, a] * -math.log(pi[t, s, a]) for s in range(3) for a in range(3)) - 0.2
              for t in range(3)]
    np.testing.assert_allclose(policy_entropy_terms(pi, rho, 0.2).h, direct, rtol=0, atol=1e-12)


def test_zero_probability_with_mass_is_flagged():
    pi = np.array([[[0.0, 1.0]]])
    rho = np.array([[[0.5, 0.5]]])
    gap = policy_entropy_terms(pi, rho, 0.0)
    assert gap.degenerate[0] and gap.h[0] > 1e200


# --- recursion ---------------------------------------------------------------

def test_zero_target_makes_variants_identical():
    rng = np.random.default_rng(4)
    mdp = random_mdp(rng, 2, 3, 3)
    pi = random_policy(rng, mdp)
    a = evaluate_recursion(mdp, pi, 0.7, 0.0, "corrected")
    b = evaluate_recursion(mdp, pi, 0.7, 0.0, "missing_target")
    assert np.array_equal(a.q, b.q)


def test_horizon_zero_q_is_reward():
    mdp = random_mdp(np.random.default_rng(5), 2, 2, 0)
    for v in ("corrected", "missing_target"):
        assert np.array_equal(evaluate_recursion(mdp, uniform_policy(mdp), 1.0, 0.4, v).q[0], mdp.reward)


def test_backup_difference_is_linear_in_remaining_steps():
    rng = np.random.default_rng(6)
    for _ in range(20):
        mdp = random_mdp(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 5)))
        pi = random_policy(rng, mdp)
        alpha, h0 = rng.uniform(0, 2), rng.uniform(-2, 1)
        diff = (evaluate_recursion(mdp, pi, alpha, h0, "corrected").q
                - evaluate_recursion(mdp, pi, alpha, h0, "missing_target").q)
        steps_left = mdp.horizon - np.arange(mdp.horizon + 1)
        expected = np.broadcast_to((-steps_left * alpha * h0)[:, None, None], diff.shape)
        np.testing.assert_allclose(diff, expected, rtol=0, atol=1e-9)


def test_unknown_variant_is_contract_error():
    mdp = random_mdp(np.random.default_rng(0))
    with pytest.raises(ContractError):
        evaluate_recursion(mdp, uniform_policy(mdp), 1.0, 0.0, "bogus")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["corrected", "missing_target"]))
def test_qbar_is_marginal_weighted_q(seed, variant):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, 3, 2, 3)
    pi = random_policy(rng, mdp)
    qt = evaluate_recursion(mdp, pi, rng.uniform(0, 1, size=4), 0.3, variant)
    rho = marginals(mdp, pi).state_action
    np.testing.assert_allclose(qt.qbar, (rho * qt.q).sum(axis=(1, 2)), rtol=0, atol=1e-12)


# --- Boltzmann / greedy ------------------------------------------------------

def test_boltzmann_examples():
    assert np.array_equal(boltzmann_policy(np.array([3.0, 3.0]), 0.2), [0.5, 0.5])
    np.testing.assert_allclose(boltzmann_policy(np.array([1.0, 0.0]), 1e6), 0.5, atol=1e-6)
    e = math.e
    np.testing.assert_allclose(boltzmann_policy(np.array([1.0, 0.0]), 1.0), [e / (e + 1), 1 / (e + 1)],
                               rtol=0, atol=1e-15)


def test_boltzmann_rejects_nonpositive_alpha():
    with pytest.raises(DomainError, match="greedy"):
        boltzmann_policy(np.array([1.0, 0.0]), 0.0)


def test_greedy_breaks_ties_to_lowest_index():
    assert np.array_equal(greedy_policy(np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]])),
                          [[1, 0, 0], [0, 1, 0]])


# --- dual --------------------------------------------------------------------

def test_constant_reward_gives_zero_temperature():
    p = np.full((2, 2, 2), 0.5)
    mdp = FiniteMdp(p, np.full((2, 2), 0.4), np.array([0.5, 0.5]), 2)
    sol = solve_dual(mdp, -0.5)
    assert np.array_equal(sol.alphas, np.zeros(3))
    assert (sol.h > 0).all()
    assert sol.value == pytest.approx(3 * 0.4, abs=1e-12)
    # for H0 in [0, log 2) the constraint is met as alpha -> 0 with a uniform limit
    sol = solve_dual(mdp, 0.3)
    assert (sol.alphas <= ALPHA_LO).all() and (sol.h >= -1e-10).all()
    np.testing.assert_allclose(sol.policy, 0.5, atol=1e-12)


def test_target_at_log_n_forces_uniform_policy():
    mdp = random_mdp(np.random.default_rng(7), 2, 2, 2)
    sol = solve_dual(mdp, math.log(2))
    np.testing.assert_allclose(sol.policy, 0.5, atol=0)
    assert np.abs(sol.h).max() <= 1e-12
    assert np.abs(sol.slackness).max() <= 1e-6


def test_step_solution_meets_slackness():
    rng = np.random.default_rng(8)
    for _ in range(10):
        mdp = random_mdp(rng, 1, 2, 0)
        step = dual_solve_step(mdp, 0, np.ones(1), 0.5)
        assert abs(step.h) <= 1e-8 or step.alpha == 0.0


def test_infeasible_target_raises():
    mdp = random_mdp(np.random.default_rng(0), 2, 3, 1)
    for fn in (lambda: solve_dual(mdp, math.log(3) + 1e-3),
               lambda: dual_solve_step(mdp, 0, np.ones(2), 2.0),
               lambda: brute_force_primal(mdp, 1.2, 11)):
        with pytest.raises(InfeasibleError):
            fn()


def test_slack_constraint_recovers_value_iteration():
    rng = np.random.default_rng(9)
    for _ in range(10):
        mdp = random_mdp(rng, 3, 2, int(rng.integers(0, 4)))
        sol = solve_dual(mdp, -10.0)
        assert np.allclose(sol.alphas, 0.0, atol=1e-8)
        assert sol.value == pytest.approx(value_iteration(mdp), abs=1e-9)


def test_zero_target_on_deterministic_optimum_slackness():
    rng = np.random.default_rng(10)
    mdp = random_mdp(rng, 2, 2, 3)
    sol = solve_dual(mdp, 0.0)
    assert np.abs(sol.slackness).max() <= 1e-8


def test_symmetric_mdp_has_zero_slackness():
    p = np.full((2, 2, 2), 0.5)
    mdp = FiniteMdp(p, np.ones((2, 2)), np.array([0.5, 0.5]), 2)
    report = verify_duality_report(mdp, 0.3, 21)
    # alpha stops at the bracket floor, so the residual is floor * h rather than 0
    assert max(abs(x) for x in report["slackness_residuals"]) <= 1e-8
    assert report["gap"] <= 1e-6


def test_slackness_and_kkt_on_random_solves():
    rng = np.random.default_rng(12)
    for _ in range(30):
        mdp = random_mdp(rng, 2, 2, int(rng.integers(0, 4)))
        sol = solve_dual(mdp, float(rng.choice([-1.0, 0.0, 0.3, 0.6])))
        assert np.abs(sol.slackness).max() <= 1e-6
        assert (sol.h >= -1e-9).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dual_is_midpoint_convex(seed):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, 2, 3, 2)
    a, b = rng.uniform(0, 3, size=3), rng.uniform(0, 3, size=3)
    ga, gb = dual_function(mdp, a, 0.4).value, dual_function(mdp, b, 0.4).value
    assert dual_function(mdp, (a + b) / 2, 0.4).value <= (ga + gb) / 2 + 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2.0, math.log(3)))
def test_dual_policy_entropy_never_exceeds_log_n(seed, h0):
    mdp = random_mdp(np.random.default_rng(seed), 2, 3, 2)
    sol = solve_dual(mdp, h0)
    assert (sol.h + h0 <= math.log(3) + 1e-12).all()


# --- primal oracle -----------------------------------------------------------

def test_simplex_grid_shape():
    g = simplex_grid(3, 5)
    assert len(g) == 15 and np.allclose(g.sum(axis=1), 1.0)


def test_one_step_primal_picks_best_action():
    mdp = FiniteMdp(np.ones((1, 2, 1)), np.array([[1.0, 0.0]]), np.array([1.0]), 0)
    sol = brute_force_primal(mdp, 0.0, 201)
    assert sol.value == 1.0 and np.array_equal(sol.policy[0, 0], [1.0, 0.0])


def test_symmetric_rewards_primal_reaches_uniform_value():
    p = np.full((2, 2, 2), 0.5)
    mdp = FiniteMdp(p, np.ones((2, 2)), np.array([0.5, 0.5]), 1)
    sol = brute_force_primal(mdp, 0.6, 201)
    assert sol.value == pytest.approx(2.0, abs=1e-15)
    assert expected_return(mdp, uniform_policy(mdp)) == pytest.approx(sol.value, abs=1e-15)


def test_grid_too_large_reports_count():
    mdp = random_mdp(np.random.default_rng(0), 3, 2, 3)
    with pytest.raises(SizeError) as info:
        brute_force_primal(mdp, 0.0, 201)
    assert info.value.count == 201 ** 12


def test_primal_and_dual_agree_on_example():
    mdp = random_mdp(np.random.default_rng(0), 2, 2, 2)
    report = verify_duality_report(mdp, 0.3, 201)
    assert report["gap"] <= 1e-3
    assert report["recursion_residual"] <= 1e-9
    assert report["p_star"] <= report["d_star"] + 1e-9  # weak duality


def test_joint_enumeration_on_three_states():
    mdp = random_mdp(np.random.default_rng(13), 3, 2, 0)
    sol = brute_force_primal(mdp, 0.2, 41)
    assert sol.method == "joint"
    dual = solve_dual(mdp, 0.2)
    assert sol.value <= dual.value + 1e-9 and dual.value - sol.value <= 2e-2
