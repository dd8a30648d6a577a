"""Exact finite-horizon verification of the entropy-constrained soft backup."""
from .duality import (
    boltzmann_policy, brute_force_primal, dual_function, dual_solve_step, greedy_policy,
    solve_dual, verify_duality_report,
)
from .mdp import FiniteMdp, load_mdp, random_mdp, uniform_policy
from .recursion import EntropyGap, QTable, entropy_gap, evaluate_recursion, marginals, policy_entropy_terms

__all__ = [
    "EntropyGap", "FiniteMdp", "QTable", "boltzmann_policy", "brute_force_primal", "dual_function",
    "dual_solve_step", "entropy_gap", "evaluate_recursion", "greedy_policy", "load_mdp", "marginals",
    "policy_entropy_terms", "random_mdp", "solve_dual", "uniform_policy", "verify_duality_report",
]
