"""Exact policy evaluation for the entropy-constrained finite-horizon problem.

Two soft backups are provided. ``corrected`` keeps the target-entropy term
inside the next-step expectation::

    Q_t(s,a) = r(s,a) + E_{s'~p, a'~pi_{t+1}}[Q_{t+1}(s',a') - alpha_{t+1} (log pi_{t+1}(a'|s') + H0)]

``missing_target`` is the same backup without ``- alpha_{t+1} H0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from .mdp import FiniteMdp, check_policy

VARIANTS = ("corrected", "missing_target")

# stands in for -log(0) when a zero-probability action carries marginal mass
DEGENERATE_NEG_LOG = 1e300


@dataclass(frozen=True)
class Marginals:
    state: np.ndarray         # d[t, s]
    state_action: np.ndarray  # rho[t, s, a]


@dataclass(frozen=True)
class EntropyGap:
    h: np.ndarray             # h[t] = E_rho[-log pi_t] - H0
    target_entropy: float
    degenerate: np.ndarray    # bool per t

    @property
    def entropy(self) -> np.ndarray:
        return self.h + self.target_entropy


@dataclass(frozen=True)
class QTable:
    q: np.ndarray             # Q[t, s, a]
    qbar: np.ndarray          # rho-weighted mean of Q[t] per t
    variant: str


def marginals(mdp: FiniteMdp, policy: np.ndarray) -> Marginals:
    """Forward roll-out of the state and state-action marginals."""
    policy = check_policy(mdp, policy)
    n_t = mdp.horizon + 1
    d = np.empty((n_t, mdp.n_states))
    rho = np.empty((n_t, mdp.n_states, mdp.n_actions))
    d[0] = mdp.initial_dist
    for t in range(n_t):
        rho[t] = d[t][:, None] * policy[t]
        if t + 1 < n_t:
            d[t + 1] = np.einsum("sa,sak->k", rho[t], mdp.transition)
    return Marginals(d, rho)


def neg_log(pi: np.ndarray) -> np.ndarray:
    """-log pi with 0 where pi == 0 (callers weight by pi or rho)."""
    out = np.zeros_like(pi)
    pos = pi > 0
    out[pos] = -np.log(pi[pos])
    return out


def policy_entropy_terms(policy: np.ndarray, rho: np.ndarray, target_entropy: float) -> EntropyGap:
    policy = np.asarray(policy, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if policy.shape != rho.shape:
        raise ContractError(f"policy {policy.shape} and marginals {rho.shape} disagree")
    nl = neg_log(policy)
    bad = (policy <= 0) & (rho > 0)
    nl[bad] = DEGENERATE_NEG_LOG
    ent = (rho * nl).sum(axis=(1, 2))
    return EntropyGap(ent - target_entropy, float(target_entropy), bad.any(axis=(1, 2)))


def entropy_gap(mdp: FiniteMdp, policy: np.ndarray, target_entropy: float) -> EntropyGap:
    return policy_entropy_terms(policy, marginals(mdp, policy).state_action, target_entropy)


def evaluate_recursion(mdp: FiniteMdp, policy: np.ndarray, alphas, target_entropy: float,
                       variant: str) -> QTable:
    """Backward induction of the soft Q recursion for a fixed policy and temperature schedule."""
    if variant not in VARIANTS:
        raise ContractError(f"unknown backup variant {variant!r}; expected one of {VARIANTS}")
    policy = check_policy(mdp, policy)
    T = mdp.horizon
    alphas = np.broadcast_to(np.asarray(alphas, dtype=np.float64), (T + 1,))
    if (alphas < 0).any():
        raise ContractError("temperatures must be non-negative")
    h0 = target_entropy if variant == "corrected" else 0.0

    q = np.empty((T + 1, mdp.n_states, mdp.n_actions))
    q[T] = mdp.reward
    for t in range(T - 1, -1, -1):
        pi = policy[t + 1]
        # E_{a'~pi}[Q - alpha (log pi + H0)] per next state
        v_next = (pi * (q[t + 1] - alphas[t + 1] * (-neg_log(pi) + h0))).sum(axis=1)
        q[t] = mdp.reward + mdp.transition @ v_next
    rho = marginals(mdp, policy).state_action
    qbar = (rho * q).sum(axis=(1, 2))
    return QTable(q, qbar, variant)
