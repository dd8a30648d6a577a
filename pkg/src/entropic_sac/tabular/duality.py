"""Lagrangian dual of the entropy-constrained control problem, and a primal oracle.

For a temperature schedule ``alpha[0..T] >= 0`` the Lagrangian

    L(pi, alpha) = E[sum_t r_t] + sum_t alpha_t h(pi_t)

is maximized over policies by soft backward induction (Boltzmann policies,
greedy where ``alpha_t == 0``). The dual function ``g(alpha) = max_pi L`` is
convex and ``dg/dalpha_t = h(pi*_t(alpha))``. The per-step temperatures are
coupled through the state marginals, so the dual is minimized by cyclic
coordinate bisection over t = T..0 until every step satisfies the KKT
conditions.

The primal oracle never touches temperatures: it enumerates policies on an
equally spaced simplex grid and keeps the best one that satisfies every
entropy constraint.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DomainError, InfeasibleError, SizeError
from .mdp import FiniteMdp
from .recursion import entropy_gap, evaluate_recursion, marginals, neg_log

ALPHA_LO = 1e-8
ALPHA_HI = 1e4
H_TOL = 1e-10
MAX_SWEEPS = 2000
MAX_ENUMERATION = 10**8
FEASIBILITY_SLACK = 1e-9
# H0 within this distance of log|A| means "uniform is the only feasible policy"
ACTIVE_AT_MAX_TOL = 1e-12


def boltzmann_policy(q_slice: np.ndarray, alpha: float) -> np.ndarray:
    """``pi(a|s) ∝ exp(Q(s,a)/alpha)`` along the last axis."""
    if not alpha > 0:
        raise DomainError(f"Boltzmann policy needs alpha > 0 (got {alpha}); use greedy_policy for alpha = 0")
    z = np.asarray(q_slice, dtype=np.float64) / alpha
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def greedy_policy(q_slice: np.ndarray) -> np.ndarray:
    """One-hot argmax with lowest-index tie-breaking."""
    q_slice = np.asarray(q_slice, dtype=np.float64)
    out = np.zeros_like(q_slice)
    idx = np.argmax(q_slice, axis=-1)
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


def soft_value(q_slice: np.ndarray, alpha: float) -> np.ndarray:
    """``max_pi E_pi[Q - alpha log pi]`` per state."""
    if alpha == 0:
        return q_slice.max(axis=-1)
    m = q_slice.max(axis=-1)
    return m + alpha * np.log(np.exp((q_slice - m[..., None]) / alpha).sum(axis=-1))


@dataclass(frozen=True)
class DualPoint:
    value: float        # g(alpha)
    policy: np.ndarray  # pi*(alpha)[t, s, a]
    h: np.ndarray       # h(pi*_t) per t


def dual_function(mdp: FiniteMdp, alphas, target_entropy: float) -> DualPoint:
    """Evaluate ``g(alpha) = max_pi L(pi, alpha)`` and its maximizer."""
    T = mdp.horizon
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.shape != (T + 1,) or (alphas < 0).any():
        raise ContractError(f"need {T + 1} non-negative temperatures, got {alphas}")
    policy = np.empty((T + 1, mdp.n_states, mdp.n_actions))
    v_next = np.zeros(mdp.n_states)
    for t in range(T, -1, -1):
        q = mdp.reward + mdp.transition @ v_next
        a = float(alphas[t])
        policy[t] = greedy_policy(q) if a == 0 else boltzmann_policy(q, a)
        v_next = soft_value(q, a)
    value = float(mdp.initial_dist @ v_next) - target_entropy * float(alphas.sum())
    h = entropy_gap(mdp, policy, target_entropy).h
    return DualPoint(value, policy, h)


def _check_target(mdp: FiniteMdp, target_entropy: float) -> None:
    bound = math.log(mdp.n_actions)
    if target_entropy > bound + ACTIVE_AT_MAX_TOL:
        raise InfeasibleError(
            f"target entropy {target_entropy} exceeds log(n_actions) = {bound:.6f}; "
            "no policy can satisfy the constraint")


@dataclass(frozen=True)
class StepSolution:
    t: int
    alpha: float
    policy: np.ndarray  # pi*_t[s, a]
    dual_value: float
    h: float


def dual_solve_step(mdp: FiniteMdp, t: int, alphas, target_entropy: float) -> StepSolution:
    """Minimize the dual over ``alpha_t`` with the other temperatures held fixed.

    ``h(pi*_t)`` is nondecreasing in ``alpha_t``; bisect on it (in log-space)
    inside ``[ALPHA_LO, ALPHA_HI]``. If the constraint is slack already at
    ``ALPHA_LO`` the minimizer is the boundary ``alpha_t = 0`` with a greedy
    step-t policy.
    """
    _check_target(mdp, target_entropy)
    alphas = np.array(alphas, dtype=np.float64)

    def at(a: float) -> DualPoint:
        alphas[t] = a
        return dual_function(mdp, alphas, target_entropy)

    lo_pt = at(ALPHA_LO)
    if lo_pt.h[t] >= 0:
        pt = at(0.0)
        if pt.h[t] < 0:  # greedy tie-break can land below target; keep the soft limit
            pt, a = lo_pt, ALPHA_LO
            alphas[t] = a
        else:
            a = 0.0
        return StepSolution(t, a, pt.policy[t], pt.value, float(pt.h[t]))
    hi_pt = at(ALPHA_HI)
    if hi_pt.h[t] <= 0:
        return StepSolution(t, ALPHA_HI, hi_pt.policy[t], hi_pt.value, float(hi_pt.h[t]))

    lo, hi = math.log(ALPHA_LO), math.log(ALPHA_HI)
    best = hi_pt
    a = ALPHA_HI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a = math.exp(mid)
        best = at(a)
        if abs(best.h[t]) <= H_TOL:
            break
        if best.h[t] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return StepSolution(t, a, best.policy[t], best.value, float(best.h[t]))


@dataclass(frozen=True)
class DualSolution:
    alphas: np.ndarray
    policy: np.ndarray
    value: float
    h: np.ndarray
    sweeps: int
    kkt_residual: float

    @property
    def slackness(self) -> np.ndarray:
        return self.alphas * self.h


def kkt_residual(alphas: np.ndarray, h: np.ndarray) -> float:
    res = np.where(alphas > 0, np.abs(h), np.maximum(-h, 0.0))
    return float(res.max())


def solve_dual(mdp: FiniteMdp, target_entropy: float, tol: float = H_TOL,
               max_sweeps: int = MAX_SWEEPS) -> DualSolution:
    """Cyclic coordinate minimization of the convex dual, sweeping t = T..0."""
    _check_target(mdp, target_entropy)
    T = mdp.horizon
    if target_entropy >= math.log(mdp.n_actions) - ACTIVE_AT_MAX_TOL:
        # only the uniform policy is feasible; the dual infimum sits at alpha -> inf
        alphas = np.full(T + 1, ALPHA_HI)
        uniform = np.full((T + 1, mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
        h = entropy_gap(mdp, uniform, target_entropy).h
        value = expected_return(mdp, uniform) + float(alphas @ h)
        return DualSolution(alphas, uniform, value, h, 0, kkt_residual(alphas, h))

    alphas = np.ones(T + 1)
    sweeps = 0
    pt = dual_function(mdp, alphas, target_entropy)
    while sweeps < max_sweeps:
        sweeps += 1
        for t in range(T, -1, -1):
            alphas[t] = dual_solve_step(mdp, t, alphas, target_entropy).alpha
        pt = dual_function(mdp, alphas, target_entropy)
        if kkt_residual(alphas, pt.h) <= tol:
            break
    return DualSolution(alphas, pt.policy, pt.value, pt.h, sweeps, kkt_residual(alphas, pt.h))


def expected_return(mdp: FiniteMdp, policy: np.ndarray) -> float:
    rho = marginals(mdp, policy).state_action
    return float((rho * mdp.reward[None]).sum())


# --- primal oracle ---------------------------------------------------------

def simplex_grid(n_actions: int, resolution: int) -> np.ndarray:
    """All distributions with coordinates in {0, 1/(resolution-1), ..., 1}, lexicographic."""
    if resolution < 2:
        raise ContractError("grid resolution must be at least 2")
    n = resolution - 1
    pts = [c for c in itertools.product(range(n + 1), repeat=n_actions - 1) if sum(c) <= n]
    arr = np.array([list(c) + [n - sum(c)] for c in pts], dtype=np.float64) / n
    return arr


def _grid_entropy(grid: np.ndarray) -> np.ndarray:
    return (grid * neg_log(grid)).sum(axis=1)


@dataclass(frozen=True)
class PrimalSolution:
    value: float
    policy: np.ndarray
    h: np.ndarray
    method: str
    evaluations: int


def _enumeration_count(mdp: FiniteMdp, g: int, resolution: int) -> tuple[str, int]:
    S, n_t = mdp.n_states, mdp.horizon + 1
    if S <= 2:
        n_d = 1 if S == 1 else resolution
        # step 0 is solved at the exact start distribution
        return "marginal_dp", g ** S * (1 + (n_t - 1) * n_d)
    return "joint", g ** (S * n_t)


def brute_force_primal(mdp: FiniteMdp, target_entropy: float, grid_resolution: int = 201) -> PrimalSolution:
    """Best grid policy satisfying ``h(pi_t) >= -1e-9`` for every t.

    With at most two states the state marginal at each step is a scalar, so
    the search runs backward over a grid of marginals (value between grid
    nodes by linear interpolation), then the chosen policy is re-traced
    forward at the exact marginals and scored exactly. Larger state spaces
    enumerate every joint policy.
    """
    _check_target(mdp, target_entropy)
    grid = simplex_grid(mdp.n_actions, grid_resolution)
    method, count = _enumeration_count(mdp, len(grid), grid_resolution)
    if count > MAX_ENUMERATION:
        raise SizeError(f"brute-force oracle would need {count} evaluations (limit {MAX_ENUMERATION})", count)
    if method == "joint":
        policy = _joint_search(mdp, grid, target_entropy)
    else:
        policy = _marginal_dp_search(mdp, grid, grid_resolution, target_entropy)
    h = entropy_gap(mdp, policy, target_entropy).h
    return PrimalSolution(expected_return(mdp, policy), policy, h, method, count)


def _per_state_tables(mdp: FiniteMdp, grid: np.ndarray):
    ent = _grid_entropy(grid)                              # [G]
    rew = grid @ mdp.reward.T                              # [G, S]  E_pi r(s, .)
    nxt = np.einsum("ga,sak->gsk", grid, mdp.transition)   # [G, S, S']
    return ent, rew, nxt


def _marginal_dp_search(mdp, grid, resolution, h0) -> np.ndarray:
    S, T = mdp.n_states, mdp.horizon
    G = len(grid)
    ent, rew, nxt = _per_state_tables(mdp, grid)
    xs = np.linspace(0.0, 1.0, resolution) if S == 2 else np.ones(1)

    if S == 1:
        def step(x, w_next):
            vals = rew[:, 0] + (0.0 if w_next is None else w_next[0])
            feas = ent - h0 >= -FEASIBILITY_SLACK
            return np.where(feas, vals, -np.inf)[None, :]
    else:
        # joint index k = g0 * G + g1 (lexicographic in (pi_t(.|0), pi_t(.|1)))
        e0, e1 = ent[:, None], ent[None, :]
        r0, r1 = rew[:, 0][:, None], rew[:, 1][None, :]
        n0, n1 = nxt[:, 0, 0][:, None], nxt[:, 1, 0][None, :]

        def step(x, w_next):
            x = np.asarray(x, dtype=np.float64)[:, None, None]
            h = x * e0 + (1.0 - x) * e1 - h0
            vals = x * r0 + (1.0 - x) * r1
            if w_next is not None:
                vals = vals + np.interp(x * n0 + (1.0 - x) * n1, xs, w_next)
            vals = np.where(h >= -FEASIBILITY_SLACK, vals, -np.inf)
            return vals.reshape(len(x), G * G)

    # backward pass over marginal grid for t = T..1
    w = [None] * (T + 2)
    for t in range(T, 0, -1):
        w[t] = np.concatenate([step(xs[i:i + 16], w[t + 1]).max(axis=1)
                               for i in range(0, len(xs), 16)])

    # forward re-trace at exact marginals
    policy = np.empty((T + 1, S, mdp.n_actions))
    d = mdp.initial_dist.copy()
    for t in range(T + 1):
        x = d[:1]
        vals = step(x, w[t + 1])[0]
        k = int(np.argmax(vals))
        if not np.isfinite(vals[k]):
            raise InfeasibleError("no grid policy satisfies the entropy constraints; refine the grid")
        if S == 1:
            policy[t, 0] = grid[k]
        else:
            policy[t, 0], policy[t, 1] = grid[k // G], grid[k % G]
        d = np.einsum("s,sa,sak->k", d, policy[t], mdp.transition)
    return policy


def _joint_search(mdp, grid, h0, chunk: int = 1 << 16) -> np.ndarray:
    S, n_t, A = mdp.n_states, mdp.horizon + 1, mdp.n_actions
    G = len(grid)
    slots = S * n_t
    total = G ** slots
    radix = G ** np.arange(slots - 1, -1, -1, dtype=np.int64)
    best_val, best_k = -np.inf, -1
    for start in range(0, total, chunk):
        ks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = (ks[:, None] // radix[None, :]) % G            # [N, slots]
        pol = grid[idx].reshape(len(ks), n_t, S, A)
        d = np.broadcast_to(mdp.initial_dist, (len(ks), S)).copy()
        val = np.zeros(len(ks))
        ok = np.ones(len(ks), dtype=bool)
        for t in range(n_t):
            rho = d[:, :, None] * pol[:, t]
            val += (rho * mdp.reward[None]).sum(axis=(1, 2))
            ent = (rho * neg_log(pol[:, t])).sum(axis=(1, 2))
            ok &= ent - h0 >= -FEASIBILITY_SLACK
            d = np.einsum("nsa,sak->nk", rho, mdp.transition)
        val = np.where(ok, val, -np.inf)
        i = int(np.argmax(val))
        if val[i] > best_val:
            best_val, best_k = float(val[i]), int(ks[i])
    if best_k < 0:
        raise InfeasibleError("no grid policy satisfies the entropy constraints; refine the grid")
    idx = (best_k // radix) % G
    return grid[idx].reshape(n_t, S, A)


# --- report ----------------------------------------------------------------

def verify_duality_report(mdp: FiniteMdp, target_entropy: float, grid_resolution: int = 201) -> dict:
    """Primal oracle vs. dual solve, with slackness and recursion cross-checks."""
    dual = solve_dual(mdp, target_entropy)
    primal = brute_force_primal(mdp, target_entropy, grid_resolution)
    # accumulate the Q-bar system with the dual's policy and temperatures
    qt = evaluate_recursion(mdp, dual.policy, dual.alphas, target_entropy, "corrected")
    d_accumulated = float(qt.qbar[0] + dual.alphas[0] * dual.h[0])
    return {
        "target_entropy": float(target_entropy),
        "grid_resolution": int(grid_resolution),
        "p_star": primal.value,
        "d_star": dual.value,
        "gap": abs(primal.value - dual.value),
        "alpha_star": dual.alphas.tolist(),
        "h_dual": dual.h.tolist(),
        "h_primal": primal.h.tolist(),
        "slackness_residuals": dual.slackness.tolist(),
        "kkt_residual": dual.kkt_residual,
        "dual_sweeps": dual.sweeps,
        "d_star_accumulated": d_accumulated,
        "recursion_residual": abs(d_accumulated - dual.value),
        "primal_method": primal.method,
        "primal_evaluations": primal.evaluations,
        "primal_policy": primal.policy.tolist(),
        "dual_policy": dual.policy.tolist(),
    }
