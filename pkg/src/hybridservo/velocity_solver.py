"""Velocity stage: decide which actuated directions to velocity-control.

Given N v = 0 and the goal G v = b_G, the solver picks the smallest number
of velocity commands that still pins the goal down, then optimizes the
command directions.  Each command row c lives in the actuated coordinates
(zero unactuated prefix) and must annihilate null([N; G]) so that the
commanded value C v is the same for every velocity compatible with the
constraints and the goal.  Among those candidates we prefer rows that are
mutually independent and as close to null(N) as possible, so commanding
them fights the constraints as little as possible:

    cost(C) = sum_{i != j} |c_i . c_j| - sum_i ||NullN^T c_i||

minimized by multi-start projected gradient descent on the unit sphere of
each row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import subspace_linalg as sla
from .errors import (
    EmptyBasis,
    InconsistentGoal,
    InconsistentSystem,
    InfeasibleDimensions,
    SingularTransform,
)
from .model import SystemInstance
from .subspace_linalg import SubspaceBasis

# Two candidate minima closer than this are treated as a tie and the earlier
# start wins, which keeps the multi-start selection deterministic.
TIE_EPS = 1e-12

# Norms below this are treated as sitting on the kink of the cost; the
# corresponding gradient contribution is zero there.
KINK_EPS = 1e-12


@dataclass
class VelocitySolverConfig:
    num_starts: int = 3
    step_length: float = 10.0
    max_iters: int = 200
    convergence_tol: float = 1e-8
    rng_seed: int = 0
    rank_tol: float = sla.DEFAULT_RANK_TOL


@dataclass
class VelocitySolution:
    """Velocity commands plus the action-frame transform they induce.

    C stacks the command rows (n_av x n), b_C their magnitudes.  R_a is the
    actuated-frame rotation whose last n_av rows are the velocity-controlled
    axes, and T = diag(I_{n_u}, R_a).
    """

    C: np.ndarray
    b_C: np.ndarray
    T: np.ndarray
    R_a: np.ndarray
    n_av: int
    cost: float
    per_start_costs: list[float]
    start_converged: list[bool]

    @property
    def w_av(self) -> np.ndarray:
        return self.b_C


@dataclass
class PgdResult:
    k: np.ndarray
    cost: float
    iterations: int
    converged: bool


def compute_dimensions(N, G, rel_tol: float = sla.DEFAULT_RANK_TOL):
    """Rank bookkeeping for the velocity stage.

    Returns (n_av_min, n_av_max, n_av, r_N, r_NG) where n_av is the chosen
    number of velocity commands (the minimum that still pins the goal).
    """
    N = np.asarray(N, dtype=float)
    G = np.asarray(G, dtype=float)
    n = G.shape[1] if G.size else N.shape[1]
    r_N = sla.numerical_rank(N, rel_tol)
    r_NG = sla.numerical_rank(np.vstack([N, G]), rel_tol)
    n_av_min = r_NG - r_N
    n_av_max = n - r_N
    return n_av_min, n_av_max, n_av_min, r_N, r_NG


def check_feasibility(n: int, n_a: int, r_N: int) -> bool:
    """True when constraints plus actions can fully determine the velocity."""
    return r_N + n_a >= n


def candidate_basis(N, G, n_u: int, rel_tol: float = sla.DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning the admissible command rows.

    A command row c must have zero unactuated prefix and annihilate every
    vector of null([N; G]).  The basis is built in the actuated coordinates,
    so the prefix is exactly zero.  Raises EmptyBasis when fewer candidate
    directions exist than velocity commands are needed.
    """
    N = np.asarray(N, dtype=float)
    G = np.asarray(G, dtype=float)
    n = G.shape[1] if G.size else N.shape[1]
    n_av_min, _, n_av, _, _ = compute_dimensions(N, G, rel_tol)
    sigma = sla.null_space_basis(np.vstack([N, G]), rel_tol).basis
    # Constraints on the actuated part only: sigma_a^T c_a = 0.
    sigma_a = sigma[n_u:, :].T
    basis_a = sla.null_space_basis(sigma_a, rel_tol).basis
    n_c = basis_a.shape[1]
    if n_c < n_av:
        raise EmptyBasis(
            f"candidate space has {n_c} directions but {n_av} velocity commands are needed"
        )
    B_c = np.zeros((n, n_c))
    B_c[n_u:, :] = basis_a
    return B_c


def direction_cost(k: np.ndarray, B_c: np.ndarray, NullN: SubspaceBasis) -> float:
    """Cost of command rows c_i = B_c k_i (columns of k assumed unit in c)."""
    C = B_c @ k
    gram = C.T @ C
    cross = float(np.sum(np.abs(gram)) - np.sum(np.abs(np.diag(gram))))
    proj = NullN.basis.T @ C
    return cross - float(np.sum(np.linalg.norm(proj, axis=0)))


def _cost_and_grad(k, B_c, null_basis):
    C = B_c @ k
    gram = C.T @ C
    cross = float(np.sum(np.abs(gram)) - np.sum(np.abs(np.diag(gram))))
    proj = null_basis.T @ C
    norms = np.linalg.norm(proj, axis=0)
    cost = cross - float(np.sum(norms))
    sign = np.sign(gram)
    np.fill_diagonal(sign, 0.0)
    grad_c = 2.0 * (C @ sign)
    # Direct gradient of the 2-norm term, zeroed at the kink.
    safe = np.where(norms > KINK_EPS, norms, 1.0)
    scale = np.where(norms > KINK_EPS, 1.0 / safe, 0.0)
    grad_c -= null_basis @ (proj * scale)
    return cost, B_c.T @ grad_c


def _project(k, B_c):
    """Rescale each column so the corresponding command row has unit norm."""
    norms = np.linalg.norm(B_c @ k, axis=0)
    if np.any(norms < KINK_EPS):
        return None
    return k / norms


def projected_gradient_descent(
    B_c: np.ndarray,
    NullN: SubspaceBasis,
    n_av: int,
    config: VelocitySolverConfig,
    start_index: int = 0,
) -> PgdResult:
    """Minimize the direction cost from one random start.

    Gradient steps use the configured step length; a step that would
    increase the cost is retried with a halved step so the recorded cost
    sequence never increases.  Converges when the projected iterate moves
    less than convergence_tol or no descent step can be found.
    """
    rng = np.random.default_rng(config.rng_seed + start_index)
    n_c = B_c.shape[1]
    k = _project(rng.standard_normal((n_c, n_av)), B_c)
    while k is None:  # vanishing draw, essentially measure zero
        k = _project(rng.standard_normal((n_c, n_av)), B_c)
    cost, grad = _cost_and_grad(k, B_c, NullN.basis)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        step = config.step_length
        accepted = None
        for _ in range(40):
            trial = _project(k - step * grad, B_c)
            if trial is not None:
                trial_cost, trial_grad = _cost_and_grad(trial, B_c, NullN.basis)
                if trial_cost <= cost + TIE_EPS:
                    accepted = (trial, trial_cost, trial_grad)
                    break
            step *= 0.5
        if accepted is None:
            converged = True
            break
        moved = float(np.linalg.norm(accepted[0] - k))
        k, cost, grad = accepted
        if moved < config.convergence_tol:
            converged = True
            break
    return PgdResult(k=k, cost=cost, iterations=iterations, converged=converged)


def solve_velocity(instance: SystemInstance, config: VelocitySolverConfig | None = None) -> VelocitySolution:
    """Pick velocity-controlled directions and magnitudes for one instance."""
    cfg = config or VelocitySolverConfig()
    N, G = instance.N, instance.G
    n, n_u, n_a = instance.n, instance.n_u, instance.n_a
    _, _, n_av, r_N, r_NG = compute_dimensions(N, G, cfg.rank_tol)
    if not check_feasibility(n, n_a, r_N):
        raise InfeasibleDimensions(
            f"rank(N) = {r_N} with n_a = {n_a} cannot determine all {n} velocities"
        )
    stacked = np.vstack([N, G])
    rhs = np.concatenate([np.zeros(N.shape[0]), instance.b_G])
    try:
        v_star = sla.min_norm_solution(stacked, rhs)
    except InconsistentSystem as exc:
        raise InconsistentGoal(
            "goal velocity conflicts with the holonomic constraints"
        ) from exc

    if n_av == 0:
        R_a = np.eye(n_a)
        return VelocitySolution(
            C=np.zeros((0, n)),
            b_C=np.zeros(0),
            T=np.eye(n),
            R_a=R_a,
            n_av=0,
            cost=0.0,
            per_start_costs=[],
            start_converged=[],
        )

    B_c = candidate_basis(N, G, n_u, cfg.rank_tol)
    NullN = sla.null_space_basis(N, cfg.rank_tol)
    best: PgdResult | None = None
    per_start_costs: list[float] = []
    start_converged: list[bool] = []
    for s in range(cfg.num_starts):
        result = projected_gradient_descent(B_c, NullN, n_av, cfg, s)
        per_start_costs.append(result.cost)
        start_converged.append(result.converged)
        if best is None or result.cost < best.cost - TIE_EPS:
            best = result

    C = (B_c @ best.k).T
    R_C = C[:, n_u:]
    null_rc = sla.null_space_basis(R_C, cfg.rank_tol)
    if null_rc.basis.shape[1] != n_a - n_av:
        raise SingularTransform(
            "optimized command rows are dependent in the actuated coordinates"
        )
    R_a = np.vstack([null_rc.basis.T, R_C])
    T = np.eye(n)
    T[n_u:, n_u:] = R_a
    b_C = C @ v_star
    return VelocitySolution(
        C=C,
        b_C=b_C,
        T=T,
        R_a=R_a,
        n_av=n_av,
        cost=best.cost,
        per_start_costs=per_start_costs,
        start_converged=start_converged,
    )
