"""Independent checks of solver outputs.

Everything here re-derives its reference quantities from the raw problem
data.  Rank and null-space computations go through subspace_linalg, the
minimum-norm reference uses the pseudoinverse projection formula rather
than the solver's KKT path, and the brute-force force oracle rebuilds the
force-balance equalities on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import subspace_linalg as sla
from .errors import InconsistentSystem
from .force_solver import ForceSolution
from .model import GuardConditions, SystemInstance, unactuated_selector
from .velocity_solver import VelocitySolution

VELOCITY_TOL = 1e-6


@dataclass
class VelocityCheck:
    passed: bool
    rank_nc: int
    rank_ng: int
    null_goal_residual: float
    cross_residual_goal: float
    cross_residual_command: float
    command_variation: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "rank_nc": self.rank_nc,
            "rank_ng": self.rank_ng,
            "null_goal_residual": self.null_goal_residual,
            "cross_residual_goal": self.cross_residual_goal,
            "cross_residual_command": self.cross_residual_command,
            "command_variation": self.command_variation,
            "notes": list(self.notes),
        }


@dataclass
class ForceCheck:
    passed: bool
    newton_residual: float
    unactuated_residual: float
    gamma_residual: float
    min_guard_margin: float
    guard_margins: np.ndarray
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "newton_residual": self.newton_residual,
            "unactuated_residual": self.unactuated_residual,
            "gamma_residual": self.gamma_residual,
            "min_guard_margin": self.min_guard_margin,
            "guard_margins": self.guard_margins.tolist(),
            "notes": list(self.notes),
        }


@dataclass
class VerificationReport:
    velocity: VelocityCheck | None = None
    force: ForceCheck | None = None

    @property
    def passed(self) -> bool:
        ok = True
        if self.velocity is not None:
            ok = ok and self.velocity.passed
        if self.force is not None:
            ok = ok and self.force.passed
        return ok

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "velocity": None if self.velocity is None else self.velocity.to_dict(),
            "force": None if self.force is None else self.force.to_dict(),
        }


def check_velocity_solution(
    instance: SystemInstance,
    solution: VelocitySolution,
    rel_tol: float = sla.DEFAULT_RANK_TOL,
    samples: int = 32,
    seed: int = 0,
) -> VelocityCheck:
    """Confirm that commanding C v = b_C pins exactly the goal down.

    Checks that [N; C] spans the same row space as [N; G], that the two
    particular solutions satisfy each other's equations, and that C v is
    constant across sampled velocities compatible with constraints and goal.
    """
    N, G, C = instance.N, instance.G, solution.C
    notes: list[str] = []
    if solution.n_av == 0:
        notes.append("no velocity-controlled directions; nothing to check")
        return VelocityCheck(True, 0, 0, 0.0, 0.0, 0.0, 0.0, notes)

    rank_ng = sla.numerical_rank(np.vstack([N, G]), rel_tol)
    rank_nc = sla.numerical_rank(np.vstack([N, C]), rel_tol)
    ok = rank_nc == rank_ng

    # Every velocity that satisfies constraints plus command must move the goal.
    null_nc = sla.null_space_basis(np.vstack([N, C]), rel_tol).basis
    null_goal_residual = float(np.max(np.abs(G @ null_nc))) if null_nc.size else 0.0
    ok = ok and null_goal_residual <= VELOCITY_TOL

    zeros_n = np.zeros(N.shape[0])
    cross_goal = cross_cmd = np.inf
    try:
        v_cmd = sla.min_norm_solution(np.vstack([N, C]), np.concatenate([zeros_n, solution.b_C]))
        cross_goal = float(np.linalg.norm(G @ v_cmd - instance.b_G))
    except InconsistentSystem:
        notes.append("command system inconsistent")
    try:
        v_goal = sla.min_norm_solution(np.vstack([N, G]), np.concatenate([zeros_n, instance.b_G]))
        cross_cmd = float(np.linalg.norm(C @ v_goal - solution.b_C))
    except InconsistentSystem:
        notes.append("goal system inconsistent")
    ok = ok and cross_goal <= VELOCITY_TOL and cross_cmd <= VELOCITY_TOL

    # C v must be the same for every velocity compatible with the goal.
    variation = 0.0
    if np.isfinite(cross_cmd):
        null_ng = sla.null_space_basis(np.vstack([N, G]), rel_tol).basis
        if null_ng.shape[1]:
            rng = np.random.default_rng(seed)
            weights = rng.standard_normal((null_ng.shape[1], samples))
            sampled = v_goal[:, None] + null_ng @ weights
            variation = float(np.max(np.abs(C @ sampled - solution.b_C[:, None])))
        ok = ok and variation <= VELOCITY_TOL

    return VelocityCheck(
        passed=bool(ok),
        rank_nc=rank_nc,
        rank_ng=rank_ng,
        null_goal_residual=null_goal_residual,
        cross_residual_goal=cross_goal,
        cross_residual_command=cross_cmd,
        command_variation=variation,
        notes=notes,
    )


def _force_equalities(instance: SystemInstance, guard: GuardConditions, T: np.ndarray, n_av: int):
    """Independent reconstruction of the force-stage equality system.

    Returns (M_free, M_eta_f, rhs) over the unknowns [lambda; eta_u;
    eta_av] and eta_af, mirroring the physics without importing the solver
    assembly.
    """
    n, n_u, n_phi = instance.n, instance.n_u, instance.n_phi
    n_af = instance.n_a - n_av
    T = np.asarray(T, dtype=float)
    T_inv = np.linalg.inv(T)
    H = unactuated_selector(n_u, n)
    stacked = np.vstack(
        [
            np.hstack([np.zeros((n_u, n_phi)), H @ T_inv]),
            np.hstack([T @ instance.N.T, np.eye(n)]),
            np.hstack([guard.Gamma[:, :n_phi], guard.Gamma[:, n_phi:] @ T_inv]),
        ]
    )
    rhs = np.concatenate([np.zeros(n_u), -T @ instance.F, guard.b_Gamma])
    free = list(range(n_phi + n_u)) + list(range(n_phi + n_u + n_af, n_phi + n))
    af = list(range(n_phi + n_u, n_phi + n_u + n_af))
    return stacked[:, free], stacked[:, af], rhs


def min_norm_projection(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm solution by pseudoinverse projection (reference path)."""
    return np.linalg.pinv(M) @ rhs


def check_force_solution(
    instance: SystemInstance,
    guard: GuardConditions,
    T: np.ndarray,
    solution: ForceSolution,
) -> ForceCheck:
    """Recompute force balance residuals and guard margins from raw data."""
    T = np.asarray(T, dtype=float)
    lam, eta = solution.lam, solution.eta
    newton = T @ instance.N.T @ lam + eta + T @ instance.F
    newton_residual = float(np.linalg.norm(newton))
    scale = 1.0 + float(np.linalg.norm(T @ instance.F))
    unactuated_residual = float(np.linalg.norm(eta[: instance.n_u]))
    f_gen = np.linalg.solve(T, eta)
    stacked_force = np.concatenate([lam, f_gen])
    gamma_residual = (
        float(np.linalg.norm(guard.Gamma @ stacked_force - guard.b_Gamma))
        if guard.n_eq
        else 0.0
    )
    margins = guard.b_Lambda - guard.Lambda @ stacked_force
    min_margin = float(np.min(margins)) if margins.size else np.inf
    ok = (
        newton_residual <= 1e-6 * scale
        and unactuated_residual <= 1e-8
        and gamma_residual <= 1e-6
        and (not margins.size or min_margin >= -1e-8)
    )
    return ForceCheck(
        passed=bool(ok),
        newton_residual=newton_residual,
        unactuated_residual=unactuated_residual,
        gamma_residual=gamma_residual,
        min_guard_margin=min_margin,
        guard_margins=margins,
        notes=[],
    )


def brute_force_force_oracle(
    instance: SystemInstance,
    guard: GuardConditions,
    T: np.ndarray,
    n_av: int,
    grid_resolution: float = 0.25,
    f_max: float = 50.0,
):
    """Best worst-case guard margin over a grid of force commands.

    For each grid point eta_af the free forces are resolved with the
    pseudoinverse projection (independent of the solver's KKT route); the
    margins are affine in eta_af so the whole grid is evaluated at once.
    Returns (best_margin, best_eta_af).
    """
    n_af = instance.n_a - n_av
    M_free, M_eta_f, rhs = _force_equalities(instance, guard, T, n_av)
    if n_af > 3:
        raise ValueError("grid oracle supports at most three force command axes")
    pinv = np.linalg.pinv(M_free)
    f0 = pinv @ rhs
    W = -pinv @ M_eta_f

    n, n_u, n_phi = instance.n, instance.n_u, instance.n_phi
    T_inv = np.linalg.inv(np.asarray(T, dtype=float))

    # Margins as affine functions of eta_af through [lambda; T^-1 eta].
    m_free = n_phi + n_u + n_av
    E_free = np.zeros((n, m_free))
    E_free[:n_u, n_phi : n_phi + n_u] = np.eye(n_u)
    E_free[n_u + n_af :, n_phi + n_u :] = np.eye(n_av)
    E_af = np.zeros((n, n_af))
    E_af[n_u : n_u + n_af, :] = np.eye(n_af)
    S_lam = np.zeros((n_phi, m_free))
    S_lam[:, :n_phi] = np.eye(n_phi)

    stack_const = np.concatenate([S_lam @ f0, T_inv @ E_free @ f0])
    stack_lin = np.vstack([S_lam @ W, T_inv @ (E_free @ W + E_af)])

    if n_af == 0:
        grid = np.zeros((1, 0))
    else:
        axis = np.arange(-f_max, f_max + 0.5 * grid_resolution, grid_resolution)
        mesh = np.meshgrid(*([axis] * n_af), indexing="ij")
        grid = np.stack([m.reshape(-1) for m in mesh], axis=1)

    if guard.n_ineq:
        margin_const = guard.b_Lambda - guard.Lambda @ stack_const
        margin_lin = -guard.Lambda @ stack_lin
        margins = margin_const[None, :] + grid @ margin_lin.T
        worst = margins.min(axis=1)
    else:
        # Match the solver's convention: the box bound defines the margin.
        worst = f_max - (np.abs(grid).max(axis=1) if n_af else np.zeros(1))
    best = int(np.argmax(worst))
    return float(worst[best]), grid[best]
