"""Force stage: solve for contact reactions and the force command.

In the action frame the quasi-static force balance reads

    T N^T lambda + eta + T F = 0,        eta = T f,

with the unactuated block of eta forced to zero (nothing actuates those
coordinates) and any guard equalities Gamma [lambda; f] = b_Gamma appended.
Everything except the force command eta_af is a "free" force the physics
determines: f_free = [lambda; eta_u; eta_av].  Given eta_af, the free
forces are resolved as the minimum-norm solution of the stacked equality
system, written as a KKT system so the LP below can keep it as linear
equalities while optimizing eta_af.

The command itself maximizes the worst guard margin s subject to the KKT
equalities, Lambda [lambda; f] <= b_Lambda - s, and |eta_af| <= f_max.
With at least one guard row the margin is bounded because eta_af is boxed;
with no guard rows the box rows take over and the margin sits at the box
bound.  The margin optimum can be degenerate (several commands achieve the
same worst margin), so a second phase picks, among the margin-maximal
commands, the one of least actuator effort: minimal l1 norm of the
actuated force in the original coordinates.  That keeps the result
deterministic and free of gratuitous force components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import subspace_linalg as sla
from .errors import InfeasibleLP, SingularSystem, SingularTransform
from .model import GuardConditions, SystemInstance, unactuated_selector

# Condition ceiling for the action-frame transform.
MAX_T_CONDITION = 1e10


@dataclass
class ForceSolverConfig:
    f_max: float = 50.0
    feasibility_tol: float = 1e-9


@dataclass
class NewtonAssembly:
    """Stacked force-balance equalities split by decision role.

    M_free multiplies f_free = [lambda; eta_u; eta_av], M_eta_f multiplies
    the force command eta_af, and rhs collects the constant side
    [0; -T F; b_Gamma].
    """

    M_free: np.ndarray
    M_eta_f: np.ndarray
    rhs: np.ndarray
    free_force_layout: list[str]
    T: np.ndarray
    T_inv: np.ndarray
    n_phi: int
    n_u: int
    n_av: int
    n_af: int
    n: int


@dataclass
class ForceSolution:
    eta_af: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    f_free_dual: np.ndarray
    guard_margins: np.ndarray
    objective_margin: float


def _check_transform(T: np.ndarray, n: int) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.shape != (n, n):
        raise ValueError(f"T must be {n} x {n}, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("T contains non-finite entries")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond >= MAX_T_CONDITION:
        raise SingularTransform(f"transform T is not invertible (cond {cond:.3e})")
    return np.linalg.solve(T, np.eye(n))


def assemble_newton(
    instance: SystemInstance,
    guard: GuardConditions,
    T: np.ndarray,
    n_av: int,
) -> NewtonAssembly:
    """Stack the force-balance, unactuated-zero and guard-equality rows."""
    n, n_u = instance.n, instance.n_u
    n_phi = instance.n_phi
    n_af = instance.n_a - n_av
    if n_af < 0:
        raise ValueError("n_av exceeds the number of actuated dimensions")
    T = np.asarray(T, dtype=float)
    T_inv = _check_transform(T, n)

    H = unactuated_selector(n_u, n)
    rows_h = np.hstack([np.zeros((n_u, n_phi)), H @ T_inv])
    rows_newton = np.hstack([T @ instance.N.T, np.eye(n)])
    rows_gamma = np.hstack([guard.Gamma[:, :n_phi], guard.Gamma[:, n_phi:] @ T_inv])
    stacked = np.vstack([rows_h, rows_newton, rows_gamma])
    rhs = np.concatenate([np.zeros(n_u), -T @ instance.F, guard.b_Gamma])

    free_cols = (
        list(range(n_phi))
        + list(range(n_phi, n_phi + n_u))
        + list(range(n_phi + n_u + n_af, n_phi + n))
    )
    af_cols = list(range(n_phi + n_u, n_phi + n_u + n_af))
    layout = (
        [f"lambda[{i}]" for i in range(n_phi)]
        + [f"eta_u[{i}]" for i in range(n_u)]
        + [f"eta_av[{i}]" for i in range(n_av)]
    )
    return NewtonAssembly(
        M_free=stacked[:, free_cols],
        M_eta_f=stacked[:, af_cols],
        rhs=rhs,
        free_force_layout=layout,
        T=T,
        T_inv=T_inv,
        n_phi=n_phi,
        n_u=n_u,
        n_av=n_av,
        n_af=n_af,
        n=n,
    )


def build_kkt(assembly: NewtonAssembly):
    """KKT system for min ||f_free||^2 s.t. M_free f_free = rhs - M_eta_f eta_af.

    Returns (K, kkt_rhs_const, kkt_rhs_eta_map) with
    K @ [f_free; f_dual] = kkt_rhs_const - kkt_rhs_eta_map @ eta_af.
    """
    m = assembly.M_free.shape[1]
    r = assembly.M_free.shape[0]
    K = np.zeros((m + r, m + r))
    K[:m, :m] = 2.0 * np.eye(m)
    K[:m, m:] = assembly.M_free.T
    K[m:, :m] = assembly.M_free
    kkt_rhs_const = np.concatenate([np.zeros(m), assembly.rhs])
    kkt_rhs_eta_map = np.vstack([np.zeros((m, assembly.n_af)), assembly.M_eta_f])
    return K, kkt_rhs_const, kkt_rhs_eta_map


def solve_kkt(assembly: NewtonAssembly, eta_af: np.ndarray) -> np.ndarray:
    """Free forces for a fixed force command (minimum-norm resolution)."""
    K, rhs_const, rhs_map = build_kkt(assembly)
    x = sla.solve_square(K, rhs_const - rhs_map @ np.asarray(eta_af, dtype=float))
    return x[: assembly.M_free.shape[1]]


def _eta_maps(assembly: NewtonAssembly):
    """Selectors assembling eta = E_free @ f_free + E_af @ eta_af."""
    n, n_u, n_av, n_af, n_phi = (
        assembly.n,
        assembly.n_u,
        assembly.n_av,
        assembly.n_af,
        assembly.n_phi,
    )
    m = n_phi + n_u + n_av
    E_free = np.zeros((n, m))
    E_free[:n_u, n_phi : n_phi + n_u] = np.eye(n_u)
    E_free[n_u + n_af :, n_phi + n_u :] = np.eye(n_av)
    E_af = np.zeros((n, n_af))
    E_af[n_u : n_u + n_af, :] = np.eye(n_af)
    return E_free, E_af


def _least_effort_at_margin(A_eq, b_eq, A_ub, b_ub, bounds, assembly, s_star, cfg):
    """Among commands achieving the optimal margin, minimize actuator effort.

    The margin maximum is often degenerate: a whole face of commands can
    achieve the same worst margin, and the vertex the solver happens to
    return may carry force components the guards never asked for.  This
    second pass pins the margin variable just below the phase-one optimum
    and minimizes the l1 norm of the actuated generalized force in the
    original coordinates, zeroing anything the guard rows do not demand.
    Returns the refined solution in the phase-one layout, or None when the
    refinement fails numerically (the phase-one vertex is then kept).
    """
    r, m = assembly.M_free.shape
    n_af = assembly.n_af
    n_act = assembly.n - assembly.n_u
    nz = m + r + n_af + 1
    E_free, E_af = _eta_maps(assembly)
    W_free = (assembly.T_inv @ E_free)[assembly.n_u :]
    W_af = (assembly.T_inv @ E_af)[assembly.n_u :]
    # Actuated force rows of f = T_inv eta as a function of the LP vector.
    F_rows = np.zeros((n_act, nz))
    F_rows[:, :m] = W_free
    F_rows[:, m + r : m + r + n_af] = W_af
    A_eq2 = np.hstack([A_eq, np.zeros((A_eq.shape[0], n_act))])
    top = np.hstack([A_ub, np.zeros((A_ub.shape[0], n_act))])
    up = np.hstack([F_rows, -np.eye(n_act)])
    lo = np.hstack([-F_rows, -np.eye(n_act)])
    A_ub2 = np.vstack([top, up, lo])
    b_ub2 = np.concatenate([b_ub, np.zeros(2 * n_act)])
    s_target = s_star - 1e-9 * (1.0 + abs(s_star))
    bounds2 = list(bounds[:-1]) + [(s_target, None)] + [(0.0, None)] * n_act
    c = np.zeros(nz + n_act)
    c[nz:] = 1.0
    res = linprog(
        c, A_ub=A_ub2, b_ub=b_ub2, A_eq=A_eq2, b_eq=b_eq, bounds=bounds2, method="highs"
    )
    if not res.success:
        return None
    return res.x[:nz]


def solve_force(
    instance: SystemInstance,
    guard: GuardConditions,
    T: np.ndarray,
    n_av: int,
    config: ForceSolverConfig | None = None,
) -> ForceSolution:
    """Maximize the worst guard margin over the force command eta_af."""
    cfg = config or ForceSolverConfig()
    assembly = assemble_newton(instance, guard, T, n_av)
    r, m = assembly.M_free.shape
    if sla.numerical_rank(assembly.M_free) < r:
        raise SingularSystem(
            "equality rows are rank deficient; free forces are not uniquely determined"
        )
    K, rhs_const, rhs_map = build_kkt(assembly)
    n_af = assembly.n_af
    n_phi = assembly.n_phi

    # Decision vector z = [f_free (m); f_dual (r); eta_af (n_af); s (1)].
    nz = m + r + n_af + 1
    A_eq = np.zeros((m + r, nz))
    A_eq[:, : m + r] = K
    A_eq[:, m + r : m + r + n_af] = rhs_map
    b_eq = rhs_const

    E_free, E_af = _eta_maps(assembly)
    n_ineq = guard.n_ineq
    if n_ineq:
        # Lambda acts on [lambda; f] with f = T_inv eta.
        lam_rows = guard.Lambda[:, :n_phi]
        f_rows = guard.Lambda[:, n_phi:] @ assembly.T_inv
        A_ub = np.zeros((n_ineq, nz))
        A_ub[:, :n_phi] = lam_rows
        A_ub[:, :m] += f_rows @ E_free
        A_ub[:, m + r : m + r + n_af] = f_rows @ E_af
        A_ub[:, -1] = 1.0
        b_ub = guard.b_Lambda.copy()
    else:
        # No guard rows: let the box bounds define the margin.
        if n_af:
            A_ub = np.zeros((2 * n_af, nz))
            for j in range(n_af):
                A_ub[2 * j, m + r + j] = 1.0
                A_ub[2 * j + 1, m + r + j] = -1.0
            A_ub[:, -1] = 1.0
            b_ub = np.full(2 * n_af, cfg.f_max)
        else:
            A_ub = np.zeros((1, nz))
            A_ub[0, -1] = 1.0
            b_ub = np.array([cfg.f_max])

    bounds = [(None, None)] * (m + r) + [(-cfg.f_max, cfg.f_max)] * n_af + [(None, None)]
    c = np.zeros(nz)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleLP("no force command satisfies the guard conditions")
    if not res.success:
        raise SingularSystem(f"force LP failed: {res.message}")

    z = res.x
    s = float(z[-1])
    if s < -cfg.feasibility_tol:
        raise InfeasibleLP(
            f"best achievable guard margin is {s:.6e}", margin=s
        )
    if n_af:
        refined = _least_effort_at_margin(A_eq, b_eq, A_ub, b_ub, bounds, assembly, s, cfg)
        if refined is not None:
            z = refined
    f_free = z[:m]
    f_dual = z[m : m + r]
    eta_af = z[m + r : m + r + n_af]
    lam = f_free[:n_phi]
    eta = E_free @ f_free + E_af @ eta_af
    f_gen = assembly.T_inv @ eta
    margins = guard.b_Lambda - guard.Lambda @ np.concatenate([lam, f_gen])
    return ForceSolution(
        eta_af=eta_af,
        lam=lam,
        eta=eta,
        f_free_dual=f_dual,
        guard_margins=margins,
        objective_margin=s,
    )
