"""Block tilting scenario: a palm pivots a cube over one table edge.

Frames and coordinates
----------------------
World frame W has z up.  The object frame O sits at the cube center, world
aligned at the start.  The configuration is q = [p_WO (3); q_WO (4, wxyz);
p_WH (3)] and the generalized velocity v = [xi_O (6, body twist of the
object, linear part first); v_H (3, hand velocity in W)].  The object twist
is unactuated (n_u = 6) and the hand velocity actuated (n_a = 3).

Contacts and reaction sign convention
-------------------------------------
Three point contacts stick: hand on the top face, and the two ends of the
tilting edge on the table.  The table rows of the constraint are written as
(object point) - (table anchor), so their reactions are the forces the
table applies to the object, compressive along +z in W.  The hand row is
written as (hand point) - (object point), so its reaction is the force the
object applies to the hand; that force points along the outward normal of
the top face, which is +z in O.  With these choices every contact normal
must simply stay positive, and the friction cones read

    mu * (normal component) >= d_i . (tangential component)

for eight unit ridge directions d_i in the plane of the contact.  The hand
cone is fixed in the object frame (the face normal tilts with the object),
so the hand reaction is rotated into O before the cone rows apply; the
table cones live directly in W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import GuardConditions, SystemInstance, assemble_N

Z_AXIS = np.array([0.0, 0.0, 1.0])

# Unit ridge directions of the eight-sided friction pyramids.
RIDGE_DIRECTIONS = np.array(
    [[math.sin(math.pi * i / 4.0), math.cos(math.pi * i / 4.0), 0.0] for i in range(1, 9)]
)


# ---------------------------------------------------------------------------
# Quaternion helpers, scalar-first (w, x, y, z), Hamilton convention.


def skew(p: np.ndarray) -> np.ndarray:
    x, y, z = p
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, av = a[0], a[1:]
    bw, bv = b[0], b[1:]
    return np.concatenate([[aw * bw - av @ bv], aw * bv + bw * av + np.cross(av, bv)])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def quat_to_rotation(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion.

    The expression is homogeneous of degree two in q, which keeps it smooth
    off the unit sphere; that is what makes the constraint Jacobian below a
    plain partial derivative in all ten configuration coordinates.
    """
    w, x, y, z = q
    return np.array(
        [
            [w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z],
        ]
    )


def rotation_point_derivative(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """d(R(q) p)/dq as a 3 x 4 matrix, for the homogeneous R above."""
    w, v = q[0], q[1:]
    p = np.asarray(p, dtype=float)
    col0 = 2.0 * (w * p + np.cross(v, p))
    block = 2.0 * ((v @ p) * np.eye(3) + np.outer(v, p) - np.outer(p, v) - w * skew(p))
    return np.hstack([col0[:, None], block])


def quat_rate_map(q: np.ndarray) -> np.ndarray:
    """Map body angular velocity to quaternion rate: q_dot = E(q) omega."""
    q = np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > 1e-9:
        raise ValueError("quaternion must be unit length")
    q0, q1, q2, q3 = q
    return 0.5 * np.array(
        [
            [-q1, -q2, -q3],
            [q0, -q3, q2],
            [q3, q0, -q1],
            [-q2, q1, q0],
        ]
    )


# ---------------------------------------------------------------------------
# Scenario and state.


@dataclass
class TiltingScenario:
    """Geometry, friction and motion plan for one tilting task.

    Vector defaults depend on edge_length, so they are resolved after
    construction: hand contact at the center of the top face, table contacts
    at the ends of an edge centered on the world origin, rotation axis along
    that edge pointing so positive tilt lifts the far side of the block.
    """

    edge_length: float = 0.075
    mu_hand: float = 0.8
    mu_table: float = 0.8
    n_min: float = 0.5
    gravity_object: np.ndarray = None
    gravity_hand: np.ndarray = None
    hand_contact_obj: np.ndarray = None
    table_contacts: np.ndarray = None
    rotation_axis: np.ndarray = None
    tilt_rate: float = math.pi / 30.0
    num_steps: int = 15
    step_duration: float = 1.0

    def __post_init__(self):
        half = 0.5 * self.edge_length
        if self.gravity_object is None:
            self.gravity_object = np.array([0.0, 0.0, -2.45])
        if self.gravity_hand is None:
            self.gravity_hand = np.zeros(3)
        if self.hand_contact_obj is None:
            self.hand_contact_obj = np.array([0.0, 0.0, half])
        if self.table_contacts is None:
            self.table_contacts = np.array([[0.0, -half, 0.0], [0.0, half, 0.0]])
        if self.rotation_axis is None:
            self.rotation_axis = np.array([0.0, -1.0, 0.0])
        self.gravity_object = np.asarray(self.gravity_object, dtype=float).reshape(3)
        self.gravity_hand = np.asarray(self.gravity_hand, dtype=float).reshape(3)
        self.hand_contact_obj = np.asarray(self.hand_contact_obj, dtype=float).reshape(3)
        self.table_contacts = np.asarray(self.table_contacts, dtype=float).reshape(2, 3)
        axis = np.asarray(self.rotation_axis, dtype=float).reshape(3)
        self.rotation_axis = axis / np.linalg.norm(axis)


@dataclass(frozen=True)
class Pose:
    p: np.ndarray
    quat: np.ndarray


@dataclass(frozen=True)
class TiltingState:
    object_pose: Pose
    hand_position: np.ndarray


def initial_state(scenario: TiltingScenario) -> TiltingState:
    """Block resting flat against the contact edge, object frame world aligned."""
    axis = scenario.rotation_axis
    block_dir = np.cross(Z_AXIS, axis)
    norm = np.linalg.norm(block_dir)
    if norm < 1e-9:
        raise ValueError("rotation axis must be horizontal")
    block_dir = block_dir / norm
    half = 0.5 * scenario.edge_length
    edge_mid = scenario.table_contacts.mean(axis=0)
    p0 = edge_mid + half * block_dir + half * Z_AXIS
    quat0 = np.array([1.0, 0.0, 0.0, 0.0])
    hand0 = p0 + scenario.hand_contact_obj
    return TiltingState(Pose(p0, quat0), hand0)


def table_contacts_object_frame(scenario: TiltingScenario) -> np.ndarray:
    """Table contact points in O, fixed once the initial pose is fixed."""
    p0 = initial_state(scenario).object_pose.p
    return scenario.table_contacts - p0


def state_vector(state: TiltingState) -> np.ndarray:
    return np.concatenate([state.object_pose.p, state.object_pose.quat, state.hand_position])


def omega_map(state: TiltingState) -> np.ndarray:
    """Map v = [xi_O; v_H] to q_dot: block diag of R_WO, E(q), identity."""
    R = quat_to_rotation(state.object_pose.quat)
    E = quat_rate_map(state.object_pose.quat)
    Omega = np.zeros((10, 9))
    Omega[:3, :3] = R
    Omega[3:7, 3:6] = E
    Omega[7:, 6:] = np.eye(3)
    return Omega


def goal_twist(state: TiltingState, scenario: TiltingScenario):
    """Goal rows pinning the object body twist to the planned tilt.

    The plan rotates the object about the contact edge at the scenario tilt
    rate.  The spatial twist of that motion is mapped to the body frame of
    the current pose, and G selects the (unactuated) object twist.
    """
    R = quat_to_rotation(state.object_pose.quat)
    p = state.object_pose.p
    omega_s = scenario.rotation_axis * scenario.tilt_rate
    v_s = -np.cross(scenario.rotation_axis, scenario.table_contacts[0]) * scenario.tilt_rate
    v_b = R.T @ v_s - R.T @ skew(p) @ omega_s
    omega_b = R.T @ omega_s
    G = np.hstack([np.eye(6), np.zeros((6, 3))])
    return G, np.concatenate([v_b, omega_b])


def hand_arc_velocity(state: TiltingState, scenario: TiltingScenario) -> np.ndarray:
    """Planned world-frame hand velocity: circular arc about the contact edge."""
    r = state.hand_position - scenario.table_contacts[0]
    return scenario.tilt_rate * np.cross(scenario.rotation_axis, r)


# ---------------------------------------------------------------------------
# Holonomic constraints.


def constraint_value(q: np.ndarray, hand_contact_obj, table_contacts_obj, table_contacts_world) -> np.ndarray:
    """Sticking-contact residuals as a function of the raw configuration.

    Rows 0:3 hand contact (hand point minus object material point), rows 3:9
    the two table contacts (object material point minus world anchor).
    """
    p_o = q[:3]
    quat = q[3:7]
    p_h = q[7:]
    R = quat_to_rotation(quat)
    rows = [p_h - (R @ hand_contact_obj + p_o)]
    for p_obj, p_world in zip(table_contacts_obj, table_contacts_world):
        rows.append(R @ p_obj + p_o - p_world)
    return np.concatenate(rows)


def constraint_jacobian(q: np.ndarray, hand_contact_obj, table_contacts_obj) -> np.ndarray:
    """Partial derivative of constraint_value with respect to all ten coordinates."""
    quat = q[3:7]
    J = np.zeros((9, 10))
    J[:3, :3] = -np.eye(3)
    J[:3, 3:7] = -rotation_point_derivative(quat, hand_contact_obj)
    J[:3, 7:] = np.eye(3)
    for i, p_obj in enumerate(table_contacts_obj):
        r = slice(3 + 3 * i, 6 + 3 * i)
        J[r, :3] = np.eye(3)
        J[r, 3:7] = rotation_point_derivative(quat, p_obj)
    return J


def holonomic_jacobian(state: TiltingState, scenario: TiltingScenario):
    """Constraint residual and Jacobian at a state; residual is zero on plan."""
    q = state_vector(state)
    contacts_obj = table_contacts_object_frame(scenario)
    phi = constraint_value(q, scenario.hand_contact_obj, contacts_obj, scenario.table_contacts)
    J = constraint_jacobian(q, scenario.hand_contact_obj, contacts_obj)
    return phi, J


# ---------------------------------------------------------------------------
# Guard conditions.


def guard_conditions(state: TiltingState, scenario: TiltingScenario) -> GuardConditions:
    """Friction cones and minimum normal forces for the three contacts.

    Reactions stack as lambda = [hand (on hand, W); table 1; table 2 (on
    object, W)].  24 cone rows come first (8 ridges per contact), then the
    three normal lower bounds.  No guard equalities.
    """
    R_wo = quat_to_rotation(state.object_pose.quat)
    to_object = R_wo.T
    n_cols = 9 + 9
    Lambda = np.zeros((27, n_cols))
    cone_hand = (RIDGE_DIRECTIONS - scenario.mu_hand * Z_AXIS) @ to_object
    cone_table = RIDGE_DIRECTIONS - scenario.mu_table * Z_AXIS
    Lambda[0:8, 0:3] = cone_hand
    Lambda[8:16, 3:6] = cone_table
    Lambda[16:24, 6:9] = cone_table
    Lambda[24, 0:3] = -Z_AXIS @ to_object
    Lambda[25, 3:6] = -Z_AXIS
    Lambda[26, 6:9] = -Z_AXIS
    b_Lambda = np.concatenate([np.zeros(24), np.full(3, -scenario.n_min)])
    return GuardConditions(Lambda, b_Lambda, np.zeros((0, n_cols)), np.zeros(0))


# ---------------------------------------------------------------------------
# Instance assembly and state propagation.


def build_instance(state: TiltingState, scenario: TiltingScenario):
    """System instance plus guard conditions for one step of the plan."""
    _, J_phi = holonomic_jacobian(state, scenario)
    Omega = omega_map(state)
    N = assemble_N(J_phi, Omega)
    G, b_G = goal_twist(state, scenario)
    R_wo = quat_to_rotation(state.object_pose.quat)
    # Object gravity as a body wrench; the object frame sits at the center
    # of mass, so the torque part vanishes.
    F = np.concatenate([R_wo.T @ scenario.gravity_object, np.zeros(3), scenario.gravity_hand])
    instance = SystemInstance(
        n_u=6, n_a=3, N=N, G=G, b_G=b_G, F=F, J_phi=J_phi, Omega=Omega
    )
    return instance, guard_conditions(state, scenario)


def advance_state(state: TiltingState, scenario: TiltingScenario, dt: float) -> TiltingState:
    """Rotate object and hand about the contact edge by tilt_rate * dt."""
    angle = scenario.tilt_rate * dt
    dq = quat_from_axis_angle(scenario.rotation_axis, angle)
    R = quat_to_rotation(dq)
    pivot = scenario.table_contacts[0]
    p_new = pivot + R @ (state.object_pose.p - pivot)
    quat_new = quat_multiply(dq, state.object_pose.quat)
    quat_new = quat_new / np.linalg.norm(quat_new)
    hand_new = pivot + R @ (state.hand_position - pivot)
    return TiltingState(Pose(p_new, quat_new), hand_new)


def rollout_states(scenario: TiltingScenario) -> list[TiltingState]:
    """The num_steps states at which actions are synthesized, plan order."""
    states = [initial_state(scenario)]
    for _ in range(scenario.num_steps - 1):
        states.append(advance_state(states[-1], scenario, scenario.step_duration))
    return states
