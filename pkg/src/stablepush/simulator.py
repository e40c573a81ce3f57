"""Quasi-static closed-loop pushing world.

Advances the robot under its dynamics and the object under contact rules:
while the commanded motion stays inside the sticking cone the object rides
rigidly at its current pose in the robot frame; outside the cone the
commanded object twist is clipped to the violated motion-cone edge (the
contact-normal velocity component is preserved) and the residual motion
accumulates as in-frame drift; when the drift leaves the contact window the
contact is lost and the object stops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .kinematics import (
    ControlInput,
    ObjectPose,
    RobotState,
    normalize_angle,
    object_pose_from_robot,
    rot2d,
    step_robot,
)
from .mechanics import ContactConfig, LimitSurface, curvature_bounds
from .planner import Ellipse, obstacle_constraint_residual

__all__ = [
    "Scenario",
    "TrajectorySample",
    "Metrics",
    "Trajectory",
    "slip_check",
    "step_world",
    "run_closed_loop",
    "curvature_sweep",
    "compute_metrics",
]

SEPARATION_WINDOW = 0.02  # m of normal-direction drift before contact is lost
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    """World description for one pushing episode."""

    initial_robot: RobotState
    contact: ContactConfig
    limit_surface: LimitSurface
    goal: tuple[float, float]
    obstacles: tuple[Ellipse, ...] = ()
    radii: tuple[float, float] = (0.59, 0.29)
    dt_sim: float = 0.01
    max_time: float = 60.0
    control_period: float = 0.1
    goal_tolerance: float = 0.1
    name: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.dt_sim <= 0:
            raise DomainError("dt_sim must be positive")
        if not all(map(math.isfinite, self.goal)):
            raise DomainError("goal must be finite")
        if self.control_period < self.dt_sim:
            raise DomainError("control_period must be at least dt_sim")
        obj = object_pose_from_robot(self.initial_robot, self.contact.d_ro, self.contact.y_o)
        for e in self.obstacles:
            if obstacle_constraint_residual(self.initial_robot.position, e, self.radii[0]) > 0:
                raise DomainError("initial robot position collides with an obstacle")
            if obstacle_constraint_residual(obj.position, e, self.radii[1]) > 0:
                raise DomainError("initial object position collides with an obstacle")

    @property
    def bounds(self) -> tuple[float, float]:
        return curvature_bounds(self.contact)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    robot: RobotState
    object: ObjectPose
    control: ControlInput
    contact_mode: str  # sticking | slipping | lost


@dataclass(frozen=True)
class Metrics:
    path_length: float
    elapsed_time: float
    slide_distance: float
    reposition_count: int
    success: bool
    min_obstacle_clearance: float
    reason: str = ""


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[TrajectorySample, ...]
    metrics: Metrics


# ---------------------------------------------------------------------------
# Contact rules
# ---------------------------------------------------------------------------

def slip_check(v_r: float, omega_r: float, bounds: tuple[float, float]) -> str:
    """Contact mode of a commanded robot velocity against the motion cone."""
    k_dprime, k_prime = bounds
    if v_r < -BOUNDARY_TOL:
        return "slipping"
    if k_dprime * v_r - BOUNDARY_TOL <= omega_r <= k_prime * v_r + BOUNDARY_TOL:
        return "sticking"
    return "slipping"


def _relative_pose(robot: RobotState, obj: ObjectPose) -> np.ndarray:
    """Object pose expressed in the robot frame (x, y, theta)."""
    d = rot2d(robot.theta).T @ (obj.position - robot.position)
    return np.array([d[0], d[1], normalize_angle(obj.theta - robot.theta)])


def _compose(robot: RobotState, rel: np.ndarray) -> ObjectPose:
    p = robot.position + rot2d(robot.theta) @ rel[:2]
    return ObjectPose(p[0], p[1], robot.theta + rel[2])


def _integrate_pose(obj: ObjectPose, twist: np.ndarray, dt: float) -> ObjectPose:
    """Advance a pose by a constant body-frame twist (exact SE(2) exponential)."""
    vx, vy, om = twist
    dth = om * dt
    if abs(om) < 1e-12:
        disp = np.array([vx * dt, vy * dt])
    else:
        sin_, cos_ = math.sin(dth), math.cos(dth)
        disp = np.array(
            [
                (sin_ * vx - (1.0 - cos_) * vy) / om,
                ((1.0 - cos_) * vx + sin_ * vy) / om,
            ]
        )
    world = rot2d(obj.theta) @ disp
    return ObjectPose(obj.x + world[0], obj.y + world[1], obj.theta + dth)


def _cone_edge_twist(cfg: ContactConfig, side: str) -> np.ndarray:
    """Forward-oriented motion-cone edge twist (unit v_x scale)."""
    c, s = math.cos(cfg.theta_mu), math.sin(cfg.theta_mu)
    sign = 1.0 if side == "ccw" else -1.0
    return np.array([cfg.d_ro * c, sign * cfg.d_ro * s, sign * s])


def _in_window(rel: np.ndarray, cfg: ContactConfig) -> bool:
    if rel[0] - cfg.d_ro > SEPARATION_WINDOW:
        return False
    if abs(rel[1] - cfg.y_o) > cfg.W_o / 2:
        return False
    return True


def step_world(
    robot: RobotState,
    obj: ObjectPose,
    u: ControlInput,
    scenario: Scenario,
    in_contact: bool = True,
) -> tuple[RobotState, ObjectPose, str]:
    """Advance robot and object by one dt_sim step.

    Returns the new states and the contact mode of the step: ``sticking``
    (rigid ride), ``slipping`` (cone-clipped object twist, in-frame drift) or
    ``lost`` (object parked; includes steps taken while separated).
    """
    cfg = scenario.contact
    dt = scenario.dt_sim
    robot2 = step_robot(robot, u, dt)

    if not in_contact:
        return robot2, obj, "lost"

    bounds = scenario.bounds
    mode0 = slip_check(robot.v, robot.omega, bounds)
    mode1 = slip_check(robot2.v, robot2.omega, bounds)
    rel = _relative_pose(robot, obj)

    if mode0 == "sticking" and mode1 == "sticking":
        return robot2, _compose(robot2, rel), "sticking"

    # slipping: clip the commanded twist onto the violated cone edge (the
    # ratio omega/v is monotone within the step, so the midpoint decides)
    v_mid, om_mid = 0.5 * (robot.v + robot2.v), 0.5 * (robot.omega + robot2.omega)
    commanded = np.array([v_mid - om_mid * cfg.y_o, om_mid * cfg.d_ro, om_mid])
    if commanded[0] <= 0.0:
        obj2 = obj  # pulling away or pure spin: no push transmitted
    elif slip_check(v_mid, om_mid, bounds) == "sticking":
        obj2 = _integrate_pose(obj, commanded, dt)  # only a sliver of the step slipped
    else:
        side = "ccw" if om_mid > bounds[1] * v_mid else "cw"
        edge = _cone_edge_twist(cfg, side)
        applied = edge * (commanded[0] / edge[0])
        obj2 = _integrate_pose(obj, applied, dt)

    rel2 = _relative_pose(robot2, obj2)
    if not _in_window(rel2, cfg):
        return robot2, obj2, "lost"
    return robot2, obj2, "slipping"


# ---------------------------------------------------------------------------
# Closed loop
# ---------------------------------------------------------------------------

def _clearance(p: np.ndarray, e: Ellipse, r: float) -> float:
    """Metric distance (along the center ray) outside the inflated ellipse."""
    d = p - np.asarray(e.center)
    dist = float(np.linalg.norm(d))
    if dist < 1e-12:
        return -float(min(e.semi_axes) + r)
    R = rot2d(e.orientation)
    M = np.diag([1.0 / (e.semi_axes[0] + r) ** 2, 1.0 / (e.semi_axes[1] + r) ** 2])
    s = math.sqrt(float(d @ (R @ M @ R.T) @ d))
    return dist * (1.0 - 1.0 / s)


def compute_metrics(samples, scenario: Scenario, reason: str = "") -> Metrics:
    """Episode metrics from recorded samples."""
    if not samples:
        raise DomainError("trajectory must contain at least one sample")
    cfg = scenario.contact
    nominal = np.array([cfg.d_ro, cfg.y_o])
    path = 0.0
    slide = 0.0
    clearance = math.inf
    repositions = 0
    prev_mode = None
    goal = np.asarray(scenario.goal, dtype=float)
    for i, smp in enumerate(samples):
        if i:
            path += float(np.linalg.norm(smp.robot.position - samples[i - 1].robot.position))
        rel = _relative_pose(smp.robot, smp.object)
        slide = max(slide, float(np.linalg.norm(rel[:2] - nominal)))
        for e in scenario.obstacles:
            clearance = min(clearance, _clearance(smp.robot.position, e, scenario.radii[0]))
            clearance = min(clearance, _clearance(smp.object.position, e, scenario.radii[1]))
        if smp.contact_mode == "lost" and prev_mode not in (None, "lost"):
            repositions += 1
        prev_mode = smp.contact_mode
    success = bool(np.linalg.norm(samples[-1].object.position - goal) <= scenario.goal_tolerance)
    return Metrics(
        path_length=path,
        elapsed_time=samples[-1].t - samples[0].t,
        slide_distance=slide,
        reposition_count=repositions,
        success=success,
        min_obstacle_clearance=clearance,
        reason=reason,
    )


def run_closed_loop(scenario: Scenario, controller=None) -> Trajectory:
    """Run sense-plan-act until the object reaches the goal or time runs out.

    ``controller`` is a callable (robot, object_pose, t) -> ControlInput,
    queried every control period; None applies zero input.  Deterministic.
    """
    robot = scenario.initial_robot
    obj = object_pose_from_robot(robot, scenario.contact.d_ro, scenario.contact.y_o)
    goal = np.asarray(scenario.goal, dtype=float)
    in_contact = True
    t = 0.0
    samples = [TrajectorySample(0.0, robot, obj, ControlInput(), "sticking" if in_contact else "lost")]
    n_sub = max(1, round(scenario.control_period / scenario.dt_sim))
    reason = "timeout"
    done = False

    if hasattr(controller, "reset"):
        controller.reset()

    while t < scenario.max_time - 1e-9 and not done:
        if controller is None:
            u = ControlInput(0.0, 0.0)
        else:
            try:
                u = controller(robot, obj, t)
            except Exception as exc:  # noqa: BLE001 - episode must record failures
                reason = f"controller error: {exc}"
                break
        period_mode = "sticking"
        rank = {"sticking": 0, "slipping": 1, "lost": 2}
        for _ in range(n_sub):
            robot, obj, mode = step_world(robot, obj, u, scenario, in_contact)
            if rank[mode] > rank[period_mode]:
                period_mode = mode
            if mode == "lost":
                in_contact = False
                rel = _relative_pose(robot, obj)
                if _in_window(rel, scenario.contact) and rel[0] <= scenario.contact.d_ro + 1e-9 \
                        and abs(rel[2]) < 0.35:
                    in_contact = True
            t += scenario.dt_sim
            if np.linalg.norm(obj.position - goal) <= scenario.goal_tolerance:
                reason = "goal reached"
                done = True
                break
            if t >= scenario.max_time - 1e-9:
                break
        samples.append(TrajectorySample(t, robot, obj, u, period_mode))

    metrics = compute_metrics(samples, scenario, reason)
    return Trajectory(samples=tuple(samples), metrics=metrics)


def curvature_sweep(
    scenario: Scenario,
    k_values,
    speed: float = 0.1,
    duration: float = 4.0,
) -> list[tuple[float, float]]:
    """Open-loop slide distance for pushes along constant curvatures.

    For each k the robot moves at the given speed with omega = k*speed for
    the given duration; the result is the displacement of the object's
    position in the robot frame between start and end.
    """
    results = []
    cfg = scenario.contact
    for k in k_values:
        if not math.isfinite(k):
            raise DomainError("curvature values must be finite")
        robot = replace(scenario.initial_robot, v=speed, omega=k * speed)
        obj = object_pose_from_robot(robot, cfg.d_ro, cfg.y_o)
        rel0 = _relative_pose(robot, obj)[:2]
        steps = round(duration / scenario.dt_sim)
        in_contact = True
        for _ in range(steps):
            robot, obj, mode = step_world(robot, obj, ControlInput(), scenario, in_contact)
            in_contact = mode != "lost"
        rel1 = _relative_pose(robot, obj)[:2]
        results.append((float(k), float(np.linalg.norm(rel1 - rel0))))
    return results
