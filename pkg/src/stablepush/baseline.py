"""Reactive pushing baseline.

Alignment-principle controller: keep robot, object and goal in a line and
push forward; when the contact is lost, reposition to the pushing pose
behind the object (relative to the goal) and re-engage.  The controller
deliberately ignores the motion cone, so aggressive corrections shed the
object and trigger repositioning, which is the behaviour it is meant to
exhibit as a comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kinematics import ControlInput, InputLimits, ObjectPose, RobotState, normalize_angle
from .simulator import Scenario, Trajectory, _in_window, _relative_pose, run_closed_loop

__all__ = ["ReactiveGains", "reactive_control", "ReactiveController", "run_reactive_episode"]


@dataclass(frozen=True)
class ReactiveGains:
    """The five tunables of the reactive strategy."""

    k_align: float = 1.2       # heading error -> turn-rate demand
    k_approach: float = 2.0    # speed-tracking gain
    k_turn: float = 4.0        # turn-rate tracking gain
    reposition_clearance: float = 0.8  # stand-off distance behind the object (m)
    v_push: float = 0.4        # nominal pushing speed (m/s)

    def __post_init__(self):
        if min(self.k_align, self.k_approach, self.k_turn) <= 0:
            raise DomainError("gains must be positive")
        if self.reposition_clearance <= 0 or self.v_push <= 0:
            raise DomainError("clearance and push speed must be positive")


def _clip(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def _accel_toward(
    robot: RobotState, v_des: float, om_des: float, gains: ReactiveGains, limits: InputLimits
) -> ControlInput:
    v_des = _clip(v_des, -limits.v_max, limits.v_max)
    om_des = _clip(om_des, -limits.omega_max, limits.omega_max)
    a = _clip(gains.k_approach * (v_des - robot.v), -limits.a_max, limits.a_max)
    xi = _clip(gains.k_turn * (om_des - robot.omega), -limits.xi_max, limits.xi_max)
    return ControlInput(a, xi)


def reactive_control(
    robot: RobotState,
    obj: ObjectPose,
    goal,
    gains: ReactiveGains,
    limits: InputLimits = InputLimits(),
    d_ro: float = 0.66,
    in_contact: bool = True,
) -> ControlInput:
    """One reactive control decision; always returns a bounded input."""
    goal = np.asarray(goal, dtype=float)
    if in_contact:
        # push: steer so the object's movement direction points at the goal
        bearing = math.atan2(goal[1] - obj.y, goal[0] - obj.x)
        err = normalize_angle(bearing - robot.theta)
        v_des = gains.v_push * max(0.25, math.cos(err))
        om_des = gains.k_align * err
        return _accel_toward(robot, v_des, om_des, gains, limits)

    # reposition: reach the pushing pose behind the object w.r.t. the goal
    to_goal = goal - obj.position
    dist_goal = float(np.linalg.norm(to_goal))
    back = -to_goal / dist_goal if dist_goal > 1e-9 else np.array([-1.0, 0.0])
    staging = obj.position + (d_ro + gains.reposition_clearance) * back

    to_obj = obj.position - robot.position
    dist_obj = float(np.linalg.norm(to_obj))
    to_stage = staging - robot.position
    dist_stage = float(np.linalg.norm(to_stage))

    if dist_stage > 0.18:
        # drive to the staging point, reversing when it lies behind the robot
        bearing = math.atan2(to_stage[1], to_stage[0])
        err = normalize_angle(bearing - robot.theta)
        if abs(err) > math.pi / 2:
            err_rev = normalize_angle(bearing + math.pi - robot.theta)
            v_des = -gains.v_push * 0.6
            om_des = gains.k_align * err_rev
        else:
            v_des = gains.v_push * max(0.25, math.cos(err)) * min(1.0, dist_stage)
            om_des = gains.k_align * err
            # skirt the parked object instead of driving through it
            if dist_obj < gains.reposition_clearance and dist_obj > 1e-9:
                obj_bearing = normalize_angle(math.atan2(to_obj[1], to_obj[0]) - robot.theta)
                if abs(obj_bearing) < math.pi / 3:
                    om_des -= math.copysign(gains.k_align, obj_bearing) * (
                        1.0 - dist_obj / gains.reposition_clearance
                    ) * 2.0
                    v_des *= 0.5
        return _accel_toward(robot, v_des, om_des, gains, limits)

    # at the staging point: face the object, then creep in to re-engage
    bearing = math.atan2(to_obj[1], to_obj[0])
    err = normalize_angle(bearing - robot.theta)
    if abs(err) > 0.08:
        return _accel_toward(robot, 0.0, gains.k_align * err, gains, limits)
    return _accel_toward(robot, 0.35 * gains.v_push, gains.k_align * err, gains, limits)


class ReactiveController:
    """Closed-loop wrapper tracking contact from robot/object geometry."""

    def __init__(self, scenario: Scenario, gains: ReactiveGains | None = None,
                 limits: InputLimits | None = None):
        self.scenario = scenario
        self.gains = gains or ReactiveGains()
        self.limits = limits or InputLimits()
        # radii[0] circumscribes the robot, i.e. its half-diagonal
        if self.gains.reposition_clearance <= scenario.radii[0]:
            raise DomainError("reposition clearance must exceed the robot half-diagonal")

    def reset(self):
        pass

    def __call__(self, robot: RobotState, obj: ObjectPose, t: float) -> ControlInput:
        rel = _relative_pose(robot, obj)
        contact = _in_window(rel, self.scenario.contact) and rel[0] <= self.scenario.contact.d_ro + 1e-6
        return reactive_control(
            robot,
            obj,
            self.scenario.goal,
            self.gains,
            self.limits,
            self.scenario.contact.d_ro,
            in_contact=contact,
        )


def run_reactive_episode(
    scenario: Scenario, gains: ReactiveGains | None = None, limits: InputLimits | None = None
) -> Trajectory:
    """Closed-loop rollout of the reactive strategy in the simulator."""
    return run_closed_loop(scenario, ReactiveController(scenario, gains, limits))
