"""Differential-drive robot model and sticking-contact kinematics.

The robot is a planar unicycle with acceleration inputs: state
(x, y, theta, v, omega), input (a, xi).  Under sticking contact the pushed
object is rigidly attached ahead of the robot at offset (d_ro, y_o) in the
robot frame, with its orientation equal to the robot's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "RobotState",
    "ControlInput",
    "ObjectPose",
    "InputLimits",
    "normalize_angle",
    "rot2d",
    "step_robot",
    "step_robot_euler",
    "robot_velocity_world",
    "world_to_robot_velocity",
    "object_twist_from_robot",
    "object_pose_from_robot",
]


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta, 2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def rot2d(theta: float) -> np.ndarray:
    """2D rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RobotState:
    """Pusher robot state: world position/heading plus body velocities."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.theta, self.v, self.omega))):
            raise DomainError("robot state must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v, self.omega])

    @classmethod
    def from_array(cls, arr) -> "RobotState":
        x, y, theta, v, omega = (float(a) for a in arr)
        return cls(x, y, theta, v, omega)


@dataclass(frozen=True)
class ControlInput:
    """Linear and angular acceleration commands."""

    a: float = 0.0
    xi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.xi])


@dataclass(frozen=True)
class ObjectPose:
    """Pushed object pose in the world frame."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class InputLimits:
    """Actuator box limits: accelerations plus velocity magnitudes."""

    a_max: float = 1.0
    xi_max: float = 2.0
    v_max: float = 0.5
    omega_max: float = 1.0

    def __post_init__(self):
        if min(self.a_max, self.xi_max, self.v_max, self.omega_max) <= 0:
            raise DomainError("input limits must be positive")


def _deriv(state: np.ndarray, a: float, xi: float) -> np.ndarray:
    x, y, theta, v, omega = state
    return np.array([v * math.cos(theta), v * math.sin(theta), omega, a, xi])


def step_robot(s: RobotState, u: ControlInput, dt: float) -> RobotState:
    """Integrate the unicycle-with-acceleration model over dt with RK4."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    y0 = s.as_array()
    k1 = _deriv(y0, u.a, u.xi)
    k2 = _deriv(y0 + 0.5 * dt * k1, u.a, u.xi)
    k3 = _deriv(y0 + 0.5 * dt * k2, u.a, u.xi)
    k4 = _deriv(y0 + dt * k3, u.a, u.xi)
    return RobotState.from_array(y0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


def step_robot_euler(s: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Forward-Euler step on raw arrays; the planner's transcription dynamics."""
    x, y, theta, v, omega = s
    return np.array(
        [
            x + dt * v * math.cos(theta),
            y + dt * v * math.sin(theta),
            theta + dt * omega,
            v + dt * u[0],
            omega + dt * u[1],
        ]
    )


def robot_velocity_world(s: RobotState) -> np.ndarray:
    """Robot linear velocity expressed in the world frame: R(theta) @ [v, 0]."""
    return np.array([s.v * math.cos(s.theta), s.v * math.sin(s.theta)])


def world_to_robot_velocity(v_world: np.ndarray, theta: float) -> np.ndarray:
    """Inverse transform of :func:`robot_velocity_world` for a planar vector."""
    return rot2d(theta).T @ np.asarray(v_world, dtype=float)


def object_twist_from_robot(v_r: float, omega_r: float, d_ro: float, y_o: float = 0.0) -> np.ndarray:
    """Object twist (v_x, v_y, omega) in the object frame under sticking contact.

    The object sits at (d_ro, y_o) in the robot frame with matching
    orientation, so its body twist is (v_r - omega_r*y_o, omega_r*d_ro, omega_r).
    """
    return np.array([v_r - omega_r * y_o, omega_r * d_ro, omega_r])


def object_pose_from_robot(s: RobotState, d_ro: float, y_o: float = 0.0) -> ObjectPose:
    """Object pose under sticking contact: rigid offset along the robot heading."""
    offset = rot2d(s.theta) @ np.array([d_ro, y_o])
    return ObjectPose(s.x + offset[0], s.y + offset[1], s.theta)
