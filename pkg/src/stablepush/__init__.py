"""Stable pushing toolkit for differential-drive robots.

Computes the stable-pushing motion cone for a robot in line contact with a
pushed object, plans goal-directed pushes with a receding-horizon nonlinear
optimizer under sticking and obstacle constraints, and validates the loop in
a quasi-static simulator.
"""

from .errors import (
    DegenerateGeometryError,
    DomainError,
    InfeasibleConeError,
    ScenarioError,
)
from .kinematics import (
    ControlInput,
    InputLimits,
    ObjectPose,
    RobotState,
    normalize_angle,
    object_pose_from_robot,
    object_twist_from_robot,
    robot_velocity_world,
    step_robot,
)
from .mechanics import (
    ContactConfig,
    LimitSurface,
    MotionCone,
    WrenchCone,
    curvature_bounds,
    estimate_friction_angle,
    gamma_integral,
    generalized_wrench_hull,
    limit_surface,
    motion_cone,
)
from .planner import Ellipse, OcpProblem, PlanResult, mpc_step, solve
from .simulator import Scenario, Trajectory, curvature_sweep, run_closed_loop

__version__ = "0.1.0"
