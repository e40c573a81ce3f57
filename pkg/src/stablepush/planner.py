"""Receding-horizon nonlinear optimal control for stable pushing.

Direct multiple shooting over an N-step horizon: decision variables are the
control sequence u_0..u_{N-1} and the state sequence x_1..x_N under forward
Euler transcription.  The cost drives the pushed object to the goal while
penalizing speed; path constraints keep the commanded motion inside the
sticking cone (v_r >= 0, k''*v_r <= omega_r <= k'*v_r), outside inflated
elliptical obstacles (robot disc and object disc), and within actuator
bounds.  Solved with the in-package augmented-Lagrangian Newton method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .kinematics import ControlInput, InputLimits, RobotState, rot2d, step_robot_euler
from .sqp import NlpProblem, solve_nlp

__all__ = [
    "Ellipse",
    "OcpProblem",
    "PlanResult",
    "stage_cost",
    "terminal_cost",
    "pushing_constraint_residuals",
    "obstacle_constraint_residual",
    "solve",
    "mpc_step",
    "NmpcController",
]

NORM_SMOOTHING = 1e-6  # meters; differentiable norm at the goal


@dataclass(frozen=True)
class Ellipse:
    """Elliptical obstacle: center, semi-axes (a, b), orientation of axis a."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    orientation: float = 0.0

    def __post_init__(self):
        if self.semi_axes[0] <= 0 or self.semi_axes[1] <= 0:
            raise DomainError("ellipse semi-axes must be positive")


@dataclass(frozen=True)
class OcpProblem:
    """One receding-horizon optimization problem instance."""

    N: int
    dt: float
    initial_state: RobotState
    goal: tuple[float, float]
    weights: tuple[float, float, float] = (1.0, 0.1, 0.1)  # (q_goal, q_v, q_omega)
    bounds: tuple[float, float] = (-0.32, 0.32)  # (k'', k')
    obstacles: tuple[Ellipse, ...] = ()
    input_limits: InputLimits = field(default_factory=InputLimits)
    radii: tuple[float, float] = (0.59, 0.29)  # (r_r, r_o)
    d_ro: float = 0.66
    y_o: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("horizon must be at least one step")
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if any(w < 0 for w in self.weights):
            raise DomainError("weights must be non-negative")
        if self.bounds[0] > self.bounds[1]:
            raise DomainError("curvature bounds must satisfy k'' <= k'")


@dataclass(frozen=True)
class PlanResult:
    """Solution of one horizon problem.

    predicted_states replays exactly from controls under the Euler
    transcription; max_constraint_violation is measured on that replay.
    """

    controls: tuple[ControlInput, ...]
    predicted_states: tuple[RobotState, ...]
    status: str  # converged | max_iter | infeasible
    max_constraint_violation: float
    cost: float
    iterations: int = 0
    _nu: np.ndarray | None = field(default=None, repr=False, compare=False)
    _lam: np.ndarray | None = field(default=None, repr=False, compare=False)

    def controls_array(self) -> np.ndarray:
        return np.array([[u.a, u.xi] for u in self.controls])

    def states_array(self) -> np.ndarray:
        return np.array([s.as_array() for s in self.predicted_states])


# ---------------------------------------------------------------------------
# Cost and constraint pieces
# ---------------------------------------------------------------------------

def stage_cost(s: RobotState, q_v: float = 0.1, q_omega: float = 0.1) -> float:
    """Velocity-damping stage cost q_v*v^2 + q_omega*omega^2."""
    return q_v * s.v**2 + q_omega * s.omega**2


def terminal_cost(
    s: RobotState,
    goal,
    d_ro: float,
    q_goal: float = 1.0,
    y_o: float = 0.0,
) -> float:
    """q_goal times the distance between the attached object and the goal."""
    offset = rot2d(s.theta) @ np.array([d_ro, y_o])
    err = s.position + offset - np.asarray(goal, dtype=float)
    return q_goal * float(np.linalg.norm(err))


def pushing_constraint_residuals(s: RobotState, bounds: tuple[float, float]) -> np.ndarray:
    """Sticking residuals (-v, k''*v - omega, omega - k'*v); all <= 0 when stable."""
    k_dprime, k_prime = bounds
    return np.array(
        [-s.v, k_dprime * s.v - s.omega, s.omega - k_prime * s.v]
    )


def _ellipse_world_matrix(e: Ellipse, r: float) -> np.ndarray:
    R = rot2d(e.orientation)
    M = np.diag([1.0 / (e.semi_axes[0] + r) ** 2, 1.0 / (e.semi_axes[1] + r) ** 2])
    return R @ M @ R.T


def obstacle_constraint_residual(p, e: Ellipse, r: float) -> float:
    """1 - d^T Q d for the ellipse inflated by disc radius r; <= 0 iff outside."""
    if r < 0:
        raise DomainError("disc radius must be non-negative")
    d = np.asarray(p, dtype=float) - np.asarray(e.center, dtype=float)
    return 1.0 - float(d @ _ellipse_world_matrix(e, r) @ d)


# ---------------------------------------------------------------------------
# Transcription
# ---------------------------------------------------------------------------

def _rollout(x0: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
    states = np.empty((len(controls) + 1, 5))
    states[0] = x0
    for t, u in enumerate(controls):
        states[t + 1] = step_robot_euler(states[t], u, dt)
    return states


class _Transcription:
    """Dense cost/constraint callables over z = [u_0..u_{N-1}, x_1..x_N]."""

    def __init__(self, p: OcpProblem):
        self.p = p
        self.N = p.N
        self.n = 7 * p.N
        self.xoff = 2 * p.N
        self.x0 = p.initial_state.as_array()
        self.goal = np.asarray(p.goal, dtype=float)
        self.q_goal, self.q_v, self.q_omega = p.weights
        self.obs = [
            (e, _ellipse_world_matrix(e, p.radii[0]), _ellipse_world_matrix(e, p.radii[1]))
            for e in p.obstacles
        ]
        self.n_eq = 5 * p.N
        self.n_in = p.N * (6 + 2 * len(p.obstacles)) + 4 * p.N

    # -- layout helpers ----------------------------------------------------
    def u_at(self, z, t):
        return z[2 * t : 2 * t + 2]

    def x_at(self, z, t):
        # t in 1..N
        i = self.xoff + 5 * (t - 1)
        return z[i : i + 5]

    def pack(self, controls: np.ndarray, states: np.ndarray) -> np.ndarray:
        return np.concatenate([controls.ravel(), states[1:].ravel()])

    def unpack(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        controls = z[: 2 * self.N].reshape(self.N, 2)
        states = np.vstack([self.x0, z[self.xoff :].reshape(self.N, 5)])
        return controls, states

    def _object_pos(self, xs: np.ndarray):
        """Object position and its Jacobian wrt (x, y, theta)."""
        x, y, theta = xs[0], xs[1], xs[2]
        c, s = math.cos(theta), math.sin(theta)
        d, yo = self.p.d_ro, self.p.y_o
        pos = np.array([x + d * c - yo * s, y + d * s + yo * c])
        jac = np.array([[1.0, 0.0, -d * s - yo * c], [0.0, 1.0, d * c - yo * s]])
        return pos, jac

    # -- cost ---------------------------------------------------------------
    def cost(self, z):
        grad = np.zeros(self.n)
        H = np.zeros((self.n, self.n))
        f = self.q_v * self.x0[3] ** 2 + self.q_omega * self.x0[4] ** 2
        for t in range(1, self.N):
            i = self.xoff + 5 * (t - 1)
            v, w = z[i + 3], z[i + 4]
            f += self.q_v * v**2 + self.q_omega * w**2
            grad[i + 3] += 2 * self.q_v * v
            grad[i + 4] += 2 * self.q_omega * w
            H[i + 3, i + 3] += 2 * self.q_v
            H[i + 4, i + 4] += 2 * self.q_omega
        # terminal: smoothed goal distance of the attached object
        iN = self.xoff + 5 * (self.N - 1)
        pos, jac = self._object_pos(z[iN : iN + 5])
        err = pos - self.goal
        s = math.sqrt(err @ err + NORM_SMOOTHING**2)
        f += self.q_goal * s
        de = self.q_goal * err / s
        grad[iN : iN + 3] += jac.T @ de
        d2 = self.q_goal * (np.eye(2) / s - np.outer(err, err) / s**3)
        H[iN : iN + 3, iN : iN + 3] += jac.T @ d2 @ jac
        return f, grad, H

    # -- dynamics equalities -------------------------------------------------
    def eq(self, z):
        N, dt = self.N, self.p.dt
        c = np.zeros(self.n_eq)
        J = np.zeros((self.n_eq, self.n))
        prev = self.x0
        for t in range(N):
            u = self.u_at(z, t)
            pred = step_robot_euler(prev, u, dt)
            xi = self.xoff + 5 * t
            nxt = z[xi : xi + 5]
            rows = slice(5 * t, 5 * t + 5)
            c[rows] = nxt - pred
            J[rows, xi : xi + 5] = np.eye(5)
            theta, v = prev[2], prev[3]
            A = np.eye(5)
            A[0, 2] = -dt * v * math.sin(theta)
            A[0, 3] = dt * math.cos(theta)
            A[1, 2] = dt * v * math.cos(theta)
            A[1, 3] = dt * math.sin(theta)
            A[2, 4] = dt
            if t > 0:
                xp = self.xoff + 5 * (t - 1)
                J[rows, xp : xp + 5] = -A
            J[rows.start + 3, 2 * t] = -dt
            J[rows.start + 4, 2 * t + 1] = -dt
            prev = nxt
        return c, J

    # -- inequality constraints ----------------------------------------------
    def ineq(self, z):
        p = self.p
        k_dd, k_d = p.bounds
        lim = p.input_limits
        g = np.zeros(self.n_in)
        J = np.zeros((self.n_in, self.n))
        r = 0
        for t in range(1, self.N + 1):
            i = self.xoff + 5 * (t - 1)
            v, w = z[i + 3], z[i + 4]
            g[r] = -v
            J[r, i + 3] = -1.0
            g[r + 1] = k_dd * v - w
            J[r + 1, i + 3] = k_dd
            J[r + 1, i + 4] = -1.0
            g[r + 2] = w - k_d * v
            J[r + 2, i + 3] = -k_d
            J[r + 2, i + 4] = 1.0
            g[r + 3] = v - lim.v_max
            J[r + 3, i + 3] = 1.0
            g[r + 4] = w - lim.omega_max
            J[r + 4, i + 4] = 1.0
            g[r + 5] = -w - lim.omega_max
            J[r + 5, i + 4] = -1.0
            r += 6
            if self.obs:
                xs = z[i : i + 5]
                probot = xs[:2]
                pobj, jobj = self._object_pos(xs)
                for e, Qr, Qo in self.obs:
                    c = np.asarray(e.center)
                    d = probot - c
                    g[r] = 1.0 - d @ Qr @ d
                    J[r, i : i + 2] = -2.0 * (Qr @ d)
                    do = pobj - c
                    g[r + 1] = 1.0 - do @ Qo @ do
                    J[r + 1, i : i + 3] = -2.0 * (Qo @ do) @ jobj
                    r += 2
        for t in range(self.N):
            a, xi = z[2 * t], z[2 * t + 1]
            g[r] = a - lim.a_max
            J[r, 2 * t] = 1.0
            g[r + 1] = -a - lim.a_max
            J[r + 1, 2 * t] = -1.0
            g[r + 2] = xi - lim.xi_max
            J[r + 2, 2 * t + 1] = 1.0
            g[r + 3] = -xi - lim.xi_max
            J[r + 3, 2 * t + 1] = -1.0
            r += 4
        return g, J


def _evaluate_plan(p: OcpProblem, controls: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Replay controls through the transcription dynamics and score the plan."""
    states = _rollout(p.initial_state.as_array(), controls, p.dt)
    q_goal, q_v, q_omega = p.weights
    cost = float(np.sum(q_v * states[:-1, 3] ** 2 + q_omega * states[:-1, 4] ** 2))
    term = RobotState.from_array(states[-1])
    cost += terminal_cost(term, p.goal, p.d_ro, q_goal, p.y_o)
    viol = 0.0
    lim = p.input_limits
    k_dd, k_d = p.bounds
    for t in range(1, p.N + 1):
        v, w = states[t, 3], states[t, 4]
        viol = max(viol, -v, k_dd * v - w, w - k_d * v, v - lim.v_max, abs(w) - lim.omega_max)
        for e in p.obstacles:
            viol = max(viol, obstacle_constraint_residual(states[t, :2], e, p.radii[0]))
            pobj = states[t, :2] + rot2d(states[t, 2]) @ np.array([p.d_ro, p.y_o])
            viol = max(viol, obstacle_constraint_residual(pobj, e, p.radii[1]))
    for u in controls:
        viol = max(viol, abs(u[0]) - lim.a_max, abs(u[1]) - lim.xi_max)
    return states, cost, max(viol, 0.0)


def _make_result(p: OcpProblem, controls: np.ndarray, status: str, iterations: int,
                 nu=None, lam=None) -> PlanResult:
    states, cost, viol = _evaluate_plan(p, controls)
    return PlanResult(
        controls=tuple(ControlInput(float(a), float(x)) for a, x in controls),
        predicted_states=tuple(RobotState.from_array(s) for s in states),
        status=status,
        max_constraint_violation=viol,
        cost=cost,
        iterations=iterations,
        _nu=nu,
        _lam=lam,
    )


def _initial_state_infeasible(p: OcpProblem) -> bool:
    s = p.initial_state
    for e in p.obstacles:
        if obstacle_constraint_residual(s.position, e, p.radii[0]) > 0:
            return True
        pobj = s.position + rot2d(s.theta) @ np.array([p.d_ro, p.y_o])
        if obstacle_constraint_residual(pobj, e, p.radii[1]) > 0:
            return True
    return False


def solve(p: OcpProblem, warm_start: PlanResult | None = None) -> PlanResult:
    """Solve the horizon problem; deterministic given identical inputs.

    Status is ``converged`` only when the replayed plan satisfies every path
    constraint to 1e-4 and the solver reached first-order stationarity 1e-4.
    """
    if _initial_state_infeasible(p):
        return _make_result(p, np.zeros((p.N, 2)), "infeasible", 0)

    tr = _Transcription(p)
    if warm_start is not None and len(warm_start.controls) == p.N:
        controls0 = warm_start.controls_array()
        nu0, lam0 = warm_start._nu, warm_start._lam
    else:
        controls0 = np.zeros((p.N, 2))
        nu0 = lam0 = None
    z0 = tr.pack(controls0, _rollout(tr.x0, controls0, p.dt))

    res = solve_nlp(
        NlpProblem(tr.n, tr.cost, tr.eq, tr.ineq),
        z0,
        max_iter=100,
        tol_feas=1e-7,
        tol_stat=1e-5,
        warm_nu=nu0,
        warm_lam=lam0,
    )
    controls, _ = tr.unpack(res.z)
    plan = _make_result(p, controls, "pending", res.iterations, res.nu, res.lam)
    ok = plan.max_constraint_violation < 1e-4 and res.stationarity <= 1e-4
    return replace(plan, status="converged" if ok else "max_iter")


def mpc_step(
    current: RobotState, p: OcpProblem, prev: PlanResult | None = None
) -> tuple[ControlInput, PlanResult]:
    """Re-solve from the current state, warm-started by time-shifting prev.

    Returns the first control of the new plan; a zero (safe stop) input when
    the problem is infeasible.
    """
    problem = replace(p, initial_state=current)
    warm = None
    if prev is not None and len(prev.controls) == p.N:
        cur = current.as_array()
        keep = np.linalg.norm(cur - prev.predicted_states[0].as_array())
        advance = np.linalg.norm(cur - prev.predicted_states[1].as_array())
        if advance < keep:
            ctrl = np.vstack([prev.controls_array()[1:], prev.controls_array()[-1]])
            warm = _make_result(problem, ctrl, prev.status, prev.iterations, prev._nu, prev._lam)
        else:
            warm = prev
    result = solve(problem, warm)
    if result.status == "infeasible":
        return ControlInput(0.0, 0.0), result
    return result.controls[0], result


class NmpcController:
    """Stateful receding-horizon controller for closed-loop use."""

    def __init__(self, template: OcpProblem):
        self.template = template
        self.prev: PlanResult | None = None

    def reset(self):
        self.prev = None

    def __call__(self, robot: RobotState, object_pose, t: float) -> ControlInput:
        u, plan = mpc_step(robot, self.template, self.prev)
        self.prev = plan
        return u
