"""Quasi-static contact mechanics for line-contact pushing.

Builds the ellipsoidal limit-surface model of ground friction, maps the
robot-object friction cones through the contact Jacobian into a wrench cone,
intersects the resulting object twist cone with the sticking plane
{v_y - d_ro*omega = 0}, and reduces the outcome to linear curvature bounds
(k'', k') on the robot command (omega_r in [k''*v_r, k'*v_r], v_r >= 0).

Conventions: object frame axes parallel to the robot frame under sticking.
The contact line is the object face x = -W_o/2; contact points sit at
(-W_o/2, d_i).  Friction-cone edge forces are unit vectors at +/-theta_mu
about the inward normal (+x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateGeometryError, DomainError, InfeasibleConeError

__all__ = [
    "GRAVITY",
    "LimitSurface",
    "ContactConfig",
    "WrenchCone",
    "MotionCone",
    "IcrReport",
    "limit_surface",
    "gamma_integral",
    "gamma_circular",
    "contact_jacobian",
    "generalized_wrench_hull",
    "object_twist_cone",
    "motion_cone",
    "curvature_bounds",
    "estimate_friction_angle",
    "single_point_icr_feasible_set",
    "line_contact_icr_sweep",
]

GRAVITY = 9.81  # m/s^2


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitSurface:
    """Ellipsoidal limit surface of the object-ground friction wrench.

    The set of push wrenches w that quasi-statically balance ground friction
    satisfies w^T H w = 1 with H = diag(1/(mu_g*N_o)^2, 1/(mu_g*N_o)^2,
    gamma_g^2/(mu_g*N_o)^2).  The object twist is normal to this surface,
    i.e. proportional to H w.
    """

    mu_g: float
    N_o: float
    gamma_g: float

    def __post_init__(self):
        if self.mu_g <= 0 or self.N_o <= 0 or self.gamma_g <= 0:
            raise DomainError("mu_g, N_o and gamma_g must all be positive")

    @property
    def H(self) -> np.ndarray:
        f = 1.0 / (self.mu_g * self.N_o) ** 2
        return np.diag([f, f, f * self.gamma_g**2])


@dataclass(frozen=True)
class ContactConfig:
    """Geometry and friction of the robot-object line contact.

    d_ro: robot-center to object-center distance along the robot x axis.
    W_o:  object extent along the pushing direction (contact face at -W_o/2).
    L_o:  object extent along the contact line.
    theta_mu: friction-cone half angle at the robot-object interface.
    d_1, d_2: contact-point offsets along the contact line.
    y_o:  object lateral offset in the robot frame (0 = centred push).
    """

    d_ro: float
    W_o: float
    L_o: float
    theta_mu: float
    d_1: float | None = None
    d_2: float | None = None
    y_o: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.theta_mu < math.pi / 2):
            raise DomainError("theta_mu must lie in (0, pi/2)")
        if self.d_ro <= 0:
            raise DomainError("d_ro must be positive")
        if self.W_o <= 0 or self.L_o <= 0:
            raise DomainError("W_o and L_o must be positive")
        half = self.L_o / 2
        if self.d_1 is None:
            object.__setattr__(self, "d_1", -half)
        if self.d_2 is None:
            object.__setattr__(self, "d_2", half)
        for name in ("d_1", "d_2"):
            if abs(getattr(self, name)) > half + 1e-12:
                raise DomainError(f"{name} must lie within [-L_o/2, L_o/2]")

    @classmethod
    def from_geometry(
        cls,
        d_ro: float,
        W_o: float,
        L_o: float,
        theta_mu: float,
        y_o: float = 0.0,
        bumper_length: float | None = None,
    ) -> "ContactConfig":
        """Contact at the extreme points of the bumper-object overlap."""
        overlap = L_o if bumper_length is None else min(L_o, bumper_length)
        if overlap <= 0:
            raise DomainError("bumper-object overlap must be positive")
        return cls(d_ro, W_o, L_o, theta_mu, -overlap / 2, overlap / 2, y_o)


@dataclass(frozen=True)
class WrenchCone:
    """Polyhedral cone of pusher wrenches (f_x, f_y, tau) in the object frame."""

    generators: np.ndarray  # shape (n, 3)

    def __post_init__(self):
        gens = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if gens.shape[1] != 3:
            raise DomainError("wrench generators must be 3-vectors")
        if np.any(np.linalg.norm(gens, axis=1) < 1e-15):
            raise DomainError("wrench generators must be nonzero")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)


@dataclass(frozen=True)
class MotionCone:
    """Object twist cone restricted to the sticking plane, plus curvature bounds.

    edge_ccw has omega >= 0 (the k' side), edge_cw has omega <= 0 (k'').  Both
    are unit twists (v_x, v_y, omega) oriented for forward pushing (v_x >= 0).
    """

    edge_ccw: np.ndarray
    edge_cw: np.ndarray
    k_prime: float
    k_dprime: float


# ---------------------------------------------------------------------------
# Limit surface
# ---------------------------------------------------------------------------

def limit_surface(mu_g: float, N_o: float, gamma_g: float) -> LimitSurface:
    """Construct the ellipsoidal limit-surface model (validates positivity)."""
    return LimitSurface(mu_g, N_o, gamma_g)


def gamma_integral(patch_width: float, patch_length: float) -> float:
    """Contact-patch constant A(S) / integral of sqrt(x^2+y^2) over S.

    S is the centred rectangle patch_width x patch_length.  Computed by
    adaptive 2-D quadrature with relative tolerance 1e-8.
    """
    if patch_width <= 0 or patch_length <= 0:
        raise DomainError("patch dimensions must be positive")
    hx, hy = patch_width / 2, patch_length / 2
    # quarter-patch suffices by symmetry
    val, _ = integrate.dblquad(
        lambda y, x: math.hypot(x, y), 0.0, hx, 0.0, hy, epsabs=0.0, epsrel=1e-8
    )
    area = patch_width * patch_length
    return area / (4.0 * val)


def gamma_circular(radius: float) -> float:
    """Closed form for a circular patch: 3 / (2 R)."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    return 1.5 / radius


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------

def contact_jacobian(cfg: ContactConfig, i: int) -> np.ndarray:
    """3x2 map from friction-cone edge force magnitudes to an object wrench.

    Column 1 is the wrench of the unit left-edge force, column 2 of the unit
    right-edge force, at contact point i (1 or 2).
    """
    if i not in (1, 2):
        raise DomainError("contact index must be 1 or 2")
    d_i = cfg.d_1 if i == 1 else cfg.d_2
    c, s = math.cos(cfg.theta_mu), math.sin(cfg.theta_mu)
    w = cfg.W_o / 2
    return np.array(
        [
            [c, c],
            [s, -s],
            [d_i * c + w * s, d_i * c - w * s],
        ]
    )


def generalized_wrench_hull(cfg: ContactConfig) -> WrenchCone:
    """Cone of total pusher wrenches from both contact points.

    Generators are the left/right edge wrenches of each contact, ordered
    (w_1^L, w_1^R, w_2^L, w_2^R); the full cone is their conic hull.
    """
    j1 = contact_jacobian(cfg, 1)
    j2 = contact_jacobian(cfg, 2)
    return WrenchCone(np.vstack([j1[:, 0], j1[:, 1], j2[:, 0], j2[:, 1]]))


def object_twist_cone(ls: LimitSurface, wc: WrenchCone) -> np.ndarray:
    """Twist-cone generators H @ w for each wrench generator (directions only)."""
    return wc.generators @ ls.H.T


def _plane_cut_rays(generators: np.ndarray, normal: np.ndarray) -> list[np.ndarray]:
    """Extreme rays of cone(generators) intersected with {v : normal.v = 0}.

    Candidates are generators lying on the plane plus crossing combinations
    of (+,-) pairs; all are returned, callers pick angular extremes.
    """
    s = generators @ normal
    scale = np.linalg.norm(generators, axis=1)
    on_plane = np.abs(s) <= 1e-12 * np.maximum(scale, 1.0)
    rays = [generators[i] for i in range(len(s)) if on_plane[i]]
    pos = [i for i in range(len(s)) if not on_plane[i] and s[i] > 0]
    neg = [i for i in range(len(s)) if not on_plane[i] and s[i] < 0]
    for i in pos:
        for j in neg:
            rays.append(-s[j] * generators[i] + s[i] * generators[j])
    return [r / np.linalg.norm(r) for r in rays if np.linalg.norm(r) > 1e-14]


def motion_cone(cfg: ContactConfig, ls: LimitSurface) -> MotionCone:
    """Intersect the object twist cone with the sticking plane.

    Returns the two edge twists oriented for forward pushing (v_x >= 0) and
    the curvature bounds on the robot command.  Raises InfeasibleConeError
    when no forward twist is compatible with sticking.
    """
    twists = object_twist_cone(ls, generalized_wrench_hull(cfg))
    normal = np.array([0.0, 1.0, -cfg.d_ro])
    rays = _plane_cut_rays(twists, normal)
    rays = [r if r[0] > 0 else -r for r in rays if abs(r[0]) > 1e-14]
    if not rays:
        raise InfeasibleConeError(
            "twist cone does not meet the sticking plane with forward motion"
        )
    # order by rotation-to-translation ratio; extremes are the cone edges
    ratios = [r[2] / r[0] for r in rays]
    edge_cw = rays[int(np.argmin(ratios))]
    edge_ccw = rays[int(np.argmax(ratios))]
    k_dprime, k_prime = curvature_bounds(cfg)
    return MotionCone(edge_ccw=edge_ccw, edge_cw=edge_cw, k_prime=k_prime, k_dprime=k_dprime)


def curvature_bounds(cfg: ContactConfig) -> tuple[float, float]:
    """Linear curvature bounds (k'', k') of the sticking constraint.

    k'' = sin(theta_mu) / (y_o sin(theta_mu) - d_ro cos(theta_mu)),
    k'  = sin(theta_mu) / (y_o sin(theta_mu) + d_ro cos(theta_mu)).
    """
    s, c = math.sin(cfg.theta_mu), math.cos(cfg.theta_mu)
    den_lo = cfg.y_o * s - cfg.d_ro * c
    den_hi = cfg.y_o * s + cfg.d_ro * c
    if abs(den_lo) < 1e-12 or abs(den_hi) < 1e-12:
        raise DegenerateGeometryError(
            "curvature bound denominator y_o*sin(theta_mu) +/- d_ro*cos(theta_mu) is zero"
        )
    k_dprime = s / den_lo
    k_prime = s / den_hi
    if k_dprime > k_prime:
        raise DegenerateGeometryError(
            "contact offset too large: cone wraps past vertical, linear bounds invalid"
        )
    return k_dprime, k_prime


def estimate_friction_angle(F_pull: float, m_o: float) -> float:
    """Friction-cone half angle from a constant-speed pull-force measurement."""
    if F_pull < 0:
        raise DomainError("pull force must be non-negative")
    if m_o <= 0:
        raise DomainError("object mass must be positive")
    return math.atan2(F_pull, m_o * GRAVITY)


# ---------------------------------------------------------------------------
# Rotation-center (ICR) analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IcrReport:
    """Shared rotation centers of robot and object for a point contact.

    The object's possible rotation centers under a cone-limited force at the
    contact point form the line {p : contact . p = -1/gamma_g^2} minus the
    segment between the edge-force duals z_left/z_right; the robot's lie on
    its wheel axis {x = -d_ro} (object frame).  Stable motion needs a shared
    center (or the point at infinity = straight pushing).
    """

    contact_point: tuple[float, float]
    wheel_axis_x: float
    line_normal: tuple[float, float]
    line_offset: float
    parallel: bool
    shared_icr: tuple[float, float] | None
    shared_icr_feasible: bool
    straight_feasible: bool
    excluded_segment: tuple[tuple[float, float] | None, tuple[float, float] | None]
    feasible_modes: tuple[str, ...]


def _icr_of_force(contact: np.ndarray, f: np.ndarray, gamma_g: float) -> tuple[float, float] | None:
    """Rotation center dual to a force line through the contact point."""
    tau = contact[0] * f[1] - contact[1] * f[0]
    if abs(tau) < 1e-14:
        return None  # force line through origin: straight motion (ICR at infinity)
    scale = 1.0 / (gamma_g**2 * tau)
    return (-f[1] * scale, f[0] * scale)


def _force_in_cone(f: np.ndarray, theta_mu: float) -> bool:
    """Pushing force must point within theta_mu of the inward normal (+x)."""
    norm = np.linalg.norm(f)
    if norm < 1e-14 or f[0] <= 0:
        return False
    return math.acos(min(1.0, f[0] / norm)) <= theta_mu + 1e-12


def single_point_icr_feasible_set(
    contact: tuple[float, float], cfg: ContactConfig, gamma_g: float
) -> IcrReport:
    """Feasibility of stable pushing through a single point contact.

    For a generic contact the object's ICR line and the robot wheel axis
    share exactly one finite point, so stable motion is restricted to
    straight-forward pushing or rotation about that single point; when the
    lines are parallel only straight pushing remains.
    """
    if gamma_g <= 0:
        raise DomainError("gamma_g must be positive")
    cpt = np.asarray(contact, dtype=float)
    if np.linalg.norm(cpt) < 1e-12:
        raise DomainError("contact point must not coincide with the object center")
    offset = -1.0 / gamma_g**2  # line: contact . p = offset
    axis_x = -cfg.d_ro

    c, s = math.cos(cfg.theta_mu), math.sin(cfg.theta_mu)
    z_left = _icr_of_force(cpt, np.array([c, s]), gamma_g)
    z_right = _icr_of_force(cpt, np.array([c, -s]), gamma_g)

    straight = _force_in_cone(-cpt, cfg.theta_mu)

    parallel = abs(cpt[1]) < 1e-12
    shared = None
    shared_ok = False
    if not parallel:
        t = (offset - cpt[0] * axis_x) / cpt[1]
        shared = (axis_x, t)
        # rotation about (axis_x, t) needs force direction perp to the center
        # ray, on the pushing side of the cone
        f_dir = np.array([-t, axis_x])
        shared_ok = _force_in_cone(f_dir, cfg.theta_mu) or _force_in_cone(-f_dir, cfg.theta_mu)

    modes = []
    if straight:
        modes.append("straight")
    if shared is not None and shared_ok:
        modes.append("rotate_about_shared_icr")
    return IcrReport(
        contact_point=(float(cpt[0]), float(cpt[1])),
        wheel_axis_x=axis_x,
        line_normal=(float(cpt[0]), float(cpt[1])),
        line_offset=offset,
        parallel=parallel,
        shared_icr=shared,
        shared_icr_feasible=shared_ok,
        straight_feasible=straight,
        excluded_segment=(z_left, z_right),
        feasible_modes=tuple(modes),
    )


def line_contact_icr_sweep(
    cfg: ContactConfig, gamma_g: float, n: int = 801
) -> dict:
    """Shared-ICR coverage on the wheel axis for a line contact.

    Sweeps the generalized contact point d over [-L_o/2, L_o/2], intersects
    each ICR line with the wheel axis, and keeps intersections whose required
    force direction lies in the friction cone.  The covered set has the form
    (-inf, R_l] U [R_r, +inf); returns R_l, R_r and the raw samples.
    """
    half = cfg.L_o / 2
    lower: list[float] = []  # t <= 0 branch
    upper: list[float] = []
    samples: list[tuple[float, float | None, bool]] = []
    for d in np.linspace(-half, half, n):
        cpt = np.array([-cfg.W_o / 2, d])
        rep = single_point_icr_feasible_set((cpt[0], cpt[1]), cfg, gamma_g) if abs(d) > 1e-12 else None
        if rep is None or rep.parallel:
            samples.append((float(d), None, True))  # straight only
            continue
        t = rep.shared_icr[1]
        samples.append((float(d), float(t), rep.shared_icr_feasible))
        if rep.shared_icr_feasible:
            (lower if t < 0 else upper).append(t)
    if not lower or not upper:
        raise InfeasibleConeError("line-contact sweep produced no feasible rotation centers")
    return {
        "R_l": max(lower),
        "R_r": min(upper),
        "samples": samples,
        "straight_feasible": True,
    }
