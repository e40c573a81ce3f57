"""Scenario file loading and validation.

Scenario files are YAML documents whose keys carry explicit SI units in
their names (d_ro_m, theta_mu_deg, ...).  Validation is strict: unknown
keys are rejected and every diagnostic names the offending key path and
its line in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .baseline import ReactiveController, ReactiveGains
from .errors import ScenarioError
from .kinematics import InputLimits, RobotState
from .mechanics import ContactConfig, LimitSurface, curvature_bounds, gamma_integral
from .planner import Ellipse, NmpcController, OcpProblem
from .simulator import Scenario

__all__ = ["ScenarioFile", "load_scenario_file"]

_REQUIRED = object()


def _field(kind, default=_REQUIRED, check=None, msg=""):
    return ("field", kind, default, check, msg)


def _positive(kind, default=_REQUIRED):
    return _field(kind, default, lambda v: v > 0, "must be > 0")


_START_SCHEMA = {
    "x_m": _field(float),
    "y_m": _field(float),
    "theta_deg": _field(float, 0.0),
}
_GOAL_SCHEMA = {"x_m": _field(float), "y_m": _field(float)}
_OBSTACLE_SCHEMA = {
    "x_m": _field(float),
    "y_m": _field(float),
    "semi_a_m": _positive(float),
    "semi_b_m": _positive(float),
    "orientation_deg": _field(float, 0.0),
}

_SCHEMA: dict[str, Any] = {
    "name": _field(str, ""),
    "seed": _field(int, 0),
    "controller": _field(str, "nmpc", lambda v: v in ("nmpc", "reactive"),
                         "must be 'nmpc' or 'reactive'"),
    "contact": {
        "d_ro_m": _positive(float, 0.66),
        "width_m": _positive(float, 0.32),
        "length_m": _positive(float, 0.48),
        "theta_mu_deg": _field(float, 12.0, lambda v: 0 < v < 90, "must be in (0, 90)"),
        "y_offset_m": _field(float, 0.0),
        "bumper_length_m": _positive(float, None),
    },
    "limit_surface": {
        "mu_ground": _positive(float, 0.5),
        "mass_kg": _positive(float, 2.8),
        "patch_width_m": _positive(float, None),
        "patch_length_m": _positive(float, None),
    },
    "robot": {
        "radius_m": _positive(float, 0.59),
        "v_max_mps": _positive(float, 0.5),
        "omega_max_radps": _positive(float, 1.0),
        "a_max_mps2": _positive(float, 1.0),
        "xi_max_radps2": _positive(float, 2.0),
    },
    "object": {"radius_m": _positive(float, 0.29)},
    "planner": {
        "horizon_steps": _field(int, 20, lambda v: v >= 1, "must be >= 1"),
        "dt_s": _positive(float, 0.1),
        "q_goal": _field(float, 1.0, lambda v: v >= 0, "must be >= 0"),
        "q_v": _field(float, 0.1, lambda v: v >= 0, "must be >= 0"),
        "q_omega": _field(float, 0.1, lambda v: v >= 0, "must be >= 0"),
        "cone_margin": _field(float, 0.95, lambda v: 0 < v <= 1, "must be in (0, 1]"),
    },
    "simulation": {
        "dt_s": _positive(float, 0.01),
        "control_period_s": _positive(float, 0.1),
        "max_time_s": _positive(float, 60.0),
        "goal_tolerance_m": _positive(float, 0.1),
    },
    "start": _START_SCHEMA,
    "goal": _GOAL_SCHEMA,
    "obstacles": ("list", _OBSTACLE_SCHEMA),
    "reactive": {
        "k_align": _positive(float, 1.2),
        "k_approach": _positive(float, 2.0),
        "k_turn": _positive(float, 4.0),
        "clearance_m": _positive(float, 0.8),
        "v_push_mps": _positive(float, 0.4),
    },
    "episodes": (
        "list",
        {
            "name": _field(str),
            "start": _START_SCHEMA,
            "goal": _GOAL_SCHEMA,
            "max_time_s": _positive(float, None),
        },
    ),
    "sweep": {
        "k_min": _field(float, 0.0),
        "k_max": _field(float, 0.6),
        "steps": _field(int, 25, lambda v: v >= 1, "must be >= 1"),
        "speed_mps": _positive(float, 0.1),
        "duration_s": _positive(float, 4.0),
    },
}

_OPTIONAL_SECTIONS = {"start", "goal"}  # may be absent when episodes carry them


def _line_map(node, path: str, out: dict[str, int]):
    if isinstance(node, yaml.MappingNode):
        for key_node, val_node in node.value:
            key = str(key_node.value)
            p = f"{path}.{key}" if path else key
            out[p] = key_node.start_mark.line + 1
            _line_map(val_node, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            p = f"{path}[{i}]"
            out[p] = item.start_mark.line + 1
            _line_map(item, p, out)


def _check_leaf(value, spec, path, lines):
    _, kind, default, check, msg = spec
    line = lines.get(path)
    if value is None:
        if default is _REQUIRED:
            raise ScenarioError(path, "missing required key")
        return default
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ScenarioError(path, "expected an integer", line)
    if not isinstance(value, kind):
        raise ScenarioError(path, f"expected {kind.__name__}", line)
    if kind is float and not math.isfinite(value):
        raise ScenarioError(path, "must be finite", line)
    if check is not None and not check(value):
        raise ScenarioError(path, msg or "invalid value", line)
    return value


def _validate_map(data, schema, path, lines) -> dict:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError(path or "<root>", "expected a mapping", lines.get(path))
    out = {}
    for key, value in data.items():
        p = f"{path}.{key}" if path else str(key)
        if key not in schema:
            raise ScenarioError(p, "unknown key", lines.get(p))
    for key, spec in schema.items():
        p = f"{path}.{key}" if path else key
        value = data.get(key)
        if isinstance(spec, dict):
            if value is None and key in _OPTIONAL_SECTIONS and key not in data:
                out[key] = None
            else:
                out[key] = _validate_map(value, spec, p, lines)
        elif isinstance(spec, tuple) and spec[0] == "list":
            items = []
            if value is not None:
                if not isinstance(value, list):
                    raise ScenarioError(p, "expected a list", lines.get(p))
                for i, item in enumerate(value):
                    items.append(_validate_map(item, spec[1], f"{p}[{i}]", lines))
            out[key] = items
        else:
            out[key] = _check_leaf(value, spec, p, lines)
    return out


@dataclass(frozen=True)
class ScenarioFile:
    """Parsed scenario document plus builders for runnable objects."""

    path: str
    config: dict

    @property
    def name(self) -> str:
        return self.config["name"] or Path(self.path).stem

    @property
    def seed(self) -> int:
        return self.config["seed"]

    @property
    def controller_name(self) -> str:
        return self.config["controller"]

    @property
    def episode_names(self) -> list[str]:
        return [e["name"] for e in self.config["episodes"]]

    @property
    def sweep_settings(self) -> dict:
        return dict(self.config["sweep"])

    def _episode(self, name: str | None) -> dict | None:
        if name is None:
            return None
        for e in self.config["episodes"]:
            if e["name"] == name:
                return e
        raise ScenarioError("episodes", f"no episode named {name!r}")

    def build_scenario(self, episode: str | None = None) -> Scenario:
        cfg = self.config
        ep = self._episode(episode)
        start = (ep or {}).get("start") or cfg["start"]
        goal = (ep or {}).get("goal") or cfg["goal"]
        if start is None:
            raise ScenarioError("start", "missing (neither top-level nor episode)")
        if goal is None:
            raise ScenarioError("goal", "missing (neither top-level nor episode)")
        c = cfg["contact"]
        contact = ContactConfig.from_geometry(
            d_ro=c["d_ro_m"],
            W_o=c["width_m"],
            L_o=c["length_m"],
            theta_mu=math.radians(c["theta_mu_deg"]),
            y_o=c["y_offset_m"],
            bumper_length=c["bumper_length_m"],
        )
        ls_cfg = cfg["limit_surface"]
        gamma = gamma_integral(
            ls_cfg["patch_width_m"] or c["width_m"],
            ls_cfg["patch_length_m"] or c["length_m"],
        )
        ls = LimitSurface(ls_cfg["mu_ground"], ls_cfg["mass_kg"] * 9.81, gamma)
        sim = cfg["simulation"]
        max_time = (ep or {}).get("max_time_s") or sim["max_time_s"]
        return Scenario(
            initial_robot=RobotState(
                start["x_m"], start["y_m"], math.radians(start["theta_deg"])
            ),
            contact=contact,
            limit_surface=ls,
            goal=(goal["x_m"], goal["y_m"]),
            obstacles=tuple(
                Ellipse(
                    (o["x_m"], o["y_m"]),
                    (o["semi_a_m"], o["semi_b_m"]),
                    math.radians(o["orientation_deg"]),
                )
                for o in cfg["obstacles"]
            ),
            radii=(cfg["robot"]["radius_m"], cfg["object"]["radius_m"]),
            dt_sim=sim["dt_s"],
            max_time=max_time,
            control_period=sim["control_period_s"],
            goal_tolerance=sim["goal_tolerance_m"],
            name=episode or self.name,
            seed=cfg["seed"],
        )

    def input_limits(self) -> InputLimits:
        r = self.config["robot"]
        return InputLimits(
            a_max=r["a_max_mps2"],
            xi_max=r["xi_max_radps2"],
            v_max=r["v_max_mps"],
            omega_max=r["omega_max_radps"],
        )

    def build_controller(self, scenario: Scenario, which: str | None = None):
        which = which or self.controller_name
        if which == "reactive":
            r = self.config["reactive"]
            gains = ReactiveGains(
                k_align=r["k_align"],
                k_approach=r["k_approach"],
                k_turn=r["k_turn"],
                reposition_clearance=r["clearance_m"],
                v_push=r["v_push_mps"],
            )
            return ReactiveController(scenario, gains, self.input_limits())
        if which != "nmpc":
            raise ScenarioError("controller", f"unknown controller {which!r}")
        p = self.config["planner"]
        k_dprime, k_prime = curvature_bounds(scenario.contact)
        margin = p["cone_margin"]
        template = OcpProblem(
            N=p["horizon_steps"],
            dt=p["dt_s"],
            initial_state=scenario.initial_robot,
            goal=scenario.goal,
            weights=(p["q_goal"], p["q_v"], p["q_omega"]),
            bounds=(margin * k_dprime, margin * k_prime),
            obstacles=scenario.obstacles,
            input_limits=self.input_limits(),
            radii=scenario.radii,
            d_ro=scenario.contact.d_ro,
            y_o=scenario.contact.y_o,
        )
        return NmpcController(template)


def load_scenario_file(path: str | Path) -> ScenarioFile:
    """Parse and validate a scenario YAML file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    text = path.read_text()
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ScenarioError("<document>", f"not valid YAML: {exc}") from exc
    lines: dict[str, int] = {}
    if node is not None:
        _line_map(node, "", lines)
    config = _validate_map(data, _SCHEMA, "", lines)
    # cross-field consistency
    sim = config["simulation"]
    if sim["control_period_s"] < sim["dt_s"] - 1e-12:
        raise ScenarioError(
            "simulation.control_period_s",
            "must be at least simulation.dt_s",
            lines.get("simulation.control_period_s"),
        )
    names = [e["name"] for e in config["episodes"]]
    if len(set(names)) != len(names):
        raise ScenarioError("episodes", "episode names must be unique", lines.get("episodes"))
    return ScenarioFile(str(path), config)
