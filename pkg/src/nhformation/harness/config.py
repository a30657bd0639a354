"""Scenario configuration: YAML file <-> :class:`ScenarioConfig`.

See the "Scenario schema" section of the README for the full schema. Keys not listed in
the schema are rejected so that typos surface as errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..controller import EdgeControlParams
from ..dynamics import ActuationLimits
from ..graph import FOLLOWER, LEADER, Edge, FormationGraph
from .profiles import LeaderProfile, profile_from_dict

FORMATION = "formation"
ESTIMATION = "estimation"
AGENT = "agent"


class ConfigError(ValueError):
    """The scenario file cannot be parsed or is inconsistent."""


@dataclass(frozen=True)
class AgentSpec:
    id: str
    role: str
    pose: tuple[float, float, float] | None = None
    v: float = 0.0
    placement: str = "explicit"
    offset: tuple[float, float] = (0.0, 0.0)
    profile: LeaderProfile | None = None


@dataclass(frozen=True)
class NoiseSpec:
    d_std: float = 0.0
    theta_std: float = 0.0

    @property
    def enabled(self) -> bool:
        return self.d_std > 0 or self.theta_std > 0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str
    limits: ActuationLimits
    g_d: float
    agents: tuple[AgentSpec, ...]
    duration: float
    dt: float = 0.01
    graph: FormationGraph | None = None
    observers: tuple[tuple[str, str], ...] = ()
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    estimator_init: str = "measurement"
    report: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def agent(self, aid: str) -> AgentSpec:
        for a in self.agents:
            if a.id == aid:
                return a
        raise KeyError(aid)

    @property
    def a_eff(self) -> float:
        return float(self.report.get("a_eff") or self.limits.u_max)

    def leader_profile(self) -> LeaderProfile | None:
        for a in self.agents:
            if a.role == LEADER:
                return a.profile
        return None


_TOP_KEYS = {"name", "kind", "duration", "dt", "seed", "limits", "gains", "noise",
             "estimator_init", "agents", "edges", "observers", "report", "description"}


def _num(d: dict, key: str, where: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    try:
        val = float(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected a number, got {d[key]!r}") from None
    if not math.isfinite(val):
        raise ConfigError(f"{where}.{key}: must be finite")
    return val


def _pair(val, where: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in val)
    except TypeError:
        raise ConfigError(f"{where}: expected a list of numbers, got {val!r}") from None


def config_from_dict(raw: dict, source: str | None = None) -> ScenarioConfig:
    """Build and sanity-check a config (graph feasibility is checked by ``validate``)."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a mapping at the top level")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    name = str(raw.get("name", Path(source).stem if source else "scenario"))
    kind = raw.get("kind", FORMATION)
    if kind not in (FORMATION, ESTIMATION):
        raise ConfigError(f"kind: expected 'formation' or 'estimation', got {kind!r}")

    duration = _num(raw, "duration", "scenario")
    dt = _num(raw, "dt", "scenario", 0.01)
    if not duration > 0:
        raise ConfigError(f"duration must be positive, got {duration:g}")
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt:g}")
    steps = duration / dt
    if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
        raise ConfigError(f"duration/dt = {steps:.9g} is not an integer number of steps")

    lim = raw.get("limits") or {}
    try:
        limits = ActuationLimits(
            v_max=_num(lim, "v_max", "limits"),
            u_max=_num(lim, "u_max", "limits"),
            omega_max=_num(lim, "omega_max", "limits"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    gains = raw.get("gains") or {}
    g_d = _num(gains, "g_d", "gains")

    nz = raw.get("noise") or {}
    noise = NoiseSpec(_num(nz, "d_std", "noise", 0.0), _num(nz, "theta_std", "noise", 0.0))
    if noise.d_std < 0 or noise.theta_std < 0:
        raise ConfigError("noise standard deviations must be non-negative")

    est_init = raw.get("estimator_init", "measurement")
    if est_init not in ("measurement", "truth"):
        raise ConfigError(f"estimator_init: expected 'measurement' or 'truth', got {est_init!r}")

    agents: list[AgentSpec] = []
    seen = set()
    for i, a in enumerate(raw.get("agents") or []):
        where = f"agents[{i}]"
        if not isinstance(a, dict) or "id" not in a:
            raise ConfigError(f"{where}: each agent needs an 'id'")
        extra = set(a) - {"id", "role", "pose", "v", "placement", "offset", "profile"}
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        aid = str(a["id"])
        if aid in seen:
            raise ConfigError(f"{where}: duplicate agent id {aid!r}")
        seen.add(aid)
        role = a.get("role", AGENT if kind == ESTIMATION else FOLLOWER)
        placement = a.get("placement", "explicit")
        if placement not in ("explicit", "setpoint"):
            raise ConfigError(f"{where}.placement: expected 'explicit' or 'setpoint'")
        pose = None
        if "pose" in a:
            pose = _pair(a["pose"], f"{where}.pose")
            if len(pose) != 3:
                raise ConfigError(f"{where}.pose: expected [x, y, phi]")
        elif placement == "explicit":
            raise ConfigError(f"{where}: needs a 'pose' unless placement is 'setpoint'")
        if placement == "setpoint" and (kind != FORMATION or role != FOLLOWER):
            raise ConfigError(f"{where}: setpoint placement is only for formation followers")
        offset = _pair(a.get("offset", (0.0, 0.0)), f"{where}.offset")
        v0 = _num(a, "v", where, 0.0)
        if not 0 <= v0 <= limits.v_max:
            raise ConfigError(f"{where}.v = {v0:g} outside [0, v_max]")
        prof = None
        if "profile" in a:
            if role == FOLLOWER:
                raise ConfigError(f"{where}: followers are closed-loop and take no profile")
            try:
                prof = profile_from_dict(a["profile"]).bind(v0)
            except ValueError as exc:
                raise ConfigError(f"{where}.profile: {exc}") from None
        agents.append(AgentSpec(aid, role, pose, v0, placement, offset, prof))
    if not agents:
        raise ConfigError("no agents defined")

    graph = None
    observers: tuple[tuple[str, str], ...] = ()
    if kind == FORMATION:
        roles = {a.id: a.role for a in agents}
        xs, ys = [], []
        for i, e in enumerate(raw.get("edges") or []):
            where = f"edges[{i}]"
            extra = set(e) - {"type", "follower", "predecessor", "d_s", "T", "d_star", "E"}
            if extra:
                raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
            et = e.get("type")
            if et not in ("x", "y"):
                raise ConfigError(f"{where}.type: expected 'x' or 'y', got {et!r}")
            for k in ("follower", "predecessor"):
                if k not in e:
                    raise ConfigError(f"{where}: missing {k!r}")
            d_s = _num(e, "d_s", where)
            d_star = _num(e, "d_star", where)
            E = _num(e, "E", where, 1.4)
            if et == "x":
                params = EdgeControlParams(d_s=d_s, T=_num(e, "T", where), d_star_x=d_star, E_u=E)
                xs.append(Edge(str(e["follower"]), str(e["predecessor"]), params))
            else:
                if d_s == 0:
                    raise ConfigError(f"{where}.d_s: lateral safety distance must be nonzero")
                params = EdgeControlParams(d_s=d_s, d_star_y=d_star, E_omega=E)
                ys.append(Edge(str(e["follower"]), str(e["predecessor"]), params))
        graph = FormationGraph(roles=roles, x_edges=tuple(xs), y_edges=tuple(ys))
        for a in agents:
            if a.role == LEADER and a.profile is None:
                raise ConfigError(f"leader {a.id!r} needs a profile")
    else:
        obs = []
        for i, o in enumerate(raw.get("observers") or []):
            try:
                pair = (str(o["observer"]), str(o["target"]))
            except (KeyError, TypeError):
                raise ConfigError(f"observers[{i}]: needs 'observer' and 'target'") from None
            for x in pair:
                if x not in seen:
                    raise ConfigError(f"observers[{i}]: unknown agent {x!r}")
            obs.append(pair)
        if not obs:
            raise ConfigError("estimation scenario needs at least one observer")
        observers = tuple(obs)
        for a in agents:
            if a.profile is None:
                raise ConfigError(f"agent {a.id!r} in an estimation scenario needs a profile")

    # generated open-loop inputs must respect the limits at every sample
    n = int(round(duration / dt))
    for a in agents:
        if a.profile is None:
            continue
        for k in range(n + 1):
            inp = a.profile.inputs((k + 0.5) * dt)
            if abs(inp.u) > limits.u_max * (1 + 1e-12) or abs(inp.omega) > limits.omega_max * (1 + 1e-12):
                raise ConfigError(
                    f"profile of {a.id!r} exceeds the actuation limits at t = {k * dt:g} s "
                    f"(u = {inp.u:.4g}, omega = {inp.omega:.4g}; "
                    f"u_max = {limits.u_max:g}, omega_max = {limits.omega_max:g})"
                )

    report = dict(raw.get("report") or {})
    return ScenarioConfig(
        name=name, kind=kind, limits=limits, g_d=g_d, agents=tuple(agents),
        duration=duration, dt=dt, graph=graph, observers=observers, noise=noise,
        seed=int(raw.get("seed", 0)), estimator_init=est_init, report=report, source=source,
    )


def read_raw(path: str | Path, overrides: dict | None = None) -> dict:
    """Parse a YAML scenario file into a plain dict, merging ``overrides``.

    Nested mappings in ``overrides`` (``noise``, ``limits``...) are merged key
    by key; anything else replaces the top-level value.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{loc}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    for k, v in (overrides or {}).items():
        if isinstance(v, dict):
            merged = dict(raw.get(k) or {})
            merged.update(v)
            raw[k] = merged
        else:
            raw[k] = v
    return raw


def load_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    """Read and check a YAML scenario file (see :func:`read_raw` for ``overrides``)."""
    return config_from_dict(read_raw(path, overrides), source=str(path))


def bundled_scenarios() -> dict[str, Path]:
    """Scenario files shipped with the package, keyed by stem."""
    here = Path(__file__).resolve().parent.parent / "scenarios"
    return {p.stem: p for p in sorted(here.glob("*.yaml"))}


def resolve_scenario(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise ConfigError(f"no scenario file {name_or_path!r} (bundled: {', '.join(bundled)})")
