"""Coupled simulation loop and the time-series log.

One step of length ``dt`` does::

    snapshot -> measure -> control laws (estimates at t_k) -> clamp
             -> joint RK4 of agents and estimators -> clamp v, wrap phi

Agents and estimators are integrated together so that every RK stage feeds
the estimator the measurement of that stage; controls are held over the
step. Open-loop profile inputs are sampled at the step midpoint.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..controller import control_lateral, control_longitudinal, eval_h1, eval_h2
from ..dynamics import (
    AgentState,
    CoincidentAgentsError,
    ControlInput,
    NonFiniteError,
    measure_relative,
    project_truth,
    wrap_angle,
)
from ..estimator import (
    EstimatorState,
    derive_gains,
    estimation_error,
    estimator_lyapunov,
    init_estimator,
)
from ..graph import FOLLOWER, LEADER, RuntimePlan, wire
from ..kernels import coupled_rk4
from .config import ESTIMATION, ConfigError, ScenarioConfig

AGENT_FIELDS = ("x", "y", "phi", "v", "u_cmd", "omega_cmd", "u", "omega")
FOLLOWER_FIELDS = ("V_x", "V_y", "V_est", "V", "sat_u", "sat_omega", "degenerate")
SLOT_FIELDS = ("d", "theta", "d_x", "d_y", "d_x_hat", "v1x_hat", "d_y_hat", "v1y_hat",
               "psi_hat", "v1_hat", "v1x", "v1y", "a_x", "a_y",
               "e_dx", "e_vx", "e_dy", "e_vy", "e_pos", "e_speed")
EDGE_FIELDS = ("x.h1", "x.track", "y.h2", "y.track")
MIN_SEPARATION = 1e-9


class SimulationAborted(RuntimeError):
    """The run stopped early; ``log`` holds every completed record."""

    def __init__(self, reason: str, log: "SimLog"):
        super().__init__(reason)
        self.reason = reason
        self.log = log


@dataclass
class SimLog:
    """Dense time-series log: one row per time sample, named columns.

    Column order is ``t``, then per-agent blocks (``<id>.<field>``), then
    follower diagnostics, estimator slots (``<observer>><target>.<field>``)
    and per-follower edge blocks (``<id>.x.h1`` ...).
    """

    columns: list[str]
    data: np.ndarray
    meta: dict = field(default_factory=dict)
    aborted: str | None = None

    def __post_init__(self):
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __len__(self) -> int:
        return self.data.shape[0]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def col(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self._index[name]]
        except KeyError:
            raise KeyError(f"no column {name!r} in log") from None

    @property
    def t(self) -> np.ndarray:
        return self.col("t")

    def to_csv(self, path: str | Path) -> None:
        """Write with ``%.17g`` so the file round-trips bit for bit."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.data:
                w.writerow(["%.17g" % x for x in row])

    @classmethod
    def from_csv(cls, path: str | Path, meta: dict | None = None) -> "SimLog":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty log file") from None
            rows = [[float(x) for x in r] for r in reader if r]
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
        return cls(header, data, dict(meta or {}))


def slot_name(observer: str, target: str) -> str:
    return f"{observer}>{target}"


def _columns(ids, followers, slots) -> list[str]:
    cols = ["t"]
    for a in ids:
        cols += [f"{a}.{f}" for f in AGENT_FIELDS]
    for f in followers:
        cols += [f"{f}.{x}" for x in FOLLOWER_FIELDS]
    for o, t in slots:
        cols += [f"{slot_name(o, t)}.{x}" for x in SLOT_FIELDS]
    for f in followers:
        cols += [f"{f}.{x}" for x in EDGE_FIELDS]
    return cols


def setpoint_pose(pred_x: AgentState, pred_y: AgentState, d_x: float, d_y: float,
                  offset=(0.0, 0.0)) -> tuple[float, float, float]:
    """Pose with the X predecessor ``d_x`` ahead and the Y predecessor ``d_y`` to the left.

    The heading is taken from the X predecessor; ``offset`` shifts the result
    in that body frame.
    """
    phi = pred_x.phi
    c, s = math.cos(phi), math.sin(phi)
    along = c * pred_x.x + s * pred_x.y - d_x + offset[0]
    across = -s * pred_y.x + c * pred_y.y - d_y + offset[1]
    return (c * along - s * across, s * along + c * across, phi)


def initial_states(cfg: ScenarioConfig, plan: RuntimePlan | None) -> dict[str, AgentState]:
    states: dict[str, AgentState] = {}
    specs = {a.id: a for a in cfg.agents}
    for a in cfg.agents:
        if a.placement == "explicit":
            states[a.id] = AgentState(a.pose[0], a.pose[1], wrap_angle(a.pose[2]), a.v)
    if plan is not None:
        for fp in plan.followers:
            spec = specs[fp.follower]
            if spec.placement != "setpoint":
                continue
            px = states[fp.x_edge.predecessor]
            py = states[fp.y_edge.predecessor]
            v = spec.v
            xp = fp.x_edge.params
            x, y, phi = setpoint_pose(px, py, xp.d_star_x + xp.T * v,
                                      fp.y_edge.params.d_star_y, spec.offset)
            states[fp.follower] = AgentState(x, y, phi, v)
    return states


def log_meta(cfg: ScenarioConfig) -> dict:
    """Agent, follower and estimator-slot layout of a scenario's log."""
    ids = [a.id for a in cfg.agents]
    if cfg.kind == ESTIMATION:
        slots, followers = list(cfg.observers), []
    else:
        plan = wire(cfg.graph, derive_gains(cfg.g_d))
        slots = [(s.follower, s.target) for s in plan.estimators]
        followers = [fp.follower for fp in plan.followers]
    return {"name": cfg.name, "dt": cfg.dt, "agents": ids, "followers": followers,
            "slots": [slot_name(o, t) for o, t in slots], "g_d": cfg.g_d}


def run_scenario(cfg: ScenarioConfig, backend: str | None = None) -> SimLog:
    """Simulate a validated scenario.

    Raises:
        ConfigError: gains are invalid.
        GraphValidationError: the formation graph fails validation.
        SimulationAborted: a non-finite state or a collision; carries the
            partial log.
    """
    try:
        gains = derive_gains(cfg.g_d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    limits = cfg.limits
    ids = [a.id for a in cfg.agents]
    idx = {a: i for i, a in enumerate(ids)}
    specs = {a.id: a for a in cfg.agents}

    plan = None
    if cfg.kind == ESTIMATION:
        slots = list(cfg.observers)
        followers: list[str] = []
    else:
        plan = wire(cfg.graph, gains)
        slots = [(s.follower, s.target) for s in plan.estimators]
        followers = [fp.follower for fp in plan.followers]
    init = initial_states(cfg, plan)

    n, m = len(ids), len(slots)
    S = np.array([init[a].as_array() for a in ids], dtype=np.float64).reshape(n, 4)
    ef = np.array([idx[o] for o, _ in slots], dtype=np.int64)
    et = np.array([idx[t] for _, t in slots], dtype=np.int64)
    open_loop = {a.id: a.profile for a in cfg.agents if a.profile is not None}
    rng = np.random.default_rng(cfg.seed)
    noise_on = cfg.noise.enabled
    dt = cfg.dt
    N = cfg.n_steps

    columns = _columns(ids, followers, slots)
    meta = {"name": cfg.name, "dt": dt, "agents": ids, "followers": followers,
            "slots": [slot_name(o, t) for o, t in slots], "g_d": cfg.g_d}
    rows: list[list[float]] = []

    def snapshot(k: int) -> SimLog:
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
        return SimLog(columns, data, meta)

    E = np.zeros((m, 4))
    prev_omega = {f: 0.0 for f in followers}
    fplans = {fp.follower: fp for fp in plan.followers} if plan else {}
    slot_of = {s: j for j, s in enumerate(slots)}

    for k in range(N + 1):
        t = k * dt
        states = [AgentState(*S[i]) for i in range(n)]

        noise = np.zeros((m, 2))
        if noise_on:
            noise[:, 0] = rng.normal(0.0, cfg.noise.d_std, m) if cfg.noise.d_std > 0 else 0.0
            noise[:, 1] = rng.normal(0.0, cfg.noise.theta_std, m) if cfg.noise.theta_std > 0 else 0.0
        meas, true_meas = [], []
        try:
            for j, (o, tg) in enumerate(slots):
                so, st = states[idx[o]], states[idx[tg]]
                tm = measure_relative(so, st)
                true_meas.append(tm)
                meas.append(measure_relative(so, st, tuple(noise[j])) if noise_on else tm)
        except CoincidentAgentsError as exc:
            raise SimulationAborted(f"collision at t = {t:g} s: {exc}", snapshot(k)) from None

        if k == 0:
            for j, (o, tg) in enumerate(slots):
                if cfg.estimator_init == "truth":
                    tr = project_truth(states[idx[o]], 0.0, states[idx[tg]], ControlInput(0.0, 0.0))
                    E[j] = (true_meas[j].d_x, tr.v1x, true_meas[j].d_y, tr.v1y)
                else:
                    E[j] = init_estimator(meas[j], states[idx[o]].v).as_array()
        ests = [EstimatorState.from_array(E[j]) for j in range(m)]

        # control commands
        cmd = [(0.0, 0.0)] * n
        applied = [(0.0, 0.0)] * n
        fdiag: dict[str, tuple] = {}
        for a, prof in open_loop.items():
            inp = prof.inputs(t + 0.5 * dt)
            cmd[idx[a]] = (inp.u, inp.omega)
            c = limits.clamp(inp)
            applied[idx[a]] = (c.u, c.omega)
        for f in followers:
            fp = fplans[f]
            i = idx[f]
            me = states[i]
            jx, jy = fp.x_slot, fp.y_slot
            lat = control_lateral(ests[jy], meas[jy].d_x, meas[jy].d_y, fp.y_edge.params,
                                  gains, previous_omega=prev_omega[f])
            w = min(max(lat.omega, -limits.omega_max), limits.omega_max)
            u_raw = control_longitudinal(ests[jx], me.v, meas[jx].d_x, meas[jx].d_y, w,
                                         fp.x_edge.params, gains)
            u = min(max(u_raw, -limits.u_max), limits.u_max)
            prev_omega[f] = w
            cmd[i] = (u_raw, lat.omega)
            applied[i] = (u, w)
            fdiag[f] = (u != u_raw, w != lat.omega, lat.degenerate)

        # log row
        row = [t]
        for i in range(n):
            s = states[i]
            row += [s.x, s.y, s.phi, s.v, cmd[i][0], cmd[i][1], applied[i][0], applied[i][1]]
        truths = []
        errs = []
        for j, (o, tg) in enumerate(slots):
            io, it = idx[o], idx[tg]
            tr = project_truth(states[io], applied[io][1], states[it], ControlInput(*applied[it]))
            truths.append(tr)
            errs.append(estimation_error(true_meas[j], tr, ests[j]))
        for f in followers:
            fp = fplans[f]
            me = states[idx[f]]
            xp, yp = fp.x_edge.params, fp.y_edge.params
            ex, ey = ests[fp.x_slot], ests[fp.y_slot]
            V_x = 0.5 * (ex.d_x_hat - xp.d_star_x - xp.T * me.v) ** 2
            V_y = 0.5 * (ey.d_y_hat - yp.d_star_y) ** 2
            V_est = sum(estimator_lyapunov(errs[j].as_array(), gains)
                        for j in sorted({fp.x_slot, fp.y_slot}))
            su, sw, dg = fdiag[f]
            row += [V_x, V_y, V_est, V_x + V_y + V_est, float(su), float(sw), float(dg)]
        for j in range(m):
            mm, es, tr, er = meas[j], ests[j], truths[j], errs[j]
            v1 = math.hypot(tr.v1x, tr.v1y)
            row += [mm.d, mm.theta, mm.d_x, mm.d_y,
                    es.d_x_hat, es.v1x_hat, es.d_y_hat, es.v1y_hat, es.psi_hat, es.v1_hat,
                    tr.v1x, tr.v1y, tr.a_x, tr.a_y,
                    er.e_dx, er.e_vx, er.e_dy, er.e_vy,
                    math.hypot(er.e_dx, er.e_dy), abs(v1 - es.v1_hat)]
        for f in followers:
            fp = fplans[f]
            me = states[idx[f]]
            xp, yp = fp.x_edge.params, fp.y_edge.params
            mx = true_meas[slot_of[(f, fp.x_edge.predecessor)]]
            my = true_meas[slot_of[(f, fp.y_edge.predecessor)]]
            row += [eval_h1(mx.d_x, me.v, xp.d_s, xp.T), mx.d_x - xp.d_star_x - xp.T * me.v,
                    eval_h2(my.d_y, yp.d_s), my.d_y - yp.d_star_y]
        rows.append(row)
        if k == N:
            break

        if not all(math.isfinite(x) for x in row):
            raise SimulationAborted(f"non-finite value in the log at t = {t:g} s", snapshot(k))
        S1, E1 = coupled_rk4(S, np.array(applied, dtype=np.float64).reshape(n, 2), E,
                             ef, et, gains.as_tuple(), noise, dt, backend=backend)
        if not (np.all(np.isfinite(S1)) and np.all(np.isfinite(E1))):
            raise SimulationAborted(f"non-finite state after the step at t = {t:g} s", snapshot(k))
        for i in range(n):
            S1[i, 2] = wrap_angle(S1[i, 2])
            S1[i, 3] = limits.clamp_speed(S1[i, 3])
        S, E = S1, E1
        for a in range(n):
            for b in range(a + 1, n):
                if math.hypot(S[a, 0] - S[b, 0], S[a, 1] - S[b, 1]) < MIN_SEPARATION:
                    raise SimulationAborted(
                        f"agents {ids[a]!r} and {ids[b]!r} collided at t = {t + dt:g} s", snapshot(k))

    return SimLog(columns, np.array(rows, dtype=np.float64), meta)


__all__ = ["SimLog", "SimulationAborted", "run_scenario", "log_meta", "setpoint_pose", "initial_states",
           "slot_name", "NonFiniteError", "LEADER", "FOLLOWER"]
