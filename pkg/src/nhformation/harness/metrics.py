"""Metrics extracted from a :class:`SimLog`: amplitudes, string stability,
error maxima, barrier minima and the comparison against analytic bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..estimator import GuubBounds, derive_gains, guub_bounds
from .config import ESTIMATION, ScenarioConfig
from .sim import SimLog, log_meta

CHANNELS = {"velocity": "v", "acceleration": "u"}


def _peak(y: np.ndarray, i: int, sign: float) -> float:
    """Parabolic refinement of the extremum at sample ``i``."""
    if 0 < i < len(y) - 1:
        a, b, c = sign * y[i - 1], sign * y[i], sign * y[i + 1]
        den = a - 2.0 * b + c
        if den < 0:
            return sign * (b - 0.125 * (a - c) ** 2 / den)
    return float(y[i])


def amplitude(t: np.ndarray, y: np.ndarray, period: float, periods: float = 3.0) -> float:
    """Half peak-to-peak of ``y`` over the final ``periods`` periods.

    Raises:
        ValueError: the window is shorter than one period or longer than the log.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    if periods < 1:
        raise ValueError(f"amplitude window must cover at least one period, got {periods:g}")
    span = periods * period
    if t[-1] - t[0] < span:
        raise ValueError(f"log covers {t[-1] - t[0]:g} s, shorter than the {span:g} s window")
    mask = t >= t[-1] - span
    w = y[mask]
    hi = _peak(w, int(np.argmax(w)), 1.0)
    lo = _peak(w, int(np.argmin(w)), -1.0)
    return float(0.5 * (hi - lo))


@dataclass(frozen=True)
class StringStability:
    channel: str
    leader: str
    amplitudes: dict[str, float]
    gains: dict[str, float]
    reference: dict[str, str]

    @property
    def aggregate(self) -> float:
        return float(np.mean(list(self.gains.values())))

    @property
    def stable(self) -> bool:
        return self.aggregate < 1.0


def string_stability_gain(log: SimLog, cfg: ScenarioConfig, channel: str = "velocity",
                          period: float | None = None, periods: float = 3.0) -> StringStability:
    """Amplitude ratio of every follower to its X+ predecessor.

    The aggregate gain is the mean of the per-follower ratios. ``period``
    defaults to that of the leader's sinusoidal profile.
    """
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {sorted(CHANNELS)}, got {channel!r}")
    if cfg.kind == ESTIMATION or cfg.graph is None:
        raise ValueError("string stability needs a formation scenario")
    if period is None:
        prof = cfg.leader_profile()
        period = prof.period if prof is not None else None
        if period is None:
            raise ValueError("leader profile is not sinusoidal; pass the period explicitly")
    key = CHANNELS[channel]
    t = log.t
    leader = cfg.graph.leader
    amps = {a: amplitude(t, log.col(f"{a}.{key}"), period, periods)
            for a in [leader] + cfg.graph.followers()}
    ref = {e.follower: e.predecessor for e in cfg.graph.x_edges}
    gains = {f: amps[f] / amps[ref[f]] for f in cfg.graph.followers()}
    return StringStability(channel, leader, amps, gains, ref)


def _window(log: SimLog, start: float) -> np.ndarray:
    return log.t >= start - 1e-9


def compute_metrics(log: SimLog, cfg: ScenarioConfig) -> dict[str, float]:
    """Flat key -> value summary of a run (ordered)."""
    rep = cfg.report
    transient = float(rep.get("transient", 0.0))
    t = log.t
    t_end = float(t[-1])
    final = float(rep.get("window", min(2.0, t_end - t[0])))
    post = _window(log, transient)
    tail = _window(log, t_end - final)
    out: dict[str, float] = {"duration": t_end, "samples": float(len(log))}

    for pre in _slots(log, cfg):
        for ch in ("e_pos", "e_speed"):
            y = np.abs(log.col(f"{pre}.{ch}"))
            out[f"{pre}.{ch}.max"] = float(y[post].max())
            out[f"{pre}.{ch}.final_max"] = float(y[tail].max())
            out[f"{pre}.{ch}.end"] = float(y[-1])
        for ch in ("e_dx", "e_dy", "e_vx", "e_vy"):
            out[f"{pre}.{ch}.max"] = float(np.abs(log.col(f"{pre}.{ch}"))[post].max())

    if cfg.kind != ESTIMATION:
        followers = cfg.graph.followers()
        turning = post.copy()
        if rep.get("turning_only"):
            lead = cfg.graph.leader
            turning &= np.abs(log.col(f"{lead}.omega")) > 0
        h1 = [float(log.col(f"{f}.x.h1")[post].min()) for f in followers]
        h2 = [float(log.col(f"{f}.y.h2")[post].min()) for f in followers]
        out["min_h1"] = min(h1)
        out["min_h2"] = min(h2)
        for f, a, b in zip(followers, h1, h2):
            out[f"{f}.min_h1"] = a
            out[f"{f}.min_h2"] = b
        for f in followers:
            tx = np.abs(log.col(f"{f}.x.track"))
            ty = np.abs(log.col(f"{f}.y.track"))
            out[f"{f}.track_x.max"] = float(tx[post].max())
            out[f"{f}.track_y.max"] = float(ty[post].max())
            if turning.any():
                out[f"{f}.track_x.turning_max"] = float(tx[turning].max())
                out[f"{f}.track_y.turning_max"] = float(ty[turning].max())
            w = log.col(f"{f}.omega")
            out[f"{f}.omega.final_mean"] = float(w[tail].mean())
            out[f"{f}.omega.final_dev"] = float(np.abs(w[tail] - w[tail].mean()).max())
            out[f"{f}.v.final_mean"] = float(log.col(f"{f}.v")[tail].mean())
            out[f"{f}.sat_u.count"] = float(log.col(f"{f}.sat_u").sum())
            out[f"{f}.sat_omega.count"] = float(log.col(f"{f}.sat_omega").sum())
            out[f"{f}.degenerate.count"] = float(log.col(f"{f}.degenerate").sum())
        out["max_track_x"] = max(out[f"{f}.track_x.max"] for f in followers)
        out["max_track_y"] = max(out[f"{f}.track_y.max"] for f in followers)
        ss = rep.get("string_stability")
        if ss:
            res = string_stability_gain(log, cfg, ss.get("channel", "velocity"),
                                        periods=float(ss.get("periods", 3)))
            for a, amp in res.amplitudes.items():
                out[f"{a}.amplitude"] = amp
            for f, g in res.gains.items():
                out[f"{f}.S"] = g
            out["S"] = res.aggregate
    out["max_e_pos"] = max((v for k, v in out.items() if k.endswith(".e_pos.max")), default=0.0)
    out["max_e_speed"] = max((v for k, v in out.items() if k.endswith(".e_speed.max")), default=0.0)
    return out


def _slots(log: SimLog, cfg: ScenarioConfig) -> list[str]:
    return list(log.meta.get("slots") or log_meta(cfg)["slots"])


def write_metrics(metrics: dict[str, float], path: str | Path) -> None:
    with open(path, "w") as fh:
        for k, v in metrics.items():
            fh.write(f"{k} = {float(v)!r}\n")


def read_metrics(path: str | Path) -> dict[str, float]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        out[k.strip()] = float(v)
    return out


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.value <= self.bound


@dataclass
class BoundReport:
    bounds: GuubBounds
    checks: list[BoundCheck] = field(default_factory=list)
    min_h1: float | None = None
    min_h2: float | None = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        b = self.bounds
        out = [f"a_eff = {b.a_eff:g}  c_i = {b.c_i:g}",
               f"eps_d = {b.eps_d:.6g}  eps_v = {b.eps_v:.6g}  "
               f"eps_x = {b.eps_x:.6g}  eps_y = {b.eps_y:.6g}",
               f"velocity envelope r*eps_d + eps_v = {b.velocity_envelope:.6g}"]
        for c in self.checks:
            out.append(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.value:.6g} <= {c.bound:.6g}")
        if self.min_h1 is not None:
            out.append(f"min h1 = {self.min_h1:.6g}  min h2 = {self.min_h2:.6g}")
        return out


def bound_report(log: SimLog, cfg: ScenarioConfig, bounds: GuubBounds | None = None,
                 after: float | None = None) -> BoundReport:
    """Maximum errors after ``after`` seconds against the ultimate bounds.

    Estimation errors are compared with ``eps_d`` (distance) and the velocity
    envelope; tracking errors with ``eps_x + eps_d`` and ``eps_y + eps_d``.
    """
    gains = derive_gains(cfg.g_d)
    if bounds is None:
        bounds = guub_bounds(gains, cfg.a_eff)
    if after is None:
        after = float(cfg.report.get("transient", 0.0))
    post = _window(log, after)
    rep = BoundReport(bounds)
    for s in _slots(log, cfg):
        for ch, bound in (("e_dx", bounds.eps_d), ("e_dy", bounds.eps_d),
                          ("e_vx", bounds.velocity_envelope), ("e_vy", bounds.velocity_envelope)):
            val = float(np.abs(log.col(f"{s}.{ch}"))[post].max())
            rep.checks.append(BoundCheck(f"{s} |{ch}|", val, bound))
    if cfg.kind != ESTIMATION:
        for f in cfg.graph.followers():
            rep.checks.append(BoundCheck(f"{f} |d_x - d*_x - T v|",
                                         float(np.abs(log.col(f"{f}.x.track"))[post].max()),
                                         bounds.eps_x + bounds.eps_d))
            rep.checks.append(BoundCheck(f"{f} |d_y - d*_y|",
                                         float(np.abs(log.col(f"{f}.y.track"))[post].max()),
                                         bounds.eps_y + bounds.eps_d))
        rep.min_h1 = min(float(log.col(f"{f}.x.h1")[post].min()) for f in cfg.graph.followers())
        rep.min_h2 = min(float(log.col(f"{f}.y.h2")[post].min()) for f in cfg.graph.followers())
    return rep


def summary_line(cfg: ScenarioConfig, metrics: dict[str, float]) -> str:
    parts = [cfg.name]
    if "min_h1" in metrics:
        parts.append(f"min_h1={metrics['min_h1']:.4g}")
        parts.append(f"min_h2={metrics['min_h2']:.4g}")
    if "S" in metrics:
        parts.append(f"S={metrics['S']:.4g}")
    parts.append(f"max_e_pos={metrics['max_e_pos']:.4g}")
    parts.append(f"max_e_speed={metrics['max_e_speed']:.4g}")
    return "  ".join(parts)


def isclose_metrics(a: dict[str, float], b: dict[str, float]) -> bool:
    """Exact equality, treating NaN as equal to NaN."""
    if a.keys() != b.keys():
        return False
    return all(x == y or (math.isnan(x) and math.isnan(y)) for x, y in
               ((a[k], b[k]) for k in a))
