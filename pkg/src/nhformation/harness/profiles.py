"""Open-loop input profiles for the leader (and for free agents in estimation runs)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dynamics import ControlInput

KINDS = ("constant-velocity", "circular", "sinusoid-velocity", "sinusoid-acceleration", "piecewise")


@dataclass(frozen=True)
class Segment:
    until: float
    u: float
    omega: float


@dataclass(frozen=True)
class LeaderProfile:
    """Input generator ``t -> (u, omega)``.

    Every kind starts with an optional ramp from the agent's initial speed to
    ``speed`` over ``ramp_time`` seconds (constant acceleration), then holds a
    constant turn rate ``angular_velocity``. The sinusoid kinds add an
    acceleration term from ``start`` on:

    * ``sinusoid-velocity``: speed oscillates by ``amplitude`` m/s,
      ``u = amplitude * frequency * cos(frequency (t - start))``;
    * ``sinusoid-acceleration``: ``u = amplitude * cos(frequency (t - start))``.

    ``piecewise`` ignores all of that and plays back ``segments``.
    """

    kind: str
    speed: float | None = None
    ramp_time: float = 0.0
    angular_velocity: float = 0.0
    turn_start: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    start: float = 0.0
    segments: tuple[Segment, ...] = ()
    v0: float = 0.0
    _accel: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind in ("sinusoid-velocity", "sinusoid-acceleration") and not self.frequency > 0:
            raise ValueError(f"{self.kind} profile needs a positive frequency (rad/s)")
        if self.kind == "piecewise" and not self.segments:
            raise ValueError("piecewise profile needs at least one segment")
        if self.ramp_time < 0:
            raise ValueError("ramp_time must be non-negative")
        accel = 0.0
        if self.speed is not None and self.ramp_time > 0:
            accel = (self.speed - self.v0) / self.ramp_time
        object.__setattr__(self, "_accel", accel)

    def bind(self, v0: float) -> "LeaderProfile":
        """Copy with the agent's initial speed filled in (needed for the ramp)."""
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__ if not k.startswith("_")}
        kw["v0"] = float(v0)
        return LeaderProfile(**kw)

    @property
    def period(self) -> float | None:
        return 2.0 * math.pi / self.frequency if self.frequency > 0 else None

    def inputs(self, t: float) -> ControlInput:
        if self.kind == "piecewise":
            for seg in self.segments:
                if t < seg.until:
                    return ControlInput(seg.u, seg.omega)
            return ControlInput(0.0, 0.0)
        u = self._accel if t < self.ramp_time else 0.0
        if t >= self.start:
            tau = t - self.start
            if self.kind == "sinusoid-velocity":
                u += self.amplitude * self.frequency * math.cos(self.frequency * tau)
            elif self.kind == "sinusoid-acceleration":
                u += self.amplitude * math.cos(self.frequency * tau)
        w = self.angular_velocity if t >= self.turn_start else 0.0
        return ControlInput(u, w)

    def turning(self, t: float) -> bool:
        return self.inputs(t).omega != 0.0


def profile_from_dict(d: dict) -> LeaderProfile:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind is None:
        raise ValueError("profile needs a 'kind'")
    segs = d.pop("segments", None)
    known = set(LeaderProfile.__dataclass_fields__) - {"kind", "segments", "v0", "_accel"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown profile keys: {sorted(unknown)}")
    segments: list[Segment] = []
    if segs is not None:
        for s in segs:
            s = dict(s)
            until = float(s.pop("until", math.inf))
            u = float(s.pop("u", 0.0))
            w = float(s.pop("omega", 0.0))
            if s:
                raise ValueError(f"unknown segment keys: {sorted(s)}")
            segments.append(Segment(until, u, w))
        for a, b in zip(segments, segments[1:]):
            if not b.until > a.until:
                raise ValueError("piecewise segments must have increasing 'until' times")
    kwargs = {k: float(v) for k, v in d.items()}
    return LeaderProfile(kind=kind, segments=tuple(segments), **kwargs)
