"""Node trajectories, speed estimation and analytic boundary crossings."""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

from .radio import Point, distance


@dataclass(frozen=True)
class Waypoint:
    pos: Point
    speed_mps: float | None = None  # speed of the leg arriving here; unused for the first


@dataclass(frozen=True)
class Region:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, p: Point) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax


@dataclass(frozen=True)
class Trajectory:
    kind: str  # "waypoints" | "random_waypoint"
    waypoints: tuple[Waypoint, ...] = ()
    region: Region | None = None
    speed_range: tuple[float, float] = (1.0, 1.0)
    start: Point | None = None
    _leg_times: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "waypoints":
            if not self.waypoints:
                raise ValueError("waypoint trajectory needs at least one waypoint")
            times = [0.0]
            for prev, wp in zip(self.waypoints, self.waypoints[1:]):
                if wp.speed_mps is None or wp.speed_mps <= 0:
                    raise ValueError("every leg needs a speed > 0")
                times.append(times[-1] + distance(prev.pos, wp.pos) / wp.speed_mps)
            object.__setattr__(self, "_leg_times", tuple(times))
        elif self.kind == "random_waypoint":
            if self.region is None:
                raise ValueError("random_waypoint trajectory needs a region")
            lo, hi = self.speed_range
            if not 0 < lo <= hi:
                raise ValueError("speed range must satisfy 0 < lo <= hi")
        else:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")

    @property
    def initial_position(self) -> Point:
        if self.kind == "waypoints":
            return self.waypoints[0].pos
        if self.start is not None:
            return self.start
        r = self.region
        return ((r.xmin + r.xmax) / 2, (r.ymin + r.ymax) / 2)


def position_at(traj: Trajectory, t: float) -> Point:
    """Piecewise-linear position on a scripted trajectory; halts at the last waypoint."""
    if traj.kind != "waypoints":
        raise ValueError("position_at is defined for scripted trajectories only")
    wps, times = traj.waypoints, traj._leg_times
    if t <= 0:
        return wps[0].pos
    for i in range(1, len(wps)):
        if t <= times[i]:
            t0, t1 = times[i - 1], times[i]
            a, b = wps[i - 1].pos, wps[i].pos
            if t1 == t0:
                return b
            f = (t - t0) / (t1 - t0)
            return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
    return wps[-1].pos


# In a region much smaller than speed*dt a single step could chain millions of
# arrivals; past this many the node rests at its latest waypoint for the step.
MAX_ARRIVALS_PER_STEP = 64


@dataclass(frozen=True)
class RandomWaypointState:
    pos: Point
    target: Point
    speed: float
    region: Region
    speed_range: tuple[float, float]


def _draw_target(region: Region, speed_range: tuple[float, float], stream: random.Random):
    x = region.xmin + stream.random() * (region.xmax - region.xmin)
    y = region.ymin + stream.random() * (region.ymax - region.ymin)
    lo, hi = speed_range
    return (x, y), lo + stream.random() * (hi - lo)


def initial_random_state(traj: Trajectory, stream: random.Random) -> RandomWaypointState:
    target, speed = _draw_target(traj.region, traj.speed_range, stream)
    return RandomWaypointState(traj.initial_position, target, speed, traj.region, traj.speed_range)


def step_random_waypoint(
    state: RandomWaypointState, dt: float, stream: random.Random
) -> RandomWaypointState:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    pos, target, speed = state.pos, state.target, state.speed
    budget = speed * dt
    for _ in range(MAX_ARRIVALS_PER_STEP):
        gap = distance(pos, target)
        if gap > budget:
            f = budget / gap
            pos = (pos[0] + f * (target[0] - pos[0]), pos[1] + f * (target[1] - pos[1]))
            break
        pos = target
        budget -= gap
        target, speed = _draw_target(state.region, state.speed_range, stream)
        if budget <= 0 or distance(pos, target) == 0:
            break
    return RandomWaypointState(pos, target, speed, state.region, state.speed_range)


def speed_estimate(history: list[tuple[float, Point]], window_s: float) -> float | None:
    """Path length over the trailing window divided by the time it spans."""
    if not history:
        return None
    t_last = history[-1][0]
    recent = [s for s in history if s[0] >= t_last - window_s]
    if len(recent) < 2:
        return None
    span = recent[-1][0] - recent[0][0]
    if span <= 0:
        return None
    length = sum(distance(a[1], b[1]) for a, b in zip(recent, recent[1:]))
    return length / span


class SpeedTracker:
    """Incremental equivalent of :func:`speed_estimate` for per-tick use."""

    def __init__(self, window_s: float):
        self.window_s = window_s
        self._samples: deque[tuple[float, Point]] = deque()
        self._segments: deque[float] = deque()
        self._length = 0.0

    def add(self, t: float, pos: Point) -> None:
        if self._samples:
            seg = distance(self._samples[-1][1], pos)
            self._segments.append(seg)
            self._length += seg
        self._samples.append((t, pos))
        while self._samples[0][0] < t - self.window_s:
            self._samples.popleft()
            self._length -= self._segments.popleft()

    def estimate(self) -> float | None:
        if len(self._samples) < 2:
            return None
        span = self._samples[-1][0] - self._samples[0][0]
        if span <= 0:
            return None
        return max(self._length, 0.0) / span


def analytic_crossing_times(
    origin: Point, velocity: Point, center: Point, radius: float
) -> list[float]:
    """Non-negative times at which ``origin + velocity*t`` lies on the circle."""
    vx, vy = velocity
    a = vx * vx + vy * vy
    if a == 0:
        raise ValueError("velocity must be non-zero")
    ox, oy = origin[0] - center[0], origin[1] - center[1]
    b = 2 * (vx * ox + vy * oy)
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    root = math.sqrt(disc)
    times = sorted({(-b - root) / (2 * a), (-b + root) / (2 * a)})
    return [t for t in times if t >= 0]
