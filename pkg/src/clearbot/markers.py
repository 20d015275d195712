"""Conversion of every data product into wire-level markers.

Color conventions: scan hits red, particles pink, planned path yellow, human
avatars yellow, cost cells on a green-to-red ramp, turn arrows amber. Pure and
stateless; ids restart from zero for every frame of a layer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .perception import CostMap, HumanDetection, ParticleSet
from .planning import Path, Signal, TurnSignal, point_at_arclength
from .planning import EmptyPath
from .world import LaserScan, PointCloud, Pose2D

LAYERS = ("scan", "particles", "humans", "costmap", "path", "signal", "pointcloud")
KINDS = ("dot", "cell", "arrow", "avatar", "point3d")


class OutOfRange(ValueError):
    pass


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


@dataclass(frozen=True)
class Color:
    r: float
    g: float
    b: float
    a: float = 1.0

    def __post_init__(self) -> None:
        for name in "rgba":
            object.__setattr__(self, name, _clamp01(getattr(self, name)))

    def rgba(self) -> tuple:
        return (self.r, self.g, self.b, self.a)


RED = Color(1.0, 0.0, 0.0)
PINK = Color(1.0, 0.4, 0.7)
YELLOW = Color(1.0, 1.0, 0.0)
GRAY = Color(0.7, 0.7, 0.7, 0.9)
AMBER = Color(1.0, 0.75, 0.0)


@dataclass(frozen=True)
class Marker:
    id: int
    layer: str
    kind: str
    x: float
    y: float
    z: float
    scale: float
    color: Color
    yaw: float = 0.0
    flash_hz: Optional[float] = None

    def __post_init__(self) -> None:
        if self.layer not in LAYERS:
            raise ValueError(f"unknown layer {self.layer!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.scale <= 0.0:
            raise ValueError("scale must be > 0")


def color_of(p: float) -> Color:
    """Occupancy probability to display color: green when clear, red when
    occupied, linear in between."""
    if not (0.0 <= p <= 1.0):
        raise OutOfRange(f"probability {p} outside [0, 1]")
    return Color(p, 1.0 - p, 0.0, 0.8)


def encode_scan(scan: LaserScan, pose: Pose2D, dot_scale: float = 0.04) -> list[Marker]:
    """One red dot per returning beam at its world hit point."""
    markers = []
    shifted = LaserScan(scan.stamp, pose, scan.params, scan.ranges)
    for i, (hx, hy) in enumerate(shifted.hit_points()):
        markers.append(Marker(i, "scan", "dot", hx, hy, 0.0, dot_scale, RED))
    return markers


def encode_particles(belief: ParticleSet, min_scale: float = 0.02) -> list[Marker]:
    """A pink dot per pose hypothesis, sized by weight (clamped up to stay
    visible for the many near-zero-weight particles)."""
    markers = []
    for i, particle in enumerate(belief.particles):
        scale = max(min_scale, 0.5 * particle.weight)
        markers.append(
            Marker(i, "particles", "dot", particle.pose.x, particle.pose.y, 0.0,
                   scale, PINK, yaw=particle.pose.theta)
        )
    return markers


def encode_costmap(
    cost: CostMap,
    emit_threshold: float = 0.05,
    robot_pose: Pose2D | None = None,
    ring_radius: float = 1.0,
    ring_count: int = 24,
) -> list[Marker]:
    """Cell markers for every cell at or above emit_threshold (bounded frames
    beat full-grid dumps on the wire), plus a sampled ring of clear cells
    around the robot so viewers also see confirmed free space."""
    markers = []
    next_id = 0
    h, w = cost.probs.shape
    for iy in range(h):
        for ix in range(w):
            p = cost.p(ix, iy)
            if p >= emit_threshold:
                x, y = cost.cell_center(ix, iy)
                markers.append(
                    Marker(next_id, "costmap", "cell", x, y, 0.0,
                           cost.resolution, color_of(p))
                )
                next_id += 1
    if robot_pose is not None:
        for k in range(ring_count):
            ang = 2.0 * math.pi * k / ring_count
            x = robot_pose.x + ring_radius * math.cos(ang)
            y = robot_pose.y + ring_radius * math.sin(ang)
            ix, iy = cost.cell_of(x, y)
            if cost.in_bounds(ix, iy) and cost.p(ix, iy) < emit_threshold:
                cx, cy = cost.cell_center(ix, iy)
                markers.append(
                    Marker(next_id, "costmap", "cell", cx, cy, 0.0,
                           cost.resolution, color_of(cost.p(ix, iy)))
                )
                next_id += 1
    return markers


def encode_path(path: Path, spacing: float = 0.25) -> list[Marker]:
    """Yellow ground-plane dots resampled along the path at fixed arc length."""
    if spacing <= 0.0:
        raise ValueError("spacing must be > 0")
    if len(path) == 0:
        raise EmptyPath("cannot encode an empty path")
    total = path.length()
    count = int(total / spacing + 1e-9) + 1
    markers = []
    for k in range(count):
        x, y = point_at_arclength(path, 0, k * spacing)
        markers.append(Marker(k, "path", "dot", x, y, 0.0, 0.06, YELLOW))
    return markers


def encode_humans(detections: Sequence[HumanDetection]) -> list[Marker]:
    """Yellow avatar glyph per detected person."""
    return [
        Marker(i, "humans", "avatar", d.position[0], d.position[1], 0.0, 0.4, YELLOW)
        for i, d in enumerate(detections)
    ]


def encode_signal(sig: TurnSignal, flash_hz: float = 2.0) -> list[Marker]:
    """Left/right become one flashing robot-frame arrow at +/- pi/2; straight
    renders nothing. Position is robot-relative: viewers anchor it to the
    robot's current pose."""
    if sig.value is Signal.STRAIGHT:
        return []
    yaw = math.pi / 2.0 if sig.value is Signal.LEFT else -math.pi / 2.0
    return [
        Marker(0, "signal", "arrow", 0.0, 0.0, 0.3, 0.3, AMBER,
               yaw=yaw, flash_hz=flash_hz)
    ]


def encode_pointcloud(cloud: PointCloud, dot_scale: float = 0.03) -> list[Marker]:
    return [
        Marker(i, "pointcloud", "point3d", x, y, z, dot_scale, GRAY)
        for i, (x, y, z) in enumerate(cloud.points)
    ]
