"""Deterministic 2D world: ascii-grid maps, unicycle motion with disk-footprint
collision, grid-traversal LIDAR, synthetic depth points, and sensor-fault windows.

Everything here is a pure function over value-semantic state; a single stepper
owns the SimState and snapshots are safe to hand to other tasks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

NO_RETURN = None  # beam that hit nothing within range; serialized as JSON null

OCCUPIED = ord("#")
FREE = ord(".")


class MapError(ValueError):
    """Base for ascii-grid map document problems."""


class BadHeader(MapError):
    pass


class RaggedRows(MapError):
    pass


class IllegalChar(MapError):
    pass


class NonPositiveDt(ValueError):
    pass


class PoseOutOfBounds(ValueError):
    pass


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def moved(self, dx: float, dy: float, dtheta: float = 0.0) -> "Pose2D":
        return Pose2D(self.x + dx, self.y + dy, self.theta + dtheta)


@dataclass(frozen=True)
class Twist:
    v: float = 0.0  # m/s forward
    w: float = 0.0  # rad/s yaw

    def clamped(self, v_max: float, w_max: float) -> "Twist":
        return Twist(
            max(-v_max, min(v_max, self.v)),
            max(-w_max, min(w_max, self.w)),
        )


@dataclass(frozen=True)
class GridMap:
    """Static occupancy world. cells is row-major, one byte per cell,
    index iy * width + ix; row 0 is the first grid line of the document
    and spans world y in [origin.y, origin.y + resolution)."""

    resolution: float
    width: int
    height: int
    origin: Pose2D
    cells: bytes

    def __post_init__(self) -> None:
        if self.resolution <= 0.0:
            raise ValueError("resolution must be > 0")
        if self.width * self.height != len(self.cells):
            raise ValueError("width*height must equal number of cells")

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_occupied(self, ix: int, iy: int) -> bool:
        """Cells outside the map count as occupied: the world ends there."""
        if not self.in_bounds(ix, iy):
            return True
        return self.cells[iy * self.width + ix] == OCCUPIED

    def to_grid(self, x: float, y: float) -> tuple[float, float]:
        """World point -> continuous grid-frame coordinates (cell units * resolution)."""
        dx = x - self.origin.x
        dy = y - self.origin.y
        c = math.cos(-self.origin.theta)
        s = math.sin(-self.origin.theta)
        return c * dx - s * dy, s * dx + c * dy

    def to_world(self, gx: float, gy: float) -> tuple[float, float]:
        c = math.cos(self.origin.theta)
        s = math.sin(self.origin.theta)
        return self.origin.x + c * gx - s * gy, self.origin.y + s * gx + c * gy

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        gx, gy = self.to_grid(x, y)
        return int(math.floor(gx / self.resolution)), int(math.floor(gy / self.resolution))

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return self.to_world((ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution)

    def contains_pose(self, pose: Pose2D) -> bool:
        ix, iy = self.cell_of(pose.x, pose.y)
        return self.in_bounds(ix, iy)


def load_map(text: str) -> GridMap:
    """Parse an ascii-grid document.

    Line 1: ``res=<float> origin=<x> <y> <theta>``; remaining lines are the
    grid over {'#', '.'} ('#' occupied). All grid lines must share one length.
    """
    lines = text.splitlines()
    if not lines:
        raise BadHeader("empty document")
    header = lines[0].strip()
    parts = header.split()
    if len(parts) < 2 or not parts[0].startswith("res=") or not parts[1].startswith("origin="):
        raise BadHeader(f"malformed header: {header!r}")
    origin_parts = [parts[1][len("origin="):], *parts[2:]]
    origin_parts = [p for p in origin_parts if p]
    if len(origin_parts) != 3:
        raise BadHeader(f"malformed header: {header!r}")
    try:
        resolution = float(parts[0][len("res="):])
        ox, oy, otheta = (float(p) for p in origin_parts)
    except ValueError as exc:
        raise BadHeader(f"malformed header: {header!r}") from exc
    if resolution <= 0.0:
        raise BadHeader("resolution must be > 0")

    grid_lines = [ln for ln in lines[1:]]
    while grid_lines and grid_lines[-1] == "":
        grid_lines.pop()
    if not grid_lines:
        raise BadHeader("document has no grid rows")
    width = len(grid_lines[0])
    cells = bytearray()
    for lineno, ln in enumerate(grid_lines, start=2):
        if len(ln) != width:
            raise RaggedRows(f"line {lineno} has length {len(ln)}, expected {width}")
        for ch in ln:
            if ch == "#":
                cells.append(OCCUPIED)
            elif ch == ".":
                cells.append(FREE)
            else:
                raise IllegalChar(f"line {lineno}: illegal character {ch!r}")
    return GridMap(
        resolution=resolution,
        width=width,
        height=len(grid_lines),
        origin=Pose2D(ox, oy, otheta),
        cells=bytes(cells),
    )


def dump_map(grid: GridMap) -> str:
    """Inverse of load_map (header uses shortest float repr)."""
    header = (
        f"res={grid.resolution:g} origin={grid.origin.x:g} "
        f"{grid.origin.y:g} {grid.origin.theta:g}"
    )
    rows = []
    for iy in range(grid.height):
        row = grid.cells[iy * grid.width:(iy + 1) * grid.width]
        rows.append("".join("#" if b == OCCUPIED else "." for b in row))
    return "\n".join([header] + rows) + "\n"


@dataclass(frozen=True)
class ScanParams:
    angle_min: float = -math.pi
    angle_max: float = math.pi
    beam_count: int = 360
    range_min: float = 0.15
    range_max: float = 12.0

    def __post_init__(self) -> None:
        if self.beam_count < 2:
            raise ValueError("beam_count must be >= 2")
        if self.angle_max <= self.angle_min:
            raise ValueError("angle_max must exceed angle_min")
        if not (0.0 <= self.range_min < self.range_max):
            raise ValueError("need 0 <= range_min < range_max")

    def beam_angle(self, i: int) -> float:
        span = self.angle_max - self.angle_min
        return self.angle_min + i * span / (self.beam_count - 1)


@dataclass(frozen=True)
class LaserScan:
    stamp: float
    pose_frame: Pose2D
    params: ScanParams
    ranges: tuple  # float meters or NO_RETURN, length == beam_count

    def __post_init__(self) -> None:
        if len(self.ranges) != self.params.beam_count:
            raise ValueError("ranges length must equal beam_count")

    def hit_points(self) -> list[tuple[float, float]]:
        """World-frame endpoints of the beams that returned."""
        pts = []
        p = self.pose_frame
        for i, r in enumerate(self.ranges):
            if r is NO_RETURN:
                continue
            a = p.theta + self.params.beam_angle(i)
            pts.append((p.x + r * math.cos(a), p.y + r * math.sin(a)))
        return pts


@dataclass(frozen=True)
class PointCloud:
    stamp: float
    points: tuple  # of (x, y, z) world-frame meters


@dataclass(frozen=True)
class CameraParams:
    fov: float = math.radians(60.0)
    ray_count: int = 32
    range_max: float = 6.0
    z_heights: tuple = (0.1, 0.3, 0.5)

    def __post_init__(self) -> None:
        if not (0.0 < self.fov < math.pi):
            raise ValueError("fov must be in (0, pi)")
        if self.ray_count < 2:
            raise ValueError("ray_count must be >= 2")


@dataclass(frozen=True)
class FaultSpec:
    kind: str  # only "lidar_blackout" for now
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if self.t_start >= self.t_end:
            raise ValueError("fault interval must satisfy t_start < t_end")

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_end


LIDAR_BLACKOUT = "lidar_blackout"


def fault_active(faults: Sequence[FaultSpec], t: float) -> bool:
    return any(f.active(t) for f in faults)


@dataclass(frozen=True)
class SimConfig:
    footprint_radius: float = 0.18
    v_max: float = 1.0
    w_max: float = 2.0


@dataclass(frozen=True)
class SimState:
    clock: float
    true_pose: Pose2D
    grid: GridMap
    faults: tuple = ()
    collided: bool = False  # latched for the session


def make_state(grid: GridMap, pose: Pose2D, faults: Sequence[FaultSpec] = ()) -> SimState:
    return SimState(clock=0.0, true_pose=pose, grid=grid, faults=tuple(faults))


def footprint_overlaps(grid: GridMap, pose: Pose2D, radius: float) -> bool:
    """Disk/occupied-cell overlap test in the grid frame."""
    gx, gy = grid.to_grid(pose.x, pose.y)
    res = grid.resolution
    ix_lo = int(math.floor((gx - radius) / res))
    ix_hi = int(math.floor((gx + radius) / res))
    iy_lo = int(math.floor((gy - radius) / res))
    iy_hi = int(math.floor((gy + radius) / res))
    r2 = radius * radius
    for iy in range(iy_lo, iy_hi + 1):
        for ix in range(ix_lo, ix_hi + 1):
            if not grid.is_occupied(ix, iy):
                continue
            # closest point of the cell rectangle to the disk center
            cx = min(max(gx, ix * res), (ix + 1) * res)
            cy = min(max(gy, iy * res), (iy + 1) * res)
            dx = gx - cx
            dy = gy - cy
            if dx * dx + dy * dy <= r2:
                return True
    return False


def step(state: SimState, cmd: Twist, dt: float, cfg: SimConfig = SimConfig()) -> SimState:
    """Advance the unicycle by dt, stopping at the pre-contact substep on
    footprint/occupied overlap. Collision latches; a collided robot no longer
    moves but the clock still advances."""
    if dt <= 0.0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    if dt > 0.5:
        raise ValueError(f"dt must be <= 0.5, got {dt}")
    if state.collided:
        return replace(state, clock=state.clock + dt)

    cmd = cmd.clamped(cfg.v_max, cfg.w_max)
    if cmd.v == 0.0 and cmd.w == 0.0:
        return replace(state, clock=state.clock + dt)

    # substep so penetration before detection stays under a quarter cell
    arc = abs(cmd.v) * dt
    n = max(1, math.ceil(arc / (state.grid.resolution / 4.0)))
    sub = dt / n
    pose = state.true_pose
    collided = False
    for _ in range(n):
        nxt = Pose2D(
            pose.x + cmd.v * math.cos(pose.theta) * sub,
            pose.y + cmd.v * math.sin(pose.theta) * sub,
            pose.theta + cmd.w * sub,
        )
        if footprint_overlaps(state.grid, nxt, cfg.footprint_radius):
            collided = True
            break
        pose = nxt
    return replace(state, clock=state.clock + dt, true_pose=pose,
                   collided=state.collided or collided)


def _cast_ray(grid: GridMap, gx: float, gy: float, angle: float, range_max: float) -> Optional[float]:
    """Distance along the ray (grid frame) to the first occupied cell, or None.

    Amanatides-Woo traversal: exact first cell crossed, entry-boundary distance.
    Rays leaving the map terminate as NO_RETURN (outside cells are only solid
    for collision purposes, not for beams).
    """
    res = grid.resolution
    ix = int(math.floor(gx / res))
    iy = int(math.floor(gy / res))
    if grid.in_bounds(ix, iy) and grid.is_occupied(ix, iy):
        return 0.0
    dx = math.cos(angle)
    dy = math.sin(angle)
    step_x = 1 if dx > 0.0 else -1
    step_y = 1 if dy > 0.0 else -1
    t_dx = abs(res / dx) if dx != 0.0 else math.inf
    t_dy = abs(res / dy) if dy != 0.0 else math.inf
    if dx > 0.0:
        t_mx = ((ix + 1) * res - gx) / dx
    elif dx < 0.0:
        t_mx = (ix * res - gx) / dx
    else:
        t_mx = math.inf
    if dy > 0.0:
        t_my = ((iy + 1) * res - gy) / dy
    elif dy < 0.0:
        t_my = (iy * res - gy) / dy
    else:
        t_my = math.inf

    width = grid.width
    height = grid.height
    cells = grid.cells
    while True:
        if t_mx < t_my:
            t = t_mx
            t_mx += t_dx
            ix += step_x
        else:
            t = t_my
            t_my += t_dy
            iy += step_y
        if t > range_max:
            return None
        if not (0 <= ix < width and 0 <= iy < height):
            return None
        if cells[iy * width + ix] == OCCUPIED:
            return t


def raycast_scan(
    grid: GridMap,
    pose: Pose2D,
    params: ScanParams = ScanParams(),
    fault: bool = False,
    stamp: float = 0.0,
) -> LaserScan:
    """Cast beam_count rays from pose; blackout faults return all NO_RETURN.

    Hits closer than range_min read as NO_RETURN (target inside the sensor's
    dead zone), so every numeric range lies in [range_min, range_max].
    """
    if not grid.contains_pose(pose):
        raise PoseOutOfBounds(f"pose ({pose.x:.3f}, {pose.y:.3f}) outside map")
    if fault:
        return LaserScan(stamp, pose, params, (NO_RETURN,) * params.beam_count)
    gx, gy = grid.to_grid(pose.x, pose.y)
    base = pose.theta - grid.origin.theta
    span = params.angle_max - params.angle_min
    denom = params.beam_count - 1
    ranges = []
    for i in range(params.beam_count):
        angle = base + params.angle_min + i * span / denom
        r = _cast_ray(grid, gx, gy, angle, params.range_max)
        if r is None or r < params.range_min:
            ranges.append(NO_RETURN)
        else:
            ranges.append(r)
    return LaserScan(stamp, pose, params, tuple(ranges))


def synth_pointcloud(
    grid: GridMap,
    pose: Pose2D,
    cam: CameraParams = CameraParams(),
    stamp: float = 0.0,
) -> PointCloud:
    """Forward-facing fan of rays; each wall hit is extruded to the configured
    z heights, standing in for a real depth camera's 3D return."""
    if not grid.contains_pose(pose):
        raise PoseOutOfBounds(f"pose ({pose.x:.3f}, {pose.y:.3f}) outside map")
    gx, gy = grid.to_grid(pose.x, pose.y)
    base = pose.theta - grid.origin.theta
    pts = []
    for i in range(cam.ray_count):
        angle = base - cam.fov / 2.0 + i * cam.fov / (cam.ray_count - 1)
        r = _cast_ray(grid, gx, gy, angle, cam.range_max)
        if r is None:
            continue
        hx, hy = grid.to_world(gx + r * math.cos(angle), gy + r * math.sin(angle))
        for z in cam.z_heights:
            pts.append((hx, hy, z))
    return PointCloud(stamp, tuple(pts))
