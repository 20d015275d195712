"""Cost-aware global planning on the occupancy cost map, plus the two
path-derived intent signals: the turning indicator and which side a planned
detour passes an obstacle."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum

from .perception import CostMap
from .world import Pose2D, normalize_angle


class NoPath(RuntimeError):
    pass


class StartInLethal(ValueError):
    pass


class GoalInLethal(ValueError):
    pass


class EmptyPath(ValueError):
    pass


class ObstacleFarFromPath(ValueError):
    pass


class Signal(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    STRAIGHT = "straight"


@dataclass(frozen=True)
class Path:
    stamp: float
    poses: tuple  # of Pose2D, consecutive cell centers
    goal: tuple   # (x, y)

    def __len__(self) -> int:
        return len(self.poses)

    def length(self) -> float:
        return sum(
            math.dist((a.x, a.y), (b.x, b.y))
            for a, b in zip(self.poses, self.poses[1:])
        )


@dataclass(frozen=True)
class TurnSignal:
    value: Signal
    stamp: float = 0.0


_NEIGHBORS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)

SQRT2 = math.sqrt(2.0)


def plan_path(
    cost: CostMap,
    start: Pose2D,
    goal: tuple,
    lethal_threshold: float = 0.9,
    cost_weight: float = 10.0,
    stamp: float = 0.0,
) -> Path:
    """A* over the 8-connected grid.

    Edge cost entering a cell is `step_length * (1 + cost_weight * p)`; cells
    at or above lethal_threshold are impassable. Ties on total cost break on
    the smaller accumulated sum of cell probabilities, then on lexicographic
    cell index, so equal-cost queries always return the same path. Nodes are
    re-expanded whenever a strictly better cost appears, which keeps the
    result exactly minimal in float arithmetic.
    """
    start_cell = cost.cell_of(start.x, start.y)
    goal_cell = cost.cell_of(goal[0], goal[1])
    if not (cost.in_bounds(*start_cell) and cost.in_bounds(*goal_cell)):
        raise NoPath("start or goal outside the cost map")
    if cost.p(*start_cell) >= lethal_threshold:
        raise StartInLethal(f"start cell {start_cell} has p >= {lethal_threshold}")
    if cost.p(*goal_cell) >= lethal_threshold:
        raise GoalInLethal(f"goal cell {goal_cell} has p >= {lethal_threshold}")

    res = cost.resolution
    width = cost.width
    height = cost.height
    probs = cost.probs.reshape(-1).tolist()  # flat local copy: hot loop below
    straight = res
    diagonal = res * SQRT2
    gx_cell, gy_cell = goal_cell
    start_i = start_cell[1] * width + start_cell[0]
    goal_i = gy_cell * width + gx_cell

    g: dict[int, float] = {start_i: 0.0}
    psum: dict[int, float] = {start_i: probs[start_i]}
    parent: dict[int, int] = {}
    pq = [(math.hypot(start_cell[0] - gx_cell, start_cell[1] - gy_cell) * res,
           psum[start_i], start_cell[0], start_cell[1], 0.0)]
    g_get = g.get
    psum_get = psum.get
    push = heapq.heappush
    pop = heapq.heappop
    while pq:
        _, sp, ix, iy, g_push = pop(pq)
        node = iy * width + ix
        gn = g[node]
        if g_push > gn:
            continue  # lazy-deleted stale entry
        for dx, dy in _NEIGHBORS:
            nx = ix + dx
            ny = iy + dy
            if nx < 0 or nx >= width or ny < 0 or ny >= height:
                continue
            ni = ny * width + nx
            p = probs[ni]
            if p >= lethal_threshold:
                continue
            length = diagonal if dx and dy else straight
            ng = gn + length * (1.0 + cost_weight * p)
            nsp = sp + p
            old = g_get(ni, math.inf)
            if ng < old or (ng == old and nsp < psum_get(ni, math.inf)):
                g[ni] = ng
                psum[ni] = nsp
                parent[ni] = node
                push(pq, (ng + math.hypot(nx - gx_cell, ny - gy_cell) * res,
                          nsp, nx, ny, ng))
    if goal_i not in g:
        raise NoPath(f"goal cell {goal_cell} unreachable")

    cells = [(goal_i % width, goal_i // width)]
    node = goal_i
    while node != start_i:
        node = parent[node]
        cells.append((node % width, node // width))
    cells.reverse()

    poses = []
    for i, cell in enumerate(cells):
        x, y = cost.cell_center(*cell)
        if i + 1 < len(cells):
            nx, ny = cost.cell_center(*cells[i + 1])
            heading = math.atan2(ny - y, nx - x)
        elif poses:
            heading = poses[-1].theta
        else:
            heading = start.theta
        poses.append(Pose2D(x, y, heading))
    return Path(stamp=stamp, poses=tuple(poses), goal=(goal[0], goal[1]))


def path_cost(cost: CostMap, path: Path, lethal_threshold: float = 0.9,
              cost_weight: float = 10.0) -> float:
    """Traversal cost of a cell-stepping path under the same edge model as
    plan_path (step lengths quantized to res / res*sqrt(2), so replaying a
    planned path reproduces the planner's accumulated cost bit for bit)."""
    res = cost.resolution
    total = 0.0
    prev = None
    for pose in path.poses:
        cell = cost.cell_of(pose.x, pose.y)
        if prev is not None and cell != prev:
            dx = cell[0] - prev[0]
            dy = cell[1] - prev[1]
            if max(abs(dx), abs(dy)) == 1:
                length = res * (SQRT2 if dx and dy else 1.0)
            else:
                length = math.hypot(dx, dy) * res
            p = cost.p(*cell) if cost.in_bounds(*cell) else 1.0
            total += length * (1.0 + cost_weight * p)
        prev = cell
    return total


def _nearest_index(path: Path, x: float, y: float) -> int:
    return min(range(len(path.poses)),
               key=lambda i: (path.poses[i].x - x) ** 2 + (path.poses[i].y - y) ** 2)


def point_at_arclength(path: Path, start_index: int, distance: float) -> tuple:
    """Walk the polyline from start_index until `distance` is consumed."""
    remaining = distance
    poses = path.poses
    for i in range(start_index, len(poses) - 1):
        a, b = poses[i], poses[i + 1]
        seg = math.dist((a.x, a.y), (b.x, b.y))
        if seg >= remaining and seg > 0.0:
            t = remaining / seg
            return (a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        remaining -= seg
    return (poses[-1].x, poses[-1].y)


def turn_signal(
    path: Path,
    current: Pose2D,
    lookahead: float = 1.0,
    dead_band: float = 0.2,
    stamp: float = 0.0,
) -> TurnSignal:
    """Bearing to the path point one lookahead ahead of the nearest path point;
    outside +/- dead_band it becomes a left or right indication."""
    if len(path) == 0:
        raise EmptyPath("cannot derive a signal from an empty path")
    if lookahead <= 0.0:
        raise ValueError("lookahead must be > 0")
    near = _nearest_index(path, current.x, current.y)
    tx, ty = point_at_arclength(path, near, lookahead)
    if math.isclose(tx, current.x, abs_tol=1e-12) and math.isclose(ty, current.y, abs_tol=1e-12):
        return TurnSignal(Signal.STRAIGHT, stamp)
    delta = normalize_angle(math.atan2(ty - current.y, tx - current.x) - current.theta)
    if delta > dead_band:
        return TurnSignal(Signal.LEFT, stamp)
    if delta < -dead_band:
        return TurnSignal(Signal.RIGHT, stamp)
    return TurnSignal(Signal.STRAIGHT, stamp)


def obstacle_side(path: Path, obstacle: tuple, max_distance: float = 2.0) -> Signal:
    """Which side the path passes the obstacle on: the sign of the cross
    product of the nearest segment direction with the segment-to-obstacle
    vector. An obstacle to the robot's right means the robot passes left."""
    if len(path) == 0:
        raise EmptyPath("empty path has no sides")
    ox, oy = obstacle

    best = None  # (dist, index, direction)
    if len(path) == 1:
        p = path.poses[0]
        best = (math.hypot(ox - p.x, oy - p.y), 0,
                (math.cos(p.theta), math.sin(p.theta)), (p.x, p.y))
    else:
        for i in range(len(path.poses) - 1):
            a, b = path.poses[i], path.poses[i + 1]
            abx, aby = b.x - a.x, b.y - a.y
            seg2 = abx * abx + aby * aby
            if seg2 == 0.0:
                continue
            t = max(0.0, min(1.0, ((ox - a.x) * abx + (oy - a.y) * aby) / seg2))
            cx, cy = a.x + t * abx, a.y + t * aby
            d = math.hypot(ox - cx, oy - cy)
            if best is None or d < best[0]:
                norm = math.sqrt(seg2)
                best = (d, i, (abx / norm, aby / norm), (cx, cy))
    dist, _, (dx, dy), (cx, cy) = best
    if dist > max_distance:
        raise ObstacleFarFromPath(f"obstacle {dist:.2f} m from path (limit {max_distance})")
    cross = dx * (oy - cy) - dy * (ox - cx)
    return Signal.LEFT if cross < 0.0 else Signal.RIGHT


def pure_pursuit(path: Path, current: Pose2D, speed: float = 0.5,
                 lookahead: float = 0.4, w_max: float = 2.0):
    """Steering command that chases the path point `lookahead` ahead of the
    nearest path point; plumbing to drive the scripted scenarios."""
    from .world import Twist

    if len(path) == 0:
        raise EmptyPath("cannot follow an empty path")
    near = _nearest_index(path, current.x, current.y)
    tx, ty = point_at_arclength(path, near, lookahead)
    dx, dy = tx - current.x, ty - current.y
    if math.hypot(dx, dy) < 1e-9:
        return Twist(0.0, 0.0)
    alpha = normalize_angle(math.atan2(dy, dx) - current.theta)
    # classic pure-pursuit curvature, capped
    ld = max(math.hypot(dx, dy), 1e-6)
    w = 2.0 * speed * math.sin(alpha) / ld
    w = max(-w_max, min(w_max, w))
    return Twist(speed, w)
