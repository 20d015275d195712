"""Perception stack: Monte Carlo localization over a likelihood field,
leg-profile human detection from laser clusters, scan-fused occupancy cost
maps, and voxel-grid point cloud downsampling.

All operations are pure; callers own the state and feed back what they get.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
import numpy as np
from scipy import ndimage

from .world import NO_RETURN, GridMap, LaserScan, PointCloud, Pose2D, PoseOutOfBounds


class EmptyBelief(ValueError):
    pass


class AllZeroWeights(RuntimeError):
    """Degenerate likelihood; mcl_step recovers internally, never raises this."""


class NonPositiveLeaf(ValueError):
    pass


# ------------------------------------------------------------------ particles

@dataclass(frozen=True)
class Particle:
    pose: Pose2D
    weight: float

    def __post_init__(self) -> None:
        if self.weight < 0.0:
            raise ValueError("particle weight must be >= 0")


@dataclass(frozen=True)
class ParticleSet:
    particles: tuple
    stamp: float = 0.0

    def __len__(self) -> int:
        return len(self.particles)

    def total_weight(self) -> float:
        return sum(p.weight for p in self.particles)


@dataclass(frozen=True)
class MclConfig:
    """Standard-textbook knobs: Gaussian motion noise, likelihood-field
    sensor model over every k-th beam, systematic resampling below ESS N/2."""

    sigma_xy: float = 0.02       # m per step, position noise
    sigma_theta: float = 0.01    # rad per step
    sensor_sigma: float = 0.2    # m, likelihood field sharpness
    z_hit: float = 0.95
    z_rand: float = 0.05
    beam_step: int = 8           # use every k-th beam
    resample_fraction: float = 0.5
    temper: float = 1.0          # >1 flattens the likelihood (log/temper)


def uniform_belief(
    grid: GridMap,
    count: int,
    rng,
    heading: float | None = None,
    heading_std: float = 0.2,
) -> ParticleSet:
    """Particles uniform over free cells. Headings are uniform over the circle
    unless `heading` is given, in which case they are drawn around it (the
    robot knows roughly which way it faces but not where it is)."""
    rng = np.random.default_rng(rng)
    free = [
        (ix, iy)
        for iy in range(grid.height)
        for ix in range(grid.width)
        if not grid.is_occupied(ix, iy)
    ]
    if not free:
        raise ValueError("map has no free cells")
    idx = rng.integers(0, len(free), size=count)
    w = 1.0 / count
    parts = []
    for k in idx:
        ix, iy = free[k]
        x, y = grid.cell_center(ix, iy)
        x += (rng.random() - 0.5) * grid.resolution
        y += (rng.random() - 0.5) * grid.resolution
        if heading is None:
            theta = rng.uniform(-math.pi, math.pi)
        else:
            theta = heading + rng.normal(0.0, heading_std)
        parts.append(Particle(Pose2D(x, y, theta), w))
    return ParticleSet(tuple(parts))


@lru_cache(maxsize=8)
def _obstacle_distance_field(grid: GridMap) -> np.ndarray:
    """Meters from each cell center to the nearest occupied cell center."""
    occ = np.frombuffer(grid.cells, dtype=np.uint8).reshape(grid.height, grid.width)
    occ = occ == ord("#")
    if not occ.any():
        return np.full((grid.height, grid.width), 1e9)
    return ndimage.distance_transform_edt(~occ) * grid.resolution


def scan_likelihoods(
    poses: np.ndarray, scan: LaserScan, grid: GridMap, cfg: MclConfig
) -> np.ndarray:
    """Likelihood-field score of the scan for each (x, y, theta) row in poses.

    Each decimated returning beam contributes z_hit * N(d; 0, sigma) + z_rand/r_max,
    with d the distance from the predicted beam endpoint to the nearest obstacle.
    Accumulated in log space; all-NO_RETURN scans score 1 for everyone.
    """
    field = _obstacle_distance_field(grid)
    params = scan.params
    idx = [
        i for i in range(0, params.beam_count, cfg.beam_step)
        if scan.ranges[i] is not NO_RETURN
    ]
    n = poses.shape[0]
    if not idx:
        return np.ones(n)
    angles = np.array([params.beam_angle(i) for i in idx])
    dists = np.array([scan.ranges[i] for i in idx])
    beam_world = poses[:, 2:3] + angles[None, :]
    ex = poses[:, 0:1] + dists[None, :] * np.cos(beam_world)
    ey = poses[:, 1:2] + dists[None, :] * np.sin(beam_world)
    # endpoint cell lookup in the grid frame (vectorized to_grid)
    c, s = math.cos(-grid.origin.theta), math.sin(-grid.origin.theta)
    dx = ex - grid.origin.x
    dy = ey - grid.origin.y
    gx = (c * dx - s * dy) / grid.resolution
    gy = (s * dx + c * dy) / grid.resolution
    ix = np.floor(gx).astype(int)
    iy = np.floor(gy).astype(int)
    inside = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    d = np.where(inside, field[np.clip(iy, 0, grid.height - 1),
                               np.clip(ix, 0, grid.width - 1)], 1e9)
    gauss = np.exp(-0.5 * (d / cfg.sensor_sigma) ** 2) / (cfg.sensor_sigma * math.sqrt(2 * math.pi))
    per_beam = cfg.z_hit * gauss + cfg.z_rand / params.range_max
    log_lik = np.sum(np.log(np.maximum(per_beam, 1e-300)), axis=1)
    if cfg.temper > 1.0:
        # flattening the joint likelihood keeps sparse initial beliefs alive
        # through the first resamples instead of collapsing on one lucky draw
        log_lik = log_lik / cfg.temper
    log_lik -= log_lik.max()
    return np.exp(log_lik)


def _systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def mcl_step(
    belief: ParticleSet,
    odom_delta: Pose2D,
    scan: LaserScan,
    grid: GridMap,
    cfg: MclConfig = MclConfig(),
    rng=None,
) -> ParticleSet:
    """One predict/weight/resample cycle.

    odom_delta is the robot-frame motion since the previous step (forward,
    lateral, heading change). Degenerate all-zero likelihoods recover by
    reverting to the pre-weight uniform distribution instead of raising.
    """
    if len(belief) == 0:
        raise EmptyBelief("belief has no particles")
    rng = np.random.default_rng(rng)

    poses = np.array([[p.pose.x, p.pose.y, p.pose.theta] for p in belief.particles])
    weights = np.array([p.weight for p in belief.particles])
    total = weights.sum()
    if total <= 0.0:
        weights = np.full(len(belief), 1.0 / len(belief))
    else:
        weights = weights / total

    # predict: apply the robot-frame delta in each particle's own frame
    cos_t = np.cos(poses[:, 2])
    sin_t = np.sin(poses[:, 2])
    poses[:, 0] += odom_delta.x * cos_t - odom_delta.y * sin_t
    poses[:, 1] += odom_delta.x * sin_t + odom_delta.y * cos_t
    poses[:, 2] += odom_delta.theta
    if cfg.sigma_xy > 0.0:
        poses[:, 0] += rng.normal(0.0, cfg.sigma_xy, len(belief))
        poses[:, 1] += rng.normal(0.0, cfg.sigma_xy, len(belief))
    if cfg.sigma_theta > 0.0:
        poses[:, 2] += rng.normal(0.0, cfg.sigma_theta, len(belief))
    poses[:, 2] = np.arctan2(np.sin(poses[:, 2]), np.cos(poses[:, 2]))

    # weight
    lik = scan_likelihoods(poses, scan, grid, cfg)
    new_w = weights * lik
    total = new_w.sum()
    if total <= 0.0 or not math.isfinite(total):
        # AllZeroWeights condition: fall back to pre-weight uniform
        new_w = np.full(len(belief), 1.0 / len(belief))
    else:
        new_w = new_w / total

    # resample when the effective sample size collapses
    ess = 1.0 / float(np.sum(new_w ** 2))
    if ess < cfg.resample_fraction * len(belief):
        keep = _systematic_resample(new_w, rng)
        poses = poses[keep]
        new_w = np.full(len(belief), 1.0 / len(belief))

    new_w = new_w / new_w.sum()
    parts = tuple(
        Particle(Pose2D(float(x), float(y), float(t)), float(w))
        for (x, y, t), w in zip(poses, new_w)
    )
    return ParticleSet(parts, stamp=scan.stamp)


def estimate_pose(belief: ParticleSet) -> tuple[Pose2D, np.ndarray]:
    """Weighted mean pose (circular mean heading) and 3x3 covariance of
    (x, y, theta) with heading residuals wrapped."""
    if len(belief) == 0:
        raise EmptyBelief("belief has no particles")
    poses = np.array([[p.pose.x, p.pose.y, p.pose.theta] for p in belief.particles])
    w = np.array([p.weight for p in belief.particles])
    w = w / w.sum()
    mx = float(np.dot(w, poses[:, 0]))
    my = float(np.dot(w, poses[:, 1]))
    mt = math.atan2(float(np.dot(w, np.sin(poses[:, 2]))),
                    float(np.dot(w, np.cos(poses[:, 2]))))
    res = poses.copy()
    res[:, 0] -= mx
    res[:, 1] -= my
    dt = poses[:, 2] - mt
    res[:, 2] = np.arctan2(np.sin(dt), np.cos(dt))
    cov = (w[:, None] * res).T @ res
    return Pose2D(mx, my, mt), cov


# -------------------------------------------------------------- leg detection

@dataclass(frozen=True)
class LegParams:
    cluster_break: float = 0.10
    leg_width_min: float = 0.05
    leg_width_max: float = 0.25
    pair_sep_min: float = 0.15
    pair_sep_max: float = 0.45

    def __post_init__(self) -> None:
        if not (0.0 < self.leg_width_min < self.leg_width_max):
            raise ValueError("need 0 < leg_width_min < leg_width_max")
        if not (0.0 < self.pair_sep_min < self.pair_sep_max):
            raise ValueError("need 0 < pair_sep_min < pair_sep_max")


@dataclass(frozen=True)
class HumanDetection:
    position: tuple
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")


def _clusters(points: list[tuple[float, float]], break_dist: float):
    if not points:
        return
    current = [points[0]]
    for p, q in zip(points, points[1:]):
        if math.dist(p, q) > break_dist:
            yield current
            current = [q]
        else:
            current.append(q)
    yield current


def detect_humans(scan: LaserScan, params: LegParams = LegParams()) -> list[HumanDetection]:
    """Leg-profile matcher: split returning beams into clusters at range gaps,
    keep clusters whose endpoint chord matches a leg width, then greedily pair
    nearest legs whose centroid separation fits a human stance. Midpoint of a
    pair is the reported position."""
    points = scan.hit_points()
    legs = []
    for cluster in _clusters(points, params.cluster_break):
        chord = math.dist(cluster[0], cluster[-1])
        if params.leg_width_min <= chord <= params.leg_width_max:
            cx = sum(p[0] for p in cluster) / len(cluster)
            cy = sum(p[1] for p in cluster) / len(cluster)
            legs.append((cx, cy))

    candidates = []
    for i in range(len(legs)):
        for j in range(i + 1, len(legs)):
            sep = math.dist(legs[i], legs[j])
            if params.pair_sep_min <= sep <= params.pair_sep_max:
                candidates.append((sep, i, j))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    sep_mid = (params.pair_sep_min + params.pair_sep_max) / 2.0
    half_range = (params.pair_sep_max - params.pair_sep_min) / 2.0
    used: set[int] = set()
    detections = []
    for sep, i, j in candidates:
        if i in used or j in used:
            continue
        used.update((i, j))
        mid = ((legs[i][0] + legs[j][0]) / 2.0, (legs[i][1] + legs[j][1]) / 2.0)
        confidence = max(0.0, min(1.0, 1.0 - abs(sep - sep_mid) / half_range))
        detections.append(HumanDetection(mid, confidence))
    return detections


# ------------------------------------------------------------------- cost map

@dataclass(frozen=True, eq=False)
class CostMap:
    """GridMap geometry with per-cell occupancy probability in [0, 1]."""

    resolution: float
    width: int
    height: int
    origin: Pose2D
    probs: np.ndarray  # shape (height, width), float

    def p(self, ix: int, iy: int) -> float:
        return float(self.probs[iy, ix])

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        dx = x - self.origin.x
        dy = y - self.origin.y
        c = math.cos(-self.origin.theta)
        s = math.sin(-self.origin.theta)
        gx = c * dx - s * dy
        gy = s * dx + c * dy
        return int(math.floor(gx / self.resolution)), int(math.floor(gy / self.resolution))

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        gx = (ix + 0.5) * self.resolution
        gy = (iy + 0.5) * self.resolution
        c = math.cos(self.origin.theta)
        s = math.sin(self.origin.theta)
        return self.origin.x + c * gx - s * gy, self.origin.y + s * gx + c * gy


def update_costmap(
    static_map: GridMap,
    scan: LaserScan | None,
    robot_pose: Pose2D,
    inflation_radius: float,
) -> CostMap:
    """Fuse the static map with the scan's hit cells: sources get p = 1 and
    probability decays linearly to zero at inflation_radius (center-to-center
    Euclidean distance)."""
    if not static_map.contains_pose(robot_pose):
        raise PoseOutOfBounds("robot pose outside the static map")
    occ = np.frombuffer(static_map.cells, dtype=np.uint8).reshape(
        static_map.height, static_map.width
    ) == ord("#")
    occ = occ.copy()
    if scan is not None:
        for hx, hy in scan.hit_points():
            ix, iy = static_map.cell_of(hx, hy)
            if static_map.in_bounds(ix, iy):
                occ[iy, ix] = True
    if occ.any():
        d = ndimage.distance_transform_edt(~occ) * static_map.resolution
        probs = np.maximum(0.0, 1.0 - d / inflation_radius)
    else:
        probs = np.zeros((static_map.height, static_map.width))
    return CostMap(
        resolution=static_map.resolution,
        width=static_map.width,
        height=static_map.height,
        origin=static_map.origin,
        probs=probs,
    )


# ------------------------------------------------------------------ downsample

def voxel_downsample(cloud: PointCloud, leaf: float) -> PointCloud:
    """One centroid per occupied axis-aligned cube of side leaf (anchored at
    the origin), emitted in ascending (ix, iy, iz) cube order."""
    if leaf <= 0.0:
        raise NonPositiveLeaf(f"leaf must be > 0, got {leaf}")
    cubes: dict[tuple[int, int, int], list[float]] = {}
    for x, y, z in cloud.points:
        key = (math.floor(x / leaf), math.floor(y / leaf), math.floor(z / leaf))
        acc = cubes.setdefault(key, [0.0, 0.0, 0.0, 0.0])
        acc[0] += x
        acc[1] += y
        acc[2] += z
        acc[3] += 1.0
    out = []
    for key in sorted(cubes):
        sx, sy, sz, n = cubes[key]
        out.append((sx / n, sy / n, sz / n))
    return PointCloud(cloud.stamp, tuple(out))
