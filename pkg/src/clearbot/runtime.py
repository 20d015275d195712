"""One robot's full tick pipeline: sense, localize, fuse, plan, signal,
encode, publish, act. A single instance owns the SimState; everything it
publishes is an immutable snapshot."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bus import TopicBus
from .markers import (
    encode_costmap,
    encode_humans,
    encode_particles,
    encode_path,
    encode_pointcloud,
    encode_scan,
    encode_signal,
)
from .perception import (
    MclConfig,
    Particle,
    ParticleSet,
    detect_humans,
    mcl_step,
    update_costmap,
)
from .planning import (
    EmptyPath,
    GoalInLethal,
    NoPath,
    Path,
    Signal,
    StartInLethal,
    TurnSignal,
    path_cost,
    plan_path,
    pure_pursuit,
    turn_signal,
)
from .world import (
    CameraParams,
    FaultSpec,
    GridMap,
    LaserScan,
    Pose2D,
    ScanParams,
    SimState,
    Twist,
    fault_active,
    make_state,
    raycast_scan,
    step,
    synth_pointcloud,
)


@dataclass(frozen=True)
class PipelineConfig:
    dt: float = 0.1
    speed: float = 0.5
    scan: ScanParams = ScanParams()
    camera: CameraParams = CameraParams()
    mcl: MclConfig = MclConfig(sigma_xy=0.02, sigma_theta=0.015, beam_step=12)
    particle_count: int = 500
    inflation_radius: float = 0.45
    lethal_threshold: float = 0.9
    cost_weight: float = 10.0
    signal_lookahead: float = 1.0
    signal_dead_band: float = 0.2
    pursuit_lookahead: float = 0.4
    pursuit_w_max: float = 2.0
    goal_tolerance: float = 0.15
    costmap_every: int = 5      # raw costmap / pointcloud cadence in ticks
    marker_path_spacing: float = 0.25


@dataclass
class TickRecord:
    t: float
    pose: Pose2D
    signal: str
    path_cost: Optional[float]
    plan_points: int
    scan_markers: int
    detections: int
    collided: bool
    fault: bool


def tracking_belief(pose: Pose2D, count: int, rng, pos_std=0.15, theta_std=0.1) -> ParticleSet:
    """Initial belief for a robot that knows roughly where it starts."""
    rng = np.random.default_rng(rng)
    w = 1.0 / count
    parts = tuple(
        Particle(
            Pose2D(pose.x + rng.normal(0, pos_std), pose.y + rng.normal(0, pos_std),
                   pose.theta + rng.normal(0, theta_std)),
            w,
        )
        for _ in range(count)
    )
    return ParticleSet(parts)


class RobotPipeline:
    def __init__(
        self,
        true_map: GridMap,
        known_map: GridMap,
        start: Pose2D,
        bus: TopicBus,
        cfg: PipelineConfig = PipelineConfig(),
        seed: int = 0,
        faults: tuple = (),
    ):
        self.cfg = cfg
        self.known_map = known_map
        self.bus = bus
        self.state: SimState = make_state(true_map, start, faults)
        self.rng = np.random.default_rng(seed)
        self.belief = tracking_belief(start, cfg.particle_count, self.rng)
        self.goal: Optional[tuple] = None
        self.plan: Optional[Path] = None
        self.plan_error: Optional[str] = None
        self.reached = False
        self.tick_index = 0
        self._last_pose = start

    # ------------------------------------------------------------- commands

    def set_goal(self, x: float, y: float) -> None:
        self.goal = (x, y)
        self.reached = False
        self.plan = None

    def add_fault(self, fault: FaultSpec) -> None:
        self.state = SimState(
            clock=self.state.clock,
            true_pose=self.state.true_pose,
            grid=self.state.grid,
            faults=self.state.faults + (fault,),
            collided=self.state.collided,
        )

    # ----------------------------------------------------------------- tick

    def tick(self) -> TickRecord:
        cfg = self.cfg
        t = self.state.clock
        pose = self.state.true_pose
        fault = fault_active(self.state.faults, t)

        scan = raycast_scan(self.state.grid, pose, cfg.scan, fault, stamp=t)

        # localization runs on ideal odometry (the true inter-tick delta)
        dx = pose.x - self._last_pose.x
        dy = pose.y - self._last_pose.y
        c, s = math.cos(self._last_pose.theta), math.sin(self._last_pose.theta)
        odom = Pose2D(c * dx + s * dy, -s * dx + c * dy,
                      pose.theta - self._last_pose.theta)
        self.belief = mcl_step(self.belief, odom, scan, self.known_map,
                               cfg.mcl, rng=self.rng)
        self._last_pose = pose

        costmap = update_costmap(self.known_map, scan, pose, cfg.inflation_radius)
        detections = detect_humans(scan)

        signal = TurnSignal(Signal.STRAIGHT, t)
        cost: Optional[float] = None
        if self.goal is not None and not self.reached:
            if math.dist((pose.x, pose.y), self.goal) <= cfg.goal_tolerance:
                self.reached = True
            else:
                try:
                    self.plan = plan_path(costmap, pose, self.goal,
                                          cfg.lethal_threshold, cfg.cost_weight,
                                          stamp=t)
                    self.plan_error = None
                except (NoPath, StartInLethal, GoalInLethal) as exc:
                    # keep following the previous plan, if any
                    self.plan_error = f"{type(exc).__name__}: {exc}"
        if self.plan is not None and not self.reached:
            cost = path_cost(costmap, self.plan, cfg.lethal_threshold,
                             cfg.cost_weight)
            try:
                signal = turn_signal(self.plan, pose, cfg.signal_lookahead,
                                     cfg.signal_dead_band, stamp=t)
            except EmptyPath:
                pass

        scan_markers = self._publish(t, pose, scan, costmap, detections, signal)

        cmd = Twist(0.0, 0.0)
        if (self.plan is not None and self.goal is not None
                and not self.reached and not self.state.collided):
            cmd = pure_pursuit(self.plan, pose, cfg.speed, cfg.pursuit_lookahead,
                               cfg.pursuit_w_max)
        self.state = step(self.state, cmd, cfg.dt)

        record = TickRecord(
            t=t,
            pose=pose,
            signal=signal.value.value,
            path_cost=cost,
            plan_points=0 if self.plan is None else len(self.plan),
            scan_markers=scan_markers,
            detections=len(detections),
            collided=self.state.collided,
            fault=fault,
        )
        self.tick_index += 1
        return record

    # -------------------------------------------------------------- publish

    def _publish(self, t, pose, scan, costmap, detections, signal) -> int:
        from . import wire

        bus = self.bus
        bus.publish("/pose", "Pose", wire.pose_payload(pose, t))
        bus.publish("/scan", "LaserScan", wire.scan_payload(scan))
        bus.publish("/particles", "ParticleSet", wire.particles_payload(self.belief))
        bus.publish("/humans", "HumanDetections", wire.humans_payload(detections, t))
        if signal is not None:
            bus.publish("/turn_signal", "TurnSignal", wire.signal_payload(signal))
        if self.plan is not None:
            bus.publish("/plan", "Path", wire.path_payload(self.plan))

        scan_marks = encode_scan(scan, scan.pose_frame)
        bus.publish("/markers/scan", "MarkerFrame",
                    wire.markers_payload(t, "scan", scan_marks))
        bus.publish("/markers/particles", "MarkerFrame",
                    wire.markers_payload(t, "particles", encode_particles(self.belief)))
        bus.publish("/markers/humans", "MarkerFrame",
                    wire.markers_payload(t, "humans", encode_humans(detections)))
        bus.publish("/markers/signal", "MarkerFrame",
                    wire.markers_payload(t, "signal", encode_signal(signal)))
        if self.plan is not None:
            bus.publish("/markers/path", "MarkerFrame",
                        wire.markers_payload(
                            t, "path",
                            encode_path(self.plan, self.cfg.marker_path_spacing)))

        if self.tick_index % self.cfg.costmap_every == 0:
            bus.publish("/costmap", "CostMapGrid", wire.costmap_payload(costmap, t))
            bus.publish("/markers/costmap", "MarkerFrame",
                        wire.markers_payload(
                            t, "costmap",
                            encode_costmap(costmap, robot_pose=pose)))
            cloud = synth_pointcloud(self.state.grid, pose, self.cfg.camera, stamp=t)
            bus.publish("/pointcloud", "PointCloud", wire.pointcloud_payload(cloud))
            bus.publish("/markers/pointcloud", "MarkerFrame",
                        wire.markers_payload(t, "pointcloud", encode_pointcloud(cloud)))
        return len(scan_marks)
