"""Payload builders for the topic schemas; the one place domain objects turn
into plain JSON-ready dicts."""
from __future__ import annotations

from typing import Sequence

from .markers import Marker
from .perception import CostMap, HumanDetection, ParticleSet
from .planning import Path, TurnSignal
from .world import LaserScan, PointCloud, Pose2D


def pose_payload(pose: Pose2D, stamp: float) -> dict:
    return {"stamp": stamp, "x": pose.x, "y": pose.y, "theta": pose.theta}


def scan_payload(scan: LaserScan) -> dict:
    p = scan.params
    return {
        "stamp": scan.stamp,
        "pose": {"x": scan.pose_frame.x, "y": scan.pose_frame.y,
                 "theta": scan.pose_frame.theta},
        "angle_min": p.angle_min,
        "angle_max": p.angle_max,
        "range_min": p.range_min,
        "range_max": p.range_max,
        "ranges": list(scan.ranges),  # NO_RETURN is None -> JSON null
    }


def particles_payload(belief: ParticleSet) -> dict:
    return {
        "stamp": belief.stamp,
        "particles": [
            {"x": p.pose.x, "y": p.pose.y, "theta": p.pose.theta, "w": p.weight}
            for p in belief.particles
        ],
    }


def humans_payload(detections: Sequence[HumanDetection], stamp: float) -> dict:
    return {
        "stamp": stamp,
        "detections": [
            {"x": d.position[0], "y": d.position[1], "confidence": d.confidence}
            for d in detections
        ],
    }


def costmap_payload(cm: CostMap, stamp: float) -> dict:
    return {
        "stamp": stamp,
        "resolution": cm.resolution,
        "width": cm.width,
        "height": cm.height,
        "origin": {"x": cm.origin.x, "y": cm.origin.y, "theta": cm.origin.theta},
        "probs": [float(v) for v in cm.probs.reshape(-1)],
    }


def path_payload(path: Path) -> dict:
    return {
        "stamp": path.stamp,
        "poses": [{"x": p.x, "y": p.y, "theta": p.theta} for p in path.poses],
        "goal": {"x": path.goal[0], "y": path.goal[1]},
    }


def signal_payload(sig: TurnSignal) -> dict:
    return {"stamp": sig.stamp, "value": sig.value.value}


def pointcloud_payload(cloud: PointCloud) -> dict:
    return {"stamp": cloud.stamp, "points": [[x, y, z] for x, y, z in cloud.points]}


def markers_payload(stamp: float, layer: str, markers: Sequence[Marker]) -> dict:
    out = []
    for m in markers:
        entry = {
            "id": m.id,
            "kind": m.kind,
            "x": m.x,
            "y": m.y,
            "z": m.z,
            "yaw": m.yaw,
            "scale": m.scale,
            "color": list(m.color.rgba()),
        }
        if m.flash_hz is not None:
            entry["flash_hz"] = m.flash_hz
        out.append(entry)
    return {"stamp": stamp, "layer": layer, "markers": out}
