"""JSON envelope protocol between the bridge and its viewers.

Five operations: subscribe, unsubscribe, publish, topics, status. One envelope
per WebSocket text frame. The encoding is canonical -- sorted keys, compact
separators, numbers at most 6 decimal places -- so identical payloads are
byte-identical on every session.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .bus import CLIENT_PUBLISH_TOPICS, SchemaMismatch, TopicBus, UnknownTopic

OPS = ("subscribe", "unsubscribe", "publish", "topics", "status")


class ProtocolError(ValueError):
    code = "ProtocolError"

    def __init__(self, msg: str, frame_id: Optional[str] = None):
        super().__init__(msg)
        self.frame_id = frame_id


class BadJson(ProtocolError):
    code = "BadJson"


class UnknownOp(ProtocolError):
    code = "UnknownOp"


class MissingField(ProtocolError):
    code = "MissingField"


@dataclass
class WireMessage:
    op: str
    topic: Optional[str] = None
    type: Optional[str] = None
    msg: Any = None
    id: Optional[str] = None
    throttle_ms: Optional[int] = None
    extras: dict = field(default_factory=dict)


def _round6(value: Any) -> Any:
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {value} cannot go on the wire")
        rounded = round(value, 6)
        return rounded + 0.0  # normalize -0.0
    if isinstance(value, dict):
        return {k: _round6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round6(v) for v in value]
    return value


def canonical_dumps(obj: Any) -> str:
    """Canonical wire form: sorted keys, no whitespace, 6-decimal numbers."""
    return json.dumps(_round6(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


_KNOWN_KEYS = ("op", "topic", "type", "msg", "id", "throttle_ms")


def decode_frame(text: str) -> WireMessage:
    """Parse and validate one inbound envelope."""
    try:
        raw = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BadJson(f"unparseable frame: {exc}") from exc
    if not isinstance(raw, dict):
        raise BadJson("envelope must be a JSON object")
    frame_id = raw.get("id")
    if frame_id is not None and not isinstance(frame_id, str):
        raise MissingField("'id' must be a string")
    op = raw.get("op")
    if op is None:
        raise MissingField("envelope lacks 'op'", frame_id)
    if op not in OPS:
        raise UnknownOp(f"unknown op {op!r}", frame_id)
    if op in ("subscribe", "unsubscribe", "publish") and not isinstance(raw.get("topic"), str):
        raise MissingField(f"op {op!r} requires a string 'topic'", frame_id)
    if op == "publish" and "msg" not in raw:
        raise MissingField("publish requires 'msg'", frame_id)
    throttle = raw.get("throttle_ms")
    if throttle is not None:
        if not isinstance(throttle, int) or isinstance(throttle, bool) or throttle < 0:
            raise MissingField("'throttle_ms' must be a non-negative integer", frame_id)
    extras = {k: v for k, v in raw.items() if k not in _KNOWN_KEYS}
    return WireMessage(
        op=op,
        topic=raw.get("topic"),
        type=raw.get("type"),
        msg=raw.get("msg"),
        id=frame_id,
        throttle_ms=throttle,
        extras=extras,
    )


def encode_frame(msg: WireMessage) -> str:
    obj = dict(msg.extras)
    obj["op"] = msg.op
    if msg.topic is not None:
        obj["topic"] = msg.topic
    if msg.type is not None:
        obj["type"] = msg.type
    if msg.msg is not None or msg.op == "publish":
        obj["msg"] = msg.msg
    if msg.id is not None:
        obj["id"] = msg.id
    if msg.throttle_ms is not None:
        obj["throttle_ms"] = msg.throttle_ms
    return canonical_dumps(obj)


# ------------------------------------------------------------ payload schemas

def _require_number(payload: dict, key: str, schema: str) -> float:
    v = payload.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SchemaMismatch(f"{schema}.{key} must be a finite number")
    return float(v)


def _validate_goal(payload: Any) -> None:
    if not isinstance(payload, dict):
        raise SchemaMismatch("Goal must be an object")
    _require_number(payload, "x", "Goal")
    _require_number(payload, "y", "Goal")


def _validate_fault(payload: Any) -> None:
    if not isinstance(payload, dict):
        raise SchemaMismatch("Fault must be an object")
    if payload.get("kind") != "lidar_blackout":
        raise SchemaMismatch("Fault.kind must be 'lidar_blackout'")
    t0 = _require_number(payload, "t_start", "Fault")
    t1 = _require_number(payload, "t_end", "Fault")
    if t0 >= t1:
        raise SchemaMismatch("Fault needs t_start < t_end")


VALIDATORS = {
    "Goal": _validate_goal,
    "Fault": _validate_fault,
}


def validate_payload(schema: str, payload: Any) -> None:
    validator = VALIDATORS.get(schema)
    if validator is not None:
        validator(payload)
    elif not isinstance(payload, dict):
        raise SchemaMismatch(f"{schema} payload must be an object")


# ------------------------------------------------------------------- handling

def status_frame(level: str, msg: str, frame_id: Optional[str] = None, **extra) -> dict:
    obj = {"op": "status", "level": level, "msg": msg}
    if frame_id is not None:
        obj["id"] = frame_id
    obj.update(extra)
    return obj


def error_frame(code: str, msg: str, frame_id: Optional[str] = None) -> dict:
    return status_frame("error", msg, frame_id, code=code)


def publish_frame(topic: str, schema: str, payload: Any) -> dict:
    return {"op": "publish", "topic": topic, "type": schema, "msg": payload}


class Session:
    """Protocol-level view of one connected client. `send` is provided by the
    transport (queues onto the session's bounded outbox)."""

    def __init__(self, send):
        self.send = send
        self.subscriptions: dict = {}

    def drop_all(self, bus: TopicBus) -> None:
        for sub in self.subscriptions.values():
            bus.unsubscribe(sub)
        self.subscriptions.clear()


def handle(msg: WireMessage, session: Session, bus: TopicBus,
           client_publish_allowed: bool = True) -> None:
    """Apply one decoded envelope. Every outcome is a state change, a fan-out,
    or a status/topics reply; protocol errors raise and the transport answers
    with a status error frame."""
    if msg.op == "subscribe":
        if not bus.has_topic(msg.topic):
            raise UnknownTopic(f"no such topic {msg.topic!r}")
        old = session.subscriptions.pop(msg.topic, None)
        if old is not None:
            bus.unsubscribe(old)

        def sink(topic: str, schema: str, payload: Any) -> None:
            session.send(publish_frame(topic, schema, payload))

        session.subscriptions[msg.topic] = bus.subscribe(
            msg.topic, sink, msg.throttle_ms or 0)
        return

    if msg.op == "unsubscribe":
        sub = session.subscriptions.pop(msg.topic, None)
        if sub is None:
            session.send(error_frame("NotSubscribed",
                                     f"not subscribed to {msg.topic!r}", msg.id))
            return
        bus.unsubscribe(sub)
        return

    if msg.op == "publish":
        if not bus.has_topic(msg.topic):
            raise UnknownTopic(f"no such topic {msg.topic!r}")
        if msg.topic not in CLIENT_PUBLISH_TOPICS:
            raise SchemaMismatch(f"clients cannot publish to {msg.topic!r}")
        if not client_publish_allowed:
            session.send(error_frame(
                "PublishRejected",
                "server is replaying a log; client publishes are disabled",
                msg.id))
            return
        schema = bus.schema_of(msg.topic)
        if msg.type is not None and msg.type != schema:
            raise SchemaMismatch(f"topic {msg.topic} is {schema}, not {msg.type}")
        validate_payload(schema, msg.msg)
        bus.publish(msg.topic, schema, msg.msg)
        return

    if msg.op == "topics":
        session.send({"op": "topics", "topics": bus.directory(),
                      **({"id": msg.id} if msg.id else {})})
        return

    if msg.op == "status":
        session.send(status_frame("info", "ok", msg.id))
        return

    raise UnknownOp(f"unknown op {msg.op!r}", msg.id)
