"""In-process topic bus: named, schema-typed channels with latched last
payloads, per-subscriber throttling, and publish taps for the recorder.

The bus itself is synchronous and single-owner: all mutation happens on the
caller's task. Network sessions layer their own outboxes on top (see server).
The clock is injected so throttling and record timestamps follow the
simulation clock, keeping replays deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional


class UnknownTopic(KeyError):
    pass


class SchemaMismatch(ValueError):
    pass


Sink = Callable[[str, str, Any], None]
Tap = Callable[[float, str, str, Any], None]


@dataclass
class Subscription:
    topic: str
    sink: Sink
    throttle_ms: int = 0
    last_sent: Optional[float] = None

    def gate_open(self, now: float) -> bool:
        if self.throttle_ms <= 0 or self.last_sent is None:
            return True
        return (now - self.last_sent) * 1000.0 >= self.throttle_ms


@dataclass
class _Topic:
    name: str
    schema: str
    latest: Any = None
    has_latest: bool = False
    subs: list = field(default_factory=list)


class TopicBus:
    def __init__(self, clock: Callable[[], float]):
        self._clock = clock
        self._topics: dict[str, _Topic] = {}
        self._taps: list[Tap] = []

    def now(self) -> float:
        return self._clock()

    # ------------------------------------------------------------- directory

    def ensure_topic(self, name: str, schema: str) -> None:
        """Register a topic; re-registration must agree on the schema."""
        existing = self._topics.get(name)
        if existing is None:
            self._topics[name] = _Topic(name, schema)
        elif existing.schema != schema:
            raise SchemaMismatch(
                f"topic {name} is {existing.schema}, not {schema}")

    def has_topic(self, name: str) -> bool:
        return name in self._topics

    def schema_of(self, name: str) -> str:
        return self._require(name).schema

    def directory(self) -> list[dict]:
        return [
            {"topic": t.name, "type": t.schema, "subscribers": len(t.subs)}
            for t in sorted(self._topics.values(), key=lambda t: t.name)
        ]

    def latest(self, name: str):
        t = self._require(name)
        return t.latest if t.has_latest else None

    def _require(self, name: str) -> _Topic:
        try:
            return self._topics[name]
        except KeyError:
            raise UnknownTopic(f"no such topic {name!r}") from None

    # ----------------------------------------------------------- subscribers

    def subscribe(self, name: str, sink: Sink, throttle_ms: int = 0) -> Subscription:
        """Add a subscriber; the latched latest payload (if any) is delivered
        immediately and primes the throttle gate."""
        topic = self._require(name)
        sub = Subscription(name, sink, throttle_ms)
        topic.subs.append(sub)
        if topic.has_latest:
            sub.last_sent = self.now()
            sink(topic.name, topic.schema, topic.latest)
        return sub

    def unsubscribe(self, sub: Subscription) -> bool:
        topic = self._topics.get(sub.topic)
        if topic and sub in topic.subs:
            topic.subs.remove(sub)
            return True
        return False

    # -------------------------------------------------------------- publish

    def add_tap(self, tap: Tap) -> None:
        """Taps observe every publish regardless of topic; used for logging."""
        self._taps.append(tap)

    def remove_tap(self, tap: Tap) -> None:
        self._taps.remove(tap)

    def publish(self, name: str, schema: str, payload: Any) -> int:
        """Latch the payload and fan out to all subscribers whose throttle
        gate is open. Returns the number of deliveries."""
        topic = self._require(name)
        if topic.schema != schema:
            raise SchemaMismatch(f"topic {name} is {topic.schema}, not {schema}")
        now = self.now()
        topic.latest = payload
        topic.has_latest = True
        for tap in self._taps:
            tap(now, name, schema, payload)
        delivered = 0
        for sub in list(topic.subs):
            if not sub.gate_open(now):
                continue
            sub.last_sent = now
            sub.sink(topic.name, schema, payload)
            delivered += 1
        return delivered


STANDARD_TOPICS: tuple = (
    ("/scan", "LaserScan"),
    ("/particles", "ParticleSet"),
    ("/humans", "HumanDetections"),
    ("/costmap", "CostMapGrid"),
    ("/plan", "Path"),
    ("/turn_signal", "TurnSignal"),
    ("/pointcloud", "PointCloud"),
    ("/pose", "Pose"),
    ("/markers/scan", "MarkerFrame"),
    ("/markers/particles", "MarkerFrame"),
    ("/markers/humans", "MarkerFrame"),
    ("/markers/costmap", "MarkerFrame"),
    ("/markers/path", "MarkerFrame"),
    ("/markers/signal", "MarkerFrame"),
    ("/markers/pointcloud", "MarkerFrame"),
    ("/goal", "Goal"),
    ("/fault", "Fault"),
    ("/status", "Status"),
)

CLIENT_PUBLISH_TOPICS = ("/goal", "/fault")


def standard_bus(clock: Callable[[], float]) -> TopicBus:
    bus = TopicBus(clock)
    for name, schema in STANDARD_TOPICS:
        bus.ensure_topic(name, schema)
    return bus
