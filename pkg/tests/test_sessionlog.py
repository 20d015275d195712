import io
import json

import pytest

from clearbot.bus import TopicBus, standard_bus
from clearbot.protocol import canonical_dumps
from clearbot.sessionlog import (
    IoFailure,
    NonMonotoneTime,
    Recorder,
    read_log,
    replay,
)


class FakeClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        return self.t


def test_empty_session_header_only():
    sink = io.StringIO()
    rec = Recorder(sink, scenario="idle")
    assert rec.close() == 0
    lines = sink.getvalue().splitlines()
    assert len(lines) == 1
    header = json.loads(lines[0])
    assert header == {"format": "clearbot-log/1", "scenario": "idle"}


def test_hundred_publishes_hundred_one_lines():
    clock = FakeClock()
    bus = standard_bus(clock)
    sink = io.StringIO()
    Recorder(sink, "counting").attach(bus)
    for k in range(100):
        clock.t = k * 0.1
        bus.publish("/pose", "Pose", {"x": k, "y": 0, "theta": 0})
    assert len(sink.getvalue().splitlines()) == 101


def test_record_replay_record_fixpoint():
    clock = FakeClock()
    bus = standard_bus(clock)
    sink1 = io.StringIO()
    Recorder(sink1, "first").attach(bus)
    for k in range(50):
        clock.t = k * 0.1
        bus.publish("/pose", "Pose", {"x": k * 0.05, "y": 0.0, "theta": 0.0})
        if k % 3 == 0:
            bus.publish("/turn_signal", "TurnSignal",
                        {"stamp": clock.t, "value": "straight"})

    clock2 = FakeClock()
    bus2 = standard_bus(clock2)
    sink2 = io.StringIO()
    Recorder(sink2, "second").attach(bus2)
    n = replay(io.StringIO(sink1.getvalue()), bus2, speed=float("inf"))
    assert n == len(sink1.getvalue().splitlines()) - 1

    def triples(text):
        out = []
        for line in text.splitlines()[1:]:
            rec = json.loads(line)
            out.append((rec["topic"], rec["schema"], canonical_dumps(rec["msg"])))
        return out

    assert triples(sink2.getvalue()) == triples(sink1.getvalue())


def test_replay_empty_log():
    bus = standard_bus(FakeClock())
    log = io.StringIO('{"format":"clearbot-log/1","scenario":""}\n')
    assert replay(log, bus, speed=float("inf")) == 0


def test_replay_speed_divides_gaps():
    clock = FakeClock()
    bus = standard_bus(clock)
    log = io.StringIO(
        '{"format":"clearbot-log/1","scenario":""}\n'
        '{"t":0.0,"topic":"/pose","schema":"Pose","msg":{"x":0}}\n'
        '{"t":10.0,"topic":"/pose","schema":"Pose","msg":{"x":1}}\n'
    )
    slept = []
    replay(log, bus, speed=2.0, sleep=slept.append)
    assert slept == [5.0]


def test_replay_preserves_equal_time_order():
    clock = FakeClock()
    bus = standard_bus(clock)
    got = []
    bus.subscribe("/pose", lambda t, s, p: got.append(p["x"]))
    header = '{"format":"clearbot-log/1","scenario":""}\n'
    lines = [f'{{"t":1.0,"topic":"/pose","schema":"Pose","msg":{{"x":{i}}}}}'
             for i in range(10)]
    replay(io.StringIO(header + "\n".join(lines) + "\n"), bus, speed=float("inf"))
    assert got == list(range(10))


def test_corrupt_lines_skipped_and_counted():
    bus = standard_bus(FakeClock())
    log = io.StringIO(
        '{"format":"clearbot-log/1","scenario":""}\n'
        '{"t":0.0,"topic":"/pose","schema":"Pose","msg":{"x":0}}\n'
        "not json at all\n"
        '{"t":1.0,"topic":"/pose","schema":"Pose"}\n'
        '{"t":2.0,"topic":"/pose","schema":"Pose","msg":{"x":2}}\n'
    )
    skipped = []
    n = replay(log, bus, speed=float("inf"), on_skip=skipped.append)
    assert n == 2
    assert skipped == [2]


def test_non_monotone_time_rejected():
    log = io.StringIO(
        '{"format":"clearbot-log/1","scenario":""}\n'
        '{"t":5.0,"topic":"/pose","schema":"Pose","msg":{}}\n'
        '{"t":1.0,"topic":"/pose","schema":"Pose","msg":{}}\n'
    )
    with pytest.raises(NonMonotoneTime):
        read_log(log)


def test_missing_or_bad_header_rejected():
    with pytest.raises(IoFailure):
        read_log(io.StringIO(""))
    with pytest.raises(IoFailure):
        read_log(io.StringIO('{"format":"other/9"}\n'))


def test_replay_creates_missing_topics():
    bus = TopicBus(FakeClock())  # deliberately bare
    log = io.StringIO(
        '{"format":"clearbot-log/1","scenario":""}\n'
        '{"t":0.0,"topic":"/custom","schema":"Blob","msg":{"k":1}}\n'
    )
    assert replay(log, bus, speed=float("inf")) == 1
    assert bus.latest("/custom") == {"k": 1}
