"""Command line entry point: live bridged simulation, scripted scenarios with
machine-readable reports, and log replay."""
from __future__ import annotations

import argparse
import asyncio
import math
import os
import sys
from pathlib import Path as FsPath

from . import BUILTIN_MAPS, builtin_map_text
from .bus import standard_bus
from .protocol import canonical_dumps
from .runtime import PipelineConfig, RobotPipeline
from .scenarios import SCENARIO_NAMES, UnknownScenario, run_scenario
from .sessionlog import Recorder
from .server import BridgeServer
from .world import LIDAR_BLACKOUT, FaultSpec, GridMap, Pose2D, load_map

DEFAULT_PORT = 8765


def _port_default() -> int:
    try:
        return int(os.environ.get("CLEARBOT_PORT", DEFAULT_PORT))
    except ValueError:
        return DEFAULT_PORT


def resolve_map(value: str) -> GridMap:
    """A path to a map document, or the name of a shipped fixture."""
    p = FsPath(value)
    if p.exists():
        return load_map(p.read_text("utf-8"))
    if value in BUILTIN_MAPS:
        return load_map(builtin_map_text(value))
    raise SystemExit(f"error: {value!r} is neither a file nor one of {BUILTIN_MAPS}")


def parse_fault(text: str) -> FaultSpec:
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "lidar":
        raise SystemExit("error: --fault expects lidar:T0:T1 (seconds of sim time)")
    try:
        return FaultSpec(LIDAR_BLACKOUT, float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise SystemExit(f"error: bad fault window: {exc}")


def _free_start(grid: GridMap) -> Pose2D:
    """Free cell nearest the map center; where a live robot wakes up."""
    cx, cy = grid.width / 2.0, grid.height / 2.0
    best = None
    for iy in range(grid.height):
        for ix in range(grid.width):
            if grid.is_occupied(ix, iy):
                continue
            d = (ix + 0.5 - cx) ** 2 + (iy + 0.5 - cy) ** 2
            if best is None or d < best[0]:
                best = (d, ix, iy)
    if best is None:
        raise SystemExit("error: map has no free cells")
    x, y = grid.cell_center(best[1], best[2])
    return Pose2D(x, y, 0.0)


# ------------------------------------------------------------------ run

async def _run_live(args) -> int:
    grid = resolve_map(args.map)
    known = resolve_map(args.known_map) if args.known_map else grid
    faults = tuple(parse_fault(f) for f in args.fault or ())

    holder = {"clock": 0.0}
    bus = standard_bus(lambda: holder["clock"])
    recorder = None
    if args.record:
        recorder = Recorder(open(args.record, "w", encoding="utf-8"),
                            scenario=f"run:{args.map}").attach(bus)

    pipeline = RobotPipeline(grid, known, _free_start(grid), bus,
                             PipelineConfig(dt=1.0 / args.rate),
                             seed=args.seed, faults=faults)

    def on_goal(topic, schema, payload):
        pipeline.set_goal(float(payload["x"]), float(payload["y"]))

    def on_fault(topic, schema, payload):
        pipeline.add_fault(FaultSpec(LIDAR_BLACKOUT,
                                     float(payload["t_start"]),
                                     float(payload["t_end"])))

    bus.subscribe("/goal", on_goal)
    bus.subscribe("/fault", on_fault)

    server = BridgeServer(bus, args.host, args.port)
    await server.start()
    print(f"bridge on ws://{args.host}:{args.port}/bridge "
          f"(map {grid.width}x{grid.height} @ {grid.resolution} m, {args.rate} Hz)",
          file=sys.stderr)

    loop = asyncio.get_running_loop()
    period = 1.0 / args.rate
    last_status = -1.0
    last_plan_error = None
    try:
        while True:
            t0 = loop.time()
            holder["clock"] = pipeline.state.clock
            pipeline.tick()
            if pipeline.plan_error != last_plan_error:
                last_plan_error = pipeline.plan_error
                if last_plan_error is not None:
                    bus.publish("/status", "Status",
                                {"level": "error", "msg": last_plan_error,
                                 "clock": pipeline.state.clock})
            if pipeline.state.clock - last_status >= 1.0:
                last_status = pipeline.state.clock
                server.publish_status(collided=pipeline.state.collided)
            await asyncio.sleep(max(0.0, period - (loop.time() - t0)))
    except asyncio.CancelledError:
        return 0
    finally:
        await server.stop()
        if recorder:
            recorder.close()


# ------------------------------------------------------------- scenario

def _run_scenario_cmd(args) -> int:
    sink = open(args.record, "w", encoding="utf-8") if args.record else None
    try:
        report = run_scenario(args.name, seed=args.seed, record_sink=sink)
    except UnknownScenario as exc:
        raise SystemExit(f"error: {exc}")
    finally:
        if sink:
            sink.close()

    print(canonical_dumps(report.to_json_dict()))
    if not args.json:
        verdict = "ok" if not report.failures else "FAILED"
        print(f"scenario {report.scenario} seed={report.seed}: {verdict}; "
              f"collided={report.collided} reached={report.reached_goal} "
              f"ticks={len(report.ticks)}", file=sys.stderr)
        for f in report.failures:
            print(f"  failure: {f}", file=sys.stderr)
    return 0 if not report.failures else 2


# --------------------------------------------------------------- replay

async def _run_replay(args) -> int:
    holder = {"clock": 0.0}
    bus = standard_bus(lambda: holder["clock"])
    server = BridgeServer(bus, args.host, args.port, client_publish_allowed=False)
    await server.start()
    print(f"replaying {args.log} at x{args.speed} on "
          f"ws://{args.host}:{args.port}/bridge", file=sys.stderr)

    with open(args.log, encoding="utf-8") as fh:
        lines = fh.readlines()

    # publishes must happen on the loop task (bus single-owner), with async
    # pacing between frames so the server keeps serving viewers meanwhile
    from .sessionlog import read_log
    header, records, corrupt = read_log(lines)
    if corrupt:
        print(f"warning: skipped {corrupt} corrupt log line(s)", file=sys.stderr)
    prev_t = None
    count = 0
    try:
        for rec in records:
            if prev_t is not None and math.isfinite(args.speed):
                gap = (rec.t - prev_t) / args.speed
                if gap > 0:
                    await asyncio.sleep(gap)
            prev_t = rec.t
            holder["clock"] = rec.t
            bus.ensure_topic(rec.topic, rec.schema)
            bus.publish(rec.topic, rec.schema, rec.payload)
            count += 1
        print(f"replayed {count} frames; serving latched state "
              f"(ctrl-c to stop)", file=sys.stderr)
        server.publish_status("replay complete", frames=count)
        while True:
            await asyncio.sleep(3600)
    except asyncio.CancelledError:
        return 0
    finally:
        await server.stop()


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clearbot",
        description="2D robot simulator bridged over a JSON/WebSocket topic protocol",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="live simulation behind a bridge server")
    run_p.add_argument("--map", required=True,
                       help=f"map file or builtin name {BUILTIN_MAPS}")
    run_p.add_argument("--known-map", default=None,
                       help="map the planner believes (defaults to --map)")
    run_p.add_argument("--port", type=int, default=_port_default())
    run_p.add_argument("--host", default="127.0.0.1")
    run_p.add_argument("--rate", type=float, default=10.0, help="tick rate in Hz")
    run_p.add_argument("--record", default=None, help="write a session log here")
    run_p.add_argument("--fault", action="append", metavar="lidar:T0:T1",
                       help="inject a scanner blackout window (sim seconds)")
    run_p.add_argument("--seed", type=int, default=0)

    sc_p = sub.add_parser("scenario", help="run a scripted demonstration")
    sc_p.add_argument("name", choices=SCENARIO_NAMES)
    sc_p.add_argument("--seed", type=int, default=0)
    sc_p.add_argument("--json", action="store_true",
                      help="suppress the human summary on stderr")
    sc_p.add_argument("--record", default=None, help="write a session log here")

    rp_p = sub.add_parser("replay", help="replay a session log through a bridge")
    rp_p.add_argument("--log", required=True)
    rp_p.add_argument("--speed", type=float, default=1.0,
                      help="time multiplier; inf = as fast as possible")
    rp_p.add_argument("--port", type=int, default=_port_default())
    rp_p.add_argument("--host", default="127.0.0.1")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenario":
        return _run_scenario_cmd(args)
    if args.command == "run":
        try:
            return asyncio.run(_run_live(args))
        except KeyboardInterrupt:
            return 0
    if args.command == "replay":
        try:
            return asyncio.run(_run_replay(args))
        except KeyboardInterrupt:
            return 0
    raise SystemExit(2)


if __name__ == "__main__":
    sys.exit(main())
