"""Command-line entry point: host the referee, persist logs and reports.

Modes: ``serve`` waits for one agent over TCP, ``demo`` runs the bundled
(or a ``--script``-supplied) agent in-process, ``validate`` checks a
scenario file, ``agent`` connects a scripted client to a running referee.

Exit codes: 0 run completed or timed out; 2 scenario/config invalid;
3 bind or connection failure; 4 protocol abort, disconnect, or write error.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
import tempfile
import threading
from dataclasses import dataclass, replace
from pathlib import Path

from .agent import CRACKER_SCRIPT, AgentError, AgentScript, run_agent, script_from_json
from .channel import ChannelClosed, SocketChannel, make_pipe
from .eventlog import EventLog
from .jsonutil import FieldError, canonical_json, loads_strict
from .protocol import Error, encode
from .referee import DEFAULT_IDLE_TIMEOUT_S, ProtocolAbort, run_benchmark
from .reports import ScoreReport
from .scenario import ScenarioError, ScenarioSpec, parse_scenario

EXIT_OK = 0
EXIT_SCENARIO_INVALID = 2
EXIT_CONNECTION_FAILURE = 3
EXIT_PROTOCOL_ABORT = 4

DEFAULT_LISTEN = "127.0.0.1:7501"
DEFAULT_EVENT_LOG = "run.events.jsonl"
DEFAULT_REPORT = "run.report.json"
DEFAULT_ACCEPT_TIMEOUT_S = 30.0
LISTEN_ENV_VAR = "ARENA_LISTEN"


@dataclass
class RunConfig:
    mode: str  # serve | demo | validate
    scenario_path: Path
    listen: tuple[str, int] = ("127.0.0.1", 7501)
    time_limit_override: float | None = None
    event_log_path: Path = Path(DEFAULT_EVENT_LOG)
    report_path: Path = Path(DEFAULT_REPORT)
    idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S
    accept_timeout_s: float = DEFAULT_ACCEPT_TIMEOUT_S
    script_path: Path | None = None  # demo only


def parse_listen(value: str) -> tuple[str, int]:
    host, sep, port_text = value.rpartition(":")
    if not sep or not host:
        raise ValueError(f"listen address must be host:port, got {value!r}")
    port = int(port_text)
    if not 0 <= port <= 65535:  # 0 asks the OS for an ephemeral port
        raise ValueError(f"port out of range: {port}")
    return host, port


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_report(report: ScoreReport, path: Path) -> None:
    """Persist the report as one canonical JSON document (atomic rename)."""
    _atomic_write(path, canonical_json(report.to_dict()) + "\n")


def write_event_log(log: EventLog, path: Path) -> None:
    _atomic_write(path, log.to_text())


def _load_spec(config: RunConfig) -> ScenarioSpec | None:
    try:
        text = config.scenario_path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return None
    try:
        spec = parse_scenario(text)
    except ScenarioError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        return None
    if config.time_limit_override is not None:
        spec = replace(spec, time_limit_s=config.time_limit_override)
    return spec


def _load_script(path: Path | None) -> AgentScript | None:
    if path is None:
        return CRACKER_SCRIPT
    try:
        data = loads_strict(path.read_bytes())
        return script_from_json(data)
    except OSError as exc:
        print(f"error: cannot read script: {exc}", file=sys.stderr)
    except (ValueError, FieldError) as exc:
        print(f"error: invalid script: {exc}", file=sys.stderr)
    return None


def _refuse_extra_connections(listener: socket.socket) -> None:
    # The run owns the first connection; later arrivals get a busy error.
    while True:
        try:
            extra, _ = listener.accept()
        except OSError:
            return
        try:
            extra.sendall(encode(Error("busy", "a run is already in progress")))
        except OSError:
            pass
        finally:
            extra.close()


def _finish_run(
    config: RunConfig, log: EventLog, report: ScoreReport | None, aborted: bool, spec: ScenarioSpec
) -> int:
    try:
        write_event_log(log, config.event_log_path)
        if report is not None:
            write_report(report, config.report_path)
    except OSError as exc:
        print(f"error: cannot persist run artifacts: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL_ABORT
    if report is None:
        return EXIT_PROTOCOL_ABORT
    print(
        f"scenario {report.scenario_id}: total {report.total}/{spec.max_points}"
        f" ({report.termination}, elapsed {report.elapsed_s:g} s)"
    )
    if aborted or report.termination == "disconnect":
        return EXIT_PROTOCOL_ABORT
    return EXIT_OK


def _run_serve(config: RunConfig, spec: ScenarioSpec) -> int:
    log = EventLog()
    try:
        listener = socket.create_server(config.listen)
    except OSError as exc:
        print(f"error: cannot bind {config.listen[0]}:{config.listen[1]}: {exc}", file=sys.stderr)
        return EXIT_CONNECTION_FAILURE
    with listener:
        host, port = listener.getsockname()[:2]
        print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
        listener.settimeout(config.accept_timeout_s)
        try:
            conn, peer = listener.accept()
        except socket.timeout:
            print("error: no agent connected", file=sys.stderr)
            return EXIT_CONNECTION_FAILURE
        except OSError as exc:
            print(f"error: accept failed: {exc}", file=sys.stderr)
            return EXIT_CONNECTION_FAILURE
        listener.settimeout(None)
        refuser = threading.Thread(
            target=_refuse_extra_connections, args=(listener,), daemon=True
        )
        refuser.start()
        channel = SocketChannel(conn)
        try:
            report = run_benchmark(
                spec, channel, event_log=log, idle_timeout_s=config.idle_timeout_s
            )
            aborted = False
        except ProtocolAbort as exc:
            print(f"error: run aborted: {exc}", file=sys.stderr)
            report, aborted = None, True
        finally:
            channel.close()
    return _finish_run(config, log, report, aborted, spec)


def _run_demo(config: RunConfig, spec: ScenarioSpec) -> int:
    script = _load_script(config.script_path)
    if script is None:
        return EXIT_SCENARIO_INVALID
    log = EventLog()
    referee_end, agent_end = make_pipe()
    agent_failure: list[BaseException] = []

    def agent_main() -> None:
        try:
            run_agent(script, agent_end)
        except BaseException as exc:  # surfaced after the run on stderr
            agent_failure.append(exc)
        finally:
            agent_end.close()

    worker = threading.Thread(target=agent_main, daemon=True)
    worker.start()
    try:
        report = run_benchmark(
            spec, referee_end, event_log=log, idle_timeout_s=config.idle_timeout_s
        )
        aborted = False
    except ProtocolAbort as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        report, aborted = None, True
    finally:
        referee_end.close()
    worker.join(timeout=10.0)
    for exc in agent_failure:
        print(f"demo agent error: {exc}", file=sys.stderr)
    return _finish_run(config, log, report, aborted, spec)


def _run_validate(config: RunConfig) -> int:
    try:
        text = config.scenario_path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}")
        return EXIT_SCENARIO_INVALID
    try:
        spec = parse_scenario(text)
    except ScenarioError as exc:
        for diag in exc.diagnostics:
            print(str(diag))
        return EXIT_SCENARIO_INVALID
    print(f"{config.scenario_path}: ok ({spec.id}, {len(spec.rubric)} achievements, {spec.max_points} points)")
    return EXIT_OK


def run(config: RunConfig) -> int:
    if config.mode == "validate":
        return _run_validate(config)
    spec = _load_spec(config)
    if spec is None:
        return EXIT_SCENARIO_INVALID
    if config.mode == "serve":
        return _run_serve(config, spec)
    if config.mode == "demo":
        return _run_demo(config, spec)
    raise ValueError(f"unknown mode {config.mode!r}")


def _run_agent_mode(args: argparse.Namespace) -> int:
    script = _load_script(args.script)
    if script is None:
        return EXIT_SCENARIO_INVALID
    try:
        host, port = parse_listen(args.connect)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO_INVALID
    try:
        sock = socket.create_connection((host, port), timeout=10.0)
    except OSError as exc:
        print(f"error: cannot connect to {host}:{port}: {exc}", file=sys.stderr)
        return EXIT_CONNECTION_FAILURE
    channel = SocketChannel(sock)
    try:
        report = run_agent(script, channel, team=args.team, robot=args.robot)
    except (AgentError, ChannelClosed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL_ABORT
    finally:
        channel.close()
    print(canonical_json(report.to_dict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homearena",
        description="Scenario-driven virtual apartment benchmark referee.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)

    def add_common(p: argparse.ArgumentParser, with_run_flags: bool = True) -> None:
        p.add_argument("--scenario", type=Path, required=True, help="scenario JSON file")
        if with_run_flags:
            p.add_argument(
                "--time-limit", type=float, default=None, metavar="S",
                help="override the scenario time limit (simulated seconds)",
            )
            p.add_argument(
                "--log", type=Path, default=Path(DEFAULT_EVENT_LOG),
                help=f"event log path (default {DEFAULT_EVENT_LOG})",
            )
            p.add_argument(
                "--report", type=Path, default=Path(DEFAULT_REPORT),
                help=f"score report path (default {DEFAULT_REPORT})",
            )
            p.add_argument(
                "--idle-timeout", type=float, default=DEFAULT_IDLE_TIMEOUT_S, metavar="S",
                help="wall-clock seconds without a frame before the run is cut off",
            )

    serve = sub.add_parser("serve", help="host one run over TCP")
    add_common(serve)
    serve.add_argument(
        "--listen", default=None, metavar="HOST:PORT",
        help=f"listen address (default ${LISTEN_ENV_VAR} or {DEFAULT_LISTEN})",
    )

    demo = sub.add_parser("demo", help="run the bundled scripted agent in-process")
    add_common(demo)
    demo.add_argument("--script", type=Path, default=None, help="agent script JSON file")

    validate = sub.add_parser("validate", help="check a scenario file")
    add_common(validate, with_run_flags=False)

    agent = sub.add_parser("agent", help="connect a scripted agent to a referee")
    agent.add_argument("--connect", required=True, metavar="HOST:PORT")
    agent.add_argument("--script", type=Path, default=None, help="agent script JSON file")
    agent.add_argument("--team", default="demo_team")
    agent.add_argument("--robot", default="demo_robot")
    return parser


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    if args.mode == "agent":
        sys.exit(_run_agent_mode(args))
    if args.mode == "validate":
        config = RunConfig(mode="validate", scenario_path=args.scenario)
        sys.exit(run(config))
    listen_text = getattr(args, "listen", None) or os.environ.get(LISTEN_ENV_VAR) or DEFAULT_LISTEN
    try:
        listen = parse_listen(listen_text)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(EXIT_SCENARIO_INVALID)
    config = RunConfig(
        mode=args.mode,
        scenario_path=args.scenario,
        listen=listen,
        time_limit_override=args.time_limit,
        event_log_path=args.log,
        report_path=args.report,
        idle_timeout_s=args.idle_timeout,
        script_path=getattr(args, "script", None),
    )
    sys.exit(run(config))


if __name__ == "__main__":
    main()
