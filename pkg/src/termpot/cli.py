"""Operator command line: serve the honeypot, replay the fixture corpus,
query event logs, list personas.

Exit codes: 0 success, 1 usage/config error, 2 fidelity threshold failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys

from .config import ConfigError, load_config, validate_config
from .eventlog import EventLogWriter, query_logs
from .gateway import GatewayConfig, GatewayServer, ListenerSpec
from .guardrail import GuardrailPolicy
from .personas import PersonaRegistry
from .replay import builtin_corpus_dir, run_replay

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FIDELITY = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="termpot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the honeypot listeners")
    serve.add_argument("--config", required=True)

    replay = sub.add_parser("replay", help="replay a fixture corpus and score fidelity")
    replay.add_argument("--config", required=True)
    replay.add_argument("--corpus", default=None, help="fixture directory (default: built-in corpus)")
    replay.add_argument("--backend", choices=["emulator", "remote"], default=None)
    replay.add_argument("--threshold", type=float, default=None)

    logs = sub.add_parser("logs", help="query the event log")
    logs.add_argument("--path", required=True)
    logs.add_argument("--session", default=None)
    logs.add_argument("--tactic", default=None)
    logs.add_argument("--since", default=None)

    personas = sub.add_parser("personas", help="persona registry operations")
    personas.add_argument("action", choices=["list"])
    personas.add_argument("--config", default=None)

    return parser


def _load_registry(config) -> PersonaRegistry:
    registry = PersonaRegistry()
    for path in getattr(config, "custom_persona_files", []):
        registry.load_file(path)
    return registry


def _cmd_serve(args) -> int:
    try:
        config = load_config(args.config)
        registry = _load_registry(config)
        validate_config(config, registry, require_listeners=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    sink = EventLogWriter(config.log.path, config.log.rotate_bytes)
    policy = GuardrailPolicy()
    if config.refusal_phrases:
        policy.refusal_phrases = list(config.refusal_phrases)
    gateway_config = GatewayConfig(
        listeners=[
            ListenerSpec(l.host, l.port, l.persona_id) for l in config.listeners
        ],
        mode=config.mode,
        token_budget=config.token_budget,
        idle_timeout_s=config.session.idle_timeout_s,
        max_sessions=config.session.max_sessions,
        latency_jitter_ms=config.session.latency_jitter_ms_range,
        rng_seed=config.session.rng_seed,
        replay_epoch=config.replay_epoch,
    )
    backend_factory = _backend_factory(config, registry)
    server = GatewayServer(
        gateway_config, registry, backend_factory=backend_factory, sink=sink,
        policy=policy,
    )
    try:
        server.start_background()
    except OSError as exc:
        print(f"startup error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for persona_id, port in server.bound_ports.items():
        print(f"listening: {persona_id} on port {port}")

    stop = {"flag": False}

    def handle_signal(signum, frame):
        stop["flag"] = True

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)
    try:
        while not stop["flag"]:
            signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    print("shutting down")
    server.shutdown()
    return EXIT_OK


def _backend_factory(config, registry):
    from .backends import EmulatorBackend, RemoteLLMBackend

    if config.backend.kind == "remote_llm":
        def factory():
            return RemoteLLMBackend(
                endpoint=config.backend.endpoint,
                model=config.backend.model,
                api_key_env=config.backend.api_key_env,
                timeout_s=config.backend.timeout_s,
                auto_continue=config.backend.auto_continue,
            )
    else:
        def factory():
            return EmulatorBackend(registry)

    return factory


def _cmd_replay(args) -> int:
    try:
        config = load_config(args.config)
        registry = _load_registry(config)
        validate_config(config, registry, require_listeners=False)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    corpus = args.corpus or builtin_corpus_dir()
    backend_override = None
    if args.backend == "remote":
        backend_override = "remote_llm"
    elif args.backend == "emulator":
        backend_override = "emulator"
    report = run_replay(config, corpus, registry, backend_override=backend_override)
    print(report.render())
    if report.turns_total == 0:
        print("warning: corpus contained no fixture turns; fidelity is vacuous")
    threshold = args.threshold if args.threshold is not None else config.replay_threshold
    if report.aggregate_fidelity < threshold:
        print(
            f"fidelity {report.aggregate_fidelity:.4f} below threshold {threshold}",
            file=sys.stderr,
        )
        return EXIT_FIDELITY
    return EXIT_OK


def _cmd_logs(args) -> int:
    try:
        records, skipped = query_logs(
            args.path, session_id=args.session, tactic=args.tactic, since=args.since
        )
    except OSError as exc:
        print(f"cannot read log: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for record in records:
        print(json.dumps(record, ensure_ascii=False))
    if skipped:
        print(f"skipped {skipped} malformed line(s)", file=sys.stderr)
    return EXIT_OK


def _cmd_personas(args) -> int:
    registry = PersonaRegistry()
    if args.config:
        try:
            config = load_config(args.config)
            registry = _load_registry(config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for persona_id in registry.ids():
        persona = registry.get(persona_id)
        print(f"{persona_id}: {persona.os_family.value}, first command {persona.first_command!r}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {
        "serve": _cmd_serve,
        "replay": _cmd_replay,
        "logs": _cmd_logs,
        "personas": _cmd_personas,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
