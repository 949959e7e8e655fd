"""Raw-TCP line protocol front end.

Listeners bind one port per persona. Telnet clients work because IAC
negotiation sequences are silently stripped (never answered); everything else
is plain UTF-8 lines in, persona-terminated lines plus a prompt out.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from dataclasses import dataclass, field

from .backends import EmulatorBackend
from .eventlog import EventLogWriter
from .guardrail import GuardrailPolicy
from .personas import Persona, PersonaRegistry, seed_shadow_state
from .session import SessionStatus, close_session, open_session, run_turn
from .shadowstate import Mode, VirtualClock

log = logging.getLogger(__name__)

IAC = 0xFF
SB = 250
SE = 240
WILL, WONT, DO, DONT = 251, 252, 253, 254

MAX_LINE_BYTES = 256 * 1024


@dataclass
class LineProtocolConfig:
    input_terminators: tuple[bytes, ...] = (b"\r\n", b"\n")
    strip_telnet_negotiation: bool = True
    echo_input: bool = False


def strip_telnet_iac(data: bytes) -> bytes:
    """Drop telnet IAC command sequences; IAC IAC unescapes to a literal 0xFF."""
    out = bytearray()
    i = 0
    n = len(data)
    while i < n:
        byte = data[i]
        if byte != IAC:
            out.append(byte)
            i += 1
            continue
        if i + 1 >= n:
            break
        nxt = data[i + 1]
        if nxt == IAC:
            out.append(IAC)
            i += 2
        elif nxt in (WILL, WONT, DO, DONT):
            i += 3
        elif nxt == SB:
            end = i + 2
            while end + 1 < n and not (data[end] == IAC and data[end + 1] == SE):
                end += 1
            i = end + 2
        else:
            i += 2
    return bytes(out)


def decode_line(raw: bytes, protocol: LineProtocolConfig) -> tuple[str, bool]:
    """Strip terminators and IAC bytes, decode UTF-8. Returns (text, clean)."""
    if protocol.strip_telnet_negotiation:
        raw = strip_telnet_iac(raw)
    while raw.endswith((b"\r\n", b"\n", b"\r")):
        raw = raw[:-2] if raw.endswith(b"\r\n") else raw[:-1]
    try:
        return raw.decode("utf-8"), True
    except UnicodeDecodeError:
        return raw.decode("utf-8", "replace"), False


def encode_response(body: str, persona: Persona) -> bytes:
    """Body lines with the persona terminator, then the bare prompt string."""
    terminator = persona.output_terminator
    if body:
        wire = terminator.join(body.split("\n")) + terminator
    elif not persona.prompt_string:
        wire = terminator
    else:
        wire = ""
    return (wire + persona.prompt_string).encode("utf-8")


@dataclass
class ListenerSpec:
    host: str
    port: int
    persona_id: str


@dataclass
class GatewayConfig:
    listeners: list[ListenerSpec]
    mode: Mode = Mode.SERVE
    token_budget: int = 8000
    idle_timeout_s: float = 600.0
    max_sessions: int = 100
    latency_jitter_ms: tuple[int, int] = (30, 250)
    rng_seed: int = 1337
    replay_epoch: str | None = None
    protocol: LineProtocolConfig = field(default_factory=LineProtocolConfig)


class GatewayServer:
    """asyncio server hosting all persona listeners."""

    def __init__(
        self,
        config: GatewayConfig,
        registry: PersonaRegistry,
        backend_factory=None,
        sink: EventLogWriter | None = None,
        policy: GuardrailPolicy | None = None,
    ):
        self.config = config
        self.registry = registry
        self.backend_factory = backend_factory or (lambda: EmulatorBackend(registry))
        self.sink = sink
        self.policy = policy or GuardrailPolicy()
        self.bound_ports: dict[str, int] = {}
        self._servers: list[asyncio.AbstractServer] = []
        self._active_sessions = 0
        self._live: set = set()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()
        self._startup_error: Exception | None = None

    # ----- lifecycle --------------------------------------------------------

    async def start(self) -> None:
        for spec in self.config.listeners:
            persona = self.registry.get(spec.persona_id)
            try:
                server = await asyncio.start_server(
                    self._make_handler(persona),
                    host=spec.host,
                    port=spec.port,
                    limit=MAX_LINE_BYTES,
                )
            except OSError as exc:
                await self.stop()
                raise OSError(
                    f"cannot bind listener {spec.host}:{spec.port} "
                    f"for persona {spec.persona_id}: {exc}"
                ) from exc
            self._servers.append(server)
            actual = server.sockets[0].getsockname()[1]
            self.bound_ports[spec.persona_id] = actual
            log.info("listening on %s:%s (%s)", spec.host, actual, spec.persona_id)

    async def stop(self) -> None:
        for server in self._servers:
            server.close()
            await server.wait_closed()
        self._servers.clear()
        # operator-initiated shutdown: summarize sessions still on the wire
        for session in list(self._live):
            close_session(session, cause="operator")
        self._live.clear()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        except asyncio.CancelledError:
            pass
        finally:
            await self.stop()

    # Background-thread harness: lets synchronous callers (tests, the CLI on
    # shutdown signals) drive the server with plain sockets.
    def start_background(self) -> None:
        def runner():
            loop = asyncio.new_event_loop()
            asyncio.set_event_loop(loop)
            self._loop = loop
            try:
                loop.run_until_complete(self.start())
            except Exception as exc:
                self._startup_error = exc
                self._started.set()
                return
            self._started.set()
            try:
                loop.run_forever()
            finally:
                loop.run_until_complete(self.stop())
                loop.close()

        self._thread = threading.Thread(target=runner, daemon=True)
        self._thread.start()
        self._started.wait(timeout=10)
        if self._startup_error is not None:
            raise self._startup_error

    def shutdown(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=10)

    # ----- connections --------------------------------------------------------

    def _make_handler(self, persona: Persona):
        async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            await self._handle_connection(persona, reader, writer)

        return handle

    async def _handle_connection(
        self,
        persona: Persona,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        if self._active_sessions >= self.config.max_sessions:
            # Refuse silently: an error banner would leak capacity hints.
            writer.close()
            return
        self._active_sessions += 1
        peername = writer.get_extra_info("peername") or ("?", 0)
        peer = f"{peername[0]}:{peername[1]}"
        clock = None
        if self.config.mode == Mode.REPLAY and self.config.replay_epoch:
            from datetime import datetime

            clock = VirtualClock(datetime.fromisoformat(self.config.replay_epoch))
        state = seed_shadow_state(
            persona, mode=self.config.mode, clock=clock, rng_seed=self.config.rng_seed
        )
        session = open_session(
            persona,
            state,
            self.backend_factory(),
            peer=peer,
            mode=self.config.mode,
            token_budget=self.config.token_budget,
            policy=self.policy,
            sink=self.sink,
        )
        cause = "peer_disconnect"
        self._live.add(session)
        loop = asyncio.get_running_loop()
        try:
            writer.write(persona.prompt_string.encode("utf-8"))
            await writer.drain()
            while session.status == SessionStatus.ACTIVE:
                try:
                    raw = await asyncio.wait_for(
                        reader.readline(), timeout=self.config.idle_timeout_s
                    )
                except asyncio.TimeoutError:
                    cause = "timeout"
                    break
                except (asyncio.LimitOverrunError, ValueError):
                    raw = b"\n"
                if not raw:
                    break
                text, clean = decode_line(raw[:MAX_LINE_BYTES], self.config.protocol)
                if not clean and self.sink is not None:
                    self.sink.append(
                        {
                            "event": "undecodable_input",
                            "session_id": session.session_id,
                            "raw_hex": raw[:512].hex(),
                        }
                    )
                if self.config.protocol.echo_input:
                    writer.write((text + persona.output_terminator).encode("utf-8"))
                result = await loop.run_in_executor(None, run_turn, session, text)
                body = result.final_text if result is not None else ""
                await self._jitter()
                writer.write(encode_response(body, persona))
                await writer.drain()
        except (ConnectionResetError, BrokenPipeError):
            cause = "peer_disconnect"
        finally:
            self._active_sessions -= 1
            self._live.discard(session)
            close_session(session, cause=cause)
            try:
                writer.close()
            except Exception:
                pass

    async def _jitter(self) -> None:
        low, high = self.config.latency_jitter_ms
        if self.config.mode == Mode.SERVE and high > 0:
            import random

            await asyncio.sleep(random.uniform(low, high) / 1000.0)
