"""Operator configuration: YAML file -> validated dataclasses and back."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import yaml

from .personas import PersonaRegistry
from .shadowstate import Mode


class ConfigError(Exception):
    pass


@dataclass
class ListenerConfig:
    address: str  # "host:port"
    persona_id: str

    @property
    def host(self) -> str:
        return self.address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.address.rsplit(":", 1)[1])


@dataclass
class BackendConfig:
    kind: str = "emulator"  # emulator | remote_llm
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "TERMPOT_API_KEY"
    timeout_s: float = 20.0
    temperature: float = 0.0
    max_output_tokens: int = 1024
    auto_continue: bool = False


@dataclass
class LogConfig:
    path: str = "termpot-events.jsonl"
    rotate_bytes: int = 10 * 1024 * 1024


@dataclass
class SessionConfig:
    idle_timeout_s: float = 600.0
    max_sessions: int = 100
    latency_jitter_ms_range: tuple[int, int] = (30, 250)
    rng_seed: int = 1337


@dataclass
class Config:
    listeners: list[ListenerConfig] = field(default_factory=list)
    backend: BackendConfig = field(default_factory=BackendConfig)
    token_budget: int = 8000
    refusal_phrases: list[str] | None = None
    log: LogConfig = field(default_factory=LogConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    mode: Mode = Mode.SERVE
    replay_epoch: str | None = None
    replay_threshold: float = 0.95
    custom_persona_files: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["listeners"] = [asdict(l) for l in self.listeners]
        data["session"]["latency_jitter_ms_range"] = list(
            self.session.latency_jitter_ms_range
        )
        return data

    def render(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def config_from_dict(data: dict) -> Config:
    listeners = [
        ListenerConfig(address=l["address"], persona_id=l["persona_id"])
        for l in data.get("listeners", [])
    ]
    backend = BackendConfig(**data.get("backend", {}))
    log_cfg = LogConfig(**data.get("log", {}))
    session_raw = dict(data.get("session", {}))
    if "latency_jitter_ms_range" in session_raw:
        session_raw["latency_jitter_ms_range"] = tuple(
            session_raw["latency_jitter_ms_range"]
        )
    session = SessionConfig(**session_raw)
    return Config(
        listeners=listeners,
        backend=backend,
        token_budget=int(data.get("token_budget", 8000)),
        refusal_phrases=data.get("refusal_phrases"),
        log=log_cfg,
        session=session,
        mode=Mode(data.get("mode", "serve")),
        replay_epoch=data.get("replay_epoch"),
        replay_threshold=float(data.get("replay_threshold", 0.95)),
        custom_persona_files=list(data.get("custom_persona_files", [])),
    )


def load_config(path: str) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    try:
        return config_from_dict(data)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"config {path} is invalid: {exc}") from exc


def validate_config(
    config: Config, registry: PersonaRegistry, require_listeners: bool = True
) -> None:
    if require_listeners and not config.listeners:
        raise ConfigError("no listeners configured")
    seen: set[str] = set()
    for listener in config.listeners:
        if listener.address in seen:
            raise ConfigError(f"duplicate listener address {listener.address}")
        seen.add(listener.address)
        try:
            listener.port
        except (ValueError, IndexError):
            raise ConfigError(f"listener address {listener.address!r} is not host:port")
        if listener.persona_id not in registry:
            raise ConfigError(f"listener persona {listener.persona_id!r} not registered")
    if config.token_budget < 512:
        raise ConfigError("token_budget must be at least 512")
    if config.backend.kind not in ("emulator", "remote_llm"):
        raise ConfigError(f"unknown backend kind {config.backend.kind!r}")
    if config.backend.kind == "remote_llm" and not config.backend.endpoint:
        raise ConfigError("remote_llm backend requires an endpoint")
