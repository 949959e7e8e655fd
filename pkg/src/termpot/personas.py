"""Built-in terminal personas and their shadow-state seeds.

Each persona bundles the role-play instruction sent to an LLM backend, the
shell prompt shown on the wire, per-OS rendering conventions, and the initial
fake-machine state. Custom personas can be layered on from YAML files.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import yaml

from .shadowstate import (
    ArpEntry,
    Mode,
    OsFamily,
    RegistryValue,
    ShadowState,
    VirtualClock,
)

LF = "\n"
CRLF = "\r\n"

POLICY_KEY = "HKEY_LOCAL_MACHINE\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System"

# The four seeded ARP entries every Windows persona starts with.
WINDOWS_ARP_SEED = [
    ("192.168.0.1", "00-aa-00-62-c6-09", "dynamic"),
    ("192.168.0.255", "ff-ff-ff-ff-ff-ff", "static"),
    ("224.0.0.2", "01-00-5e-00-00-02", "static"),
    ("239.255.255.250", "01-00-5e-7f-ff-fa", "static"),
]

LINUX_ROOT_DIRS = [
    "bin", "boot", "dev", "etc", "home", "lib", "lib64", "media", "mnt",
    "opt", "proc", "root", "run", "sbin", "srv", "sys", "tmp", "usr", "var",
]

HOME_DIRS = [
    "Desktop", "Documents", "Downloads", "Music", "Pictures", "Public",
    "Templates", "Videos",
]

MAC_ROOT_DIRS = ["bin", "dev", "etc", "home", "lib", "opt", "sbin", "tmp", "usr", "var"]

MAC_USR_BIN_LISTING = """\
2to3-2.7      diff3      mcs          pygmentize  2to3-3.7
2to3         idle3      mcs-2.7     python3      2to3-3.8
2to3-3.5     idle3.5   mcs-2.7.5  python3-3.5  2to3-3.9
2to3-3.6     idle3.6   mcs-3.5    python3-3.6  2to3-3.9-2
2to3-3.7-2   idle3.7   mcs-3.6    python3-3.7  2to3-3.9-3
2to3-3.8-2   idle3.8   mcs-3.7    python3-3.7-2  2to3-3.9-4
2to3-3.8-3   idle3.8.5 mcs-3.8    python3-3.7-3  2to3-3.9-5
2to3-3.9-2   idle3.8.5-2 mcs-3.8.5  python3-3.8  2to3-3.9-6
2to3-3.9-3   idle3.8.5-3 mcs-3.8.5-2 python3-3.8-2  2to3-3.9-7
2to3-3.9-4   idle3.8.5-4 mcs-3.8.5-3 python3-3.8-3  2to3-3.9-8
2to3-3.9-5   idle3.8.5-5 mcs-3.8.5-4 python3-3.9    2to3-3.9-9
2to3-3.9-6   idle3.8.5-6 mcs-3.8.5-5 python3-3.9-2
2to3-3.9-7   idle3.8.5-7 mcs-3.8.5-6 python3-3.9-3
2to3-3.9-8   idle3.8.5-8 mcs-3.8.5-7 python3-3.9-4
2to3-3.9-9   idle3.8.5-9 mcs-3.8.5-8 python3-3.9-5"""

MAC_SYS_PATH_LISTING = """\
/Users/{Your user name}/Library/Python/3.9/lib/python/site-packages
/Library/Python/3.9/site-packages
/System/Library/Frameworks/Python.framework/Versions/3.9/lib/python3.9
/usr/local/Cellar/python@3.9/3.9.5/Frameworks/Python.framework/Versions/3.9/lib/python3.9
/usr/local/Cellar/python@3.9/3.9.5/Frameworks/Python.framework/Versions/3.9/lib/python3.9/lib-dynload
/usr/local/lib/python3.9/site-packages
/usr/local/Cellar/python@3.9/3.9.5/Frameworks/Python.framework/Versions/3.9/lib/python3.9/site-packages"""

_PROMPT_COMMON = (
    "I will type {typed} and you will reply with what the {surface} should show. "
    "I want you only to reply with the {output_word} output inside one unique code "
    "block, and nothing else. Do not write explanations. Do not type commands "
    "unless I instruct you to do so. When I need to tell you something in English "
    "I will do so by putting text inside only curly brackets {{like this}}. "
    'My first command is {first}'
)


def _prompt(
    actor: str, surface: str, output_word: str, first: str, typed: str = "commands"
) -> str:
    return f"I want you to act as {actor}. " + _PROMPT_COMMON.format(
        typed=typed, surface=surface, output_word=output_word, first=first
    )


@dataclass(frozen=True)
class StateSeed:
    """Declarative initial ShadowState for one persona."""

    initial_cwd: str
    initial_directories: tuple[str, ...] = ()
    initial_files: tuple[tuple[str, str, int], ...] = ()  # (path, content, size)
    initial_arp_entries: tuple[tuple[str, str, str], ...] = ()
    initial_registry_values: tuple[tuple[str, str, str, str], ...] = ()
    file_stamp: datetime | None = None  # explicit timestamps for seeded files
    username: str = "user"
    volume_label: str | None = None
    volume_serial: str = "0000-0000"
    free_bytes: int = 0
    hosts: tuple[tuple[str, str], ...] = ()
    canned_listings: tuple[tuple[str, str], ...] = ()
    protected_prefixes: tuple[str, ...] = ()
    preinstalled: tuple[str, ...] = ()


@dataclass(frozen=True)
class Persona:
    persona_id: str
    os_family: OsFamily
    instruction_prompt: str
    first_command: str
    prompt_string: str
    output_terminator: str
    seed: StateSeed
    ls_style: str = "slash_lines"  # slash_lines | single_line | columns
    dir_style: str = "full"  # full | bare (no dir rows, no footer)


def _linux_seed(**overrides) -> StateSeed:
    dirs = ["/" + d for d in LINUX_ROOT_DIRS]
    dirs += [f"/home/user/{d}" for d in HOME_DIRS]
    dirs += ["/etc/apt", "/etc/apt/sources.list.d", "/usr/bin"]
    defaults = dict(
        initial_cwd="/home/user",
        initial_directories=tuple(dirs),
        username="user",
        hosts=(
            ("openai.com", "2606:4780:60:d7f5::"),
            ("www.google.com", "172.217.0.174"),
        ),
    )
    defaults.update(overrides)
    return StateSeed(**defaults)


def _windows_seed(**overrides) -> StateSeed:
    defaults = dict(
        initial_cwd="C:\\",
        initial_arp_entries=tuple(WINDOWS_ARP_SEED),
        initial_registry_values=((POLICY_KEY, "EnableLUA", "REG_DWORD", "0x0"),),
        username="Username",
        hosts=(
            ("openai.com", "2606:4780:60:d7f5::"),
            ("www.google.com", "172.217.0.174"),
        ),
    )
    defaults.update(overrides)
    return StateSeed(**defaults)


def builtin_personas() -> dict[str, Persona]:
    linux_prompt = _prompt("a Linux terminal", "terminal", "terminal", '"pwd"')
    dos_user_prompt = _prompt(
        "a Windows DOS terminal", "DOS command line", "CLI", '"dir"'
    )
    personas = [
        Persona(
            persona_id="linux_term",
            os_family=OsFamily.LINUX,
            instruction_prompt=linux_prompt,
            first_command="pwd",
            prompt_string="$ ",
            output_terminator=LF,
            seed=_linux_seed(),
            ls_style="slash_lines",
        ),
        Persona(
            persona_id="jupyter",
            os_family=OsFamily.APPLICATION,
            instruction_prompt=_prompt(
                "a jupyter notebook", "notebook", "notebook", "\"print('hello world')\""
            ),
            first_command="print('hello world')",
            prompt_string="",
            output_terminator=LF,
            seed=StateSeed(initial_cwd="/"),
        ),
        Persona(
            persona_id="dos_admin",
            os_family=OsFamily.WINDOWS,
            instruction_prompt=_prompt(
                "a Windows DOS terminal running as admin", "terminal", "terminal",
                "reg /?",
            ),
            first_command="reg /?",
            prompt_string="C:\\>",
            output_terminator=CRLF,
            seed=_windows_seed(volume_label="OS", volume_serial="XXXX-XXXX"),
        ),
        Persona(
            persona_id="dos_user",
            os_family=OsFamily.WINDOWS,
            instruction_prompt=dos_user_prompt,
            first_command="dir",
            prompt_string="C:\\>",
            output_terminator=CRLF,
            seed=_windows_seed(
                initial_directories=("C:\\Program Files",),
                volume_label="OS",
                volume_serial="XXXX-XXXX",
                free_bytes=111_111_111,
            ),
            dir_style="bare",
        ),
        Persona(
            persona_id="mac_term",
            os_family=OsFamily.MAC,
            instruction_prompt=_prompt(
                "a MacIntosh Terminal app", "Mac command line", "Terminal", '"ls"',
                typed="shell commands",
            ),
            first_command="ls",
            prompt_string="% ",
            output_terminator=LF,
            seed=StateSeed(
                initial_cwd="/",
                initial_directories=tuple("/" + d for d in MAC_ROOT_DIRS),
                username="{Your user name}",
                canned_listings=(
                    ("/usr/bin", MAC_USR_BIN_LISTING),
                    ("sys.path", MAC_SYS_PATH_LISTING),
                ),
                protected_prefixes=("/usr/bin", "/bin", "/sbin", "/System", "/usr/lib"),
            ),
            ls_style="columns",
        ),
        Persona(
            persona_id="linux_teamviewer",
            os_family=OsFamily.LINUX,
            instruction_prompt=linux_prompt,
            first_command="pwd",
            prompt_string="$ ",
            output_terminator=LF,
            seed=_linux_seed(),
        ),
        Persona(
            persona_id="dos_ddos",
            os_family=OsFamily.WINDOWS,
            instruction_prompt=dos_user_prompt,
            first_command="dir",
            prompt_string="C:\\>",
            output_terminator=CRLF,
            seed=_windows_seed(
                initial_directories=("C:\\Users", "C:\\Program Files"),
                volume_label="Windows",
                volume_serial="xxxxx-xxxxx",
                free_bytes=111_111_111,
            ),
        ),
        Persona(
            persona_id="powershell",
            os_family=OsFamily.WINDOWS,
            instruction_prompt=_prompt(
                "a Windows Powershell terminal", "Powershell command line", "CLI",
                '"dir"',
            ),
            first_command="dir",
            prompt_string="PS C:\\Users\\Username> ",
            output_terminator=CRLF,
            seed=_windows_seed(
                initial_cwd="C:\\Users\\Username\\Documents",
                initial_directories=(
                    "C:\\Users\\Username\\Documents\\folder1",
                ),
                initial_files=(
                    ("C:\\Users\\Username\\Documents\\file1.txt", "", 12345),
                ),
                file_stamp=datetime(2021, 1, 1, 12, 34, 0),
            ),
        ),
        Persona(
            persona_id="dos_arp",
            os_family=OsFamily.WINDOWS,
            instruction_prompt=dos_user_prompt,
            first_command="dir",
            prompt_string="C:\\>",
            output_terminator=CRLF,
            seed=_windows_seed(
                initial_directories=("C:\\Users", "C:\\Windows"),
                volume_label=None,  # "has no label."
                volume_serial="D4E6-F7A5",
                free_bytes=14_829_597_184,
            ),
        ),
        Persona(
            persona_id="linux_nmap",
            os_family=OsFamily.LINUX,
            instruction_prompt=_prompt(
                "a Linux terminal", "Linux command line", "CLI", '"ls"'
            ),
            first_command="ls",
            prompt_string="$ ",
            output_terminator=LF,
            seed=_linux_seed(initial_cwd="/"),
            ls_style="single_line",
        ),
    ]
    return {p.persona_id: p for p in personas}


class PersonaRegistry:
    """Immutable-after-load registry of personas, shared by all sessions."""

    def __init__(self, personas: dict[str, Persona] | None = None):
        self._personas = dict(personas or builtin_personas())

    def get(self, persona_id: str) -> Persona:
        try:
            return self._personas[persona_id]
        except KeyError:
            raise KeyError(f"unknown persona_id: {persona_id!r}") from None

    def __contains__(self, persona_id: str) -> bool:
        return persona_id in self._personas

    def ids(self) -> list[str]:
        return list(self._personas)

    def load_file(self, path: str) -> list[str]:
        """Add custom personas from a YAML persona definition file."""
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        loaded = []
        for raw in doc.get("personas", []):
            persona = _persona_from_dict(raw)
            self._personas[persona.persona_id] = persona
            loaded.append(persona.persona_id)
        return loaded


def _persona_from_dict(raw: dict) -> Persona:
    family = OsFamily(raw["os_family"])
    seed_raw = raw.get("seed_state", {})
    seed = StateSeed(
        initial_cwd=seed_raw.get("initial_cwd", "/" if family != OsFamily.WINDOWS else "C:\\"),
        initial_directories=tuple(seed_raw.get("initial_directories", ())),
        initial_files=tuple(
            (f["path"], f.get("content", ""), int(f.get("size", 0)))
            for f in seed_raw.get("initial_files", ())
        ),
        initial_arp_entries=tuple(
            tuple(e) for e in seed_raw.get("initial_arp_entries", ())
        ),
        initial_registry_values=tuple(
            tuple(v) for v in seed_raw.get("initial_registry_values", ())
        ),
        username=seed_raw.get("username", "user"),
        volume_label=seed_raw.get("volume_label"),
        volume_serial=seed_raw.get("volume_serial", "0000-0000"),
        free_bytes=int(seed_raw.get("free_bytes", 0)),
        hosts=tuple((k, v) for k, v in seed_raw.get("hosts", {}).items()),
        protected_prefixes=tuple(seed_raw.get("protected_prefixes", ())),
    )
    default_terminator = CRLF if family == OsFamily.WINDOWS else LF
    return Persona(
        persona_id=raw["persona_id"],
        os_family=family,
        instruction_prompt=raw["instruction_prompt"],
        first_command=raw.get("first_command", ""),
        prompt_string=raw.get("prompt_string", "$ "),
        output_terminator=raw.get("output_terminator", default_terminator),
        seed=seed,
        ls_style=raw.get("ls_style", "slash_lines"),
        dir_style=raw.get("dir_style", "full"),
    )


def get_persona(persona_id: str, registry: PersonaRegistry | None = None) -> Persona:
    return (registry or _DEFAULT_REGISTRY).get(persona_id)


def seed_shadow_state(
    persona: Persona,
    mode: Mode = Mode.REPLAY,
    clock: VirtualClock | None = None,
    rng_seed: int = 1337,
) -> ShadowState:
    """Build a fresh ShadowState from the persona's seed description."""
    state = ShadowState(persona.os_family, mode=mode, clock=clock, rng_seed=rng_seed)
    seed = persona.seed
    stamp = seed.file_stamp or state.clock.now()
    for directory in seed.initial_directories:
        state.ensure_dir(directory, stamp=stamp)
    for path, content, size in seed.initial_files:
        node = state.create_file(path, content, stamp=stamp)
        if size:
            node.size = size
    state.cwd = seed.initial_cwd
    state.ensure_dir(state.cwd, stamp=stamp)
    for ip, mac, entry_type in seed.initial_arp_entries:
        state.arp_table.append(ArpEntry(ip, mac, entry_type))
    for key, name, vtype, data in seed.initial_registry_values:
        state.registry.setdefault(key, []).append(RegistryValue(name, vtype, data))
    state.username = seed.username
    state.volume_label = seed.volume_label
    if mode == Mode.SERVE and persona.os_family == OsFamily.WINDOWS:
        state.volume_serial = "%04X-%04X" % (
            state.rng.randrange(0x10000),
            state.rng.randrange(0x10000),
        )
    else:
        state.volume_serial = seed.volume_serial
    state.free_bytes = seed.free_bytes
    state.hosts = dict(seed.hosts)
    state.canned_listings = dict(seed.canned_listings)
    state.protected_prefixes = list(seed.protected_prefixes)
    state.preinstalled = set(seed.preinstalled)
    state.installed = set(seed.preinstalled)
    state.take_seed_snapshot()
    return state


_DEFAULT_REGISTRY = PersonaRegistry()
