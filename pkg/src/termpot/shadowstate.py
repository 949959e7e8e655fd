"""Shadow system state: the honeypot's authoritative model of the fake machine.

Every session owns one ShadowState. The emulator mutates it; the guardrail
uses it to keep LLM output self-consistent; the context module summarizes it
after an instructional reset. Nothing here ever touches the real filesystem,
network, or registry.
"""

from __future__ import annotations

import copy
import random
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum


class OsFamily(Enum):
    LINUX = "linux"
    WINDOWS = "windows"
    MAC = "mac"
    APPLICATION = "application"


class Mode(Enum):
    SERVE = "serve"
    REPLAY = "replay"


# Replay default: fixtures embed dates, so the frozen epoch is configurable
# per fixture and this is only the fallback.
DEFAULT_REPLAY_EPOCH = datetime(2022, 12, 19, 16, 31, 0)


class VirtualClock:
    """Frozen clock in replay mode, offset wall clock in serve mode."""

    def __init__(self, frozen: datetime | None = None):
        self._frozen = frozen
        self._offset = timedelta(0)

    @property
    def frozen(self) -> bool:
        return self._frozen is not None

    def now(self) -> datetime:
        base = self._frozen if self._frozen is not None else datetime.now()
        return base + self._offset

    def set_time(self, hour: int, minute: int, second: int, centis: int = 0) -> None:
        """Set the time-of-day, keeping the current date (DOS `time` semantics)."""
        current = self.now()
        target = current.replace(
            hour=hour, minute=minute, second=second, microsecond=centis * 10000
        )
        if self._frozen is not None:
            self._frozen = target
            self._offset = timedelta(0)
        else:
            self._offset += target - current


@dataclass
class FsNode:
    name: str
    is_dir: bool
    content: str = ""
    size: int = 0
    creation_time: datetime | None = None
    last_write_time: datetime | None = None
    last_access_time: datetime | None = None
    children: dict[str, FsNode] = field(default_factory=dict)

    def child(self, name: str, case_insensitive: bool) -> FsNode | None:
        if not case_insensitive:
            return self.children.get(name)
        folded = name.casefold()
        for key, node in self.children.items():
            if key.casefold() == folded:
                return node
        return None

    def sorted_children(self) -> list[FsNode]:
        return sorted(self.children.values(), key=lambda n: n.name.casefold())


@dataclass
class ArpEntry:
    ip: str
    mac: str
    entry_type: str  # "dynamic" or "static"


@dataclass
class RegistryValue:
    name: str
    value_type: str  # REG_DWORD / REG_SZ / REG_BINARY
    data: str


@dataclass
class StateDelta:
    """Structured description of what one command changed."""

    created: list[str] = field(default_factory=list)
    deleted: list[str] = field(default_factory=list)
    moved: list[tuple[str, str]] = field(default_factory=list)
    appended: list[str] = field(default_factory=list)
    arp_set: list[tuple[str, str]] = field(default_factory=list)
    registry_deleted: list[tuple[str, str]] = field(default_factory=list)
    timestamps: list[tuple[str, str, datetime]] = field(default_factory=list)
    cwd_changed: tuple[str, str] | None = None
    installed: list[str] = field(default_factory=list)
    clock_set: str | None = None

    def is_empty(self) -> bool:
        return not (
            self.created
            or self.deleted
            or self.moved
            or self.appended
            or self.arp_set
            or self.registry_deleted
            or self.timestamps
            or self.cwd_changed
            or self.installed
            or self.clock_set
        )


def stable_hash(text: str) -> int:
    """Deterministic across processes (unlike hash())."""
    return zlib.crc32(text.encode("utf-8", "replace"))


class ShadowState:
    """Per-session virtual machine state.

    Owned by exactly one session; the emulator is the only writer. A snapshot
    of the seeded state is kept so resets can summarize net changes.
    """

    def __init__(
        self,
        os_family: OsFamily,
        mode: Mode = Mode.REPLAY,
        clock: VirtualClock | None = None,
        rng_seed: int = 1337,
    ):
        self.os_family = os_family
        self.mode = mode
        self.clock = clock or VirtualClock(DEFAULT_REPLAY_EPOCH)
        self.rng = random.Random(rng_seed)
        root_name = "C:" if os_family == OsFamily.WINDOWS else "/"
        self.root = FsNode(name=root_name, is_dir=True)
        self.cwd = self.root_path()
        self.arp_table: list[ArpEntry] = []
        self.arp_interface = ("192.168.0.2", "0x2")
        self.registry: dict[str, list[RegistryValue]] = {}
        self.username = "user"
        self.volume_label: str | None = None
        self.volume_serial = "0000-0000"
        self.free_bytes = 0
        self.hosts: dict[str, str] = {}
        self.canned_listings: dict[str, str] = {}
        self.protected_prefixes: list[str] = []
        self.preinstalled: set[str] = set()
        self.installed: set[str] = set()
        self.imported_modules: set[str] = set()
        self.pending: tuple | None = None  # e.g. ("time_set",), ("apt_continue", pkg)
        self.last_ping_target: str | None = None
        self._seed_snapshot: dict | None = None

    # ----- paths ---------------------------------------------------------

    @property
    def case_insensitive(self) -> bool:
        return self.os_family == OsFamily.WINDOWS

    def root_path(self) -> str:
        return "C:\\" if self.os_family == OsFamily.WINDOWS else "/"

    def sep(self) -> str:
        return "\\" if self.os_family == OsFamily.WINDOWS else "/"

    def split_path(self, path: str) -> list[str]:
        if self.os_family == OsFamily.WINDOWS:
            path = path.replace("/", "\\")
            if path[:2].upper() == "C:":
                path = path[2:]
            parts = [p for p in path.split("\\") if p]
        else:
            parts = [p for p in path.split("/") if p]
        return parts

    def resolve(self, target: str, base: str | None = None) -> str:
        """Absolute, normalized form of `target` relative to `base` (or cwd)."""
        target = target.strip()
        if base is None:
            base = self.cwd
        sep = self.sep()
        is_abs = (
            target.startswith(("\\", "/")) or target[:2].upper() == "C:"
            if self.os_family == OsFamily.WINDOWS
            else target.startswith("/")
        )
        if target in ("~", "~/") and self.os_family != OsFamily.WINDOWS:
            return f"/home/{self.username}"
        parts = self.split_path(base) if not is_abs else []
        for piece in self.split_path(target):
            if piece == ".":
                continue
            if piece == "..":
                if parts:
                    parts.pop()
                continue
            parts.append(piece)
        if not parts:
            return self.root_path()
        return self.root_path() + sep.join(parts)

    def lookup(self, path: str) -> FsNode | None:
        node = self.root
        for piece in self.split_path(path):
            if not node.is_dir:
                return None
            node = node.child(piece, self.case_insensitive)
            if node is None:
                return None
        return node

    def parent_and_name(self, path: str) -> tuple[FsNode | None, str]:
        parts = self.split_path(path)
        if not parts:
            return None, ""
        parent_path = self.root_path() + self.sep().join(parts[:-1])
        return self.lookup(parent_path), parts[-1]

    # ----- mutations (all timestamped off the virtual clock) --------------

    def ensure_dir(self, path: str, stamp: datetime | None = None) -> FsNode:
        stamp = stamp or self.clock.now()
        node = self.root
        for piece in self.split_path(path):
            nxt = node.child(piece, self.case_insensitive)
            if nxt is None:
                nxt = FsNode(
                    name=piece,
                    is_dir=True,
                    creation_time=stamp,
                    last_write_time=stamp,
                    last_access_time=stamp,
                )
                node.children[piece] = nxt
            node = nxt
        return node

    def create_file(
        self, path: str, content: str = "", stamp: datetime | None = None
    ) -> FsNode:
        stamp = stamp or self.clock.now()
        parent, name = self.parent_and_name(path)
        if parent is None or not parent.is_dir:
            parent = self.ensure_dir(
                self.root_path() + self.sep().join(self.split_path(path)[:-1]), stamp
            )
        node = parent.child(name, self.case_insensitive)
        if node is None:
            node = FsNode(
                name=name,
                is_dir=False,
                creation_time=stamp,
                last_access_time=stamp,
            )
            parent.children[name] = node
        node.content = content
        node.size = len(content.encode("utf-8", "replace"))
        node.last_write_time = stamp
        return node

    def append_file(self, path: str, content: str) -> FsNode:
        existing = self.lookup(path)
        if existing is None or existing.is_dir:
            return self.create_file(path, content)
        existing.content += content
        existing.size = len(existing.content.encode("utf-8", "replace"))
        existing.last_write_time = self.clock.now()
        return existing

    def delete(self, path: str) -> bool:
        """Remove a file or a whole directory subtree."""
        parent, name = self.parent_and_name(path)
        if parent is None:
            return False
        node = parent.child(name, self.case_insensitive)
        if node is None:
            return False
        del parent.children[node.name]
        return True

    def move(self, src: str, dst: str) -> bool:
        src_parent, src_name = self.parent_and_name(src)
        if src_parent is None:
            return False
        node = src_parent.child(src_name, self.case_insensitive)
        if node is None:
            return False
        dst_node = self.lookup(dst)
        if dst_node is not None and dst_node.is_dir:
            del src_parent.children[node.name]
            dst_node.children[node.name] = node
            return True
        dst_parent, dst_name = self.parent_and_name(dst)
        if dst_parent is None or not dst_parent.is_dir:
            return False
        del src_parent.children[node.name]
        node.name = dst_name
        dst_parent.children[dst_name] = node
        return True

    # ----- registry --------------------------------------------------------

    def registry_key(self, key: str) -> str | None:
        folded = key.casefold()
        for existing in self.registry:
            if existing.casefold() == folded:
                return existing
        return None

    def registry_values(self, key: str) -> list[RegistryValue]:
        actual = self.registry_key(key)
        return self.registry[actual] if actual else []

    def registry_delete_value(self, key: str, name: str) -> bool:
        actual = self.registry_key(key)
        if actual is None:
            return False
        values = self.registry[actual]
        for i, value in enumerate(values):
            if value.name.casefold() == name.casefold():
                del values[i]
                return True
        return False

    # ----- ARP -------------------------------------------------------------

    def arp_upsert(self, ip: str, mac: str, entry_type: str = "static") -> None:
        for entry in self.arp_table:
            if entry.ip == ip:
                entry.mac = mac
                entry.entry_type = entry_type
                return
        self.arp_table.append(ArpEntry(ip, mac, entry_type))

    # ----- snapshots and diffs ----------------------------------------------

    def all_paths(self) -> set[str]:
        out: set[str] = set()
        sep = self.sep()

        def walk(node: FsNode, prefix: str) -> None:
            for child in node.children.values():
                path = prefix + child.name
                out.add(path + (sep if child.is_dir else ""))
                if child.is_dir:
                    walk(child, path + sep)

        walk(self.root, self.root_path())
        return out

    def take_seed_snapshot(self) -> None:
        self._seed_snapshot = {
            "paths": self.all_paths(),
            "cwd": self.cwd,
            "arp": [(e.ip, e.mac, e.entry_type) for e in self.arp_table],
            "registry": {
                key: [(v.name, v.value_type, v.data) for v in values]
                for key, values in self.registry.items()
            },
            "installed": set(self.installed),
        }

    def diff_from_seed(self) -> dict:
        """Net changes since seeding, for the reset state digest."""
        snap = self._seed_snapshot or {
            "paths": set(),
            "cwd": self.cwd,
            "arp": [],
            "registry": {},
            "installed": set(),
        }
        now_paths = self.all_paths()
        created = sorted(now_paths - snap["paths"])
        deleted = sorted(snap["paths"] - now_paths)
        arp_now = [(e.ip, e.mac, e.entry_type) for e in self.arp_table]
        arp_changes = [e for e in arp_now if e not in snap["arp"]]
        reg_changes: list[str] = []
        for key, values in snap["registry"].items():
            current = {
                (v.name, v.value_type, v.data) for v in self.registry_values(key)
            }
            for name, vtype, data in values:
                if (name, vtype, data) not in current:
                    reg_changes.append(f"{key}: {name} removed or changed")
        for key, values in self.registry.items():
            seeded = set(snap["registry"].get(key, []))
            for value in values:
                if (value.name, value.value_type, value.data) not in seeded:
                    reg_changes.append(
                        f"{key}: {value.name} = {value.data} ({value.value_type})"
                    )
        return {
            "created": created,
            "deleted": deleted,
            "cwd": self.cwd if self.cwd != snap["cwd"] else None,
            "arp": arp_changes,
            "registry": reg_changes,
            "installed": sorted(self.installed - snap["installed"]),
        }

    def clone(self) -> "ShadowState":
        twin = copy.copy(self)
        twin.root = copy.deepcopy(self.root)
        twin.arp_table = copy.deepcopy(self.arp_table)
        twin.registry = copy.deepcopy(self.registry)
        twin.installed = set(self.installed)
        twin.imported_modules = set(self.imported_modules)
        twin.rng = random.Random()
        twin.rng.setstate(self.rng.getstate())
        return twin
