"""Deterministic shell emulator over ShadowState.

This is both the offline backend and the oracle the guardrail checks LLM
output against. Every handler renders plain terminal text; nothing is ever
executed for real, and no input may raise out of execute() — a honeypot that
crashes on hostile bytes advertises itself.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from datetime import datetime

from .personas import Persona
from .shadowstate import (
    FsNode,
    Mode,
    OsFamily,
    ShadowState,
    StateDelta,
    stable_hash,
)


@dataclass
class CommandOutcome:
    rendered_output: str
    state_delta: StateDelta = field(default_factory=StateDelta)
    refusal: bool = False  # emulator never refuses; field mirrors backend outcomes
    exit_semantics: str = "ok"  # ok | error_shown | unknown_command


def _ok(text: str, delta: StateDelta | None = None) -> CommandOutcome:
    return CommandOutcome(text, delta or StateDelta(), exit_semantics="ok")


def _error(text: str) -> CommandOutcome:
    return CommandOutcome(text, StateDelta(), exit_semantics="error_shown")


def _unknown(text: str) -> CommandOutcome:
    return CommandOutcome(text, StateDelta(), exit_semantics="unknown_command")


# --------------------------------------------------------------------------
# top-level dispatch
# --------------------------------------------------------------------------

FORK_BOMB_RE = re.compile(r"^:\(\)\s*\{.*\}\s*;?\s*:?\s*$", re.DOTALL)


def execute(state: ShadowState, persona: Persona, command_line: str) -> CommandOutcome:
    """Run one logical command (possibly a multi-line block) against state."""
    try:
        return _execute(state, persona, command_line)
    except Exception:
        # Last-ditch guard: arbitrary input must always get a terminal-style
        # answer, never a traceback.
        token = _first_token(command_line)
        return _unknown(unknown_command_text(persona, token))


def _execute(state: ShadowState, persona: Persona, command_line: str) -> CommandOutcome:
    if state.pending is not None:
        return _handle_pending(state, persona, command_line)

    text = command_line.strip("\r\n")
    if not text.strip():
        return _ok("")

    if persona.os_family == OsFamily.APPLICATION:
        return _jupyter_cell(state, text)

    if "\n" in text:
        block = _multiline_block(state, persona, text)
        if block is not None:
            return block
        outputs: list[str] = []
        delta = StateDelta()
        outcome = None
        for line in text.splitlines():
            if not line.strip():
                continue
            outcome = _execute(state, persona, line)
            if outcome.rendered_output:
                outputs.append(outcome.rendered_output)
            _merge_delta(delta, outcome.state_delta)
        merged = "\n".join(outputs)
        return CommandOutcome(
            merged, delta, exit_semantics=outcome.exit_semantics if outcome else "ok"
        )

    stripped = text.strip()
    if FORK_BOMB_RE.match(stripped.replace(" ", "")) or stripped.startswith(":(){"):
        return _fork_bomb(persona)

    if persona.os_family in (OsFamily.LINUX, OsFamily.MAC):
        return _unix_command(state, persona, stripped)
    return _windows_command(state, persona, stripped)


def _merge_delta(into: StateDelta, other: StateDelta) -> None:
    into.created += other.created
    into.deleted += other.deleted
    into.moved += other.moved
    into.appended += other.appended
    into.arp_set += other.arp_set
    into.registry_deleted += other.registry_deleted
    into.timestamps += other.timestamps
    into.installed += other.installed
    if other.cwd_changed:
        into.cwd_changed = other.cwd_changed
    if other.clock_set:
        into.clock_set = other.clock_set


def _first_token(text: str) -> str:
    token = text.strip().split()[0] if text.strip() else ""
    return token[:64]


def unknown_command_text(persona: Persona, token: str) -> str:
    token = token.replace("\n", " ")[:64]
    if persona.os_family == OsFamily.LINUX:
        return f"bash: {token}: command not found"
    if persona.os_family == OsFamily.MAC:
        return f"zsh: command not found: {token}"
    if persona.os_family == OsFamily.APPLICATION:
        return f"NameError: name '{token}' is not defined"
    if persona.persona_id == "powershell":
        return (
            f"{token} : The term '{token}' is not recognized as the name of a "
            "cmdlet, function, script file, or operable program."
        )
    return (
        f"'{token}' is not recognized as an internal or external command,\n"
        "operable program or batch file."
    )


# --------------------------------------------------------------------------
# pending interactive prompts (DOS `time`, apt confirmation)
# --------------------------------------------------------------------------

TIME_RE = re.compile(r"^(\d{1,2}):(\d{2}):(\d{2})(?:\.(\d{1,2}))?$")


def _handle_pending(state: ShadowState, persona: Persona, line: str) -> CommandOutcome:
    pending = state.pending
    state.pending = None
    kind = pending[0]
    text = line.strip()
    if kind == "time_set":
        if not text:
            return _ok("")
        match = TIME_RE.match(text)
        if not match:
            state.pending = pending
            return _error("The system cannot accept the time entered.\nEnter the new time:")
        hour, minute, second = int(match[1]), int(match[2]), int(match[3])
        centis = int((match[4] or "0").ljust(2, "0"))
        if hour > 23 or minute > 59 or second > 59:
            state.pending = pending
            return _error("The system cannot accept the time entered.\nEnter the new time:")
        state.clock.set_time(hour, minute, second, centis)
        delta = StateDelta(clock_set=text)
        return _ok(f"Current time: {_dos_time(state.clock.now())}", delta)
    if kind == "apt_continue":
        package = pending[1]
        if text.lower().startswith("y") or text == "":
            state.installed.add(package)
            delta = StateDelta(installed=[package])
            return _ok(_apt_fetch_transcript(package), delta)
        return _ok("Abort.")
    return _ok("")


def _dos_time(now: datetime) -> str:
    return f"{now.hour:02d}:{now.minute:02d}:{now.second:02d}.{now.microsecond // 10000:02d}"


# --------------------------------------------------------------------------
# multi-line blocks (heredocs, ping loops, echo with embedded newlines)
# --------------------------------------------------------------------------

def _multiline_block(
    state: ShadowState, persona: Persona, text: str
) -> CommandOutcome | None:
    lowered = text.lower()
    if "goto :loop" in lowered and "ping" in lowered:
        return _ping_loop(state)
    if persona.os_family in (OsFamily.LINUX, OsFamily.MAC):
        if re.search(r"python3?\b", text) and ("<<" in text or "print" in text):
            return _python_snippet(state, persona, text)
        if text.lstrip().startswith(("echo", "sudo ")) and _find_redirect(text):
            return _unix_command(state, persona, text)
    if persona.os_family == OsFamily.WINDOWS and _find_redirect(text):
        # echo "...multi-line batch body..." >>target
        return _echo_redirect(state, persona, text)
    return None


def _ping_loop(state: ShadowState) -> CommandOutcome:
    target = state.last_ping_target or "172.217.0.174"
    block = _ping_fragmentation_block(target)
    # Mimics output cut off by the backend token limit mid-repetition.
    truncated = "\n".join(block.splitlines()[:2])
    return _ok("\n\n".join([block, block, truncated]))


# --------------------------------------------------------------------------
# unix (linux + mac) commands
# --------------------------------------------------------------------------

def _unix_command(state: ShadowState, persona: Persona, text: str) -> CommandOutcome:
    if text.startswith("sudo "):
        return _unix_command(state, persona, text[5:].strip())

    sh_wrap = re.match(r"^sh\s+-c\s+(['\"])(.*)\1\s*$", text, re.DOTALL)
    if sh_wrap:
        return _unix_command(state, persona, sh_wrap[2].strip())

    if _find_redirect(text) and text.split()[0] in ("echo",):
        return _echo_redirect(state, persona, text)

    cmd, _, rest = text.partition(" ")
    rest = rest.strip()

    if cmd == "pwd":
        return _ok(state.cwd)
    if cmd == "cd":
        return _unix_cd(state, rest)
    if cmd == "ls":
        return _unix_ls(state, persona, rest)
    if cmd == "echo":
        return _ok(_strip_quotes(rest).replace("\\n", "\n"))
    if cmd == "rm":
        return _unix_rm(state, persona, rest)
    if cmd == "uname":
        if "-m" in rest.split():
            return _ok("x86_64")
        return _ok("Darwin" if persona.os_family == OsFamily.MAC else "Linux")
    if cmd == "whoami":
        return _ok(state.username)
    if cmd in ("python", "python3"):
        return _python_snippet(state, persona, text)
    if cmd == "wget":
        return _wget(state, rest)
    if cmd == "apt-key":
        if rest.startswith("add"):
            return _ok("OK")
        return _error("Usage: apt-key add <file>")
    if cmd in ("apt", "apt-get"):
        return _apt(state, cmd, rest)
    if cmd == "nmap":
        return _nmap(state, rest)
    if cmd == "cat" and rest:
        return _unix_cat(state, persona, rest)
    if cmd in ("exit", "logout", "clear"):
        return _ok("")
    # Shell one-liners that smuggle a python print through backticks/heredocs.
    if re.search(r"\bpython3?\b", text) and "print" in text:
        return _python_snippet(state, persona, text)
    return _unknown(unknown_command_text(persona, cmd))


def _unix_cd(state: ShadowState, rest: str) -> CommandOutcome:
    target = rest.split()[0] if rest else f"/home/{state.username}"
    path = state.resolve(target)
    node = state.lookup(path)
    if node is None or not node.is_dir:
        return _error(f"bash: cd: {target}: No such file or directory")
    old = state.cwd
    state.cwd = path
    return _ok("", StateDelta(cwd_changed=(old, path)))


def _unix_ls(state: ShadowState, persona: Persona, rest: str) -> CommandOutcome:
    args = [a for a in rest.split() if not a.startswith("-")]
    target = args[0] if args else state.cwd
    path = state.resolve(target)
    canned = state.canned_listings.get(path)
    if canned is not None:
        return _ok(canned)
    node = state.lookup(path)
    if node is None:
        return _error(f"ls: cannot access '{target}': No such file or directory")
    if not node.is_dir:
        return _ok(node.name)
    return _ok(render_dir_listing(state, path, style="unix_" + persona.ls_style))


def _unix_rm(state: ShadowState, persona: Persona, rest: str) -> CommandOutcome:
    try:
        parts = shlex.split(rest)
    except ValueError:
        parts = rest.split()
    flags = "".join(p[1:] for p in parts if p.startswith("-"))
    targets = [p for p in parts if not p.startswith("-")]
    if not targets:
        return _error("rm: missing operand")
    recursive = "r" in flags or "R" in flags
    force = "f" in flags
    outputs: list[str] = []
    delta = StateDelta()
    for target in targets:
        path = state.resolve(target)
        for prefix in state.protected_prefixes:
            if path == prefix or path.startswith(prefix.rstrip("/") + "/"):
                outputs.append(f"rm: {path}: Operation not permitted")
                break
        else:
            node = state.lookup(path)
            if node is None:
                if not force:
                    outputs.append(
                        f"rm: cannot remove '{target}': No such file or directory"
                    )
                continue
            if node.is_dir and not recursive:
                outputs.append(f"rm: cannot remove '{target}': Is a directory")
                continue
            state.delete(path)
            delta.deleted.append(path)
    text = "\n".join(outputs)
    if outputs and not delta.deleted:
        return _error(text)
    return CommandOutcome(text, delta, exit_semantics="ok")


def _unix_cat(state: ShadowState, persona: Persona, rest: str) -> CommandOutcome:
    target = _strip_quotes(rest.split()[0])
    node = state.lookup(state.resolve(target))
    if node is None or node.is_dir:
        return _error(f"cat: {target}: No such file or directory")
    return _ok(node.content.rstrip("\n"))


PRINT_RE = re.compile(
    r"""print\s*(?:\(\s*)?(?P<q>['"`])(?P<body>.*?)(?P=q)\s*\)?""", re.DOTALL
)


def _extract_prints(code: str) -> list[str]:
    return [m.group("body") for m in PRINT_RE.finditer(code)]


def _python_snippet(state: ShadowState, persona: Persona, text: str) -> CommandOutcome:
    if "sys.path" in text and "sys.path" in state.canned_listings:
        return _ok(state.canned_listings["sys.path"])
    # Script file execution: python foo.py
    single = text.strip()
    match = re.match(r"^python3?\s+([^\s<'\"-][^\s<]*)\s*$", single)
    if match:
        path = state.resolve(match[1])
        node = state.lookup(path)
        if node is None or node.is_dir:
            return _error(
                f"python: can't open file '{match[1]}': "
                "[Errno 2] No such file or directory"
            )
        return _ok("\n".join(_extract_prints(node.content)))
    # -c snippets, <<< strings, heredocs: print whatever the code prints.
    return _ok("\n".join(_extract_prints(text)))


def _fork_bomb(persona: Persona) -> CommandOutcome:
    # Render the session as briefly wedged, then recovered. Never loops.
    if persona.os_family == OsFamily.MAC:
        line = "zsh: fork failed: resource temporarily unavailable"
        return _ok("\n".join([line, line, line]))
    line = "-bash: fork: retry: Resource temporarily unavailable"
    return _ok("\n".join([line, line, line, "-bash: fork: Interrupted system call"]))


# ----- echo redirection ----------------------------------------------------

def _find_redirect(text: str) -> tuple[str, int] | None:
    """First > or >> outside quotes, as (operator, index). Single pass."""
    quote = ""
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if quote:
            if ch == quote:
                quote = ""
        elif ch in "\"'":
            quote = ch
        elif ch == ">":
            if i + 1 < n and text[i + 1] == ">":
                return ">>", i
            return ">", i
        i += 1
    return None


def _echo_redirect(state: ShadowState, persona: Persona, text: str) -> CommandOutcome:
    text = text.strip()
    if text.startswith("sudo "):
        text = text[5:].strip()
    sh_wrap = re.match(r"^sh\s+-c\s+(['\"])(.*)\1\s*$", text, re.DOTALL)
    if sh_wrap:
        text = sh_wrap[2].strip()
    found = _find_redirect(text)
    if found is None:
        return _ok("")
    op, start = found
    before, after = text[:start], text[start + len(op) :]
    target = _strip_quotes(after.strip())
    payload_part = before.strip()
    if payload_part.lower().startswith("echo"):
        payload = _strip_quotes(payload_part[4:].strip())
        if persona.os_family in (OsFamily.LINUX, OsFamily.MAC):
            # sh-flavored echo: the transcripts treat \n as a newline
            payload = payload.replace("\\n", "\n")
        payload += "\n"
    elif payload_part.lower().startswith("type nul"):
        payload = ""
    else:
        payload = ""
    path = state.resolve(target)
    existed = state.lookup(path) is not None
    created_size = 0
    if op == ">>":
        if payload:
            node = state.append_file(path, payload)
        else:
            node = state.lookup(path) or state.create_file(path, "")
        created_size = node.size
    else:
        node = state.create_file(path, payload)
        created_size = node.size
    if persona.os_family == OsFamily.WINDOWS and not existed:
        state.free_bytes = max(0, state.free_bytes - created_size)
    delta = StateDelta()
    if existed and op == ">>":
        delta.appended.append(path)
    else:
        delta.created.append(path)
    return _ok("", delta)


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


# --------------------------------------------------------------------------
# windows (DOS + PowerShell) commands
# --------------------------------------------------------------------------

TIMESTOMP_RE = re.compile(
    r"""^\(\s*Get-Item\s+["']?(?P<path>[^"')]+?)["']?\s*\)\s*
        \.\s*(?P<field>CreationTime|LastWriteTime|LastAccessTime)\s*=\s*
        \(\s*["'](?P<value>[^"']+)["']\s*\)\s*$""",
    re.VERBOSE,
)


def _windows_command(state: ShadowState, persona: Persona, text: str) -> CommandOutcome:
    stomp = TIMESTOMP_RE.match(text)
    if stomp:
        field_map = {
            "CreationTime": "creation",
            "LastWriteTime": "last_write",
            "LastAccessTime": "last_access",
        }
        return _timestomp_command(
            state, stomp["path"], field_map[stomp["field"]], stomp["value"]
        )

    if persona.persona_id == "powershell" and ("Get-ChildItem" in text or text.lower().startswith("dir")):
        return _powershell_listing(state, text)

    if _find_redirect(text):
        return _echo_redirect(state, persona, text)

    cmd, _, rest = text.partition(" ")
    rest = rest.strip()
    cmd_lower = cmd.lower()

    if cmd_lower == "dir":
        return _dos_dir(state, persona, rest)
    if cmd_lower in ("cd", "chdir"):
        return _dos_cd(state, rest)
    if cmd_lower == "type":
        return _dos_type(state, rest)
    if cmd_lower == "del":
        return _dos_del(state, rest)
    if cmd_lower == "move":
        return _dos_move(state, rest)
    if cmd_lower == "ren" or cmd_lower == "rename":
        return _dos_ren(state, rest)
    if cmd_lower == "reg":
        return _reg(state, rest)
    if cmd_lower == "time":
        state.pending = ("time_set",)
        return _ok(f"Current time: {_dos_time(state.clock.now())}\nEnter the new time:")
    if cmd_lower == "ping":
        return _ping(state, rest)
    if cmd_lower == "tracert":
        return _tracert(state, rest)
    if cmd_lower == "arp":
        return _arp(state, rest)
    if cmd_lower == "echo":
        return _ok(_strip_quotes(rest) if rest else "ECHO is on.")
    if cmd_lower in ("exit", "cls"):
        return _ok("")
    if cmd_lower in ("command", "cmd") and rest == "/?":
        return _ok(CMD_HELP)

    # Invoking an existing script/batch file runs "silently" (no batch engine).
    node = state.lookup(state.resolve(cmd))
    if node is not None and not node.is_dir:
        return _ok("")
    return _unknown(unknown_command_text(persona, cmd))


def _dos_cd(state: ShadowState, rest: str) -> CommandOutcome:
    target = _strip_quotes(rest).rstrip("\\") if rest else ""
    if not target:
        return _ok(state.cwd)
    path = state.resolve(target)
    node = state.lookup(path)
    if node is None or not node.is_dir:
        return _error("The system cannot find the path specified.")
    old = state.cwd
    state.cwd = path
    return _ok("", StateDelta(cwd_changed=(old, path)))


def _dos_type(state: ShadowState, rest: str) -> CommandOutcome:
    target = _strip_quotes(rest)
    node = state.lookup(state.resolve(target))
    if node is None or node.is_dir:
        return _error("The system cannot find the file specified.")
    return _ok(node.content.rstrip("\n"))


def _glob_to_re(pattern: str) -> re.Pattern:
    return re.compile(
        "^" + re.escape(pattern).replace(r"\*", ".*").replace(r"\?", ".") + "$",
        re.IGNORECASE,
    )


def _dos_del(state: ShadowState, rest: str) -> CommandOutcome:
    target = _strip_quotes(rest)
    if not target:
        return _error("The syntax of the command is incorrect.")
    path = state.resolve(target)
    parent_path = path.rsplit(state.sep(), 1)[0] or state.root_path()
    pattern = path.rsplit(state.sep(), 1)[-1]
    parent = state.lookup(parent_path if parent_path.endswith("\\") or parent_path != "C:" else "C:\\")
    if parent is None or not parent.is_dir:
        return _error(f"Could Not Find {path}")
    matcher = _glob_to_re(pattern)
    victims = [
        c for c in parent.sorted_children() if not c.is_dir and matcher.match(c.name)
    ]
    if not victims:
        return _error(f"Could Not Find {path}")
    delta = StateDelta()
    for victim in victims:
        full = parent_path.rstrip("\\") + "\\" + victim.name
        state.free_bytes += victim.size
        del parent.children[victim.name]
        delta.deleted.append(full)
    return _ok("", delta)


def _dos_move(state: ShadowState, rest: str) -> CommandOutcome:
    parts = _split_dos_paths(rest)
    if len(parts) != 2:
        return _error("The syntax of the command is incorrect.")
    src = state.resolve(parts[0])
    dst = state.resolve(parts[1])
    if state.lookup(src) is None:
        return _error("The system cannot find the file specified.")
    state.move(src, dst)
    return _ok("1 file(s) moved.", StateDelta(moved=[(src, dst)]))


def _split_dos_paths(rest: str) -> list[str]:
    """Split two paths where the second may contain unquoted spaces."""
    try:
        parts = shlex.split(rest)
    except ValueError:
        parts = rest.split()
    if len(parts) <= 2:
        return parts
    # `move C:\file.txt C:\Program Files` — glue the tail back together.
    return [parts[0], " ".join(parts[1:])]


def _dos_ren(state: ShadowState, rest: str) -> CommandOutcome:
    parts = rest.split()
    if len(parts) != 2:
        return _error("The syntax of the command is incorrect.")
    src_pattern, dst_pattern = parts
    cwd_node = state.lookup(state.cwd)
    if cwd_node is None:
        return _error("The system cannot find the file specified.")
    matcher = _glob_to_re(src_pattern)
    matches = [
        c for c in cwd_node.sorted_children() if not c.is_dir and matcher.match(c.name)
    ]
    if not matches:
        return _error("The system cannot find the file specified.")
    delta = StateDelta()
    for node in matches:
        new_name = _apply_rename_pattern(node.name, dst_pattern)
        old_path = state.cwd.rstrip("\\") + "\\" + node.name
        new_path = state.cwd.rstrip("\\") + "\\" + new_name
        del cwd_node.children[node.name]
        node.name = new_name
        cwd_node.children[new_name] = node
        delta.moved.append((old_path, new_path))
    return _ok("", delta)


def _apply_rename_pattern(name: str, pattern: str) -> str:
    if pattern.startswith("*."):
        stem = name.rsplit(".", 1)[0]
        return stem + pattern[1:]
    return pattern


# ----- dir rendering ---------------------------------------------------------

def render_dir_listing(state: ShadowState, path: str, style: str) -> str:
    """Byte-exact directory listing in the requested rendering style."""
    node = state.lookup(path)
    if node is None or not node.is_dir:
        if style.startswith("unix"):
            return "No such file or directory"
        return "File Not Found"
    children = node.sorted_children()

    if style == "unix_slash_lines":
        return "\n".join(
            c.name + ("/" if c.is_dir else "") for c in children
        )
    if style == "unix_single_line":
        return " ".join(c.name for c in children)
    if style == "unix_columns":
        return _columns(children)
    if style == "powershell_table":
        return _ps_table_default(state, path, children)
    return _dos_dir_text(state, path, children, bare=(style == "dos_dir_bare"))


def _columns(children: list[FsNode], ncols: int = 5) -> str:
    names = [c.name for c in children]
    if not names:
        return ""
    nrows = -(-len(names) // ncols)
    rows = []
    for r in range(nrows):
        rows.append("  ".join(names[r::nrows]))
    return "\n".join(rows)


def _dir_stamp(when: datetime | None, fallback: datetime) -> str:
    when = when or fallback
    return when.strftime("%m/%d/%Y  %I:%M %p")


def _dos_dir_text(
    state: ShadowState, path: str, children: list[FsNode], bare: bool
) -> str:
    label = (
        f"Volume in drive C is {state.volume_label}"
        if state.volume_label
        else "Volume in drive C has no label."
    )
    header = [label, f"Volume Serial Number is {state.volume_serial}", "", f"Directory of {path}"]
    now = state.clock.now()
    rows: list[str] = []
    dirs = [c for c in children if c.is_dir]
    files = [c for c in children if not c.is_dir]
    if bare:
        rows = [
            f"{_dir_stamp(c.last_write_time, now)} {c.size:>17,} {c.name}"
            for c in files
        ]
        if not rows:
            return "\n".join(header)
        return "\n".join(header + [""] + rows)
    dot_stamp = _dir_stamp(
        dirs[0].last_write_time if dirs else None, now
    )
    rows.append(f"{dot_stamp}    <DIR>          .")
    rows.append(f"{dot_stamp}    <DIR>          ..")
    for c in children:
        stamp = _dir_stamp(c.last_write_time, now)
        if c.is_dir:
            rows.append(f"{stamp}    <DIR>          {c.name}")
        else:
            rows.append(f"{stamp} {c.size:>17,} {c.name}")
    total = sum(c.size for c in files)
    rows.append(f"{len(files):>16} File(s) {total:>14,} bytes")
    rows.append(f"{len(dirs) + 2:>16} Dir(s) {state.free_bytes:>14,} bytes free")
    return "\n".join(header + [""] + rows)


def _dos_dir(state: ShadowState, persona: Persona, rest: str) -> CommandOutcome:
    args = [a for a in rest.split() if not a.startswith("/")]
    target = _strip_quotes(" ".join(args)) if args else state.cwd
    path = state.resolve(target)
    if state.lookup(path) is None:
        return _error("File Not Found")
    style = "dos_dir_bare" if persona.dir_style == "bare" else "dos_dir"
    return _ok(render_dir_listing(state, path, style))


# ----- PowerShell listings and timestomping ----------------------------------

PS_DATE = "%Y-%m-%d %H:%M"


def _mode_string(node: FsNode) -> str:
    return "d-----" if node.is_dir else "-a----"


def _ps_table_default(state: ShadowState, path: str, children: list[FsNode]) -> str:
    lines = [f"    Directory: {path}", ""]
    lines.append("Mode                 LastWriteTime         Length Name")
    lines.append("----                 -------------         ------ ----")
    now = state.clock.now()
    for c in children:
        lwt = (c.last_write_time or now).strftime(PS_DATE)
        length = "" if c.is_dir else str(c.size)
        lines.append(f"{_mode_string(c):<7}{lwt:>21} {length:>14} {c.name}")
    return "\n".join(lines)


PS_FIELDS = {
    "Mode": lambda s, c, now: _mode_string(c),
    "Name": lambda s, c, now: c.name,
    "Length": lambda s, c, now: "" if c.is_dir else str(c.size),
    "CreationTime": lambda s, c, now: (c.creation_time or now).strftime(PS_DATE),
    "LastAccessTime": lambda s, c, now: (c.last_access_time or now).strftime(PS_DATE),
    "LastWriteTime": lambda s, c, now: (c.last_write_time or now).strftime(PS_DATE),
}


def _powershell_listing(state: ShadowState, text: str) -> CommandOutcome:
    node = state.lookup(state.cwd)
    children = node.sorted_children() if node else []
    select = re.search(r"Select-Object\s+([A-Za-z, ]+?)(?:\||$|ft\b)", text)
    if not select:
        return _ok(render_dir_listing(state, state.cwd, "powershell_table"))
    fields = [f.strip() for f in select[1].split(",") if f.strip() in PS_FIELDS]
    if not fields:
        return _ok(render_dir_listing(state, state.cwd, "powershell_table"))
    now = state.clock.now()
    grid = [fields, ["-" * len(f) for f in fields]]
    for c in children:
        grid.append([PS_FIELDS[f](state, c, now) for f in fields])
    widths = [max(len(row[i]) for row in grid) for i in range(len(fields))]
    lines = [
        " ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in grid
    ]
    return _ok("\n".join(lines))


def apply_timestomp(
    state: ShadowState, path: str, field_name: str, new_time: datetime
) -> CommandOutcome:
    """Set one timestamp field; directory creation times are access-denied."""
    node = state.lookup(path)
    if node is None:
        return _error(f"Cannot find path '{path}' because it does not exist.")
    if node.is_dir and field_name == "creation":
        return _error(_unauthorized_text(path, "set_CreationTime"))
    attr = {
        "creation": "creation_time",
        "last_write": "last_write_time",
        "last_access": "last_access_time",
    }[field_name]
    setattr(node, attr, new_time)
    return _ok("", StateDelta(timestamps=[(path, field_name, new_time)]))


def _unauthorized_text(path: str, setter: str) -> str:
    command_echo = f'(Get-Item "{path}").{setter[4:]}=('
    if len(command_echo) > 66:
        command_echo = command_echo[:66]
    return "\n".join(
        [
            f'Exception calling "{setter}" with "1" argument(s): '
            f'"Access to the path \'{path}\' is denied."',
            "At line:1 char:1",
            f"+ {command_echo} ...",
            "+ " + "~" * 68,
            "    + CategoryInfo          : NotSpecified: (:) [], MethodInvocationException",
            "    + FullyQualifiedErrorId : UnauthorizedAccessException",
        ]
    )


def _timestomp_command(
    state: ShadowState, path: str, field_name: str, value: str
) -> CommandOutcome:
    path = path.strip()
    parsed = _parse_ps_datetime(value)
    if parsed is None:
        return _error(f'Cannot convert value "{value}" to type "System.DateTime".')
    return apply_timestomp(state, state.resolve(path), field_name, parsed)


def _parse_ps_datetime(value: str) -> datetime | None:
    for fmt in ("%d %B %Y %H:%M:%S", "%d %B %Y %H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%m/%d/%Y %H:%M:%S"):
        try:
            return datetime.strptime(value.strip(), fmt)
        except ValueError:
            continue
    return None


# ----- registry ----------------------------------------------------------------

REG_HELP = """\
REG: The REG command is used to manage the Windows registry.

REG [cmd]

cmd Description

/?, /H, /HELP Displays help at the command prompt.
/A Performs the specified operation on all subkeys.
/D Deletes the specified value or key.
/E Exports the contents of the specified key to a .REG file.
/F Forces the operation to continue on keys that have subkeys or values.
/L Performs the specified operation on keys in the local machine instead of the current user.
/Q Quiet. Does not display output.
/S Performs the specified operation on all subkeys and values.
/V Verbose. Displays detailed information about the operation.

Examples:

REG ADD HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System /v EnableLUA /t REG_DWORD /d 0 /f

REG DELETE HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System /v EnableLUA /f

REG EXPORT HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System c:\\policies.reg

REG IMPORT c:\\policies.reg"""

HIVE_EXPANSIONS = {
    "HKLM": "HKEY_LOCAL_MACHINE",
    "HKCU": "HKEY_CURRENT_USER",
    "HKCR": "HKEY_CLASSES_ROOT",
    "HKU": "HKEY_USERS",
}

REG_NOT_FOUND = (
    "ERROR: The system was unable to find the specified registry key or value."
)


def _expand_hive(key: str) -> str:
    head, sep, tail = key.partition("\\")
    expanded = HIVE_EXPANSIONS.get(head.upper(), head)
    return expanded + sep + tail


def _reg(state: ShadowState, rest: str) -> CommandOutcome:
    if rest.strip() in ("/?", "/H", "/HELP", ""):
        return _ok(REG_HELP)
    parts = rest.split()
    sub = parts[0].upper()
    args = parts[1:]
    if sub == "QUERY" and args:
        key = _expand_hive(args[0])
        actual = state.registry_key(key)
        if actual is None:
            return _error(REG_NOT_FOUND)
        lines = [key]
        for value in state.registry_values(key):
            lines.append(f"{value.name} {value.value_type} {value.data}")
        return _ok("\n".join(lines))
    if sub == "DELETE" and args:
        key = _expand_hive(args[0])
        value_name = None
        if "/v" in args:
            idx = args.index("/v")
            if idx + 1 < len(args):
                value_name = args[idx + 1]
        if value_name is None:
            return _error(REG_NOT_FOUND)
        if state.registry_delete_value(key, value_name):
            return _ok(
                "The operation completed successfully.",
                StateDelta(registry_deleted=[(key, value_name)]),
            )
        return _error(REG_NOT_FOUND)
    return _ok(REG_HELP)


# ----- networking: ping / tracert / arp -----------------------------------------

IP_RE = re.compile(r"^\d{1,3}(\.\d{1,3}){3}$")
MAC_RE = re.compile(r"^[0-9a-fA-F]{2}([-:][0-9a-fA-F]{2}){5}$")


def _resolve_host(state: ShadowState, host: str) -> str:
    if IP_RE.match(host) or ":" in host:
        return host
    known = state.hosts.get(host.lower())
    if known:
        return known
    h = stable_hash(host.lower())
    return f"{10 + h % 90}.{(h >> 8) % 256}.{(h >> 16) % 256}.{1 + (h >> 24) % 253}"


def _base_latency(state: ShadowState, ip: str) -> int:
    fixed = {"172.217.0.174": 40, "2606:4780:60:d7f5::": 148}
    return fixed.get(ip, 20 + stable_hash(ip) % 120)


def _ping(state: ShadowState, rest: str) -> CommandOutcome:
    parts = rest.split()
    host = None
    size = 32
    i = 0
    while i < len(parts):
        part = parts[i]
        if part in ("-l", "-n", "-w") and i + 1 < len(parts):
            if part == "-l":
                try:
                    size = int(parts[i + 1])
                except ValueError:
                    size = 32
            i += 2
            continue
        if part.startswith("-"):
            i += 1
            continue
        if host is None:
            host = part
        i += 1
    if host is None:
        return _error("IP address must be specified.")
    ip = _resolve_host(state, host)
    state.last_ping_target = ip
    if size > 1472:
        return _ok(_ping_fragmentation_block(ip, size))
    base = _base_latency(state, ip)
    times = [base + state.rng.choice((0, 1)) for _ in range(4)]
    header = (
        f"Pinging {ip} with {size} bytes of data:"
        if host == ip
        else f"Pinging {host} [{ip}] with {size} bytes of data:"
    )
    is_v6 = ":" in ip
    replies = [
        f"Reply from {ip}: time={t}ms" if is_v6 else f"Reply from {ip}: bytes={size} time={t}ms TTL=119"
        for t in times
    ]
    stats = [
        "",
        f"Ping statistics for {ip}:",
        "    Packets: Sent = 4, Received = 4, Lost = 0 (0% loss),",
        "    Approximate round trip times in milli-seconds:",
        f"        Minimum = {min(times)}ms, Maximum = {max(times)}ms, "
        f"Average = {sum(times) // 4}ms",
    ]
    return _ok("\n".join([header] + replies + stats))


def _ping_fragmentation_block(ip: str, size: int = 65500) -> str:
    return "\n".join(
        [
            f"Pinging {ip} with {size} bytes of data:",
            "Packet needs to be fragmented but DF set.",
            "",
            f"Ping statistics for {ip}:",
            "    Packets: Sent = 1, Received = 0, Lost = 1 (100% loss),",
        ]
    )


def _tracert(state: ShadowState, rest: str) -> CommandOutcome:
    host = rest.split()[0] if rest.split() else ""
    if not host:
        return _error("Usage: tracert [-d] [-h maximum_hops] target_name")
    ip = _resolve_host(state, host)
    hops = [
        ("1", "1 ms", "1 ms", "1 ms", "192.168.0.1"),
        ("2", "11 ms", "12 ms", "11 ms", "10.0.0.1"),
        ("3", "14 ms", "13 ms", "14 ms", "172.16.4.1"),
        ("4", "18 ms", "19 ms", "18 ms", ip),
    ]
    lines = [f"Tracing route to {host} [{ip}]", "over a maximum of 30 hops:", ""]
    for n, a, b, c, addr in hops:
        lines.append(f"{n:>3}  {a:>7}  {b:>7}  {c:>7}  {addr}")
    lines += ["", "Trace complete."]
    return _ok("\n".join(lines))


def _arp(state: ShadowState, rest: str) -> CommandOutcome:
    parts = rest.split()
    if parts and parts[0] == "-a":
        iface_ip, iface_idx = state.arp_interface
        lines = [f"Interface: {iface_ip} --- {iface_idx}"]
        lines.append("  " + "Internet Address".ljust(22) + "Physical Address".ljust(22) + "Type")
        for entry in state.arp_table:
            lines.append("  " + entry.ip.ljust(22) + entry.mac.ljust(22) + entry.entry_type)
        return _ok("\n".join(lines))
    if parts and parts[0] == "-s" and len(parts) >= 3:
        ip, mac = parts[1], parts[2]
        if not IP_RE.match(ip) or not MAC_RE.match(mac):
            return _error("The ARP entry addition failed: The parameter is incorrect.")
        mac = mac.replace(":", "-").lower()
        state.arp_upsert(ip, mac, "static")
        return _ok("The ARP entry has been added.", StateDelta(arp_set=[(ip, mac)]))
    return _error(
        "Displays and modifies the IP-to-Physical address translation tables "
        "used by address resolution protocol (ARP)."
    )


# ----- package installs and downloads --------------------------------------------

WGET_KNOWN = {
    "https://download.teamviewer.com/download/linux/signature/TeamViewer2017.asc": {
        "host": "download.teamviewer.com",
        "resolved": "2a02:26f0:ec:4d7::1, 2a02:26f0:ec:4c7::1, 104.16.3.30, ...",
        "connect_ip": "2a02:26f0:ec:4d7::1",
        "length": 1679,
        "mime": "application/pgp-signature",
    }
}


def _wget(state: ShadowState, rest: str) -> CommandOutcome:
    url = rest.split()[0] if rest.split() else ""
    if not url:
        return _error("wget: missing URL")
    known = WGET_KNOWN.get(url)
    host = re.sub(r"^[a-z]+://", "", url).split("/")[0] or "localhost"
    filename = url.rstrip("/").rsplit("/", 1)[-1] or "index.html"
    if known:
        host = known["host"]
        resolved = known["resolved"]
        connect_ip = known["connect_ip"]
        length = known["length"]
        mime = known["mime"]
    else:
        resolved = _resolve_host(state, host)
        connect_ip = resolved
        length = 1000 + stable_hash(url) % 90000
        mime = "application/octet-stream"
    stamp = state.clock.now().strftime("%Y-%m-%d %H:%M:%S")
    kib = f"{length / 1024:.2f}".rstrip("0").rstrip(".")
    rate = f"{(state.rng.randrange(200, 900)) / 10:.1f} MB/s"
    lines = [
        f"--{stamp}--  {url}",
        f"Resolving {host} ({host})... {resolved}",
        f"Connecting to {host} ({host})|{connect_ip}|:443... connected.",
        "HTTP request sent, awaiting response... 200 OK",
        f"Length: {length} ({kib}K) [{mime}]",
        f"Saving to: '{filename}'",
        "",
        f"{filename}  100%[===================>]   {kib}K  --.-KB/s    in 0s",
        "",
        f"{stamp} ({rate}) - '{filename}' saved [{length}/{length}]",
    ]
    path = state.resolve(filename)
    node = state.create_file(path, "")
    node.size = length
    return _ok("\n".join(lines), StateDelta(created=[path]))


APT_TEAMVIEWER_PART1 = """\
Reading package lists... Done
Building dependency tree
Reading state information... Done
The following additional packages will be installed:
  libqt5x11extras5 libqt5x11extras5-dev qml-module-qtgraphicaleffects qml-module-qtquick-controls
  qml-module-qtquick-controls2 qml-module-qtquick-dialogs qml-module-qtquick-layouts
  qml-module-qtquick-window2 qt5-default qt5-qmake qtbase5-dev qtdeclarative5-dev
  qtdeclarative5-qtquick2-plugin qttools5-dev-tools
Suggested packages:
  teamviewer-host
The following NEW packages will be installed:
  libqt5x11extras5 libqt5x11extras5-dev qml-module-qtgraphicaleffects qml-module-qtquick-controls
  qml-module-qtquick-controls2 qml-module-qtquick-dialogs qml-module-qtquick-layouts
  qml-module-qtquick-window2 qt5-default qt5-qmake qtbase5-dev qtdeclarative5-dev
  qtdeclarative5-qtquick2-plugin qttools5-dev-tools teamviewer
0 upgraded, 14 newly installed, 0 to remove and 0 not upgraded.
Need to get 47.3 MB of archives.
After this operation, 214 MB of additional disk space will be used.
Do you want to continue? [Y/n]"""

APT_TEAMVIEWER_PART2 = """\
Get:1 http://security.ubuntu.com/ubuntu focal-security/main amd64 qt5-default amd64 5.12.10+dfsg-3ubuntu3~20.04 [18.6 MB]
Get:2 http://security.ubuntu.com/ubuntu focal-security/main amd64 qtbase5-dev amd64 5.12.10+dfsg-3ubuntu3~20.04 [13.7 MB]
Get:3 http://security.ubuntu.com/ubuntu focal-security/main amd64 qttools5-dev-tools amd64 5.12.10-1ubuntu1~20.04 [1,996 kB]
Get:4 http://security.ubuntu.com/ubuntu focal-security/main amd64 qtdeclarative5-dev amd64 5.12.10-1ubuntu1~20.04 [1,988 kB]
Get:5 http://security.ubuntu.com/ubuntu focal-security/main amd64 qt5-qmake amd64 5.12.10+dfsg-3ubuntu3~20.04 [1,812 kB]
Get:6 http://security.ubuntu.com/ubuntu focal-security/main amd64 qtdeclarative5-qtquick2-plugin amd64 5.12.10-1ubuntu1~20.04 [1,138 kB]
Get:7 http://security.ubuntu.com/ubuntu focal-security/main amd64 libqt5x11extras5 amd64 5.12.10-1ubuntu1~20.04 [286 kB]
Get:8 http://security.ubuntu.com/ubuntu focal-security/main amd64 libqt5x11extras5-dev amd64 5.12.10-1ubuntu1~20.04 [133 kB]
Get:9 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtquick-window2 amd64 5.12.10-1ubuntu1~20.04 [118 kB]
Get:10 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtquick-layouts amd64 5.12.10-1ubuntu1~20.04 [68.3 kB]
Get:11 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtquick-dialogs amd64 5.12.10-1ubuntu1~20.04 [61.1 kB]
Get:12 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtquick-controls2 amd64 5.12.10-1ubuntu1~20.04 [60.1 kB]
Get:13 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtquick-controls amd64 5.12.10-1ubuntu1~20.04 [56.1 kB]
Get:14 http://security.ubuntu.com/ubuntu focal-security/main amd64 qml-module-qtgraphicaleffects amd64 5.12.10-1ubuntu1~20.04 [44.9 kB]
Get:15 http://security.ubuntu.com/ubuntu focal-security/universe amd64 teamviewer amd64 17.1.9025 [1,197 kB]
Fetches 47.3 MB in 4s"""

APT_NMAP = """\
Reading package lists... Done
Building dependency tree
Reading state information... Done
The following NEW packages will be installed:
  nmap
0 upgraded, 1 newly installed, 0 to remove and 0 not upgraded.
Need to get 1,254 kB of archives.
After this operation, 7,938 kB of additional disk space will be used.
Get:1 http://archive.ubuntu.com/ubuntu bionic/universe amd64 nmap amd64 7.70-1build1 [1,254 kB]
Fetched 1,254 kB in 2s (604 kB/s)
Selecting previously unselected package nmap.
(Reading database ... 183455 files and directories currently installed.)
Preparing to unpack ../nmap_7.70-1build1_amd64.deb ...
Unpacking nmap (7.70-1build1) ...
Setting up nmap (7.70-1build1) ...
Processing triggers for man-db (2.8.3-2) ..."""


def _apt_fetch_transcript(package: str) -> str:
    if package == "teamviewer":
        return APT_TEAMVIEWER_PART2
    return f"Setting up {package} ...\nProcessing triggers for man-db (2.8.3-2) ..."


def _apt(state: ShadowState, cmd: str, rest: str) -> CommandOutcome:
    parts = rest.split()
    if not parts:
        return _error(f"{cmd}: missing command")
    action = parts[0]
    if action == "update":
        return _ok("Reading package lists... Done")
    if action != "install" or len(parts) < 2:
        return _ok("Reading package lists... Done")
    package = parts[-1]
    if package == "teamviewer":
        state.pending = ("apt_continue", package)
        return _ok(APT_TEAMVIEWER_PART1)
    if package == "nmap":
        state.installed.add("nmap")
        return _ok(APT_NMAP, StateDelta(installed=["nmap"]))
    state.installed.add(package)
    transcript = "\n".join(
        [
            "Reading package lists... Done",
            "Building dependency tree",
            "Reading state information... Done",
            "The following NEW packages will be installed:",
            f"  {package}",
            "0 upgraded, 1 newly installed, 0 to remove and 0 not upgraded.",
            f"Setting up {package} ...",
        ]
    )
    return _ok(transcript, StateDelta(installed=[package]))


# ----- nmap -----------------------------------------------------------------------

NMAP_BANNER = "Starting Nmap 7.70 ( https://nmap.org ) at {stamp}"

LOCALHOST_PORTS = [
    (22, "ssh", "OpenSSH 7.6p1 Ubuntu 4 (Ubuntu Linux; protocol 2.0)"),
    (80, "http", "Apache httpd 2.4.29 ((Ubuntu))"),
    (631, "ipp", "CUPS 2.2.7"),
    (9090, "zeus-admin", None),
]

NMAP_TOP_PORTS = [
    (22, "ssh"), (80, "http"), (139, "netbios-ssn"), (445, "microsoft-ds"),
    (631, "ipp"), (902, "iss-realsecure"), (912, "apex-mesh"),
    (989, "ftps-data"), (990, "ftps"),
]

NMAP_LOW_PORTS = [
    (3, "compressnet"), (4, "unknown"), (6, "unknown"), (9, "unknown"),
    (10, "unknown"),
]


def _nmap_stamp(state: ShadowState) -> str:
    return state.clock.now().strftime("%Y-%m-%d %H:%M UTC")


def _nmap_report(
    state: ShadowState,
    host: str,
    ip: str,
    rows: list[tuple],
    not_shown: int,
    seconds: str,
    version_scan: bool = False,
    extra_header: list[str] | None = None,
) -> str:
    lines = [
        NMAP_BANNER.format(stamp=_nmap_stamp(state)),
        f"Nmap scan report for {host} ({ip})",
        "Host is up (0.000060s latency).",
    ]
    lines += extra_header or []
    lines.append(f"Not shown: {not_shown} closed ports")
    width = max(len(f"{p}/tcp") for p, *_ in rows) + 1 if rows else 5
    if version_scan:
        svc_width = max(len(r[1]) for r in rows) + 1
        lines.append(f"{'PORT':<{width}}{'STATE':<6}{'SERVICE':<{svc_width}}VERSION")
        for port, service, version in rows:
            row = f"{f'{port}/tcp':<{width}}{'open':<6}"
            row += f"{service + '?':<{svc_width}}".rstrip() if version is None else f"{service:<{svc_width}}{version}"
            lines.append(row.rstrip())
        lines.append(
            "Service detection performed. Please report any incorrect results "
            "at https://nmap.org/submit/ ."
        )
    else:
        lines.append(f"{'PORT':<{width}}{'STATE':<6}SERVICE")
        for port, service, *_ in rows:
            lines.append(f"{f'{port}/tcp':<{width}}{'open':<6}{service}")
    lines.append(f"Nmap done: 1 IP address (1 host up) scanned in {seconds} seconds")
    return "\n".join(lines)


def _nmap(state: ShadowState, rest: str) -> CommandOutcome:
    if "nmap" not in state.installed:
        return _unknown("bash: nmap: command not found")
    parts = rest.split()
    port_range = None
    top_ports = None
    version_scan = False
    target = None
    i = 0
    while i < len(parts):
        part = parts[i]
        if part == "-p" and i + 1 < len(parts):
            port_range = parts[i + 1]
            i += 2
            continue
        if part == "--top-ports" and i + 1 < len(parts):
            try:
                top_ports = int(parts[i + 1])
            except ValueError:
                top_ports = 10
            i += 2
            continue
        if part == "-sV":
            version_scan = True
            i += 1
            continue
        if not part.startswith("-"):
            target = part
        i += 1
    target = target or "localhost"
    is_local = target in ("localhost", "127.0.0.1")
    if is_local:
        host, ip = "localhost", "127.0.0.1"
    else:
        host, ip = target, _resolve_host(state, target)
    replay_local = state.mode == Mode.REPLAY and is_local
    if version_scan:
        rows = [(p, s, v) for p, s, v in LOCALHOST_PORTS]
        return _ok(
            _nmap_report(
                state, host, ip, rows, 994, "3.21", version_scan=True,
                extra_header=[f"Other addresses for {host} (not scanned): {ip}"],
            )
        )
    if top_ports is not None:
        rows = NMAP_TOP_PORTS[:top_ports] if not replay_local else NMAP_TOP_PORTS
        not_shown = 990 if replay_local else 1000 - len(rows)
        return _ok(_nmap_report(state, host, ip, rows, not_shown, "0.03"))
    if port_range is not None:
        if replay_local:
            return _ok(_nmap_report(state, host, ip, NMAP_LOW_PORTS, 9, "0.03"))
        lo, _, hi = port_range.partition("-")
        try:
            lo_i, hi_i = int(lo), int(hi or lo)
        except ValueError:
            lo_i, hi_i = 1, 1000
        rows = [(p, s) for p, s, _ in LOCALHOST_PORTS if lo_i <= p <= hi_i]
        return _ok(_nmap_report(state, host, ip, rows, hi_i - lo_i + 1 - len(rows), "0.03"))
    rows = [(p, s) for p, s, _ in LOCALHOST_PORTS]
    return _ok(_nmap_report(state, host, ip, rows, 997, "0.03"))


# ----- jupyter ---------------------------------------------------------------------

TIMEIT_RE = re.compile(
    r"^%timeit(?:\s+-r(?P<runs>\d+))?\s+time\.sleep\(\s*(?P<secs>[\d.]+)\s*\)\s*$"
)


def _jupyter_cell(state: ShadowState, text: str) -> CommandOutcome:
    stripped = text.strip()
    timeit = TIMEIT_RE.match(stripped)
    if timeit:
        runs = int(timeit["runs"] or 7)
        secs = timeit["secs"].rstrip("0").rstrip(".") or "0"
        plural = "s" if runs != 1 else ""
        return _ok(
            f"{secs} s ± 0 ns per loop (mean ± std. dev. of {runs} run{plural}, "
            "1 loop each)"
        )
    if stripped.startswith("import "):
        for module in stripped[7:].split(","):
            state.imported_modules.add(module.strip().split()[0] if module.strip() else "")
        return _ok("")
    prints = _extract_prints(stripped)
    if prints:
        return _ok("\n".join(prints))
    token = _first_token(stripped)
    if token and (token[0].isalpha() or token[0] == "_"):
        name = re.match(r"[A-Za-z_][A-Za-z0-9_]*", token)
        if name and name[0] not in state.imported_modules:
            return _error(f"NameError: name '{name[0]}' is not defined")
    return _ok("")


# ----- DOS `command /?` help ----------------------------------------------------

CMD_HELP = """\
Displays or sets the command prompt.

CMD [/A | /U] [/Q] [/D] [/E:ON | /E:OFF] [/F:ON | /F:OFF] [/V:ON | /V:OFF]
[[/S] [/C | /K] string]

/C      Carries out the command specified by string and then terminates
/K      Carries out the command specified by string but remains
/S      Modifies the treatment of string after /C or /K (see below)
/Q      Turns echo off
/D      Disable execution of AutoRun commands from registry
(HKLM\\Software\\Microsoft\\Command Processor\\AutoRun)
/A      Forces the output to a window to be ANSI
/U      Forces the output to a window to be Unicode
/T:fg   Sets the foreground/background colors (see COLOR /? for more info)
/E:ON   Enable command extensions (see below)
/E:OFF  Disable command extensions (see below)
/F:ON   Enable file and directory name completion characters (see below)
/F:OFF  Disable file and directory name completion characters (see below)
/V:ON   Enable delayed environment variable expansion using ! as the delimiter.
For example, /V:ON would allow !var! to expand the variable var at execution
time. The var syntax expands variables at input time, which is quite a
different thing when inside of a FOR loop.
/V:OFF  Disable delayed environment expansion.

If /C or /K is specified, then the remainder of the command line is processed
as an immediate command in the new CMD shell. If /S is specified, then any
quote (") characters on the command line are treated as regular quotes, and
the string is passed to the new CMD shell for processing. If /C or /K is not
specified, then the following steps are taken:

1. If there is a redirection symbol in the line, then the string is assumed
to be a command and the redirection is performed as specified.
2. If the string is not empty and does not contain any spaces, then it is
assumed to be a internal or external command and executed.
3. If the string is not empty and contains one or more spaces, then it is
assumed to be a program name and the first word following the program name is
assumed to be the command line parameters, if any.

Command extensions are enabled by default. Enabling command extensions allows
the use of the following extended commands:"""
