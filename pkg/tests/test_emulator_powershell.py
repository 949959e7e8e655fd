from __future__ import annotations

from datetime import datetime

from termpot import emulator
from termpot.emulator import apply_timestomp

DOCS = "C:\\Users\\Username\\Documents"


def run(state, persona, cmd):
    return emulator.execute(state, persona, cmd)


def test_default_dir_table(fresh_state):
    persona, state = fresh_state("powershell")
    out = run(state, persona, "dir").rendered_output
    assert out.splitlines()[0].strip() == f"Directory: {DOCS}"
    assert "Mode" in out and "LastWriteTime" in out and "Length" in out
    assert "file1.txt" in out and "folder1" in out
    assert "12345" in out
    assert "2021-01-01 12:34" in out


def test_select_object_table_columns(fresh_state):
    persona, state = fresh_state("powershell")
    cmd = (
        "Get-ChildItem -force | Select-Object Mode, Name, CreationTime, "
        "LastAccessTime, LastWriteTime | ft -autosize"
    )
    out = run(state, persona, cmd).rendered_output
    header = out.splitlines()[0].split()
    assert header == ["Mode", "Name", "CreationTime", "LastAccessTime", "LastWriteTime"]


def test_directory_creation_time_denied(fresh_state):
    persona, state = fresh_state("powershell")
    cmd = f'(Get-Item "{DOCS}\\folder1").CreationTime=("08 March 2016 18:00:00")'
    out = run(state, persona, cmd)
    assert out.exit_semantics == "error_shown"
    text = out.rendered_output
    assert text.startswith('Exception calling "set_CreationTime" with "1" argument(s)')
    assert f"Access to the path '{DOCS}\\folder1' is denied." in text
    assert "UnauthorizedAccessException" in text
    assert out.state_delta.is_empty()
    # the timestamp really did not move
    node = state.lookup(f"{DOCS}\\folder1")
    assert node.creation_time == datetime(2021, 1, 1, 12, 34)


def test_file_last_write_time_stomped_silently(fresh_state):
    persona, state = fresh_state("powershell")
    cmd = f'(Get-Item "{DOCS}\\file1.txt").LastWriteTime=("12 December 2016 14:00:00")'
    out = run(state, persona, cmd)
    assert out.rendered_output == ""
    assert out.state_delta.timestamps == [
        (f"{DOCS}\\file1.txt", "last_write", datetime(2016, 12, 12, 14, 0, 0))
    ]
    # pipe-less variant still renders the table, with the stomped time
    table = run(
        state,
        persona,
        "Get-ChildItem -force Select-Object Mode, Name, CreationTime, "
        "LastAccessTime, LastWriteTime ft -autosize",
    ).rendered_output
    row = [ln for ln in table.splitlines() if "file1.txt" in ln][0]
    assert "2016-12-12 14:00" in row
    assert row.count("2021-01-01 12:34") == 2  # creation + access untouched


def test_stomp_roundtrip_restores_listing(fresh_state):
    persona, state = fresh_state("powershell")
    before = run(state, persona, "dir").rendered_output
    path = f"{DOCS}\\file1.txt"
    apply_timestomp(state, path, "last_write", datetime(2016, 12, 12, 14, 0))
    apply_timestomp(state, path, "last_write", datetime(2021, 1, 1, 12, 34))
    assert run(state, persona, "dir").rendered_output == before


def test_stomp_missing_path(fresh_state):
    persona, state = fresh_state("powershell")
    out = run(state, persona, '(Get-Item "C:\\nope.txt").LastWriteTime=("12 December 2016 14:00:00")')
    assert "Cannot find path" in out.rendered_output


def test_stomp_bad_date(fresh_state):
    persona, state = fresh_state("powershell")
    out = run(state, persona, f'(Get-Item "{DOCS}\\file1.txt").LastWriteTime=("soon")')
    assert "System.DateTime" in out.rendered_output
