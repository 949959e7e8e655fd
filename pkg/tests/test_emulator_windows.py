from __future__ import annotations

from datetime import datetime

from termpot import emulator

POLICY_KEY_INPUT = "HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System"
POLICY_KEY_FULL = (
    "HKEY_LOCAL_MACHINE\\Software\\Microsoft\\Windows\\CurrentVersion\\Policies\\System"
)


def run(state, persona, cmd):
    return emulator.execute(state, persona, cmd)


def test_reg_query_delete_query(fresh_state):
    persona, state = fresh_state("dos_admin")
    out = run(state, persona, f"REG QUERY {POLICY_KEY_INPUT}")
    assert out.rendered_output == POLICY_KEY_FULL + "\nEnableLUA REG_DWORD 0x0"
    out = run(state, persona, f"REG DELETE {POLICY_KEY_INPUT} /v EnableLUA /f")
    assert out.rendered_output == "The operation completed successfully."
    assert out.state_delta.registry_deleted == [(POLICY_KEY_FULL, "EnableLUA")]
    out = run(state, persona, f"REG QUERY {POLICY_KEY_INPUT}")
    assert out.rendered_output == POLICY_KEY_FULL


def test_reg_query_unknown_key(fresh_state):
    persona, state = fresh_state("dos_admin")
    out = run(state, persona, "REG QUERY HKLM\\Software\\NoSuchVendor")
    assert out.rendered_output.startswith("ERROR:")
    assert out.exit_semantics == "error_shown"


def test_reg_help_banner(fresh_state):
    persona, state = fresh_state("dos_admin")
    out = run(state, persona, "reg /?")
    assert out.rendered_output.startswith(
        "REG: The REG command is used to manage the Windows registry."
    )


def test_arp_add_replaces_in_place(fresh_state):
    persona, state = fresh_state("dos_arp")
    table = run(state, persona, "arp -a").rendered_output
    assert "224.0.0.2             01-00-5e-00-00-02     static" in table
    out = run(state, persona, "arp -s 224.0.0.2 00-11-22-33-44-55")
    assert out.rendered_output == "The ARP entry has been added."
    table = run(state, persona, "arp -a").rendered_output
    assert "224.0.0.2             00-11-22-33-44-55     static" in table
    assert "01-00-5e-00-00-02" not in table
    # row position preserved
    rows = table.splitlines()
    assert rows[4].strip().startswith("224.0.0.2")


def test_arp_s_then_a_always_shows_entry(fresh_state):
    persona, state = fresh_state("dos_user")
    run(state, persona, "arp -s 10.9.8.7 aa-bb-cc-dd-ee-ff")
    table = run(state, persona, "arp -a").rendered_output
    assert "10.9.8.7" in table and "aa-bb-cc-dd-ee-ff" in table


def test_arp_rejects_bad_mac(fresh_state):
    persona, state = fresh_state("dos_user")
    out = run(state, persona, "arp -s 10.0.0.1 nonsense")
    assert out.exit_semantics == "error_shown"


def test_dir_bare_style_empty_root(fresh_state):
    persona, state = fresh_state("dos_user", clock=datetime(2022, 12, 19, 16, 31))
    out = run(state, persona, "dir")
    assert out.rendered_output == (
        "Volume in drive C is OS\n"
        "Volume Serial Number is XXXX-XXXX\n"
        "\n"
        "Directory of C:\\"
    )


def test_type_nul_creates_zero_byte_file(fresh_state):
    persona, state = fresh_state("dos_user", clock=datetime(2022, 12, 19, 16, 31))
    out = run(state, persona, 'type nul >> "file.txt"')
    assert out.rendered_output == ""
    listing = run(state, persona, "dir").rendered_output
    assert "12/19/2022  04:31 PM                 0 file.txt" in listing


def test_move_into_program_files(fresh_state):
    persona, state = fresh_state("dos_user", clock=datetime(2022, 12, 19, 16, 31))
    run(state, persona, 'type nul >> "file.txt"')
    out = run(state, persona, "move C:\\file.txt C:\\Program Files")
    assert out.rendered_output == "1 file(s) moved."
    assert state.lookup("C:\\file.txt") is None
    assert state.lookup("C:\\Program Files\\file.txt") is not None
    # source dir listing no longer shows it
    assert "file.txt" not in run(state, persona, "dir").rendered_output
    assert "file.txt" in run(state, persona, "dir C:\\Program Files").rendered_output


def test_del_wildcard_and_ren_errors(fresh_state):
    persona, state = fresh_state("dos_user")
    run(state, persona, "chdir C:\\Program Files")
    run(state, persona, "echo alpha >a.bat")
    run(state, persona, "echo beta >b.txt")
    out = run(state, persona, "del *.*")
    assert out.rendered_output == ""
    assert sorted(out.state_delta.deleted) == [
        "C:\\Program Files\\a.bat",
        "C:\\Program Files\\b.txt",
    ]
    out = run(state, persona, "REN *.bat *.mp4")
    assert out.rendered_output == "The system cannot find the file specified."
    out = run(state, persona, "REN *.a *.b REN *.c *.d")
    assert out.rendered_output == "The syntax of the command is incorrect."


def test_ren_wildcard_changes_extension(fresh_state):
    persona, state = fresh_state("dos_user")
    run(state, persona, "chdir C:\\Program Files")
    run(state, persona, "echo x >clip.bat")
    out = run(state, persona, "REN *.bat *.mp4")
    assert out.rendered_output == ""
    assert out.state_delta.moved == [
        ("C:\\Program Files\\clip.bat", "C:\\Program Files\\clip.mp4")
    ]
    assert state.lookup("C:\\Program Files\\clip.mp4") is not None


def test_dos_time_query_and_set(fresh_state):
    persona, state = fresh_state(
        "dos_user", clock=datetime(2022, 12, 19, 22, 16, 49, 140000)
    )
    out = run(state, persona, "time")
    assert out.rendered_output == "Current time: 22:16:49.14\nEnter the new time:"
    out = run(state, persona, "23:11:11.15")
    assert out.rendered_output == "Current time: 23:11:11.15"
    assert state.clock.now().hour == 23


def test_dos_time_rejects_garbage_then_accepts_empty(fresh_state):
    persona, state = fresh_state("dos_user")
    run(state, persona, "time")
    out = run(state, persona, "not-a-time")
    assert "cannot accept the time" in out.rendered_output
    out = run(state, persona, "")
    assert out.rendered_output == ""
    assert state.pending is None


def test_ping_fragmentation_failure(fresh_state):
    persona, state = fresh_state("dos_ddos")
    out = run(state, persona, "ping 172.217.0.174 -t -l 65500")
    assert out.rendered_output == (
        "Pinging 172.217.0.174 with 65500 bytes of data:\n"
        "Packet needs to be fragmented but DF set.\n"
        "\n"
        "Ping statistics for 172.217.0.174:\n"
        "    Packets: Sent = 1, Received = 0, Lost = 1 (100% loss),"
    )


def test_ping_stats_are_internally_consistent(fresh_state):
    persona, state = fresh_state("dos_ddos")
    out = run(state, persona, "ping www.google.com -t").rendered_output
    import re

    times = [int(m) for m in re.findall(r"time=(\d+)ms", out)]
    assert len(times) == 4
    stats = re.search(
        r"Minimum = (\d+)ms, Maximum = (\d+)ms, Average = (\d+)ms", out
    )
    assert int(stats[1]) == min(times)
    assert int(stats[2]) == max(times)
    assert int(stats[3]) == sum(times) // 4


def test_ping_loop_block_uses_last_target(fresh_state):
    persona, state = fresh_state("dos_ddos")
    run(state, persona, "ping 172.217.0.174 -t -l 65500")
    loop = "type :loop\nping <IP Address> -l 65500 -w 1 -n 1\ngoto :loop"
    out = run(state, persona, loop).rendered_output
    assert out.count("Pinging 172.217.0.174 with 65500 bytes of data:") == 3
    # third repetition cut off before its statistics block
    assert out.endswith("Packet needs to be fragmented but DF set.")


def test_unknown_command_wording_windows(fresh_state):
    persona, state = fresh_state("dos_user")
    out = run(state, persona, "frobnicate")
    assert out.rendered_output == (
        "'frobnicate' is not recognized as an internal or external command,\n"
        "operable program or batch file."
    )


def test_free_bytes_decrease_with_created_files(fresh_state):
    persona, state = fresh_state("dos_ddos")
    before = state.free_bytes
    run(state, persona, "echo 12345678 >pad.txt")
    assert state.free_bytes == before - 9  # payload plus newline
    listing = run(state, persona, "dir").rendered_output
    assert f"{state.free_bytes:,} bytes free" in listing
