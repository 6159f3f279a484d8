"""Smoke test for the dirnet extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python python/smoke_test.py
"""

import dirnet

MIA_TIMEOUT = 15
TAIA = 101


def check_timeout_list():
    tl = dirnet.TimeoutList()
    assert tl.insert(MIA_TIMEOUT, 1, True, 500)
    assert not tl.insert(MIA_TIMEOUT, 1, True, 500)
    fired = tl.advance(1600)
    assert [f[0] for f in fired] == [500, 1000, 1500], fired
    assert tl.now == 1600
    tl.close()
    assert tl.advance(10_000) == []


def check_message_codec():
    m = dirnet.Message(TAIA, 3)
    line = m.encode()
    assert line == "101 3 0 0 0 0 0 0", line
    assert dirnet.Message.decode(line) == m
    assert dirnet.pretty(TAIA) == "TAIA"
    try:
        dirnet.Message.decode("101 3")
    except ValueError:
        pass
    else:
        raise AssertionError("short line accepted")


def check_helpers():
    assert dirnet.choose_next_manager(0, 4) == 1
    assert dirnet.choose_next_manager(3, 4) == 0
    plan = dirnet.broadcast_plan(1, 3)
    assert plan == [("receive", [0]), ("send", [0, 2]), ("receive", [2])], plan


def check_scenario():
    quiet = "n_nodes = 4\nrun_length = 20000\nassert = suspicions == 0\n"
    lines, metrics, failed = dirnet.run_scenario(quiet)
    assert failed == [], failed
    assert metrics["teif_broadcasts"] == 0
    assert metrics["replicas_equal"] == 1
    again, _, _ = dirnet.run_scenario(quiet)
    assert lines == again

    crash = quiet + "fault = 10000 CRASH_COMPONENT 2\n"
    _, metrics, failed = dirnet.run_scenario(crash)
    assert metrics["spans"] == 1, metrics
    assert len(failed) == 1, failed


if __name__ == "__main__":
    check_timeout_list()
    check_message_codec()
    check_helpers()
    check_scenario()
    print("dirnet smoke test: ok")
