from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
WORLD = ROOT / "worlds" / "paper_fig3.json"
GOLDEN = Path(__file__).resolve().parent / "golden"
ORDER_TEXT = "bring two hamburgers and one emergency medicine"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def fig3():
    from agentshop.sim.config import load_world

    return load_world(WORLD)


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory):
    """The canonical oracle episode, run once and written to disk."""
    import time

    from agentshop.episode import Episode
    from agentshop.orders import parse_order_rules
    from agentshop.sim.config import load_world

    config = load_world(WORLD)
    episode = Episode(config, parse_order_rules(ORDER_TEXT))
    t0 = time.perf_counter()
    outcome = episode.run()
    wall = time.perf_counter() - t0
    out = episode.write(tmp_path_factory.mktemp("fig3_episode"))
    return {"episode": episode, "outcome": outcome, "wall": wall, "dir": out}


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
