"""Blind the camera halfway through a tag approach and watch the controller recover.

Run from the repository root:  python3 demos/tag_loss_recovery.py
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from agentshop.episode import Episode
from agentshop.orchestrator import CtrlState
from agentshop.orders import parse_order_rules
from agentshop.sim.config import load_world

WORLD = Path(__file__).resolve().parents[1] / "worlds" / "paper_fig3.json"

config = load_world(WORLD)
episode = Episode(config, parse_order_rules("bring two hamburgers and one emergency medicine"))

# drive until the first approach is under way and still far from its tag
while not (episode.state is CtrlState.TAG_APPROACH and episode.now > 1.0):
    episode.tick()
print(f"t={episode.now:.2f}: approaching, last tag distance {episode.cs.last_tag_distance:.2f} m")

# every detection is now dropped
episode.config = dataclasses.replace(config, sensor=dataclasses.replace(config.sensor, dropout_p=1.0))
seen = len(episode.transitions)
while episode.state is CtrlState.TAG_APPROACH:
    episode.tick()
ev = episode.transitions[seen]
print(f"t={ev.t:.2f}: {ev.src.value} -> {ev.dst.value} ({ev.reason})")

# restore the camera and let the mission finish
episode.config = config
outcome = episode.run()
print(f"{outcome.reason} at t={outcome.sim_time:.2f}, min wall clearance {episode.min_clearance:.3f} m")
