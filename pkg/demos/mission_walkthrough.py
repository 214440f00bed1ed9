"""Walk through one oracle mission in the bundled corridor world.

Run from the repository root:  python3 demos/mission_walkthrough.py
"""

from __future__ import annotations

from pathlib import Path

from agentshop.episode import Episode
from agentshop.orders import parse_order_rules
from agentshop.render import render_ascii
from agentshop.sim.config import load_world

WORLD = Path(__file__).resolve().parents[1] / "worlds" / "paper_fig3.json"

config = load_world(WORLD)
order = parse_order_rules("bring two hamburgers and one emergency medicine")
print("order:", order.as_dict())

episode = Episode(config, order)
outcome = episode.run()
print(f"{outcome.reason} after {outcome.ticks} ticks ({outcome.sim_time:.1f} s simulated)")

# every controller transition and its reason
for ev in episode.transitions:
    print(f"{ev.t:8.2f}  {ev.src.value:>12} -> {ev.dst.value:<12} {ev.reason}")

# the decisions taken at each junction
for d in episode.decisions:
    print(f"{d['t']:8.2f}  {d['junction_id']}: {d['action']} ({d['source']})")

# junctions discovered along the way
for record in episode.map:
    print(record.id, list(record.poi_pairs))

print(f"carried {episode.world.carried}, min wall clearance {episode.min_clearance:.3f} m")
print(render_ascii(config, episode.map, [(x, y) for _, x, y, *_ in episode.trajectory]))
