"""Closed-loop episode driver and its on-disk artifacts.

One tick is: drain the action queue, sense, step the controller on the
previous tick's skill statuses, run every skill against its gate, arbitrate,
and integrate the world. Decisions are requested when the controller enters
WaitAction and delivered through the same queue an external caller would use.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import queue
from dataclasses import dataclass, field, replace
from pathlib import Path

from agentshop.costmap import build_costmap
from agentshop.orchestrator import (
    ControllerInputs,
    ControllerState,
    CtrlState,
    GateSet,
    OrchestratorParams,
    Transition,
    arbitrate,
    controller_step,
    gates_for,
    receive_action,
)
from agentshop.orders import OrderList, remaining, save_order
from agentshop.policy.llm import decide_llm
from agentshop.policy.oracle import DecisionContext, StoreCapabilities, decide_oracle, make_context
from agentshop.semantic import (
    HistoryEvent,
    JunctionObservation,
    SemanticMap,
    dump_history,
    map_from_json,
    map_to_json,
    record_junction,
    save_map,
)
from agentshop.sim.config import JunctionSpec, StoreSpec, WorldConfig, world_to_dict
from agentshop.sim.engine import WorldState, attempt_grasp, detect_tags, sense_range, step, world_from_config
from agentshop.skills import (
    EnterStoreState,
    GraspLoopState,
    ManeuverParams,
    PickupState,
    PostGraspState,
    PreEnterState,
    Result,
    TagApproachParams,
    TagApproachState,
    WallAvoiderParams,
    WallAvoiderState,
    enter_store_step,
    grasp_loop_step,
    pickup_step,
    post_grasp_maneuver,
    pre_enter_step,
    tag_approach_step,
    wall_avoider_step,
)
from agentshop.transport import Transport
from agentshop.world_model import PICKUP_POI, Action, TagDetection

log = logging.getLogger(__name__)

ARTIFACTS = (
    "world.json",
    "order.json",
    "semantic_map.json",
    "history.jsonl",
    "decisions.jsonl",
    "transitions.jsonl",
    "trajectory.csv",
)
TRAJECTORY_HEADER = ("t", "x", "y", "yaw", "state", "gates")


@dataclass(frozen=True)
class EpisodeParams:
    dt: float = 0.05
    max_ticks: int = 200_000
    wall_avoider: WallAvoiderParams = field(default_factory=WallAvoiderParams)
    tag_approach: TagApproachParams = field(default_factory=TagApproachParams)
    maneuvers: ManeuverParams = field(default_factory=ManeuverParams)
    orchestrator: OrchestratorParams = field(default_factory=OrchestratorParams)
    llm_retries: int = 2


@dataclass
class Outcome:
    success: bool
    ticks: int
    sim_time: float
    reason: str

    @property
    def exit_code(self) -> int:
        return 0 if self.success else 2


class Episode:
    """Mutable driver around the pure simulator, skills and controller."""

    def __init__(
        self,
        config: WorldConfig,
        order: OrderList,
        policy: str = "oracle",
        transport: Transport | None = None,
        params: EpisodeParams = EpisodeParams(),
        caps: StoreCapabilities | None = None,
    ):
        if policy not in ("oracle", "llm"):
            raise ValueError(f"unknown policy {policy!r}")
        if policy == "llm" and transport is None:
            raise ValueError("policy 'llm' needs a transport")
        self.config = config
        self.order = order
        self.policy = policy
        self.transport = transport
        self.params = params
        self.caps = caps or StoreCapabilities()
        self.world: WorldState = world_from_config(config)
        self.cs = ControllerState()
        self.gates = GateSet()
        self.actions: queue.SimpleQueue[Action] = queue.SimpleQueue()

        self.wa = WallAvoiderState()
        self.ta = TagApproachState()
        self.pre = PreEnterState()
        self.ent = EnterStoreState()
        self.grasp = GraspLoopState()
        self.post = PostGraspState()
        self.pick = PickupState()

        # statuses published last tick, read by the controller this tick
        self.approach_success: int | None = None
        self.approach_label = "idle"
        self.r_p: Result | None = None
        self.r_e: Result | None = None
        self.s_g = False
        self.post_done = False
        self.turning = False

        self.approach_tag: int | None = None
        self.candidate_tag: int | None = None
        self.tag_seen_at: float | None = None
        self.tag_distance: float | None = None
        self.junction: JunctionSpec | None = None
        self.junction_id: str | None = None
        self.store: StoreSpec | None = None
        self.entry_start: tuple[float, float] | None = None

        self.map = SemanticMap()
        self.history: list[HistoryEvent] = []
        self.decisions: list[dict] = []
        self.transitions: list[Transition] = []
        self.trajectory: list[tuple] = []
        self.min_clearance = math.inf
        self.max_gates = 0
        self.pickup_logged = False
        self.outcome: Outcome | None = None
        self._record_pose()

    # --- queries -------------------------------------------------------------

    @property
    def now(self) -> float:
        return round(self.world.ticks * self.params.dt, 9)

    @property
    def remaining(self) -> OrderList:
        return remaining(self.order, self.world.carried)

    @property
    def state(self) -> CtrlState:
        return self.cs.S

    def mission_complete(self) -> bool:
        zone = self.config.pickup_zone
        return (
            self.cs.S is CtrlState.PICKUP
            and zone is not None
            and zone.contains(self.world.robot.x, self.world.robot.y)
            and self.remaining.total == 0
        )

    def submit_action(self, action: Action) -> None:
        """Thread-safe entry point for decision-layer actions."""
        self.actions.put(action)

    # --- tick ----------------------------------------------------------------

    def tick(self) -> None:
        now = self.now
        self._drain_actions(now)
        det = self._sense(now)

        inputs = ControllerInputs(
            now=now,
            tag_seen_at=self.tag_seen_at,
            tag_distance=None if det is None else det.distance,
            approach_success=self.approach_success,
            approach_label=self.approach_label,
            r_p=self.r_p,
            r_e=self.r_e,
            s_g=self.s_g,
            post_done=self.post_done,
            turning=self.turning,
            junction=self._record(),
            remaining_total=self.remaining.total,
        )
        self.cs, self.gates, events = controller_step(self.cs, inputs, self.params.orchestrator)
        self.max_gates = max(self.max_gates, self.gates.count)
        for ev in events:
            self._on_transition(ev, det)

        cmd = arbitrate(self.gates, self._run_skills(det, now))
        self.world = step(self.world, cmd, self.params.dt, self.config)
        self.world = replace(self.world, clock=self.now)
        self._record_pose()
        if not self.pickup_logged and self.mission_complete():
            self.pickup_logged = True
            self.history.append(HistoryEvent(self.now, "pickup", self.junction_id, self.cs.dir_prev, PICKUP_POI, "order delivered"))

    def run(self, max_ticks: int | None = None) -> Outcome:
        limit = self.params.max_ticks if max_ticks is None else max_ticks
        while self.world.ticks < limit:
            if self.mission_complete():
                break
            self.tick()
        if self.mission_complete():
            self.outcome = Outcome(True, self.world.ticks, self.now, "mission complete")
        else:
            self.outcome = Outcome(False, self.world.ticks, self.now, "tick budget exhausted")
        return self.outcome

    # --- internals -------------------------------------------------------------

    def _record(self):
        if self.junction_id is None:
            return None
        return self.map.get(self.junction_id)

    def _record_pose(self) -> None:
        r = self.world.robot
        self.min_clearance = min(self.min_clearance, self.config.walls.clearance(r.x, r.y))
        self.trajectory.append((self.now, r.x, r.y, r.yaw, self.cs.S.value, "+".join(self.gates.names)))

    def _drain_actions(self, now: float) -> None:
        while True:
            try:
                action = self.actions.get_nowait()
            except queue.Empty:
                return
            events: list[Transition] = []
            self.cs, disposition = receive_action(self.cs, action, self._record(), self.remaining.total, now, events)
            if self.decisions:
                self.decisions[-1].setdefault("dispositions", []).append(disposition)
            for ev in events:
                self._on_transition(ev, None)
            self.gates = gates_for(self.cs)

    def _sense(self, now: float) -> TagDetection | None:
        """Newest junction-tag detection relevant to the controller."""
        dets = [d for d in detect_tags(self.world, self.config) if self.config.junction_by_tag(d.tag_id) is not None]
        if self.approach_tag is not None:
            dets = [d for d in dets if d.tag_id == self.approach_tag]
        if not dets:
            return None
        det = min(dets, key=lambda d: (d.distance, d.tag_id))
        self.tag_seen_at = now
        if self.cs.S is CtrlState.WALL_AVOID:
            self.candidate_tag = det.tag_id
        return det

    def _on_transition(self, ev: Transition, det: TagDetection | None) -> None:
        self.transitions.append(ev)
        t = ev.t
        if ev.dst is CtrlState.TAG_APPROACH:
            self.approach_tag = self.candidate_tag
        elif ev.src is CtrlState.TAG_APPROACH:
            self.approach_tag = None if ev.dst is not CtrlState.MAP else self.approach_tag
        if ev.dst is CtrlState.WALL_AVOID:
            self.approach_tag = None
            self.tag_seen_at = None

        if ev.dst is CtrlState.MAP:
            self._map_junction(t)
        elif ev.dst is CtrlState.WAIT_ACTION:
            self.approach_tag = None
            self._decide(t)
        elif ev.src is CtrlState.PRE_ENTER and ev.dst in (CtrlState.WALL_AVOID, CtrlState.PICKUP) and ev.reason.startswith("pre-enter success"):
            d = self.cs.dir_prev
            self.history.append(HistoryEvent(t, "turn", self.junction_id, d, self._record().poi(d), ev.reason.split(", ")[-1]))
        elif ev.dst is CtrlState.ENTER_STORE:
            self.store = self.config.store_at(self.junction.name, self.cs.dir_prev)
            self.entry_start = (self.world.robot.x, self.world.robot.y)
        elif ev.src is CtrlState.ENTER_STORE:
            d = self.cs.dir_prev
            detail = "entered" if ev.dst is CtrlState.GRASP else f"failed: {ev.reason}"
            self.history.append(HistoryEvent(t, "store_entry", self.junction_id, d, self._record().poi(d), detail))

    def _map_junction(self, t: float) -> None:
        spec = self.config.junction_by_tag(self.approach_tag) if self.approach_tag is not None else None
        if spec is None:
            log.warning("mapping without a latched junction tag")
            return
        self.junction = spec
        obs = JunctionObservation(self.world.robot, spec.signs, spec.tag_id)
        self.map = record_junction(self.map, obs)
        self.junction_id = self.map.match(self.world.robot).id
        self.history.append(HistoryEvent(t, "junction_visit", self.junction_id, detail=f"tag {spec.tag_id}"))

    def _decide(self, t: float) -> None:
        if self.junction_id is None:
            return
        ctx = make_context(self.map, self.junction_id, self.remaining, self.history)
        llm_records: list[dict] = []
        if self.policy == "llm":
            action = decide_llm(self.transport, ctx, self.caps, self.params.llm_retries, self.order, llm_records)
            source = "fallback" if llm_records and llm_records[-1]["kind"] == "fallback" else "llm"
        else:
            action = decide_oracle(ctx, self.caps)
            source = "oracle"
        self.decisions.append({
            "t": t,
            "junction_id": self.junction_id,
            "source": source,
            "action": action.to_wire(),
            "context": {
                "map": map_to_json(self.map),
                "remaining": self.remaining.as_dict(),
                "history": [e.to_json() for e in self.history],
            },
            "llm": llm_records,
        })
        self.history.append(HistoryEvent(t, "decision", self.junction_id, action.direction, self._record().poi(action.direction), action.to_wire()))
        self.submit_action(action)

    def _run_skills(self, det: TagDetection | None, now: float) -> dict:
        g = self.gates
        cmds = {}
        pose = self.world.robot

        grid = None
        if g.wall_avoid or g.enter_store:
            grid = build_costmap(sense_range(self.world, self.config))
        self.wa, cmds["wall_avoid"], label = wall_avoider_step(self.wa, grid, g.wall_avoid, self.params.wall_avoider, now)
        self.turning = label != "FORWARD"

        self.ta, cmds["tag_approach"], status = tag_approach_step(self.ta, det, g.tag_approach, self.params.tag_approach, now)
        self.approach_success, self.approach_label = status.success, status.state_label

        cmds["mapping"] = None  # the mapping gate holds the base still

        mp = self.params.maneuvers
        self.r_p = None
        if g.pre_enter and self.junction is not None and self.cs.dir_prev is not None:
            self.pre, cmds["pre_enter"], self.r_p = pre_enter_step(self.pre, self.junction, self.cs.dir_prev, pose, now, mp, True)
        else:
            self.pre, cmds["pre_enter"], _ = pre_enter_step(self.pre, self.junction, None, pose, now, mp, False)

        self.r_e = None
        if g.enter_store and self.store is not None:
            self.ent, cmds["enter_store"], self.r_e = enter_store_step(self.ent, self.store, pose, grid, now, mp, True)
        elif g.enter_store:
            self.r_e = Result.FAILURE
        else:
            self.ent, cmds["enter_store"], _ = enter_store_step(self.ent, self.store, pose, None, now, mp, False)

        grasping = g.grasp and not self.cs.post_grasp
        supplies = self.caps.items(self.store.category) if self.store is not None else frozenset()
        stock = self.world.stock.get(self.store.name, {}) if self.store is not None else {}
        self.grasp, items, self.s_g = grasp_loop_step(self.grasp, supplies, stock, self.remaining.as_dict(), now, mp, grasping)
        for item in items:
            self.world, result = attempt_grasp(self.world, self.store, item, self.config)
            self.history.append(HistoryEvent(now, "grasp", self.junction_id, self.cs.dir_prev, self.store.category, f"{item} {result.value}"))
        cmds["grasp"] = None

        backing = g.grasp and self.cs.post_grasp
        if backing and self.post.exit_to is None and self.entry_start is not None:
            self.post = PostGraspState(exit_to=self.entry_start)
        self.post, post_cmd, self.post_done = post_grasp_maneuver(self.post, self.cs.dir_prev, pose, now, mp, backing)
        if not g.grasp:
            self.post = PostGraspState()
        if backing:
            cmds["grasp"] = post_cmd

        if g.pickup:
            self.pick, cmds["pickup"] = pickup_step(self.pick, self.config.pickup_zone, pose, now, mp)
        return cmds

    # --- artifacts -------------------------------------------------------------

    def artifacts(self) -> dict[str, bytes]:
        out = {
            "world.json": (json.dumps(world_to_dict(self.config), indent=2) + "\n").encode(),
            "order.json": save_order(self.order),
            "semantic_map.json": save_map(self.map),
            "history.jsonl": dump_history(self.history),
            "decisions.jsonl": "".join(json.dumps(d, sort_keys=True) + "\n" for d in self.decisions).encode(),
            "transitions.jsonl": "".join(json.dumps(e.to_json()) + "\n" for e in self.transitions).encode(),
        }
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for t, x, y, yaw, s, gates in self.trajectory:
            writer.writerow((f"{t:.2f}", f"{x:.4f}", f"{y:.4f}", f"{yaw:.4f}", s, gates))
        out["trajectory.csv"] = buf.getvalue().encode()
        return out

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, data in self.artifacts().items():
            (out / name).write_bytes(data)
        return out


# --- reading artifacts back ------------------------------------------------------


def load_trajectory(raw: bytes | str) -> list[dict]:
    text = raw.decode() if isinstance(raw, bytes) else raw
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({
            "t": float(row["t"]),
            "x": float(row["x"]),
            "y": float(row["y"]),
            "yaw": float(row["yaw"]),
            "state": row.get("state", ""),
            "gates": [g for g in row.get("gates", "").split("+") if g],
        })
    return rows


def load_decisions(raw: bytes | str) -> tuple[list[dict], int]:
    """Parsed decision records and the number of unreadable lines (truncation)."""
    text = raw.decode() if isinstance(raw, bytes) else raw
    records, bad = [], 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            bad += 1
    return records, bad


def context_from_record(record: dict) -> DecisionContext:
    ctx = record["context"]
    m = map_from_json(ctx["map"])
    events = [HistoryEvent.from_json(e) for e in ctx["history"]]
    return make_context(m, record["junction_id"], OrderList(**ctx["remaining"]), events)


@dataclass
class ReplayReport:
    total: int
    agree: int
    diffs: list[str]
    warnings: list[str]

    def lines(self) -> list[str]:
        out = [f"decisions: {self.total}", f"agreement: {self.agree}/{self.total}"]
        out += self.diffs
        out += [f"warning: {w}" for w in self.warnings]
        return out


def replay_decisions(records: list[dict], caps: StoreCapabilities | None = None, bad_lines: int = 0) -> ReplayReport:
    agree, diffs, warnings = 0, [], []
    if bad_lines:
        warnings.append(f"{bad_lines} unreadable line(s) in decisions.jsonl, report is partial")
    total = 0
    for i, rec in enumerate(records):
        if "context" not in rec:
            continue
        try:
            ctx = context_from_record(rec)
        except (KeyError, TypeError, ValueError) as exc:
            warnings.append(f"record {i}: cannot rebuild context ({exc})")
            continue
        total += 1
        expected = decide_oracle(ctx, caps).to_wire()
        if expected == rec.get("action"):
            agree += 1
        else:
            diffs.append(f"t={rec.get('t', 0):.2f} {rec['junction_id']}: logged {rec.get('action')} ({rec.get('source')}), oracle {expected}")
    return ReplayReport(total, agree, diffs, warnings)
