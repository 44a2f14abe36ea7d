"""Host runtime: device + ingress + sessions, and the workflows that route
normalized envelopes into perception, memory, action, and cloning.

Workflow routing follows the skill/tool split: session-level workflows
(search-and-summarize, compose-from-memory, sync, record/replay) sequence
the low-level operations; the generic observe/reason/execute loop handles
open-ended multi-step tasks.
"""

from __future__ import annotations

import itertools
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import errors
from ..agentloop import (
    FixtureExtractor,
    RulePlanner,
    make_done_handler,
    make_quiz_handler,
    parse_ordinal,
    resolve_followup,
    run,
    schema_for,
    scroll_extract,
    select_skill,
    summarize,
)
from ..clone import (
    PageSignature,
    Recorder,
    ReplayOutcome,
    SignatureSummarizer,
    distill_skill,
    introspect_entry,
    launch_skill,
    make_bookmark,
    replay,
)
from ..device import IntentMsg, MultiTap, Scroll, SimDevice, Tap
from ..device.deeplink import fill_pattern
from ..events import SpeechSegment, TriggerEvent
from ..grounding import TargetSpec, hybrid_ground
from ..ingress import Ingress, RequestEnvelope
from ..memory import (
    RedactionPolicy,
    WorkingMemory,
    inject_context,
    memory_query,
    memory_sync,
    stage,
)
from ..perception import (
    ACTION_ANSWER,
    ACTION_COMPOSE,
    ACTION_SEARCH,
    AppRegistry,
    DirectAnswer,
    Frame,
    FrameRing,
    StructuredIntent,
    Utterance,
    aec_filter,
    align,
    decompose,
    understand,
    utterance_from_segments,
)
from .modelclient import ModelEndpointConfig, ModelSuite, build_model_suite
from .store import HostStore

CATEGORY_SCHEMAS = {"ecommerce": "ecommerce", "local_service": "local_service"}

DEFAULT_DONE_TEXT = "All solved"


class EventBus:
    """Fan-out of host events (steps, screens, responses) to subscribers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, event: dict) -> None:
        with self._lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            q.put(event)


@dataclass
class TurnLog:
    envelope_id: str
    session_id: str
    text: str
    expanded_query: str = ""
    action_type: str = ""
    target_app: str = ""
    response: str = ""

    def to_dict(self) -> dict:
        return {
            "envelope_id": self.envelope_id,
            "session_id": self.session_id,
            "text": self.text,
            "expanded_query": self.expanded_query,
            "action_type": self.action_type,
            "target_app": self.target_app,
            "response": self.response,
        }


class Host:
    """Owns the device, the ingress queue, stores, and sessions."""

    def __init__(self, fixture: dict, data_dir: Path | str,
                 config: Optional[ModelEndpointConfig] = None,
                 client=None):
        self.lock = threading.RLock()
        self.fixture = fixture
        self.device = SimDevice.from_fixture(fixture)
        self.ingress = Ingress(self.device)
        self.registry = AppRegistry.from_dicts(fixture.get("registry", ()))
        self.store = HostStore(data_dir)
        self.config = config if config is not None else ModelEndpointConfig.from_env()
        self.suite: ModelSuite = build_model_suite(self.device, self.config, client)
        self.events = EventBus()
        self.recorder = Recorder(self.device)
        self.policy = RedactionPolicy()
        planner_cfg = fixture.get("planner", {})
        self.answers = planner_cfg.get("answers", {})
        self.done_text = planner_cfg.get("done_text", DEFAULT_DONE_TEXT)
        self.sessions: dict[str, AgentSession] = {}
        self.artifacts_written: list[str] = []
        self._trace_count = itertools.count(1)
        self._recording_session: Optional[str] = None
        for rule in fixture.get("schedules", ()):
            payload = rule.get("payload", {})
            self.ingress.register_schedule(
                int(rule["fire_at"]),
                TriggerEvent(source="schedule", timestamp=int(rule["fire_at"]),
                             payload=payload.get("text", ""),
                             session_id=payload.get("session", "default")),
                repeat_every=rule.get("repeat_every"),
            )

    def session(self, session_id: str) -> "AgentSession":
        if session_id not in self.sessions:
            self.sessions[session_id] = AgentSession(self, session_id)
        return self.sessions[session_id]

    def drain(self) -> list[TurnLog]:
        """Process every queued envelope through its session."""
        logs = []
        while (envelope := self.ingress.poll_next()) is not None:
            logs.append(self.session(envelope.session_id).handle_envelope(envelope))
        return logs

    def submit(self, trigger: TriggerEvent) -> list[TurnLog]:
        self.ingress.submit(trigger)
        return self.drain()

    def advance_clock(self, dt: int) -> list[TurnLog]:
        self.ingress.advance_clock(dt)
        return self.drain()

    def planner(self) -> RulePlanner:
        handlers = [make_done_handler(self.done_text)]
        if self.answers:
            handlers.append(make_quiz_handler(self.answers, self.suite.grounder))

        def launch_fn(intent: StructuredIntent) -> Optional[IntentMsg]:
            app = self.device.app(intent.target_app)
            if app is None:
                return None
            return IntentMsg.make("view",
                                  component=(app.app_id, app.home_activity))

        return RulePlanner(handlers=handlers, launch_fn=launch_fn)

    # -- recording ---------------------------------------------------------------

    def start_recording(self, session_id: str) -> None:
        self.recorder.start(session_id)
        self._recording_session = session_id

    def stop_recording(self):
        trajectory = self.recorder.stop()
        self._recording_session = None
        app_id = trajectory.final[0]
        if not app_id:
            return trajectory, None, None
        descriptor = introspect_entry(app_id, self.device)
        signature = PageSignature.of_page(self.device.current_page())
        trace_id = f"trace-{next(self._trace_count):04d}"
        self.store.save_trace(trajectory, trace_id)
        card = distill_skill(trajectory, descriptor, SignatureSummarizer(),
                             signature, trajectory_ref=trace_id,
                             created_at=self.device.clock)
        self.store.save_skill(card)
        bookmark = make_bookmark(card.name, descriptor, signature,
                                 summary=card.description,
                                 created_at=self.device.clock)
        self.store.save_bookmark(bookmark)
        return trajectory, card, bookmark

    # -- direct host operations (CLI / server surface) ------------------------------

    def replay_bookmark(self, name: str) -> ReplayOutcome:
        bookmark = self.store.load_bookmark(name)
        if bookmark is None:
            raise errors.ParseError(f"no bookmark named {name!r}")
        outcome = replay(bookmark, self.device)
        self.events.publish({"type": "screen",
                             "activity": outcome.page.activity})
        return outcome

    def run_memory_sync(self):
        return memory_sync(self.device, self.store.gallery,
                           self.suite.summarizer, self.policy)


class AgentSession:
    """One user's interaction stream against the shared device."""

    def __init__(self, host: Host, session_id: str):
        self.host = host
        self.session_id = session_id
        self.wm = WorkingMemory(session_id=session_id)
        self.ring = FrameRing()
        self.turns: list[TurnLog] = []
        self.last_artifact = None
        self.last_replay: Optional[ReplayOutcome] = None
        self._frame_count = itertools.count(1)
        self._artifact_count = itertools.count(1)
        self._task_count = itertools.count(1)

    # -- helpers -------------------------------------------------------------------

    def push_frame(self, source: str, scene, timestamp: int) -> None:
        self.ring.push(Frame(frame_id=next(self._frame_count),
                             timestamp=timestamp, source=source, scene=scene))

    def _step(self, result: str) -> None:
        self.wm.note_action_result(result)
        self.host.events.publish({"type": "step", "session": self.session_id,
                                  "step_index": self.wm.step_index,
                                  "result": result})

    def _respond(self, log: TurnLog, text: str) -> TurnLog:
        log.response = text
        self.wm.note_turn("agent", text)
        self.turns.append(log)
        self.host.events.publish({"type": "response",
                                  "session": self.session_id, "text": text})
        return log

    def context_block(self) -> str:
        return inject_context(self.wm, self.host.store.gallery.load_profile(),
                              self.host.store.gallery.load_file())

    # -- envelope routing -------------------------------------------------------------

    def handle_envelope(self, envelope: RequestEnvelope) -> TurnLog:
        log = TurnLog(envelope_id=envelope.envelope_id,
                      session_id=self.session_id, text="")
        utterance: Optional[Utterance] = None
        if isinstance(envelope.normalized_payload, tuple):
            mic = self.host.device.mic_capture(envelope.normalized_payload)
            kept = aec_filter(mic, list(self.host.device.playback))
            if not kept:
                log.text = ""
                return self._respond(log, "heard only the device's own audio")
            utterance = utterance_from_segments(kept)
            text = utterance.text
        else:
            text = envelope.normalized_payload
            utterance = Utterance(text=text, t0=envelope.received_at,
                                  t1=envelope.received_at)
        log.text = text
        self.wm.note_turn("user", text)

        command = " ".join(text.lower().split())
        if command in ("record start", "start recording"):
            self.host.start_recording(self.session_id)
            return self._respond(log, "recording started")
        if command in ("record stop", "stop recording"):
            trajectory, card, bookmark = self.host.stop_recording()
            if card is None:
                return self._respond(log, "recording stopped; nothing captured")
            return self._respond(
                log, f"cloned skill '{card.name}' "
                     f"({len(trajectory.steps)} steps, bookmark saved)")
        if command == "memory sync":
            result = self.host.run_memory_sync()
            return self._respond(
                log, f"memory sync: {len(result.appended)} new entries")

        if self.last_artifact is not None and parse_ordinal(text) is not None:
            return self._follow_up(log, text)

        expanded = text
        if len(self.ring):
            try:
                aligned = align(utterance, self.ring)
                understood = understand(aligned, self.host.suite.resolver)
            except errors.UnresolvedDeixis:
                return self._respond(
                    log, "I can't tell what 'this' refers to here")
            if isinstance(understood, DirectAnswer):
                log.expanded_query = text
                return self._respond(log, understood.answer)
            expanded = understood.text
        log.expanded_query = expanded

        intent = decompose(expanded, self.host.registry)
        log.action_type = intent.action_type
        log.target_app = intent.target_app
        self.wm.set_goal(expanded)

        if intent.action_type == ACTION_ANSWER:
            return self._respond(log, f"no device action needed: {expanded}")
        if intent.action_type == ACTION_SEARCH:
            return self._search_flow(log, intent)
        if intent.action_type == ACTION_COMPOSE:
            return self._compose_flow(log, intent)
        return self._open_flow(log, intent)

    # -- workflows -----------------------------------------------------------------------

    def _entry_launch(self, intent: StructuredIntent, action_type: str) -> str:
        """Reach the intent's app-native entry point: cloned skill first,
        pre-instantiated deeplink route second, app home last."""
        card = select_skill(intent, self.host.store.list_skills())
        if card is not None:
            outcome = launch_skill(self.host.device, card, intent.slot_map())
            self.last_replay = outcome
            self._step(f"skill '{card.name}' entry via {outcome.tier_used}")
            return outcome.page.activity
        entry = self.host.registry.get(intent.target_app)
        route = entry.route_map().get(action_type) if entry else None
        if route:
            uri = fill_pattern(route, intent.slot_map())
            page = self.host.device.launch_intent(IntentMsg.make("view",
                                                                 data_uri=uri))
            self._step(f"deeplink entry to {page.activity}")
            return page.activity
        app = self.host.device.app(intent.target_app)
        if app is None:
            raise errors.NoMatch(intent.target_app)
        page = self.host.device.launch_intent(
            IntentMsg.make("view", component=(app.app_id, app.home_activity)))
        self._step(f"opened {page.activity}")
        return page.activity

    def _search_flow(self, log: TurnLog, intent: StructuredIntent) -> TurnLog:
        self._entry_launch(intent, ACTION_SEARCH)
        entry = self.host.registry.get(intent.target_app)
        domain = CATEGORY_SCHEMAS.get(entry.category if entry else "", "ecommerce")
        schema = schema_for(domain)
        artifact_id = f"art-{self.session_id}-{next(self._artifact_count):03d}"
        artifact = scroll_extract(
            self.host.device, schema,
            self.host.suite.extractor_for(self.host.device, schema),
            passes=3, artifact_id=artifact_id)
        path = self.host.store.save_artifact(self.session_id, artifact)
        self.host.artifacts_written.append(str(path))
        self.last_artifact = artifact
        self.wm.note_artifact(artifact.artifact_id)
        self._step(f"extracted {len(artifact.records)} records")
        return self._respond(log, summarize(artifact))

    def _compose_flow(self, log: TurnLog, intent: StructuredIntent) -> TurnLog:
        theme = intent.slot_map().get("theme", "")
        mfile = self.host.store.gallery.load_file()
        hits = memory_query(theme, mfile)
        if not hits:
            return self._respond(log, f"no photos match '{theme}'")
        task_id = f"{self.session_id}-task{next(self._task_count):02d}"
        folder, staged = stage([name for name, _ in hits], self.host.device,
                               self.host.store.staging_dir, task_id)
        self._step(f"staged {len(staged)} assets into {folder.name}")

        entry = self.host.registry.get(intent.target_app)
        route = (entry.route_map().get(ACTION_COMPOSE) if entry else None)
        if route is None:
            return self._respond(log, f"no compose route for {intent.target_app}")
        uri = fill_pattern(route, intent.slot_map())
        self.host.device.launch_intent(IntentMsg.make(
            "view", data_uri=uri, extras={"files": ",".join(staged)}))
        self._step("opened one-tap compose surface")

        obs = self.host.device.snapshot()
        points = []
        for name in staged:
            grounded = hybrid_ground(obs, TargetSpec(name),
                                     self.host.suite.grounder)
            points.append(grounded.point)
        self.host.device.apply_gesture(MultiTap(tuple(points)))
        self._step(f"batch-selected {len(points)} photos")

        obs = self.host.device.snapshot()
        create = hybrid_ground(obs, TargetSpec("Create"),
                               self.host.suite.grounder)
        page = self.host.device.apply_gesture(Tap(create.point))
        self._step(f"confirmed on {page.activity}")
        return self._respond(
            log, f"created '{theme}' album from {len(staged)} photos")

    def _open_flow(self, log: TurnLog, intent: StructuredIntent) -> TurnLog:
        card = select_skill(intent, self.host.store.list_skills())
        if card is not None:
            outcome = launch_skill(self.host.device, card, {})
            self.last_replay = outcome
            self._step(f"skill '{card.name}' entry via {outcome.tier_used}")
            return self._respond(
                log, f"opened {outcome.page.activity} via {outcome.tier_used}")
        result = run(self.host.device, intent, self.host.planner(), wm=self.wm,
                     skills=self.host.store.list_skills(),
                     context_fn=lambda wm: self.context_block())
        for step in result.steps:
            self.host.events.publish({
                "type": "step", "session": self.session_id,
                "step_index": step.step_index, "result": step.result,
                "decision": step.decision.kind,
            })
        if result.outcome == "responded":
            return self._respond(log, result.response)
        return self._respond(
            log, f"task {result.outcome} after {self.wm.step_index} steps")

    def _follow_up(self, log: TurnLog, text: str) -> TurnLog:
        device = self.host.device
        if device.foreground is None:
            return self._respond(log, "nothing on screen to act on")
        device.apply_gesture(Scroll("up", 10_000))  # clamp back to the top
        obs = device.snapshot()
        try:
            decision = resolve_followup(text, self.last_artifact, obs,
                                        self.host.suite.grounder)
        except errors.OrdinalOutOfRange as exc:
            return self._respond(log, f"that item does not exist ({exc})")
        page = device.apply_gesture(decision.action)
        self._step(decision.rationale)
        title = page.param_map().get("title", page.activity)
        return self._respond(log, f"opened {title}")
