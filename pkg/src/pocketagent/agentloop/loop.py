"""The observe/reason/execute loop.

A planner turns (intent, observation, context, skills) into one Decision
per step; the loop executes it against the device and keeps the working
memory's step accounting exact. The rule planner is a deterministic
priority list and needs no network: matching skill first, then scripted
page handlers, then a direct response.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence, Union

from .. import errors
from ..clone import SkillCard, launch_skill
from ..device import IntentMsg, Observation, SimDevice
from ..device.types import Gesture, Tap
from ..grounding import NullVisualGrounder, TargetSpec, VisualGrounder, hybrid_ground
from ..memory import WorkingMemory, inject_context
from ..perception import ACTION_ANSWER, StructuredIntent
from ..textutil import tokenize

KIND_ACT = "act"
KIND_RESPOND = "respond"
KIND_INVOKE_SKILL = "invoke_skill"
KIND_DONE = "done"

DEFAULT_MAX_STEPS = 20

Action = Union[Gesture, IntentMsg]


@dataclass(frozen=True)
class Decision:
    kind: str
    action: Optional[Action] = None
    response: Optional[str] = None
    skill: Optional[tuple[str, tuple[tuple[str, str], ...]]] = None
    rationale: str = ""

    def __post_init__(self):
        populated = {
            KIND_ACT: self.action is not None,
            KIND_RESPOND: self.response is not None,
            KIND_INVOKE_SKILL: self.skill is not None,
            KIND_DONE: True,
        }
        if self.kind not in populated:
            raise ValueError(f"unknown decision kind {self.kind!r}")
        if not populated[self.kind]:
            raise ValueError(f"decision {self.kind} missing its payload")
        others = {
            KIND_ACT: (self.response, self.skill),
            KIND_RESPOND: (self.action, self.skill),
            KIND_INVOKE_SKILL: (self.action, self.response),
            KIND_DONE: (self.action, self.response, self.skill),
        }
        if any(v is not None for v in others[self.kind]):
            raise ValueError(f"decision {self.kind} carries extra payloads")

    @classmethod
    def act(cls, action: Action, rationale: str = "") -> "Decision":
        return cls(kind=KIND_ACT, action=action, rationale=rationale)

    @classmethod
    def respond(cls, text: str, rationale: str = "") -> "Decision":
        return cls(kind=KIND_RESPOND, response=text, rationale=rationale)

    @classmethod
    def invoke(cls, skill_name: str, params: Optional[dict] = None,
               rationale: str = "") -> "Decision":
        bound = tuple(sorted((params or {}).items()))
        return cls(kind=KIND_INVOKE_SKILL, skill=(skill_name, bound),
                   rationale=rationale)

    @classmethod
    def done(cls, rationale: str = "") -> "Decision":
        return cls(kind=KIND_DONE, rationale=rationale)


@dataclass(frozen=True)
class AgentStep:
    step_index: int
    observation_digest: str
    decision: Decision
    result: str


@dataclass
class LoopResult:
    outcome: str  # completed | responded | exhausted
    steps: list[AgentStep]
    wm: WorkingMemory
    response: str = ""


class Planner(Protocol):
    def decide(self, intent: StructuredIntent, observation: Optional[Observation],
               context: str, skills: Sequence[SkillCard]) -> Decision: ...


def observation_digest(observation: Optional[Observation]) -> str:
    if observation is None:
        return "no-foreground"
    texts = observation.visible_texts()[:5]
    blob = observation.activity + "|" + "|".join(texts)
    return (observation.activity + ":" +
            hashlib.sha256(blob.encode("utf-8")).hexdigest()[:8])


def select_skill(intent: StructuredIntent,
                 registry: Sequence[SkillCard]) -> Optional[SkillCard]:
    """Best card for the intent: same target app, every trigger token present
    in the expanded query; most tokens matched wins, newest breaks ties."""
    query_tokens = set(tokenize(intent.expanded_query))
    candidates = [
        card for card in registry
        if card.target_app == intent.target_app
        and card.trigger_tokens
        and set(card.trigger_tokens) <= query_tokens
    ]
    if not candidates:
        return None
    return max(candidates,
               key=lambda c: (len(c.trigger_tokens), c.created_at, c.name))


Handler = Callable[[StructuredIntent, Optional[Observation], str],
                   Optional[Decision]]


def make_quiz_handler(answers: dict, model: Optional[VisualGrounder] = None,
                      question_resource: str = "question") -> Handler:
    """Scripted answer table: finds the page's question text, grounds the
    configured answer, taps it."""
    grounder = model or NullVisualGrounder()

    def handler(intent, observation, context):
        if observation is None:
            return None
        question = None
        for node in observation.ui_root.iter_nodes():
            if node.resource_id == question_resource and node.text:
                question = node.text
                break
        if question is None or question not in answers:
            return None
        target = answers[question]
        result = hybrid_ground(observation, TargetSpec(target), grounder)
        return Decision.act(Tap(result.point),
                            rationale=f"answer {target!r} for {question!r}")

    return handler


def make_done_handler(marker_text: str) -> Handler:
    def handler(intent, observation, context):
        if observation is not None and marker_text in observation.visible_texts():
            return Decision.done(rationale=f"saw {marker_text!r}")
        return None

    return handler


class RulePlanner:
    """Deterministic offline planner.

    Priority: answer intents respond immediately; a matching skill is
    invoked unless its entry page is already in the foreground; scripted
    page handlers fire next; anything else gets a direct response.
    """

    def __init__(self, handlers: Iterable[Handler] = (),
                 launch_fn: Optional[Callable[[StructuredIntent],
                                              Optional[IntentMsg]]] = None):
        self.handlers = list(handlers)
        self.launch_fn = launch_fn

    def decide(self, intent, observation, context, skills):
        if intent.action_type == ACTION_ANSWER:
            return Decision.respond(
                intent.slot_map().get("answer", intent.expanded_query),
                rationale="no device action needed")
        card = select_skill(intent, skills)
        if card is not None:
            entry_activity = card.entry.component[1]
            if observation is None or observation.activity != entry_activity:
                return Decision.invoke(card.name, intent.slot_map(),
                                       rationale="matched skill trigger")
        if observation is None and self.launch_fn is not None:
            intent_msg = self.launch_fn(intent)
            if intent_msg is not None:
                return Decision.act(intent_msg, rationale="open entry point")
        for handler in self.handlers:
            decision = handler(intent, observation, context)
            if decision is not None:
                return decision
        if observation is not None:
            return Decision.respond(f"opened {observation.activity}",
                                    rationale="rule planner fallback")
        return Decision.respond("no scripted rule applies",
                                rationale="rule planner fallback")


def run(device: SimDevice, intent: StructuredIntent, planner: Planner,
        wm: Optional[WorkingMemory] = None,
        skills: Sequence[SkillCard] = (),
        max_steps: int = DEFAULT_MAX_STEPS,
        context_fn: Optional[Callable[[WorkingMemory], str]] = None) -> LoopResult:
    """Drive the loop until the planner responds, declares done, or the step
    budget runs out. Every step is recorded; wm.step_index counts exactly
    the executed act/invoke_skill steps."""
    if wm is None:
        wm = WorkingMemory(session_id="loop")
    if not wm.goal:
        wm.set_goal(intent.expanded_query)
    steps: list[AgentStep] = []
    outcome = "exhausted"
    response = ""
    skills_by_name = {card.name: card for card in skills}

    for step_index in range(max_steps):
        observation = device.snapshot() if device.foreground else None
        if observation is not None:
            wm.note_screenshot(observation.screenshot_id)
            wm.note_observation(observation_digest(observation))
        context = context_fn(wm) if context_fn else inject_context(wm, None, None)
        try:
            decision = planner.decide(intent, observation, context, skills)
        except errors.AgentError:
            raise
        except Exception as exc:
            raise errors.PlannerFailure(str(exc)) from exc

        if decision.kind == KIND_RESPOND:
            response = decision.response
            wm.note_turn("agent", response)
            steps.append(AgentStep(step_index, observation_digest(observation),
                                   decision, "responded"))
            outcome = "responded"
            break
        if decision.kind == KIND_DONE:
            steps.append(AgentStep(step_index, observation_digest(observation),
                                   decision, "done"))
            outcome = "completed"
            break
        if decision.kind == KIND_ACT:
            if isinstance(decision.action, IntentMsg):
                page = device.launch_intent(decision.action, privileged=False)
                result = f"launched {page.activity}"
            else:
                page = device.apply_gesture(decision.action)
                result = f"now on {page.activity}" if page else "foreground cleared"
        else:  # invoke_skill
            name, bound = decision.skill
            card = skills_by_name.get(name)
            if card is None:
                raise errors.PlannerFailure(f"unknown skill {name!r}")
            outcome_replay = launch_skill(device, card, dict(bound))
            result = f"skill entry via {outcome_replay.tier_used}"
        wm.note_action_result(result)
        steps.append(AgentStep(step_index, observation_digest(observation),
                               decision, result))

    return LoopResult(outcome=outcome, steps=steps, wm=wm, response=response)
