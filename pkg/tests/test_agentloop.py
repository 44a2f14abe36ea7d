"""Agent loop: run, skill selection, scroll-extract, summary, follow-ups."""

from __future__ import annotations

import re

import pytest

from pocketagent import errors
from pocketagent.agentloop import (
    Decision,
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
from pocketagent.agentloop.extract import SessionArtifact, ExtractionSchema
from pocketagent.clone import LaunchDescriptor, SkillCard
from pocketagent.device import IntentMsg, Scroll, SimDevice, Tap
from pocketagent.grounding import NullVisualGrounder
from pocketagent.memory import WorkingMemory
from pocketagent.perception import StructuredIntent

from conftest import (
    CATALOG,
    QUIZ_ANSWERS,
    quiz_app_fixture,
    shop_app_fixture,
)


def _intent(action="search", app="shopmart", query="search mist on shopmart",
            slots=()):
    return StructuredIntent(expanded_query=query, target_app=app,
                            action_type=action, slots=tuple(slots))


def _search_card(name="search-shopmart", tokens=("price", "evian"),
                 created_at=0):
    return SkillCard(
        name=name,
        description="search shopmart listings",
        trigger_tokens=tokens,
        target_app="shopmart",
        entry=LaunchDescriptor(action="view",
                               component=("shopmart", "SearchResults"),
                               extras=(("q", ""),)),
        trajectory_ref="trace-0",
        parameters=("q",),
        created_at=created_at,
    )


# --- run -----------------------------------------------------------------------

def test_answer_intent_responds_without_device_actions(shop_device):
    intent = StructuredIntent(expanded_query="hello", target_app="",
                              action_type="answer")
    result = run(shop_device, intent, RulePlanner())
    assert result.outcome == "responded"
    assert result.wm.step_index == 0
    assert shop_device.foreground is None


def test_matching_skill_invoked_at_step_zero(shop_device):
    intent = _intent(query="the user wants to know the price of Evian spray",
                     slots=(("q", "Evian spray"),))
    result = run(shop_device, intent, RulePlanner(), skills=[_search_card()])
    assert result.steps[0].decision.kind == "invoke_skill"
    app_id, activity, params = shop_device.foreground
    assert (app_id, activity) == ("shopmart", "SearchResults")
    assert params["q"] == "Evian spray"


def test_always_scrolling_planner_exhausts(shop_device):
    shop_device.launch_intent(IntentMsg.make(
        "view", data_uri="app://shopmart/search/mist"))

    class Restless:
        def decide(self, intent, observation, context, skills):
            return Decision.act(Scroll("down", 1))

    result = run(shop_device, _intent(), Restless())
    assert result.outcome == "exhausted"
    assert len(result.steps) == 20
    assert result.wm.step_index == 20


def test_planner_exception_wrapped(shop_device):
    class Broken:
        def decide(self, intent, observation, context, skills):
            raise RuntimeError("model endpoint down")

    with pytest.raises(errors.PlannerFailure):
        run(shop_device, _intent(), Broken())


def test_quiz_fixture_completes_with_exact_steps():
    device = SimDevice.from_fixture({"apps": [quiz_app_fixture()]})
    device.launch_intent(IntentMsg.make("view", component=("quizbox", "Home")))
    start = device.current_page().ui_root.find("start")
    device.apply_gesture(Tap(start.bounds.center))

    planner = RulePlanner(handlers=[
        make_done_handler("All solved"),
        make_quiz_handler(QUIZ_ANSWERS),
    ])
    intent = StructuredIntent(
        expanded_query="help me consecutively solve algebra problems",
        target_app="quizbox", action_type="open",
        slots=(("subject", "algebra"),))
    result = run(device, intent, planner, wm=WorkingMemory("quiz"))
    assert result.outcome == "completed"
    assert result.wm.step_index == 3
    assert [s.decision.kind for s in result.steps] == ["act", "act", "act", "done"]
    assert device.foreground[1] == "Done"


# --- select_skill ---------------------------------------------------------------

def test_select_skill_single_candidate():
    card = _search_card(tokens=("search", "shopmart"))
    intent = _intent(query="search mist on shopmart")
    assert select_skill(intent, [card]) is card


def test_select_skill_prefers_more_tokens():
    weak = _search_card(name="weak", tokens=("search",), created_at=10)
    strong = _search_card(name="strong",
                          tokens=("search", "mist", "shopmart"), created_at=1)
    got = select_skill(_intent(query="search mist on shopmart"), [weak, strong])
    assert got.name == "strong"


def test_select_skill_ties_break_by_recency():
    older = _search_card(name="older", tokens=("search",), created_at=5)
    newer = _search_card(name="newer", tokens=("mist",), created_at=9)
    got = select_skill(_intent(query="search mist on shopmart"), [older, newer])
    assert got.name == "newer"


def test_select_skill_requires_app_match():
    card = _search_card(tokens=("search",))
    assert select_skill(_intent(app="dealhub"), [card]) is None


# --- scroll_extract -----------------------------------------------------------------

def _results_device():
    device = SimDevice.from_fixture({"apps": [shop_app_fixture()]})
    device.launch_intent(IntentMsg.make(
        "view", data_uri="app://shopmart/search/spray"))
    return device


def viewport_union_oracle(n_items, visible, passes):
    """Independent model of which item indices any pass can see."""
    seen = set()
    offset = 0
    seen.update(range(0, min(visible, n_items)))
    max_offset = max(0, n_items - visible)
    for _ in range(passes):
        offset = min(offset + visible, max_offset)
        seen.update(range(offset, min(offset + visible, n_items)))
    return seen


def test_scroll_extract_three_passes_covers_viewport_union():
    device = _results_device()
    schema = schema_for("ecommerce")
    artifact = scroll_extract(device, schema, FixtureExtractor(device, schema),
                              passes=3)
    expected = {CATALOG[i]["title"]
                for i in viewport_union_oracle(len(CATALOG), 4, 3)}
    assert {r["title"] for r in artifact.records} == expected
    assert len(artifact.records) == len(expected)  # duplicates removed
    assert len(artifact.source_screenshots) == 4


def test_scroll_extract_schema_totality():
    device = _results_device()
    schema = schema_for("ecommerce")
    artifact = scroll_extract(device, schema, FixtureExtractor(device, schema))
    for record in artifact.records:
        assert set(record) == {"title", "price", "sales"}


def test_scroll_extract_zero_passes_reads_initial_viewport():
    device = _results_device()
    schema = schema_for("ecommerce")
    artifact = scroll_extract(device, schema, FixtureExtractor(device, schema),
                              passes=0)
    assert [r["title"] for r in artifact.records] == [
        item["title"] for item in CATALOG[:4]]


def test_scroll_extract_requires_scrollable(shop_device):
    shop_device.launch_intent(IntentMsg.make("view", component=("shopmart", "Home")))
    schema = schema_for("ecommerce")
    with pytest.raises(errors.NotScrollable):
        scroll_extract(shop_device, schema,
                       FixtureExtractor(shop_device, schema))


def test_artifact_serialization_deterministic():
    def build():
        device = _results_device()
        schema = schema_for("ecommerce")
        return scroll_extract(device, schema, FixtureExtractor(device, schema),
                              passes=3).to_jsonl()

    assert build() == build()
    reparsed = SessionArtifact.from_jsonl(build())
    assert reparsed.to_jsonl() == build()


# --- summarize -------------------------------------------------------------------

def _artifact(records, domain="ecommerce"):
    schema = schema_for(domain)
    return SessionArtifact(artifact_id="a1", schema=schema,
                           records=tuple(records), source_screenshots=("s",),
                           created_at=0)


def test_summary_cites_min_and_max():
    artifact = _artifact([
        {"title": "a", "price": "12.9", "sales": "1"},
        {"title": "b", "price": "15.0", "sales": "2"},
        {"title": "c", "price": "9.9", "sales": "3"},
    ])
    text = summarize(artifact)
    # oracle: min/max over the fixture
    assert "9.9" in text and "15.0" in text
    assert "12.9" not in text


def test_summary_single_record():
    text = summarize(_artifact([{"title": "a", "price": "7.5", "sales": ""}]))
    assert "1 record" in text and "7.5" in text


def test_summary_unparseable_prices_guard():
    text = summarize(_artifact([
        {"title": "a", "price": "call us", "sales": ""},
        {"title": "b", "price": "n/a", "sales": ""},
    ]))
    assert "2 records" in text
    assert "range" not in text and "Price" not in text


def test_summary_empty_artifact():
    with pytest.raises(errors.EmptyArtifact):
        summarize(_artifact([]))


def test_summary_honesty_every_number_in_artifact():
    device = _results_device()
    schema = schema_for("ecommerce")
    artifact = scroll_extract(device, schema, FixtureExtractor(device, schema),
                              passes=3)
    text = summarize(artifact)
    blob = artifact.to_jsonl()
    for token in re.findall(r"\d+(?:\.\d+)?", text):
        assert token in blob, f"summary cites {token} not present in artifact"


# --- follow-ups -----------------------------------------------------------------------

def test_followup_opens_second_item():
    device = _results_device()
    schema = schema_for("ecommerce")
    artifact = scroll_extract(device, schema, FixtureExtractor(device, schema),
                              passes=3)
    device.apply_gesture(Scroll("up", 100))  # back to the top of the list
    obs = device.snapshot()
    decision = resolve_followup("open the second item", artifact, obs)
    assert decision.kind == "act"
    page = device.apply_gesture(decision.action)
    assert page.activity == "ItemDetail"
    assert page.param_map()["title"] == artifact.records[1]["title"]


def test_followup_ordinal_out_of_range():
    device = _results_device()
    artifact = _artifact([{"title": f"t{i}", "price": "", "sales": ""}
                          for i in range(5)])
    obs = device.snapshot()
    with pytest.raises(errors.OrdinalOutOfRange):
        resolve_followup("open the 9th item", artifact, obs)


def test_followup_first_maps_to_rank_one():
    assert parse_ordinal("open the first item") == 1
    assert parse_ordinal("the 3rd one") == 3
    assert parse_ordinal("open something") is None


def test_followup_requires_artifact():
    device = _results_device()
    obs = device.snapshot()
    with pytest.raises(errors.NoArtifact):
        resolve_followup("open the second item", None, obs)
