"""Memory: sync pipeline, redaction, retrieval, staging, working memory."""

from __future__ import annotations

import hashlib
import random
import re

import pytest

from pocketagent import errors
from pocketagent.device import MediaAsset, SceneDescriptor, SimDevice
from pocketagent.memory import (
    FixtureSummarizer,
    GalleryStore,
    MemoryFile,
    RedactionPolicy,
    UserProfile,
    WorkingMemory,
    WorkingStore,
    inject_context,
    memory_query,
    memory_sync,
    redact,
    stage,
)

from conftest import gallery_media_fixture, shop_app_fixture


class FailingSummarizer:
    def __init__(self, fail_ids=None):
        self.fail_ids = fail_ids  # None means fail on everything

    def summarize(self, asset):
        if self.fail_ids is None or asset.asset_id in self.fail_ids:
            raise RuntimeError("model unavailable")
        return FixtureSummarizer().summarize(asset)


@pytest.fixture
def gallery_device():
    return SimDevice.from_fixture({
        "apps": [shop_app_fixture()],
        "media": gallery_media_fixture(),
    })


@pytest.fixture
def store(tmp_path):
    return GalleryStore(tmp_path / "memory")


# --- redaction -----------------------------------------------------------------

def test_redact_phone_number():
    policy = RedactionPolicy()
    assert redact("call 13812345678 tonight", policy) == "call [REDACTED] tonight"


def test_redact_identity_and_addr():
    policy = RedactionPolicy()
    assert redact("id 11010119900307751X ok", policy) == "id [REDACTED] ok"
    assert redact("addr:5_Elm_Street here", policy) == "[REDACTED] here"


def test_redact_non_matching_unchanged():
    policy = RedactionPolicy()
    assert redact("parrot at the beach", policy) == "parrot at the beach"


def test_redact_every_occurrence():
    policy = RedactionPolicy()
    text = "13812345678 and 13987654321"
    out = redact(text, policy)
    # oracle: count pattern matches before/after
    before = len(re.findall(r"(?<!\d)\d{11}(?!\d)", text))
    assert before == 2
    assert len(re.findall(r"(?<!\d)\d{11}(?!\d)", out)) == 0
    assert out.count("[REDACTED]") == 2


# --- memory_sync -----------------------------------------------------------------

def test_sync_healthy_summarizer(gallery_device, store):
    result = memory_sync(gallery_device, store, FixtureSummarizer())
    assert len(result.appended) == 5
    assert all(e.summary_kind == "model" for e in result.appended)
    mfile = store.load_file()
    assert mfile.cursor == 5
    assert [e.filename for e in mfile.entries] == [
        m["filename"] for m in gallery_media_fixture()]


def test_sync_partial_failure_falls_back(gallery_device, store):
    result = memory_sync(gallery_device, store, FailingSummarizer(fail_ids={3}))
    kinds = {e.filename: e.summary_kind for e in result.appended}
    assert kinds["IMG_0003.jpg"] == "metadata_fallback"
    assert sum(1 for k in kinds.values() if k == "model") == 4
    fallback = next(e for e in result.appended if e.filename == "IMG_0003.jpg")
    assert fallback.objects == () and fallback.scene == "" and fallback.event == ""
    assert "IMG_0003.jpg" in fallback.free_text and "DCIM" in fallback.free_text


def test_sync_all_failing_keeps_pipeline_alive(gallery_device, store):
    result = memory_sync(gallery_device, store, FailingSummarizer())
    assert len(result.appended) == 5
    assert all(e.summary_kind == "metadata_fallback" for e in result.appended)


def test_sync_idempotent_without_new_media(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    first = store.memory_path.read_bytes()
    again = memory_sync(gallery_device, store, FixtureSummarizer())
    assert again.appended == []
    assert store.memory_path.read_bytes() == first


def test_sync_incremental_resumes_from_cursor(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    gallery_device.add_media(MediaAsset(
        asset_id=6, filename="IMG_0006.jpg", folder="DCIM", captured_at=6000,
        width=100, height=100,
        truth=SceneDescriptor(objects=("cat",), scene="sofa", event="nap")))
    result = memory_sync(gallery_device, store, FixtureSummarizer())
    assert [e.filename for e in result.appended] == ["IMG_0006.jpg"]
    assert store.load_file().cursor == 6


def test_sync_redacts_before_write(store):
    device = SimDevice.from_fixture({
        "apps": [shop_app_fixture()],
        "media": [{"asset_id": 1, "filename": "IMG_1.jpg",
                   "captured_at": 100,
                   "objects": ["note 13812345678"],
                   "scene": "addr:12_Main_St", "event": "call"}],
    })
    memory_sync(device, store, FixtureSummarizer())
    text = store.memory_path.read_text()
    policy = RedactionPolicy()
    for pattern in policy.compiled():
        assert pattern.search(text) is None
    assert "[REDACTED]" in text


def test_sync_updates_profile_weights(gallery_device, store):
    result = memory_sync(gallery_device, store, FixtureSummarizer())
    assert result.profile.tag_weights["parrot"] == 3
    assert result.profile.tag_weights["vacation"] == 2
    assert all(w >= 1 for w in result.profile.tag_weights.values())
    assert all(t == t.lower() for t in result.profile.tag_weights)


def test_sync_write_failure_is_clean(gallery_device, tmp_path):
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory")
    store = GalleryStore(target)  # mkdir over a file fails
    with pytest.raises(errors.StorageWriteFailure):
        memory_sync(gallery_device, store, FixtureSummarizer())


def test_memory_file_roundtrip(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    text = store.memory_path.read_text()
    assert text.startswith("# gallery-memory v1\ncursor: 5\n")
    reparsed = MemoryFile.from_text(text)
    assert reparsed.to_text() == text


# --- memory_query ---------------------------------------------------------------

def test_query_membership(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    hits = memory_query("parrot", store.load_file())
    assert {name for name, _ in hits} == {
        "IMG_0001.jpg", "IMG_0003.jpg", "IMG_0005.jpg"}


def test_query_nothing_matches(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    assert memory_query("zeppelin", store.load_file()) == []


def test_query_orders_by_score_then_recency(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    hits = memory_query("beach parrot", store.load_file())
    # IMG_0003 matches both tokens; others one each, newest first
    assert hits[0][0] == "IMG_0003.jpg" and hits[0][1] == 2
    rest = hits[1:]
    assert all(score == 1 for _, score in rest)
    assert [name for name, _ in rest] == ["IMG_0005.jpg", "IMG_0002.jpg",
                                          "IMG_0001.jpg"]


def test_query_equals_bruteforce_on_random_galleries(tmp_path):
    rng = random.Random(321)
    vocab = ["parrot", "beach", "city", "cat", "dog", "tree", "sunset", "food",
             "friends", "party", "museum", "hike"]
    for trial in range(5):
        media = []
        for i in range(1, 201):
            media.append({
                "asset_id": i,
                "filename": f"P{trial}_{i:04d}.jpg",
                "captured_at": i * 10,
                "objects": rng.sample(vocab, rng.randint(0, 3)),
                "scene": rng.choice(vocab + [""]),
                "event": rng.choice(vocab + [""]),
            })
        device = SimDevice.from_fixture({"apps": [shop_app_fixture()],
                                         "media": media})
        store = GalleryStore(tmp_path / f"mem{trial}")
        memory_sync(device, store, FixtureSummarizer())
        mfile = store.load_file()
        query = " ".join(rng.sample(vocab, 2))

        # oracle: brute-force scoring of every entry
        q_tokens = set(re.findall(r"[0-9a-z]+", query.lower()))
        expected = []
        for m in media:
            bag = " ".join(m["objects"]) + " " + m["scene"] + " " + m["event"]
            full_bag = bag
            if m["objects"]:
                full_bag += " a photo of " + ", ".join(m["objects"])
            if m["scene"]:
                full_bag += " at " + m["scene"]
            if m["event"]:
                full_bag += " during " + m["event"]
            entry_tokens = set(re.findall(r"[0-9a-z]+", full_bag.lower()))
            score = len(q_tokens & entry_tokens)
            if score >= 1:
                expected.append((m["filename"], score, m["captured_at"]))
        expected.sort(key=lambda t: (-t[1], -t[2], t[0]))
        assert memory_query(query, mfile) == [(n, s) for n, s, _ in expected]


def test_consumers_never_mutate_file(gallery_device, store, tmp_path):
    memory_sync(gallery_device, store, FixtureSummarizer())
    before = hashlib.sha256(store.memory_path.read_bytes()).hexdigest()
    mfile = store.load_file()
    memory_query("parrot beach", mfile)
    stage(["IMG_0001.jpg"], gallery_device, tmp_path / "staging", "t1")
    inject_context(WorkingMemory("s", goal="parrot"), store.load_profile(), mfile)
    after = hashlib.sha256(store.memory_path.read_bytes()).hexdigest()
    assert before == after


# --- staging ---------------------------------------------------------------------

def test_stage_all_extant(gallery_device, tmp_path):
    folder, staged = stage(["IMG_0001.jpg", "IMG_0002.jpg", "IMG_0003.jpg"],
                           gallery_device, tmp_path / "staging", "task1")
    assert sorted(staged) == ["IMG_0001.jpg", "IMG_0002.jpg", "IMG_0003.jpg"]
    assert sorted(p.name for p in folder.iterdir()) == sorted(staged)


def test_stage_reconciles_deleted(gallery_device, tmp_path):
    gallery_device.remove_media("IMG_0002.jpg")
    folder, staged = stage(["IMG_0001.jpg", "IMG_0002.jpg", "IMG_0003.jpg"],
                           gallery_device, tmp_path / "staging", "task1")
    assert staged == ["IMG_0001.jpg", "IMG_0003.jpg"]
    assert sorted(p.name for p in folder.iterdir()) == staged


def test_stage_task_isolation(gallery_device, tmp_path):
    a, _ = stage(["IMG_0001.jpg"], gallery_device, tmp_path / "staging", "t1")
    b, _ = stage(["IMG_0002.jpg"], gallery_device, tmp_path / "staging", "t2")
    assert a != b
    assert [p.name for p in a.iterdir()] == ["IMG_0001.jpg"]
    assert [p.name for p in b.iterdir()] == ["IMG_0002.jpg"]


def test_stage_empty_after_reconcile(gallery_device, tmp_path):
    with pytest.raises(errors.EmptyAfterReconcile):
        stage(["nope.jpg"], gallery_device, tmp_path / "staging", "t1")


# --- working memory -----------------------------------------------------------------

def test_update_working_appends(tmp_path):
    wm = WorkingMemory("s1")
    wm.note_observation("on home page")
    wm.note_observation("on results page")
    assert wm.compressed_observations == ["on home page", "on results page"]
    assert wm.step_index == 0


def test_step_index_counts_only_action_results():
    wm = WorkingMemory("s1")
    wm.note_observation("x")
    wm.note_screenshot("shot-1")
    wm.set_goal("find prices")
    assert wm.step_index == 0
    wm.note_action_result("tapped Search")
    wm.note_action_result("scrolled")
    assert wm.step_index == 2


def test_persist_and_resume_across_app_switch(tmp_path):
    store = WorkingStore(tmp_path / "sessions")
    wm = WorkingMemory("s9", goal="compare sprays")
    for i in range(4):
        wm.note_action_result(f"step {i}")
    store.persist(wm)
    resumed = store.resume("s9")
    assert resumed.step_index == 4
    assert resumed.goal == "compare sprays"


def test_resume_unknown_session(tmp_path):
    with pytest.raises(errors.UnknownSession):
        WorkingStore(tmp_path / "sessions").resume("ghost")


# --- inject_context ------------------------------------------------------------------

def test_inject_profile_absent_when_disabled(gallery_device, store):
    memory_sync(gallery_device, store, FixtureSummarizer())
    wm = WorkingMemory("s1", goal="parrot album")
    profile = store.load_profile()
    profile.inject = False
    block = inject_context(wm, profile, store.load_file())
    assert "profile tags" not in block
    profile.inject = True
    assert "profile tags" in inject_context(wm, profile, store.load_file())


def test_inject_k_zero_drops_observations():
    wm = WorkingMemory("s1", goal="g")
    wm.note_observation("one")
    block = inject_context(wm, None, None, k=0)
    assert "observations" not in block


def test_inject_windows_last_k():
    wm = WorkingMemory("s1", goal="g")
    for i in range(7):
        wm.note_observation(f"obs{i}")
    block = inject_context(wm, None, None, k=5)
    assert "obs1" not in block and "obs0" not in block
    for i in range(2, 7):
        assert f"obs{i}" in block
    assert block.index("obs2") < block.index("obs6")
