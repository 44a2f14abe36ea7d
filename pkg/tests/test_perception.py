"""Perception: ring buffer, AEC, alignment, understanding, decomposition."""

from __future__ import annotations

import random
import re
import string

import pytest

from pocketagent import errors
from pocketagent.device.types import SceneDescriptor
from pocketagent.events import SpeechSegment
from pocketagent.perception import (
    AlignedUtterance,
    AppRegistry,
    DirectAnswer,
    ExpandedQuery,
    Frame,
    FrameRing,
    Utterance,
    aec_filter,
    align,
    decompose,
    understand,
    utterance_from_segments,
)


def make_registry() -> AppRegistry:
    return AppRegistry.from_dicts([
        {"app_id": "shopmart", "aliases": ["taobao", "shopmart"],
         "category": "ecommerce",
         "routes": {"search": "app://shopmart/search/{q}"}},
        {"app_id": "clipcraft", "aliases": ["capcut", "clipcraft"],
         "category": "editor", "routes": {"compose": "app://clipcraft/compose"}},
        {"app_id": "quizbox", "aliases": ["quizbox"], "category": "education"},
        {"app_id": "dealhub", "aliases": ["dealhub", "meituan"],
         "category": "local_service"},
    ])


def cam_frame(frame_id, ts, objects=("thing",), scene="room", event=""):
    return Frame(frame_id=frame_id, timestamp=ts, source="camera",
                 scene=SceneDescriptor(objects=tuple(objects), scene=scene,
                                       event=event))


class StaticResolver:
    def __init__(self, descriptor):
        self.descriptor = descriptor

    def resolve(self, frame):
        return self.descriptor


# --- frame ring ---------------------------------------------------------------

def test_ring_eviction():
    ring = FrameRing(capacity=64)
    for i in range(1, 66):
        ring.push(cam_frame(i, i * 10))
    frames = ring.snapshot()
    assert len(frames) == 64
    assert frames[0].frame_id == 2 and frames[-1].frame_id == 65


def test_ring_single_push():
    ring = FrameRing()
    ring.push(cam_frame(1, 100))
    assert len(ring) == 1


def test_ring_timestamp_regression():
    ring = FrameRing()
    ring.push(cam_frame(1, 100))
    with pytest.raises(errors.TimestampRegression):
        ring.push(cam_frame(2, 50))


# --- AEC ---------------------------------------------------------------------

def _aec_oracle(mic, playback, window=500):
    """Exhaustive pairwise matcher: playback in time order, each cancels the
    earliest unmatched normalized-equal mic segment within the window."""
    def norm(t):
        return re.sub(r"\s+", " ", re.sub(r"[^0-9a-z\s]+", " ", t.lower())).strip()

    taken = set()
    for p in sorted(playback, key=lambda s: s.t_start):
        candidates = []
        for i, m in enumerate(mic):
            if i in taken:
                continue
            if norm(m.text) == norm(p.text) and abs(m.t_start - p.t_start) <= window:
                candidates.append(i)
        if candidates:
            taken.add(min(candidates, key=lambda i: (mic[i].t_start, i)))
    return [m for i, m in enumerate(mic) if i not in taken]


def test_aec_removes_echo_keeps_user():
    mic = [SpeechSegment("check price", 100, 600),
           SpeechSegment("now playing song", 120, 700)]
    playback = [SpeechSegment("now playing song", 100, 700, channel="playback")]
    out = aec_filter(mic, playback)
    assert [s.text for s in out] == ["check price"]
    assert out == _aec_oracle(mic, playback)


def test_aec_empty_playback_identity():
    mic = [SpeechSegment("hello", 0, 100)]
    assert aec_filter(mic, []) == mic


def test_aec_outside_window_retained():
    mic = [SpeechSegment("now playing song", 2600, 3000)]
    playback = [SpeechSegment("now playing song", 100, 700, channel="playback")]
    out = aec_filter(mic, playback)
    assert out == mic
    assert out == _aec_oracle(mic, playback)


def test_aec_normalization_matches():
    mic = [SpeechSegment("  Now Playing, SONG! ", 100, 700)]
    playback = [SpeechSegment("now playing song", 100, 700, channel="playback")]
    assert aec_filter(mic, playback) == []


def test_aec_each_playback_cancels_at_most_one():
    mic = [SpeechSegment("la la", 100, 200), SpeechSegment("la la", 150, 250)]
    playback = [SpeechSegment("la la", 100, 200, channel="playback")]
    out = aec_filter(mic, playback)
    assert len(out) == 1 and out[0].t_start == 150
    assert out == _aec_oracle(mic, playback)


def test_aec_randomized_equals_oracle():
    rng = random.Random(4242)
    words = ["alpha", "beta", "gamma", "delta", "echo", "song"]
    for _ in range(200):
        mic = [SpeechSegment(" ".join(rng.sample(words, rng.randint(1, 3))),
                             rng.randrange(0, 3000), rng.randrange(3000, 4000))
               for _ in range(rng.randint(0, 8))]
        playback = [SpeechSegment(" ".join(rng.sample(words, rng.randint(1, 3))),
                                  rng.randrange(0, 3000), rng.randrange(3000, 4000),
                                  channel="playback")
                    for _ in range(rng.randint(0, 5))]
        assert aec_filter(mic, playback) == _aec_oracle(mic, playback)


def test_aec_never_removes_unmatched_segment():
    rng = random.Random(77)
    for _ in range(100):
        mic = [SpeechSegment(f"user utterance {rng.randrange(100)}",
                             rng.randrange(0, 2000), 2500)
               for _ in range(rng.randint(1, 6))]
        playback = [SpeechSegment(f"track {rng.randrange(100)}",
                                  rng.randrange(0, 2000), 2500, channel="playback")
                    for _ in range(rng.randint(0, 4))]
        survivors = aec_filter(mic, playback)
        playback_norms = {p.text.lower() for p in playback}
        for m in mic:
            if m.text.lower() not in playback_norms:
                assert m in survivors


# --- alignment ------------------------------------------------------------------

def test_align_window_and_representative():
    ring = FrameRing()
    for i, ts in enumerate([0, 1000, 2000], start=1):
        ring.push(cam_frame(i, ts))
    got = align(Utterance("q", 900, 1100), ring)
    assert got.window == (-1100, 1600)
    assert [f.timestamp for f in got.frames] == [0, 1000]
    assert got.representative.timestamp == 1000


def test_align_single_frame():
    ring = FrameRing()
    ring.push(cam_frame(1, 500))
    got = align(Utterance("q", 10_000, 10_100), ring)
    assert got.representative.frame_id == 1
    assert got.frames == (got.representative,)


def test_align_tie_breaks_earlier():
    ring = FrameRing()
    ring.push(cam_frame(1, 900))
    ring.push(cam_frame(2, 1100))
    got = align(Utterance("q", 1000, 1000), ring, pre=500, post=500)
    assert got.representative.timestamp == 900


def test_align_empty_ring():
    with pytest.raises(errors.EmptyRing):
        align(Utterance("q", 0, 10), FrameRing())


def test_align_invariant_under_capacity_changes():
    # as long as the window's frames survive eviction, capacity is invisible
    frames = [cam_frame(i, 1000 + i * 100) for i in range(1, 21)]
    big = FrameRing(capacity=64)
    small = FrameRing(capacity=10)  # keeps frames 11..20 (ts 2100..3000)
    for f in frames:
        big.push(f)
        small.push(f)
    utt = Utterance("q", 2900, 3000)
    a = align(utt, big, pre=500, post=300)  # window [2400, 3300]
    b = align(utt, small, pre=500, post=300)
    assert a.frames == b.frames
    assert a.representative == b.representative


def test_ring_single_writer_many_readers():
    import threading

    ring = FrameRing(capacity=32)
    stop = threading.Event()
    errors_seen = []

    def reader():
        while not stop.is_set():
            snap = ring.snapshot()
            ts = [f.timestamp for f in snap]
            if ts != sorted(ts):
                errors_seen.append(ts)

    readers = [threading.Thread(target=reader) for _ in range(3)]
    for t in readers:
        t.start()
    for i in range(1, 500):
        ring.push(cam_frame(i, i * 10))
    stop.set()
    for t in readers:
        t.join()
    assert errors_seen == []


def test_align_randomized_equals_bruteforce():
    rng = random.Random(99)
    for _ in range(300):
        ring = FrameRing(capacity=64)
        ts = 0
        n = rng.randint(1, 64)
        for i in range(1, n + 1):
            ts += rng.randrange(0, 400)
            ring.push(cam_frame(i, ts))
        t0 = rng.randrange(0, ts + 1000)
        t1 = t0 + rng.randrange(0, 500)
        pre, post = 2000, 500
        got = align(Utterance("q", t0, t1), ring, pre=pre, post=post)

        # oracle: brute-force scan with the stated tie rule
        frames = ring.snapshot()
        window = [f for f in frames if t0 - pre <= f.timestamp <= t1 + post]
        if not window:
            assert got.frames == (frames[-1],)
            assert got.representative == frames[-1]
        else:
            mid = (t0 + t1) / 2
            best = window[0]
            for f in window[1:]:
                if abs(f.timestamp - mid) < abs(best.timestamp - mid):
                    best = f
            assert list(got.frames) == window
            assert got.representative == best


# --- understanding -----------------------------------------------------------------

def _aligned(text, objects=(), scene="", event=""):
    frame = cam_frame(1, 1000, objects=objects or ("",), scene=scene, event=event)
    return AlignedUtterance(text, (0, 2000), (frame,), frame)


def test_understand_expands_price_query_to_canonical_form():
    aligned = _aligned("How much does this cost on Taobao?")
    resolver = StaticResolver(SceneDescriptor(objects=("Evian spray",),
                                              scene="desk", event="shopping"))
    got = understand(aligned, resolver)
    assert isinstance(got, ExpandedQuery)
    assert got.text == "the user wants to know the price of Evian spray on Taobao"


def test_understand_direct_answer_from_scene():
    aligned = _aligned("what object is this?")
    resolver = StaticResolver(SceneDescriptor(objects=("parrot",), scene="park"))
    got = understand(aligned, resolver)
    assert got == DirectAnswer(answer="parrot")


def test_understand_unresolved_deixis():
    aligned = _aligned("this")
    with pytest.raises(errors.UnresolvedDeixis):
        understand(aligned, StaticResolver(SceneDescriptor()))


def test_understand_no_bare_deixis_when_resolved():
    resolver = StaticResolver(SceneDescriptor(objects=("red bicycle",)))
    for text in ["is it red?", "move these please", "what about this one"]:
        got = understand(_aligned(text), resolver)
        assert isinstance(got, ExpandedQuery)
        assert not re.search(r"\b(this|these|it)\b", got.text, re.IGNORECASE)


def test_understand_collapses_duplicate_nouns():
    resolver = StaticResolver(SceneDescriptor(objects=("algebra problems",)))
    got = understand(_aligned("help me consecutively solve these problems"), resolver)
    assert got.text == "help me consecutively solve algebra problems"


# --- decomposition ------------------------------------------------------------------

def test_decompose_price_triple():
    intent = decompose(
        "the user wants to know the price of Evian spray on Taobao",
        make_registry())
    assert intent.target_app == "shopmart"
    assert intent.action_type == "search"
    assert intent.slot_map() == {"q": "Evian spray"}


def test_decompose_compose_triple():
    intent = decompose(
        "find all parrot-themed photos and generate a highlight album in one click",
        make_registry())
    assert intent.target_app == "clipcraft"
    assert intent.action_type == "compose"
    assert intent.slot_map() == {"theme": "parrot"}


def test_decompose_unmatched_is_answer():
    intent = decompose("hello", make_registry())
    assert intent.action_type == "answer"
    assert intent.target_app == ""


def test_decompose_unknown_alias_falls_to_category_default():
    intent = decompose("check the price of spray on UnknownShop", make_registry())
    assert intent.target_app == "shopmart"
    assert intent.action_type == "search"


def test_decompose_solve_rule():
    intent = decompose("help me consecutively solve algebra problems",
                       make_registry())
    assert intent.target_app == "quizbox"
    assert intent.action_type == "open"
    assert intent.slot_map() == {"subject": "algebra"}


def test_decompose_open_named_app():
    intent = decompose("open the dealhub flash sale", make_registry())
    assert intent.target_app == "dealhub"
    assert intent.action_type == "open"


def test_decompose_is_total():
    rng = random.Random(5)
    registry = make_registry()
    for _ in range(200):
        text = "".join(rng.choice(string.printable) for _ in range(rng.randint(0, 60)))
        intent = decompose(text, registry)
        assert intent.action_type in {"search", "open", "execute_skill",
                                      "compose", "answer"}
        if intent.action_type != "answer":
            assert intent.target_app


# --- utterance helper ----------------------------------------------------------------

def test_utterance_from_segments_joins_in_time_order():
    utt = utterance_from_segments([
        SpeechSegment("world", 200, 300),
        SpeechSegment("hello", 0, 100),
    ])
    assert utt.text == "hello world"
    assert (utt.t0, utt.t1) == (0, 300)
