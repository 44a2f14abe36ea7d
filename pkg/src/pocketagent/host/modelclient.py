"""Optional remote model client and the deterministic stub wiring.

With no MODEL_ENDPOINT configured every model interface binds to fixture
stubs and the process performs zero network operations. The instrumented
client exists so tests can assert exactly that.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Protocol

from ..device import MediaAsset, SimDevice
from ..device.types import SceneDescriptor
from ..geometry import Rect
from ..grounding import FixtureVisualGrounder
from ..memory import FixtureSummarizer, MemoryEntry
from ..memory.gallery import KIND_MODEL
from ..perception import Frame, FixtureSceneResolver

ENV_MODEL_ENDPOINT = "MODEL_ENDPOINT"


@dataclass(frozen=True)
class ModelEndpointConfig:
    base_url: str = ""
    timeout_ms: int = 5000
    enabled: bool = False

    @classmethod
    def from_env(cls, environ=None) -> "ModelEndpointConfig":
        env = os.environ if environ is None else environ
        endpoint = env.get(ENV_MODEL_ENDPOINT, "")
        return cls(base_url=endpoint, enabled=bool(endpoint))


class ModelClient(Protocol):
    def call(self, op: str, payload: dict) -> dict: ...


class RemoteModelClient:
    """JSON-over-HTTP client for a remote model endpoint."""

    def __init__(self, config: ModelEndpointConfig):
        if not config.enabled:
            raise ValueError("remote client requires an enabled endpoint")
        self.config = config

    def call(self, op: str, payload: dict) -> dict:
        import urllib.request

        body = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            url=self.config.base_url.rstrip("/") + "/" + op,
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(
                request, timeout=self.config.timeout_ms / 1000.0) as response:
            return json.loads(response.read().decode("utf-8"))


@dataclass
class InstrumentedClient:
    """Counts every outbound model call; raises when none are allowed."""

    allow_calls: bool = False
    calls: list = field(default_factory=list)

    def call(self, op: str, payload: dict) -> dict:
        self.calls.append(op)
        if not self.allow_calls:
            raise AssertionError(
                f"network operation {op!r} attempted in offline mode")
        return {}

    @property
    def call_count(self) -> int:
        return len(self.calls)


class RemoteSceneResolver:
    def __init__(self, client: ModelClient):
        self._client = client

    def resolve(self, frame: Frame) -> Optional[SceneDescriptor]:
        scene = frame.scene
        payload = {"source": frame.source,
                   "scene": scene.to_dict() if isinstance(scene, SceneDescriptor)
                   else scene}
        out = self._client.call("resolve_scene", payload)
        if not out:
            return None
        return SceneDescriptor(objects=tuple(out.get("objects", ())),
                               scene=out.get("scene", ""),
                               event=out.get("event", ""))


class RemoteVisualGrounder:
    def __init__(self, client: ModelClient):
        self._client = client

    def ground(self, screenshot_id: str, query: str) -> Optional[Rect]:
        out = self._client.call("ground",
                                {"screenshot_id": screenshot_id, "query": query})
        bbox = out.get("bbox")
        return Rect.from_seq(bbox) if bbox else None


class RemoteSummarizer:
    def __init__(self, client: ModelClient):
        self._client = client

    def summarize(self, asset: MediaAsset) -> MemoryEntry:
        out = self._client.call("summarize_image", {"filename": asset.filename})
        return MemoryEntry(
            filename=asset.filename,
            captured_at=asset.captured_at,
            summary_kind=KIND_MODEL,
            objects=tuple(out.get("objects", ())),
            scene=out.get("scene", ""),
            event=out.get("event", ""),
            free_text=out.get("text", ""),
        )


class RemoteExtractor:
    """VLM-backed reading of visible list rows through the model client."""

    def __init__(self, client: ModelClient, schema):
        self._client = client
        self.schema = schema

    def extract(self, observation) -> list[dict]:
        out = self._client.call("extract", {
            "screenshot_id": observation.screenshot_id,
            "fields": list(self.schema.fields),
        })
        return [dict(r) for r in out.get("records", ())]


@dataclass
class ModelSuite:
    """Every pluggable model interface, stub or remote, in one bundle."""

    resolver: object
    grounder: object
    summarizer: object
    client: Optional[ModelClient] = None
    remote: bool = False

    def extractor_for(self, device: SimDevice, schema):
        from ..agentloop import FixtureExtractor

        if self.remote and self.client is not None:
            return RemoteExtractor(self.client, schema)
        return FixtureExtractor(device, schema)


def build_model_suite(device: SimDevice, config: ModelEndpointConfig,
                      client: Optional[ModelClient] = None) -> ModelSuite:
    """Disabled config binds every interface to deterministic fixture stubs."""
    if not config.enabled:
        return ModelSuite(
            resolver=FixtureSceneResolver(device),
            grounder=FixtureVisualGrounder(device),
            summarizer=FixtureSummarizer(),
            client=client,
            remote=False,
        )
    remote = client or RemoteModelClient(config)
    return ModelSuite(
        resolver=RemoteSceneResolver(remote),
        grounder=RemoteVisualGrounder(remote),
        summarizer=RemoteSummarizer(remote),
        client=remote,
        remote=True,
    )
