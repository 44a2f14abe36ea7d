"""Host process: scenarios, CLI, persistence, model client, HTTP server."""

from .modelclient import (
    InstrumentedClient,
    ModelEndpointConfig,
    ModelSuite,
    build_model_suite,
)
from .scenario import (
    ScenarioReport,
    ScenarioRunResult,
    load_scenario,
    run_scenario,
    validate_scenario,
)
from .session import AgentSession, EventBus, Host, TurnLog
from .store import HostStore

__all__ = [
    "AgentSession",
    "EventBus",
    "Host",
    "HostStore",
    "InstrumentedClient",
    "ModelEndpointConfig",
    "ModelSuite",
    "ScenarioReport",
    "ScenarioRunResult",
    "TurnLog",
    "build_model_suite",
    "load_scenario",
    "run_scenario",
    "validate_scenario",
]
