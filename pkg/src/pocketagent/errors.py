"""Exception types shared across the runtime.

Every error a runtime operation can raise by contract has a named class
here so callers can catch precisely without string matching.
"""


class AgentError(Exception):
    """Base class for all runtime errors."""


# --- device ---------------------------------------------------------------

class NotExported(AgentError):
    """Component launch of an unexported activity without privilege."""


class NoMatch(AgentError):
    """No installed deeplink pattern matches the intent's data URI."""


class UnknownComponent(AgentError):
    """Explicit component names an app or activity that is not installed."""


class NoForeground(AgentError):
    """Operation requires a foreground page but none is set."""


class OutOfBounds(AgentError):
    """Gesture point lies outside the device screen."""


class OverlappingSegments(AgentError):
    """Playback segments overlap in time."""


class AppNotRunning(AgentError):
    """The app has no task stack to introspect or restore."""


# --- ingress --------------------------------------------------------------

class MalformedGatewayMessage(AgentError):
    """External gateway payload does not parse under the loopback format."""


class PastFireTime(AgentError):
    """Schedule registration with fire_at earlier than the current clock."""


# --- perception -----------------------------------------------------------

class TimestampRegression(AgentError):
    """Frame pushed with a timestamp older than the newest ring frame."""


class EmptyRing(AgentError):
    """Alignment requested against an empty frame ring."""


class UnresolvedDeixis(AgentError):
    """Query contains a deictic token but the scene resolver yields nothing."""


# --- memory ---------------------------------------------------------------

class StorageWriteFailure(AgentError):
    """Memory file could not be written; nothing was partially written."""


class UnknownSession(AgentError):
    """Resume requested for a session id that was never persisted."""


class EmptyAfterReconcile(AgentError):
    """Every staged filename was dropped during media-store reconciliation."""


# --- grounding ------------------------------------------------------------

class NoTarget(AgentError):
    """All grounding stages came up empty for the target description."""


# --- agent loop -----------------------------------------------------------

class PlannerFailure(AgentError):
    """Planner raised and no fallback rule applies."""


class NotScrollable(AgentError):
    """Extraction requested on a page without a scrollable list."""


class EmptyArtifact(AgentError):
    """Summary requested for an artifact with no records."""


class OrdinalOutOfRange(AgentError):
    """Follow-up ordinal exceeds the artifact's record count."""


class NoArtifact(AgentError):
    """Follow-up issued but the session holds no artifact."""


class OrdinalNotFound(AgentError):
    """Follow-up utterance contains no recognizable ordinal."""


# --- clone / replay -------------------------------------------------------

class AlreadyRecording(AgentError):
    """record start while a recording is active for the session."""


class NotRecording(AgentError):
    """record stop without an active recording."""


class FinalMismatch(AgentError):
    """Trajectory's final activity disagrees with the captured descriptor."""


class AllTiersFailed(AgentError):
    """Every replay tier failed to launch or validate."""


# --- host -----------------------------------------------------------------

class ParseError(AgentError):
    """Scenario file failed to parse or validate."""


class PortInUse(AgentError):
    """Requested server port is already bound."""
