from .app import create_app
from .events import AdherenceEvent, EventLog, EventLogError
from .service import GatewayError, GatewayService

__all__ = [
    "AdherenceEvent",
    "EventLog",
    "EventLogError",
    "GatewayError",
    "GatewayService",
    "create_app",
]
