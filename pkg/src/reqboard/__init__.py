"""reqboard: a forum engine for collecting and managing community requirements.

Library core (topics, templates, duplicate screening, lifecycle, polls,
negotiation chat, incentives) plus an HTTP service and admin CLI.
"""

from .config import Config
from .engine import ForumEngine
from .errors import ForumError
from .store import FileStore, MemoryStore, open_store

__version__ = "0.1.0"

__all__ = [
    "Config",
    "ForumEngine",
    "ForumError",
    "FileStore",
    "MemoryStore",
    "open_store",
    "__version__",
]
