from .backends import (
    AgentBackend,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    HttpBackend,
    MessagePart,
    ScriptedBackend,
)
from .heuristic import HeuristicBackend, run_heuristic
from .loop import LoopConfig, run_pipeline, single_agent_pipeline

__all__ = [
    "AgentBackend",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "HeuristicBackend",
    "HttpBackend",
    "LoopConfig",
    "MessagePart",
    "ScriptedBackend",
    "run_heuristic",
    "run_pipeline",
    "single_agent_pipeline",
]
