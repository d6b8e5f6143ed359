"""Pluggable decision backends."""

from .base import BackendFailure, Policy, PromptContext
from .llm import (
    HTTPChatClient, LLMConfig, RemoteLLMPolicy, ReplayChatClient, TranscriptWriter,
    llm_decide, llm_negotiate, llm_reflect,
)
from .simple import (
    PERSONA_SCRIPTS, RandomPolicy, RuleBasedPolicy, ScriptedPolicy, ScriptStep,
    default_persona, grinder_script, pay_to_win_script, random_decide, rule_based_decide,
)

__all__ = [
    "BackendFailure", "Policy", "PromptContext", "HTTPChatClient", "LLMConfig", "RemoteLLMPolicy",
    "ReplayChatClient", "TranscriptWriter", "llm_decide", "llm_negotiate", "llm_reflect",
    "PERSONA_SCRIPTS", "RandomPolicy", "RuleBasedPolicy", "ScriptedPolicy", "ScriptStep",
    "default_persona", "grinder_script", "pay_to_win_script", "random_decide", "rule_based_decide",
]
