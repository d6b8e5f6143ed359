"""Remote chat-completion backend with transcript recording and replay.

Requests follow the common chat-completion schema (``model``, ``messages``,
``temperature``) and the reply is read from ``choices[0].message.content``.
Every exchange can be appended to a JSON-lines transcript; a
:class:`ReplayChatClient` serves a transcript back without any network, keyed
by a hash of the request body so concurrent call order does not matter.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol, Sequence

import httpx

from ..actions import REJECT, Move, StructuredAction, parse_action_line
from ..comms import NegotiationSession, parse_move
from .base import BackendFailure, Policy, PromptContext
from .simple import rule_based_decide

log = logging.getLogger(__name__)

API_KEY_ENV = "SIM_LLM_API_KEY"
Messages = list[dict[str, str]]


@dataclass(frozen=True)
class LLMConfig:
    base_url: str = "http://127.0.0.1:8000/v1"
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    timeout: float = 30.0
    retries: int = 1
    max_in_flight: int = 4
    reflection_byte_cap: int = 1024


class ChatClient(Protocol):
    def complete(self, messages: Messages) -> str: ...


def request_body(config: LLMConfig, messages: Messages) -> dict[str, Any]:
    return {"model": config.model, "messages": messages, "temperature": config.temperature}


def request_key(body: dict[str, Any]) -> str:
    blob = json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class TranscriptWriter:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def record(self, body: dict[str, Any], response: str) -> None:
        line = json.dumps({"key": request_key(body), "request": body, "response": response},
                          sort_keys=True, ensure_ascii=False)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")


class HTTPChatClient:
    """Blocking client with a bounded number of in-flight requests,
    a per-request timeout, and ``config.retries`` retries."""

    def __init__(self, config: LLMConfig, transcript: TranscriptWriter | None = None,
                 api_key: str | None = None, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.transcript = transcript
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._http = httpx.Client(base_url=config.base_url.rstrip("/"), headers=headers,
                                  timeout=config.timeout, transport=transport)
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))

    def complete(self, messages: Messages) -> str:
        body = request_body(self.config, messages)
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                with self._slots:
                    resp = self._http.post("/chat/completions", json=body)
                resp.raise_for_status()
                content = resp.json()["choices"][0]["message"]["content"]
                if not isinstance(content, str):
                    raise ValueError("message content is not text")
                break
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last_error = exc
                log.warning("chat completion attempt %d failed: %s", attempt + 1, exc)
        else:
            raise BackendFailure(f"chat completion failed: {last_error}") from last_error
        if self.transcript is not None:
            self.transcript.record(body, content)
        return content

    def close(self) -> None:
        self._http.close()


class ReplayChatClient:
    """Answers requests from a recorded transcript; unknown requests fail."""

    def __init__(self, path: str | os.PathLike, config: LLMConfig | None = None):
        self.config = config or LLMConfig()
        self._answers: dict[str, deque[str]] = defaultdict(deque)
        self._lock = threading.Lock()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    self._answers[row["key"]].append(row["response"])

    def complete(self, messages: Messages) -> str:
        key = request_key(request_body(self.config, messages))
        with self._lock:
            queue = self._answers.get(key)
            if not queue:
                raise BackendFailure("request not found in transcript")
            return queue.popleft()


# --- prompts ------------------------------------------------------------------

SYSTEM_PROMPT = (
    "You are a player in a massively multiplayer online game with an in-game economy. "
    "Resources: EXP (experience, not tradable), MAT (material, tradable), TOK (in-game tokens), "
    "CCY (real currency), CAP (capability score), LAB (labor spent). "
    "Your goal is to raise CAP while staying true to your player profile."
)


def decision_messages(ctx: PromptContext) -> Messages:
    user = "\n\n".join([
        f"Your profile:\n{ctx.profile_text}",
        f"Current observation:\n{ctx.observation_text}",
        f"Recent trajectory (short-term memory):\n{ctx.stm_text}",
        f"Most relevant past experience:\n{ctx.ltm_reference_text}",
        f"Your current strategy:\n{ctx.reflection_text}",
        f"Execution feedback:\n{ctx.feedback_text}",
        f"Available actions:\n{ctx.action_catalog_text}",
        "Let's think step by step about what to do now. After your reasoning, end with one final line "
        "of the form\nACTION: <name> [target=<id>] [move=<offer|accept|reject|public>] [price=<p>]",
    ])
    return [{"role": "system", "content": SYSTEM_PROMPT}, {"role": "user", "content": user}]


REASK = ("Your reply did not end with a valid action line. Reply with exactly one line "
         "'ACTION: <name> [target=<id>] [move=<...>] [price=<p>]' and nothing else.")


def reflection_messages(window: Sequence[tuple[StructuredAction, Any]], sr_prev: str) -> Messages:
    lines = []
    for action, obs in window:
        step = getattr(obs, "step", "?")
        inv = getattr(obs, "inventory", None)
        near = len(getattr(obs, "nearby", ()) or ())
        state = (f"EXP {inv.exp}, MAT {inv.mat}, TOK {inv.tok}, CCY {inv.ccy}, CAP {inv.cap}, "
                 f"{near} resources nearby" if inv is not None else "")
        lines.append(f"step {step}: [{state}] -> {action}")
    user = (
        "Here are your most recent actions and the observations they were taken in:\n"
        + "\n".join(lines)
        + f"\n\nYour previous strategy:\n{sr_prev or 'none'}\n\n"
        "Let's think step by step: reflect on what worked and what did not, and how the environment "
        "is changing. Then state a short game strategy for the next period."
    )
    return [{"role": "system", "content": SYSTEM_PROMPT}, {"role": "user", "content": user}]


def negotiation_messages(session: NegotiationSession | None, ctx: PromptContext) -> Messages:
    book = ctx.observation.auction
    market = (f"Auction reference: best bid {book.best_bid if book.best_bid is not None else 'none'}, "
              f"best ask {book.best_ask if book.best_ask is not None else 'none'} TOK per MAT.")
    if session is None:
        situation = "You are opening a private negotiation over 1 MAT. Propose a price."
    else:
        history = "\n".join(f"agent {who}: {body}" for who, body in session.history)
        situation = f"{session.render(ctx.agent)}\nHistory:\n{history}"
    user = (
        f"Your profile:\n{ctx.profile_text}\n\nYour inventory: {ctx.observation.text.splitlines()[1]}\n"
        f"{market}\n\n{situation}\n\n"
        "Combine what the auction tells you with your bargaining goals. Reply with exactly one of: "
        "'OFFER <price>', 'ACCEPT', or 'REJECT'."
    )
    return [{"role": "system", "content": SYSTEM_PROMPT}, {"role": "user", "content": user}]


def truncate_bytes(text: str, cap: int) -> str:
    raw = text.encode("utf-8")
    if len(raw) <= cap:
        return text
    return raw[:cap].decode("utf-8", errors="ignore")


def llm_decide(ctx: PromptContext, client: ChatClient,
               warnings: list[str] | None = None) -> StructuredAction:
    warnings = [] if warnings is None else warnings
    messages = decision_messages(ctx)
    reply = client.complete(messages)
    action, notes = parse_action_line(reply)
    if action is None:
        messages = messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": REASK}]
        reply = client.complete(messages)
        action, notes = parse_action_line(reply)
    if action is None:
        warnings.append(f"unparseable reply after re-ask ({'; '.join(notes)}); using rule-based fallback")
        return rule_based_decide(ctx)
    warnings.extend(notes)
    return action


def llm_reflect(window, sr_prev: str, client: ChatClient, byte_cap: int = 1024) -> str:
    return truncate_bytes(client.complete(reflection_messages(window, sr_prev)).strip(), byte_cap)


def llm_negotiate(session: NegotiationSession | None, ctx: PromptContext, client: ChatClient,
                  warnings: list[str] | None = None) -> Move:
    warnings = [] if warnings is None else warnings
    move, notes = parse_move(client.complete(negotiation_messages(session, ctx)))
    warnings.extend(notes)
    if move is None or (session is None and move.kind.value != "offer"):
        warnings.append("unparseable negotiation reply; rejecting")
        return REJECT
    return move


class RemoteLLMPolicy(Policy):
    name = "llm"

    def __init__(self, client: ChatClient, reflection_byte_cap: int = 1024):
        super().__init__()
        self.client = client
        self.reflection_byte_cap = reflection_byte_cap

    def decide(self, ctx: PromptContext) -> StructuredAction:
        return llm_decide(ctx, self.client, self.warnings)

    def reflect(self, window, sr_prev: str) -> str:
        return llm_reflect(window, sr_prev, self.client, self.reflection_byte_cap)

    def negotiate(self, session, ctx) -> Move:
        return llm_negotiate(session, ctx, self.client, self.warnings)
