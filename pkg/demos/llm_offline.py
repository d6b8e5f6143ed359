"""Drive the LLM backend against a local stand-in server, then replay it.

A tiny HTTP server speaks the chat-completion wire format and answers with
canned replies (some of them deliberately malformed, to exercise the re-ask
and fallback paths). The first run records every exchange to a transcript;
the second run serves the same answers from that transcript with no server
at all and must produce an identical trace.
"""

from __future__ import annotations

import hashlib
import json
import logging
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from mmoecon.policy import LLMConfig
from mmoecon.sim import make_config, read_trace, run_repetition

REPLIES = (
    "There is MAT right next to me.\nACTION: Task",
    "ACTION: Upgrade",
    "ACTION: Recharge",
    "ACTION: AuctionSell price=6",
    "ACTION: AuctionBuy price=6.5",
    "hmm, let me think about that",
)


class FakeChat(BaseHTTPRequestHandler):
    def do_POST(self) -> None:
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        prompt = body["messages"][-1]["content"]
        pick = int(hashlib.sha256(prompt.encode()).hexdigest(), 16)
        if "state a short game strategy" in prompt:
            content = "collect what is close, sell spare MAT near the best ask"
        elif "Reply with exactly one of" in prompt:
            content = ("ACCEPT", "OFFER 6", "REJECT")[pick % 3]
        elif prompt.startswith("Your reply did not end"):
            content = "ACTION: Task"
        else:
            content = REPLIES[pick % len(REPLIES)]
        data = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args) -> None:
        pass


def main() -> None:
    logging.basicConfig(level=logging.ERROR)  # warnings are in the trace; keep stderr quiet
    server = ThreadingHTTPServer(("127.0.0.1", 0), FakeChat)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    llm = LLMConfig(base_url=f"http://127.0.0.1:{server.server_port}/v1", model="stand-in")
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        live = make_config("moderate", agents=4, steps=30, repetitions=1, backend="llm", llm=llm,
                           output_dir=str(root / "live"))
        run_repetition(live, 0)
        server.shutdown()
        replay = make_config("moderate", agents=4, steps=30, repetitions=1, backend="llm", llm=llm,
                             output_dir=str(root / "replay"), llm_replay=str(root / "live" / "moderate"))
        run_repetition(replay, 0)

        a = root / "live/moderate/rep_0/trace.jsonl"
        b = root / "replay/moderate/rep_0/trace.jsonl"
        events = read_trace(a)
        warnings = [e["payload"]["message"] for e in events if e["kind"] == "Warning"]
        exchanges = len((root / "live/moderate/rep_0/transcript.jsonl").read_text().splitlines())
        print(f"recorded {exchanges} exchanges, {len(events)} trace events, {len(warnings)} warnings")
        for w in sorted(set(warnings))[:5]:
            print("  warning:", w)
        print("replay identical:", a.read_bytes() == b.read_bytes())


if __name__ == "__main__":
    main()
