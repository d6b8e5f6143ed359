"""The multi-agent step loop and repetition orchestration.

Each step: freeze a snapshot and parse every agent's observation, collect all
decisions against that snapshot, then resolve them one agent at a time in a
seeded random order (one in-step retry on failure), and finally update
memories and, every ``reflection_period`` steps, reflect.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..actions import ActionKind, StructuredAction
from ..agent.core import MMOAgent, reward_of
from ..agent.observation import Observation, parse_observation
from ..agent.profiles import AgentProfile, assign_profiles
from ..comms import ChatHub, expire
from ..economy import ResourceLedger
from ..market import OrderBook, Venue, expire_orders
from ..metrics import RunMetrics, empty_histogram, per_step_mean_prices
from ..policy.base import BackendFailure, Policy
from ..policy.llm import HTTPChatClient, RemoteLLMPolicy, ReplayChatClient, TranscriptWriter
from ..policy.simple import PERSONA_SCRIPTS, RandomPolicy, RuleBasedPolicy, default_persona
from ..world import generate_world
from .config import SimConfig
from .resolver import ApplyResult, apply_action
from .state import SimState
from .trace import TraceWriter

log = logging.getLogger(__name__)

PolicyFactory = Callable[[int, AgentProfile, np.random.Generator], Policy]
NOOP = "NoOp"


class Simulation:
    def __init__(self, config: SimConfig, repetition: int = 0, trace: TraceWriter | None = None,
                 policy_factory: PolicyFactory | None = None, chat_client=None,
                 transcript: TranscriptWriter | None = None):
        self.config = config
        self.repetition = repetition
        self.trace = trace if trace is not None else TraceWriter(repetition=repetition)
        self._policy_factory = policy_factory
        self._chat_client = chat_client
        self._transcript = transcript

        world_ss, profile_ss, order_ss, agent_ss = np.random.SeedSequence([config.seed, repetition]).spawn(4)
        scenario = dataclasses.replace(config.scenario, seed=int(world_ss.generate_state(1)[0]))
        grid = generate_world(scenario)
        self.ids = list(range(config.agents))
        center = (grid.width // 2, grid.height // 2)
        for a in self.ids:
            grid.place_agent(a, center)
        self.state = SimState(
            grid=grid,
            ledgers={a: ResourceLedger(ccy=config.initial_ccy) for a in self.ids},
            book=OrderBook(),
            comms=ChatHub(tuple(self.ids), config.max_rounds),
            shop_price=config.shop_price,
            visibility_radius=scenario.visibility_radius,
            explore_cap=scenario.explore_cap,
            book_depth=config.book_depth,
            ccy_spent={a: 0 for a in self.ids},
            upgrades={a: 0 for a in self.ids},
        )
        profiles = assign_profiles(config.agents, config.profile_weights, np.random.default_rng(profile_ss))
        rngs = [np.random.default_rng(s) for s in agent_ss.spawn(config.agents)]
        self.agents = {
            a: MMOAgent(a, profiles[a], self._make_policy(a, profiles[a], rngs[a]), config.memory)
            for a in self.ids
        }
        self._perm_rng = np.random.default_rng(order_ss)
        self.histograms = {a: empty_histogram() for a in self.ids}
        self.gap_series: list[tuple[int, int]] = []
        # invocation order of decide calls; resolution order is the seeded permutation
        self.decide_order: Sequence[int] = self.ids
        self.trace.emit(0, None, "World", {
            "width": grid.width, "height": grid.height,
            "resources": [[k, x, y] for k, x, y in grid.resource_coords()],
            "profiles": {str(a): self.agents[a].profile.name for a in self.ids},
            "backends": {str(a): self.agents[a].policy.name for a in self.ids},
        })

    # --- setup ---------------------------------------------------------------

    def _llm_client(self):
        if self._chat_client is None:
            cfg = self.config
            if cfg.llm_replay:
                path = Path(cfg.llm_replay)
                if path.is_dir():
                    path = path / f"rep_{self.repetition}" / "transcript.jsonl"
                self._chat_client = ReplayChatClient(path, cfg.llm)
            else:
                self._chat_client = HTTPChatClient(cfg.llm, self._transcript)
        return self._chat_client

    def _make_policy(self, agent: int, profile: AgentProfile, rng: np.random.Generator) -> Policy:
        if self._policy_factory is not None:
            return self._policy_factory(agent, profile, rng)
        kind = self.config.backend_for(agent)
        if kind == "random":
            return RandomPolicy(rng)
        if kind == "rule":
            return RuleBasedPolicy(profile)
        if kind == "scripted":
            persona = self.config.scripted_personas.get(profile.name) or default_persona(profile)
            return PERSONA_SCRIPTS[persona]()
        if kind == "llm":
            return RemoteLLMPolicy(self._llm_client(), self.config.llm.reflection_byte_cap)
        raise ValueError(f"unknown backend {kind!r}")

    # --- one step ------------------------------------------------------------

    def _warn(self, agent: int | None, message: str) -> None:
        log.warning("step %d agent %s: %s", self.state.step, agent, message)
        self.trace.emit(self.state.step, agent, "Warning", {"message": message})

    def _flush_warnings(self, agent: int) -> None:
        for message in self.agents[agent].policy.drain_warnings():
            self._warn(agent, message)

    def _decide_one(self, a: int, obs: Observation):
        agent = self.agents[a]
        try:
            return agent.decide(obs, agent.last_feedback, False, shop_price=self.state.shop_price,
                                agents=tuple(self.ids))
        except BackendFailure as exc:
            return exc

    def _decide_all(self, observations: dict[int, Observation]) -> dict[int, object]:
        order = list(self.decide_order)
        if self.config.max_workers > 1:
            with ThreadPoolExecutor(self.config.max_workers) as pool:
                futures = {a: pool.submit(self._decide_one, a, observations[a]) for a in order}
                return {a: futures[a].result() for a in order}
        return {a: self._decide_one(a, observations[a]) for a in order}

    def _fill_move(self, a: int, action: StructuredAction, obs: Observation) -> StructuredAction:
        if action.kind is not ActionKind.P2P or action.move is not None:
            return action
        comms = self.state.comms
        session = comms.oldest_awaiting(a) if action.target is None else comms.active_between(a, action.target)
        if session is not None and session.next_mover != a:
            session = None
        agent = self.agents[a]
        try:
            move = agent.policy.negotiate(session, agent.context(obs, shop_price=self.state.shop_price))
        except BackendFailure as exc:
            self._warn(a, f"negotiation backend failed: {exc}")
            if session is not None:
                comms.sessions[session.session_id] = expire(session, self.state.step)
            return action
        finally:
            self._flush_warnings(a)
        return dataclasses.replace(action, move=move)

    def _emit_result(self, a: int, res: ApplyResult, attempt: int) -> None:
        t = self.state.step
        self.trace.emit(t, a, "Feedback", {"attempt": attempt, **res.feedback.to_dict()})
        for trade in res.trades:
            self.trace.emit(t, a, "Trade", trade.to_dict())
        for msg in res.messages:
            self.trace.emit(t, a, "Chat", msg.to_dict())

    def _resolve(self, a: int, obs: Observation, decision) -> StructuredAction | None:
        agent = self.agents[a]
        if isinstance(decision, BackendFailure):
            agent.last_feedback = None
            return None
        action = self._fill_move(a, decision, obs)
        res = apply_action(self.state, a, action)
        self._emit_result(a, res, 0)
        agent.last_feedback = res.feedback
        if res.feedback.success:
            return action
        try:
            retry = agent.decide(obs, res.feedback, True, shop_price=self.state.shop_price, agents=tuple(self.ids))
        except BackendFailure as exc:
            self._warn(a, f"backend failed on retry: {exc}")
            return action
        finally:
            self._flush_warnings(a)
        retry = self._fill_move(a, retry, obs)
        res = apply_action(self.state, a, retry)
        self._emit_result(a, res, 1)
        agent.last_feedback = res.feedback
        return retry

    def step(self) -> None:
        state, cfg, t = self.state, self.config, self.state.step
        for order in expire_orders(state.book, t, cfg.order_ttl, state.ledgers):
            self.trace.emit(t, order.owner, "Feedback", {"attempt": -1, "expired_order": order.order_id})
        for session in state.comms.expire_stale(t, cfg.session_timeout):
            self.trace.emit(t, None, "Chat", {"session": session.to_dict()})

        observations = {a: parse_observation(state, a, state.comms.drain(a)) for a in self.ids}
        decisions = self._decide_all(observations)
        for a in self.ids:
            self._flush_warnings(a)
            d = decisions[a]
            if isinstance(d, BackendFailure):
                self._warn(a, f"backend failure, step is a no-op: {d}")
            else:
                self.trace.emit(t, a, "Decision", d.to_dict())

        final: dict[int, StructuredAction | None] = {}
        for a in self._perm_rng.permutation(self.ids).tolist():
            final[a] = self._resolve(a, observations[a], decisions[a])

        for a in self.ids:
            agent, obs = self.agents[a], observations[a]
            agent.ltm.decay()
            reward = reward_of(obs.inventory, state.ledgers[a])
            if reward > 0:
                writes = agent.ltm.write(agent.stm, reward, t)
                self.trace.emit(t, a, "MemoryWrite", {
                    "reward": reward,
                    "writes": [{"outcome": o, "score": s, "record": r.seq if r else None} for o, r, s in writes],
                })
            action = final[a]
            if action is None:
                self.histograms[a][NOOP] = self.histograms[a].get(NOOP, 0) + 1
            else:
                agent.remember(obs, action)
                self.histograms[a][action.kind.value] += 1
            if cfg.trace_memory:
                self.trace.emit(t, a, "MemoryDump", {"stm": len(agent.stm), "ltm": agent.ltm.dump()})
            if (t + 1) % cfg.memory.reflection_period == 0:
                strategy, err = agent.reflect()
                self._flush_warnings(a)
                if err:
                    self._warn(a, f"reflection failed, keeping previous strategy: {err}")
                self.trace.emit(t, a, "Reflection", {"strategy": strategy})

        self.gap_series.append((t, len(state.book.bids) - len(state.book.asks)))
        self.trace.emit(t, None, "Ledger", {
            "ledgers": {str(a): state.ledgers[a].as_dict() for a in self.ids},
            "escrow": {str(a): e for a, e in sorted(state.book.escrow.items())},
        })
        state.step += 1

    def run(self, steps: int | None = None, hook: Callable[[Simulation], None] | None = None) -> RunMetrics:
        for _ in range(self.config.steps if steps is None else steps):
            self.step()
            if hook is not None:
                hook(self)
        return self.metrics()

    def metrics(self) -> RunMetrics:
        s = self.state
        return RunMetrics(
            steps=s.step,
            final_cap={a: s.ledgers[a].cap for a in self.ids},
            ccy_spent=dict(s.ccy_spent),
            action_histogram={a: {k: v for k, v in h.items() if v or k != NOOP} for a, h in self.histograms.items()},
            auction_prices=per_step_mean_prices(s.trades, Venue.AUCTION),
            p2p_prices=per_step_mean_prices(s.trades, Venue.P2P),
            gap_series=list(self.gap_series),
            trades=list(s.trades),
            profiles={a: self.agents[a].profile.name for a in self.ids},
        )


# --- files ----------------------------------------------------------------------

def rep_dir(config: SimConfig, repetition: int) -> Path | None:
    if config.output_dir is None:
        return None
    return Path(config.output_dir) / config.scenario_name / f"rep_{repetition}"


def write_metrics(metrics: RunMetrics, directory: Path, repetition: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repetition", "metric", "value"])
        for name, value in metrics.summary().items():
            w.writerow([repetition, name, "" if value is None else repr(float(value))])
    with open(directory / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "step", "value"])
        for name, series in (("auction_price", metrics.auction_prices), ("p2p_price", metrics.p2p_prices),
                             ("demand_supply_gap", metrics.gap_series)):
            for step, value in series:
                w.writerow([name, step, value])
    with open(directory / "agents.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "profile", "final_cap", "ccy_spent", "actions"])
        for a in sorted(metrics.final_cap):
            w.writerow([a, metrics.profiles.get(a, ""), metrics.final_cap[a], metrics.ccy_spent[a],
                        json.dumps(metrics.action_histogram[a], sort_keys=True)])


def run_repetition(config: SimConfig, repetition: int, policy_factory: PolicyFactory | None = None,
                   chat_client=None, hook: Callable[[Simulation], None] | None = None) -> RunMetrics:
    out = rep_dir(config, repetition)
    transcript = None
    if config.backend_for(0) == "llm" or not isinstance(config.backend, str):
        if config.llm_transcript:
            transcript = TranscriptWriter(config.llm_transcript)
        elif out is not None and not config.llm_replay:
            transcript = TranscriptWriter(out / "transcript.jsonl")
            if transcript.path.exists():
                transcript.path.unlink()
    with TraceWriter(out / "trace.jsonl" if out else None, repetition) as trace:
        sim = Simulation(config, repetition, trace, policy_factory, chat_client, transcript)
        metrics = sim.run(hook=hook)
    if out is not None:
        write_metrics(metrics, out, repetition)
    return metrics


def run(config: SimConfig, policy_factory: PolicyFactory | None = None, chat_client=None,
        hook: Callable[[Simulation], None] | None = None, workers: int = 1) -> list[RunMetrics]:
    """Run every repetition; repetitions are independent and may use a process pool."""
    if config.output_dir is not None:
        root = Path(config.output_dir) / config.scenario_name
        root.mkdir(parents=True, exist_ok=True)
        (root / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True, default=str))
    reps = range(config.repetitions)
    if workers > 1 and policy_factory is None and chat_client is None and hook is None:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(run_repetition, [config] * len(reps), reps))
    return [run_repetition(config, r, policy_factory, chat_client, hook) for r in reps]
