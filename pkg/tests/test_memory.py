from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmoecon.actions import TASK, UPGRADE
from mmoecon.agent.memory import (
    LongTermMemory, MemoryConfig, SchemaMismatch, ShortTermMemory, ltm_decay, ltm_read,
    ltm_write, similarity, write_scores,
)

from oracles import brute_force_read, similarity_scalar

vectors = st.lists(st.integers(0, 20), min_size=13, max_size=13)


def vec(*head):
    v = np.zeros(13)
    v[:len(head)] = head
    return v


class FakeObs:
    def __init__(self, step, embedding):
        self.step = step
        self.embedding = np.asarray(embedding, dtype=float)


class TestSimilarity:
    def test_identical(self):
        assert similarity(vec(3, 1, 4), vec(3, 1, 4)) == 1.0

    def test_worked_example(self):
        assert similarity(vec(2, 4), vec(1, 4)) == pytest.approx(0.5, abs=1e-12)

    def test_all_zero(self):
        assert similarity(vec(), vec()) == 1.0

    def test_schema_mismatch(self):
        with pytest.raises(SchemaMismatch):
            similarity(np.zeros(13), np.zeros(12))

    @settings(max_examples=200, deadline=None)
    @given(vectors, vectors)
    def test_properties(self, x, y):
        s = similarity(x, y)
        assert s == pytest.approx(similarity(y, x), abs=1e-15)
        assert 0.0 <= s <= 1.0
        assert (s == 1.0) == (x == y)
        assert s == pytest.approx(similarity_scalar(x, y), abs=1e-12)


class TestRead:
    def test_empty(self):
        assert ltm_read(LongTermMemory(), vec(1)) is None

    def test_importance_can_beat_similarity(self):
        ltm = LongTermMemory()
        q = vec(10)
        a = ltm.add(vec(8), TASK, 0.5)[1]   # similarity 0.8
        ltm.add(vec(9), UPGRADE, 0.1)       # similarity 0.9, but below the merge threshold
        assert ltm.read(q) is a

    def test_tie_goes_to_newer(self):
        ltm = LongTermMemory(MemoryConfig(accumulation_sim_threshold=1.0))
        ltm.add(vec(5), TASK, 1.0)
        newer = ltm.add(vec(0, 5), UPGRADE, 1.0)[1]
        # query equidistant from both
        assert ltm.read(vec(5, 5)) is newer

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(vectors, st.floats(0.2, 5)), min_size=1, max_size=20), vectors)
    def test_matches_brute_force(self, entries, query):
        ltm = LongTermMemory(MemoryConfig(accumulation_sim_threshold=1.0, ltm_capacity=50))
        for emb, score in entries:
            ltm.add(emb, TASK, score)
        rec = ltm.read(query)
        ref = brute_force_read([(r.seq, r.embedding, r.score) for r in ltm.records], query)
        assert rec.seq == ref


class TestWrite:
    def test_discounted_scores(self):
        assert write_scores(10, 0.9, 5) == pytest.approx([9, 8.1, 7.29, 6.561, 5.9049], abs=1e-9)

    def test_writes_per_entry(self):
        stm = ShortTermMemory()
        for t in range(7):
            stm.push(FakeObs(t, vec(t * 10)), TASK)  # mutually dissimilar
        ltm = LongTermMemory()
        out = ltm.write(stm, 10, step=7)
        scores = {r.embedding[0]: r.score for r in ltm.records}
        # newest STM entry (t=6) is one step back from the reward
        assert scores == pytest.approx({60: 9, 50: 8.1, 40: 7.29, 30: 6.561, 20: 5.9049})
        assert [o for o, _, _ in out] == ["inserted"] * 5

    def test_short_stm(self):
        stm = ShortTermMemory()
        stm.push(FakeObs(0, vec(1)), TASK)
        stm.push(FakeObs(1, vec(50)), TASK)
        ltm = LongTermMemory()
        ltm.write(stm, 10)
        assert len(ltm) == 2

    def test_no_write_without_reward(self):
        stm = ShortTermMemory()
        stm.push(FakeObs(0, vec(1)), TASK)
        ltm = LongTermMemory()
        assert ltm.write(stm, 0) == [] and len(ltm) == 0

    def test_accumulates_into_similar(self):
        ltm = LongTermMemory()
        first = ltm.add(vec(20), TASK, 1.0)[1]
        outcome, rec = ltm.add(vec(19), UPGRADE, 2.0)  # similarity 0.95
        assert outcome == "accumulated" and rec is first
        assert len(ltm) == 1 and first.score == pytest.approx(3.0)

    def test_accumulates_into_first_match(self):
        ltm = LongTermMemory()
        a = ltm.add(vec(20), TASK, 1.0)[1]
        b = ltm.add(vec(17), TASK, 1.0)[1]  # similarity 0.85 to a: kept separate
        assert len(ltm) == 2
        outcome, rec = ltm.add(vec(18.5), TASK, 0.5)  # >= 0.9 to both
        assert similarity(vec(18.5), vec(20)) >= 0.9 and similarity(vec(18.5), vec(17)) >= 0.9
        assert rec is a and a.score == pytest.approx(1.5) and b.score == 1.0

    def test_capacity_evicts_lowest(self):
        ltm = LongTermMemory(MemoryConfig(ltm_capacity=3))
        for i, s in enumerate((5.0, 1.0, 3.0, 4.0)):
            ltm.add(vec(10 ** i), TASK, s)
        assert sorted(r.score for r in ltm.records) == [3.0, 4.0, 5.0]

    def test_functional_wrappers(self):
        stm = ShortTermMemory()
        stm.push(FakeObs(0, vec(4)), TASK)
        ltm = ltm_write(LongTermMemory(), stm, 10)
        assert len(ltm_decay(ltm)) == 1


class TestDecay:
    def test_one_step(self):
        ltm = LongTermMemory()
        rec = ltm.add(vec(1), TASK, 1.0)[1]
        ltm.decay()
        assert rec.score == pytest.approx(0.951229424500714, abs=1e-12)

    def test_evicted_on_33rd_decay(self):
        ltm = LongTermMemory()
        ltm.add(vec(1), TASK, 1.0)
        for k in range(1, 33):
            assert ltm.decay() == []
            assert ltm.records[0].score == pytest.approx(math.exp(-k / 20), rel=1e-9)
        assert len(ltm.decay()) == 1 and len(ltm) == 0

    def test_below_threshold_goes_immediately(self):
        ltm = LongTermMemory()
        ltm.records.append(type(ltm.add(vec(1), TASK, 1.0)[1])(vec(2), TASK, 0.1))
        evicted = ltm.decay()
        assert [r.embedding[0] for r in evicted] == [2]

    def test_new_entry_below_threshold_is_dropped(self):
        ltm = LongTermMemory()
        assert ltm.add(vec(1), TASK, 0.1) == ("dropped", None)


class TestSTM:
    def test_capacity(self):
        stm = ShortTermMemory(10)
        for t in range(13):
            stm.push(FakeObs(t, vec(t)), TASK)
        assert len(stm) == 10
        assert [o.step for o, _ in stm] == list(range(3, 13))


def test_config_validation():
    with pytest.raises(ValueError):
        MemoryConfig(gamma=0)
    with pytest.raises(ValueError):
        MemoryConfig(strength=0)
    with pytest.raises(ValueError):
        MemoryConfig(eviction_threshold=1.5)
