import numpy as np
import pytest

from mtrl.envs import Transition
from mtrl.replay import (NotReadyError, ReplayMemory, dump_transitions, load_transitions, push,
                         sample_multitask)


def tr(i, task=0, cont=False):
    a = np.array([0.1 * i]) if cont else i % 3
    return Transition(np.array([float(i), 0.0]), a, float(i), np.array([i + 1.0, 0.0]), i % 7 == 0,
                      task=task)


def test_fifo_eviction():
    mem = ReplayMemory(5, task=0)
    for i in range(6):
        push(mem, tr(i))
    assert len(mem) == 5
    assert [t.r for t in mem.transitions()] == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_single_push():
    mem = ReplayMemory(5000, warmup=100)
    mem.push(tr(1))
    assert len(mem) == 1 and not mem.ready


def test_task_mismatch():
    with pytest.raises(ValueError):
        ReplayMemory(4, task=1).push(tr(0, task=2))


def test_not_ready():
    mems = [ReplayMemory(10, warmup=3, task=t) for t in range(2)]
    for i in range(3):
        mems[0].push(tr(i, 0))
    mems[1].push(tr(0, 1))
    with pytest.raises(NotReadyError):
        sample_multitask(mems, 2, np.random.default_rng(0))


def test_composition_exact():
    mems = [ReplayMemory(200, warmup=100, task=t) for t in range(5)]
    for t, m in enumerate(mems):
        for i in range(150):
            m.push(tr(i, t))
    batch = sample_multitask(mems, 100, np.random.default_rng(0))
    assert [len(b) for b in batch] == [100] * 5
    assert [b.task for b in batch] == list(range(5))
    again = sample_multitask(mems, 100, np.random.default_rng(0))
    assert all(np.array_equal(a.s, b.s) for a, b in zip(batch, again))


def test_uniform_sampling():
    mem = ReplayMemory(10)
    for i in range(10):
        mem.push(tr(i))
    b = mem.sample(100_000, np.random.default_rng(1))
    counts = np.bincount(b.r.astype(int), minlength=10)
    sigma = np.sqrt(100_000 * 0.1 * 0.9)
    assert np.all(np.abs(counts - 10_000) < 3 * sigma)


def test_dump_load(tmp_path):
    items = [tr(i, 1) for i in range(4)] + [tr(i, 1, cont=True) for i in range(2)]
    dump_transitions(items, tmp_path / "log.jsonl")
    back = load_transitions(tmp_path / "log.jsonl")
    assert len(back) == 6
    for a, b in zip(items, back):
        assert np.array_equal(a.s, b.s) and np.array_equal(np.asarray(a.a), np.asarray(b.a))
        assert a.r == b.r and a.absorbing == b.absorbing and b.task == 1


def test_bad_sizes():
    with pytest.raises(ValueError):
        ReplayMemory(0)
    with pytest.raises(ValueError):
        ReplayMemory(5, warmup=6)
