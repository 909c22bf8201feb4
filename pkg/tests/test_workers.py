"""Ordered thread-pool map and sub-seeds."""

import time

from spikelab.workers import SEED_MASK, ordered_map, sub_seed


def test_sub_seed_is_xor():
    assert sub_seed(0, 5) == 5
    assert sub_seed(6, 3) == 5
    assert sub_seed(SEED_MASK, 1) == SEED_MASK - 1


def test_results_keep_task_order():
    def slow_first(k):
        time.sleep(0.02 * (5 - k))
        return k * k

    assert ordered_map(slow_first, range(6), workers=4) == [0, 1, 4, 9, 16, 25]


def test_inline_and_threaded_agree():
    tasks = [3, 1, 2]
    assert ordered_map(str, tasks, workers=1) == ordered_map(str, tasks, workers=3) == ["3", "1", "2"]


def test_empty_task_list():
    assert ordered_map(str, [], workers=4) == []
