from score.anosov.pool import WorkerPool
import pytest
import threading
import time


def test_results_in_submission_order():
    def slow_square(x):
        time.sleep(0.01 * (5 - x))
        return x * x
    results = WorkerPool(4).map(slow_square, range(5))
    assert results == [0, 1, 4, 9, 16]


def test_single_worker_stays_on_calling_thread():
    threads = WorkerPool(1).map(lambda _: threading.get_ident(), range(3))
    assert threads == [threading.get_ident()] * 3


def test_needs_a_worker():
    with pytest.raises(ValueError):
        WorkerPool(0)


def test_job_errors_propagate():
    def fail_on_two(x):
        if x == 2:
            raise KeyError(x)
        return x
    with pytest.raises(KeyError):
        WorkerPool(3).map(fail_on_two, range(4))
