"""Tests for the job runner"""

import pytest

from ledgertopo.pipeline import WeekJob, motif_job
from ledgertopo.utils.parallel import run_jobs
from tests.helpers.factories import record, window


def square(value: int) -> int:
    return value * value


@pytest.mark.parametrize("workers", [1, 2, 8])
def test_results_keep_job_order(workers: int) -> None:
    assert run_jobs(square, range(10), workers) == [v * v for v in range(10)]


def test_empty_and_single_job() -> None:
    assert run_jobs(square, [], 4) == []
    assert run_jobs(square, [3], 4) == [9]


def test_week_jobs_match_across_worker_counts() -> None:
    """Test that motif censuses do not depend on the process count"""
    jobs = [
        WeekJob(
            window(
                [
                    record(0, "a", "b", 5.0 + week),
                    record(1, "b", "a", 4.0),
                    record(2, "b", "c", 3.0),
                    record(3, "c", "a", 2.0 + week),
                ],
                week,
            ),
            top_fraction=1.0,
        )
        for week in range(4)
    ]
    serial = run_jobs(motif_job, jobs, 1)
    assert run_jobs(motif_job, jobs, 2) == serial
    assert [c.week for c in serial] == [0, 1, 2, 3]
