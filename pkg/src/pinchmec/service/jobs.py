"""In-memory job registry for long-running sweeps."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field


@dataclass
class Job:
    job_id: str
    state: str = "queued"  # queued | running | done | failed
    result: object = None
    error_kind: str | None = None
    error: str | None = None


@dataclass
class JobStore:
    _jobs: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def submit(self, work, classify_error) -> Job:
        """Run ``work`` on a daemon thread; ``classify_error`` maps exceptions
        to an error kind string."""
        job = Job(job_id=uuid.uuid4().hex)
        with self._lock:
            self._jobs[job.job_id] = job

        def runner():
            job.state = "running"
            try:
                job.result = work()
                job.state = "done"
            except Exception as exc:
                job.error_kind = classify_error(exc)
                job.error = str(exc)
                job.state = "failed"

        threading.Thread(target=runner, daemon=True).start()
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def running_count(self) -> int:
        with self._lock:
            return sum(1 for job in self._jobs.values() if job.state == "running")
