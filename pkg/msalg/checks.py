"""
Check aggregation module

Verdict operations run as independent jobs; the runner executes them
concurrently, turns domain errors into ``error`` outcomes and folds the
overall status. Outcomes keep submission order.
"""
import asyncio
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from .config import settings
from .errors import MsalgError
from .logging_config import LoggerMixin
from .metrics import metrics_collector
from .models import CheckOutcome, CheckStatus


@dataclass
class Verdict:
    """Result of one verdict operation

    ``algebras`` keeps the computed structures for post-mortem inspection;
    only ``facts`` and ``witness`` reach the report.
    """
    name: str
    passed: bool
    facts: Dict[str, Any] = field(default_factory=dict)
    witness: Dict[str, Any] = field(default_factory=dict)
    algebras: Dict[str, Any] = field(default_factory=dict)
    message: Optional[str] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_outcome(self, subject: str, duration: float = 0.0) -> CheckOutcome:
        witness = dict(self.facts)
        witness.update(self.witness)
        return CheckOutcome(
            name=self.name,
            subject=subject,
            status=CheckStatus.PASSED if self.passed else CheckStatus.FAILED,
            message=self.message,
            witness=witness,
            duration=duration,
        )


def all_of(name: str, verdicts: List[Verdict]) -> Verdict:
    """Conjunction of several verdicts; the first failure supplies the witness"""
    failed = [v for v in verdicts if not v.passed]
    facts = {"parts": len(verdicts), "failed_parts": len(failed)}
    if failed:
        first = failed[0]
        return Verdict(name, False, facts, {"failed": first.name, **first.facts, **first.witness},
                       message=first.message)
    return Verdict(name, True, facts)


@dataclass
class CheckJob:
    name: str
    subject: str
    run: Callable[[], Verdict]


class CheckRunner(LoggerMixin):
    """Concurrent check executor"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = max(1, workers or settings.CHECK_WORKERS)

    def _run_one(self, job: CheckJob) -> CheckOutcome:
        start_time = time.time()
        try:
            verdict = job.run()
            outcome = verdict.to_outcome(job.subject, time.time() - start_time)
        except MsalgError as e:
            self.log_error(e, {"check": job.name, "subject": job.subject})
            outcome = CheckOutcome(
                name=job.name,
                subject=job.subject,
                status=CheckStatus.ERROR,
                message=f"{e.code}: {e.message}",
                witness={"code": e.code, **e.witness},
                duration=time.time() - start_time,
            )
        metrics_collector.record_check(job.name, outcome.status.value, outcome.duration)
        self.log_performance(job.name, outcome.duration, check=job.name, subject=job.subject)
        return outcome

    async def _run_all(self, jobs: List[CheckJob]) -> List[CheckOutcome]:
        semaphore = asyncio.Semaphore(self.workers)

        async def guarded(job: CheckJob) -> CheckOutcome:
            async with semaphore:
                return await asyncio.to_thread(self._run_one, job)

        return list(await asyncio.gather(*(guarded(job) for job in jobs)))

    def run(self, jobs: List[CheckJob]) -> List[CheckOutcome]:
        """Run every job; results in submission order"""
        if not jobs:
            return []
        return asyncio.run(self._run_all(jobs))


def overall_status(outcomes: List[CheckOutcome]) -> CheckStatus:
    """Any failed or errored check fails the run"""
    if any(o.status in (CheckStatus.FAILED, CheckStatus.ERROR) for o in outcomes):
        return CheckStatus.FAILED
    return CheckStatus.PASSED
