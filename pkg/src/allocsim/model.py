"""Static process definitions: tasks, transitions, resources, eligibility.

A suite bundles everything the simulator needs to run: a set of resource
ids, an eligibility map telling which resource may execute which task (and
how efficiently), and one or more processes, each a directed graph of tasks
with probabilistic transitions. Suites are immutable once built; all
sampling takes a caller-owned numpy Generator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Task",
    "TaskTransition",
    "EligibilityMap",
    "BusinessProcess",
    "BusinessProcessSuite",
    "ValidationReport",
    "SuiteError",
    "SuiteFormatError",
    "SuiteValidationError",
    "load_suite",
    "load_suite_path",
    "serialize_suite",
    "validate_suite",
    "sample_next_task",
    "sample_duration",
]

# Transition probabilities may sum to slightly above 1 due to float noise.
_PROB_SUM_TOL = 1e-9


class SuiteError(Exception):
    """Base class for suite loading problems."""


class SuiteFormatError(SuiteError):
    """The document is not a well-formed suite config."""


class SuiteValidationError(SuiteError):
    """The document parsed but the suite violates a structural rule."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(
            "invalid suite: " + "; ".join(report.violations)
        )
        self.report = report


@dataclass(frozen=True)
class TaskTransition:
    """Arc to a follow-up task within the same process."""

    target: int
    probability: float


@dataclass(frozen=True)
class Task:
    """One unbreakable unit of work.

    ``mean_duration``/``duration_std`` parameterize the (integer) number of
    steps an execution takes; ``is_start`` marks the entry task of its
    process. A task with an empty transition tuple ends its case, and so
    does the residual probability mass ``1 - sum(p)``.
    """

    id: int
    transitions: tuple[TaskTransition, ...]
    mean_duration: float
    duration_std: float
    is_start: bool = False


@dataclass(frozen=True)
class EligibilityMap:
    """Sparse (resource id, task id) -> efficiency modifier mapping.

    A missing entry means the resource may not execute the task. The
    modifier scales the sampled duration, so values below 1 mean the
    resource is faster than the task's nominal speed.
    """

    entries: dict[tuple[int, int], float]

    def efficiency(self, resource: int, task: int) -> float | None:
        return self.entries.get((resource, task))

    def is_eligible(self, resource: int, task: int) -> bool:
        return (resource, task) in self.entries

    def resources_for(self, task: int) -> tuple[int, ...]:
        return tuple(sorted(r for (r, t) in self.entries if t == task))

    def tasks_for(self, resource: int) -> tuple[int, ...]:
        return tuple(sorted(t for (r, t) in self.entries if r == resource))


@dataclass(frozen=True)
class BusinessProcess:
    """A task graph with an arrival weight and a completion reward."""

    id: int
    frequency: float
    reward: float
    tasks: tuple[Task, ...]

    def start_task(self) -> Task:
        for task in self.tasks:
            if task.is_start:
                return task
        raise ValueError(f"process {self.id} has no start task")


@dataclass(frozen=True)
class BusinessProcessSuite:
    """The full static simulation environment definition."""

    resources: tuple[int, ...]
    eligibility: EligibilityMap
    processes: tuple[BusinessProcess, ...]

    def all_tasks(self) -> tuple[Task, ...]:
        return tuple(t for p in self.processes for t in p.tasks)

    def task_by_id(self, task_id: int) -> Task:
        for process in self.processes:
            for task in process.tasks:
                if task.id == task_id:
                    return task
        raise KeyError(f"unknown task id {task_id}")

    def process_of_task(self, task_id: int) -> BusinessProcess:
        for process in self.processes:
            if any(t.id == task_id for t in process.tasks):
                return process
        raise KeyError(f"unknown task id {task_id}")

    def eligible_resources(self, task_id: int) -> set[int]:
        """Resource ids holding an eligibility entry for ``task_id``."""
        self.task_by_id(task_id)  # raises KeyError on unknown ids
        return {r for (r, t) in self.eligibility.entries if t == task_id}


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_suite`; ``ok`` iff no violations."""

    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_suite(suite: BusinessProcessSuite) -> ValidationReport:
    """Check every structural rule and report all violations at once.

    Violations are strings of the form ``"rule-id: human-readable detail"``.
    """
    bad: list[str] = []

    if not suite.processes:
        bad.append("empty-suite: suite defines no processes")

    seen_resources: set[int] = set()
    for rid in suite.resources:
        if rid < 0:
            bad.append(f"bad-resource-id: resource id {rid} is negative")
        if rid in seen_resources:
            bad.append(f"dup-resource-id: resource id {rid} repeated")
        seen_resources.add(rid)

    task_ids: set[int] = set()
    process_ids: set[int] = set()
    for process in suite.processes:
        where = f"process {process.id}"
        if process.id in process_ids:
            bad.append(f"dup-process-id: process id {process.id} repeated")
        process_ids.add(process.id)
        if process.frequency <= 0:
            bad.append(f"bad-frequency: {where} has frequency {process.frequency}")
        local_ids = {t.id for t in process.tasks}
        starts = [t for t in process.tasks if t.is_start]
        if len(starts) != 1:
            bad.append(f"start-task-count: {where} has {len(starts)} start tasks")
        for task in process.tasks:
            at = f"task {task.id} ({where})"
            if task.id in task_ids:
                bad.append(f"dup-task-id: task id {task.id} used in two processes")
            task_ids.add(task.id)
            if task.id < 0:
                bad.append(f"bad-task-id: {at} has a negative id")
            if not task.mean_duration > 0:
                bad.append(f"bad-duration: {at} has mean duration {task.mean_duration}")
            if task.duration_std < 0:
                bad.append(f"bad-duration-std: {at} has std {task.duration_std}")
            mass = 0.0
            for tr in task.transitions:
                if not (0.0 < tr.probability <= 1.0):
                    bad.append(
                        f"bad-transition-prob: {at} -> {tr.target} has p={tr.probability}"
                    )
                if tr.target not in local_ids:
                    bad.append(
                        f"cross-process-transition: {at} targets {tr.target}, "
                        f"which is not a task of {where}"
                    )
                mass += tr.probability
            if mass > 1.0 + _PROB_SUM_TOL:
                bad.append(f"prob-mass: {at} transition probabilities sum to {mass}")

    for (rid, tid), eff in sorted(suite.eligibility.entries.items()):
        at = f"eligibility ({rid}, {tid})"
        if rid not in seen_resources:
            bad.append(f"unknown-resource: {at} names undefined resource {rid}")
        if tid not in task_ids:
            bad.append(f"unknown-task: {at} names undefined task {tid}")
        if not eff > 0:
            bad.append(f"bad-efficiency: {at} has non-positive modifier {eff}")

    covered = {r for (r, _) in suite.eligibility.entries}
    for rid in sorted(seen_resources - covered):
        bad.append(f"resource-coverage: resource {rid} is eligible for no task")
    servable = {t for (_, t) in suite.eligibility.entries}
    for tid in sorted(task_ids - servable):
        bad.append(f"task-coverage: task {tid} has no eligible resource")

    return ValidationReport(tuple(bad))


def sample_next_task(task: Task, rng: np.random.Generator) -> int | None:
    """Pick the successor of a finished task, or ``None`` for case completion.

    Each transition fires with its declared probability; the leftover mass
    ``1 - sum(p)`` completes the case. A task without transitions completes
    the case without consuming randomness.
    """
    if not task.transitions:
        return None
    u = rng.random()
    acc = 0.0
    for tr in task.transitions:
        acc += tr.probability
        if u < acc:
            return tr.target
    return None


def sample_duration(task: Task, efficiency: float, rng: np.random.Generator) -> int:
    """Draw an integer execution length for one allocation.

    Draws Normal(mean_duration, duration_std^2), scales by the resource's
    efficiency modifier, rounds half away from zero and clamps to >= 1.
    """
    x = rng.normal(task.mean_duration, task.duration_std)
    scaled = x * efficiency
    rounded = math.floor(scaled + 0.5) if scaled >= 0 else math.ceil(scaled - 0.5)
    return max(1, rounded)


# --- suite config documents -------------------------------------------------

_TASK_KEYS = {"id", "d", "s", "start", "transitions"}
_PROCESS_KEYS = {"id", "frequency", "reward", "tasks"}
_TRANSITION_KEYS = {"to", "p"}
_TOP_KEYS = {"resources", "eligibility", "processes", "description"}


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SuiteFormatError(message)


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")


def load_suite(document: str) -> BusinessProcessSuite:
    """Parse a suite config document and validate it.

    Raises SuiteFormatError on malformed documents and
    SuiteValidationError (carrying the full report) on rule violations.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SuiteFormatError(f"not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "top level must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "top level")
    for key in ("resources", "eligibility", "processes"):
        _require(key in raw, f"missing top-level key {key!r}")

    _require(isinstance(raw["resources"], list), "'resources' must be a list")
    resources = []
    for rid in raw["resources"]:
        _require(isinstance(rid, int), f"resource id {rid!r} is not an integer")
        resources.append(rid)

    _require(isinstance(raw["eligibility"], list), "'eligibility' must be a list")
    entries: dict[tuple[int, int], float] = {}
    for item in raw["eligibility"]:
        _require(isinstance(item, dict), "eligibility entries must be objects")
        _check_keys(item, {"resource", "task", "efficiency"}, "eligibility entry")
        for k in ("resource", "task", "efficiency"):
            _require(k in item, f"eligibility entry missing {k!r}")
        key = (item["resource"], item["task"])
        _require(key not in entries, f"duplicate eligibility entry for {key}")
        entries[key] = float(item["efficiency"])

    _require(isinstance(raw["processes"], list), "'processes' must be a list")
    processes = []
    for pobj in raw["processes"]:
        _require(isinstance(pobj, dict), "process entries must be objects")
        _check_keys(pobj, _PROCESS_KEYS, "process entry")
        for k in ("id", "frequency", "reward", "tasks"):
            _require(k in pobj, f"process entry missing {k!r}")
        tasks = []
        _require(isinstance(pobj["tasks"], list), "'tasks' must be a list")
        for tobj in pobj["tasks"]:
            _require(isinstance(tobj, dict), "task entries must be objects")
            _check_keys(tobj, _TASK_KEYS, f"task entry in process {pobj['id']}")
            for k in ("id", "d"):
                _require(k in tobj, f"task entry missing {k!r}")
            transitions = []
            for trobj in tobj.get("transitions", []):
                _require(isinstance(trobj, dict), "transitions must be objects")
                _check_keys(trobj, _TRANSITION_KEYS, f"transition of task {tobj['id']}")
                for k in ("to", "p"):
                    _require(k in trobj, f"transition missing {k!r}")
                transitions.append(
                    TaskTransition(target=trobj["to"], probability=float(trobj["p"]))
                )
            tasks.append(
                Task(
                    id=tobj["id"],
                    transitions=tuple(transitions),
                    mean_duration=float(tobj["d"]),
                    duration_std=float(tobj.get("s", 0.0)),
                    is_start=bool(tobj.get("start", False)),
                )
            )
        processes.append(
            BusinessProcess(
                id=pobj["id"],
                frequency=float(pobj["frequency"]),
                reward=float(pobj["reward"]),
                tasks=tuple(tasks),
            )
        )

    suite = BusinessProcessSuite(
        resources=tuple(resources),
        eligibility=EligibilityMap(entries),
        processes=tuple(processes),
    )
    report = validate_suite(suite)
    if not report.ok:
        raise SuiteValidationError(report)
    return suite


def load_suite_path(path: str | Path) -> BusinessProcessSuite:
    """Load and validate a suite config from a file."""
    return load_suite(Path(path).read_text(encoding="utf-8"))


def serialize_suite(suite: BusinessProcessSuite, description: str | None = None) -> str:
    """Render a suite back into config-document form (inverse of load_suite)."""
    doc: dict = {}
    if description is not None:
        doc["description"] = description
    doc["resources"] = list(suite.resources)
    doc["eligibility"] = [
        {"resource": r, "task": t, "efficiency": e}
        for (r, t), e in sorted(suite.eligibility.entries.items())
    ]
    doc["processes"] = [
        {
            "id": p.id,
            "frequency": p.frequency,
            "reward": p.reward,
            "tasks": [
                {
                    "id": t.id,
                    "d": t.mean_duration,
                    "s": t.duration_std,
                    "start": t.is_start,
                    "transitions": [
                        {"to": tr.target, "p": tr.probability} for tr in t.transitions
                    ],
                }
                for t in p.tasks
            ],
        }
        for p in suite.processes
    ]
    return json.dumps(doc, indent=2) + "\n"
