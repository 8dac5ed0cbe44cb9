"""Discrete-step execution engine for a business process suite.

The engine holds two pools of task instances: ``enabled`` (waiting for a
resource) and ``current`` (executing, counting down integer steps). Each
``step(action)`` call runs four phases in a fixed order:

1. arrival - maybe spawn a new case (weighted by process frequency),
   unless the enabled pool's summed mean duration would exceed the cap;
2. allocation - apply the action if it names a free, eligible resource
   and an enabled instance of the task, else do nothing;
3. countdown - decrement every executing instance; finished instances
   release their resource and either enqueue their sampled successor or
   complete their case, paying the process reward;
4. encode - return the observation vector and the reward earned now.

Two independent random streams are derived from the seed: one drives
arrivals (coin flip plus process choice), the other durations and
transitions. Arrival randomness therefore plays out identically for any
two runs with the same seed, whatever the policies do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .model import BusinessProcessSuite, Task, sample_duration, sample_next_task

__all__ = [
    "Assign",
    "EngineConfig",
    "EnabledEntry",
    "PrivilegedView",
    "Engine",
    "ENCODINGS",
    "RUNNING",
    "COMPLETED",
]

ENCODINGS = ("std", "a1", "a10", "a2")

RUNNING = 0
COMPLETED = 1


@dataclass(frozen=True)
class Assign:
    """Action: give ``resource`` to an enabled instance of ``task``.

    ``None`` in action positions means "take no action this step".
    """

    resource: int
    task: int


@dataclass(frozen=True)
class EngineConfig:
    arrival_probability: float = 0.5
    enabled_duration_cap: float = 90.0
    encoding: str = "a10"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.arrival_probability <= 1.0:
            raise ValueError(f"arrival_probability {self.arrival_probability} not in [0, 1]")
        if not self.enabled_duration_cap > 0:
            raise ValueError("enabled_duration_cap must be positive")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.encoding!r}")


@dataclass(slots=True)
class _Case:
    process_id: int
    current_task: int
    status: int
    arrival_step: int


@dataclass(slots=True)
class _Instance:
    task_id: int
    case_id: int
    resource: int | None = None
    remaining: int = 0


@dataclass(frozen=True)
class EnabledEntry:
    """One waiting task instance as seen by scheduling heuristics."""

    task_id: int
    case_id: int
    arrival_step: int
    mean_duration: float


@dataclass(frozen=True)
class PrivilegedView:
    """Read-only snapshot of the allocatable state.

    Exposes what dispatch heuristics need and the agent's observation does
    not carry: case arrival order and nominal task durations.
    """

    enabled: tuple[EnabledEntry, ...]
    free_resources: frozenset[int]
    eligible_resources: "MappingProxyType[int, tuple[int, ...]]"
    step_count: int


class Engine:
    """Seeded simulator over an immutable, validated suite."""

    def __init__(self, suite: BusinessProcessSuite, config: EngineConfig):
        self.suite = suite
        self.config = config

        tasks = sorted(suite.all_tasks(), key=lambda t: t.id)
        self._tasks: list[Task] = tasks
        self._task_ids: tuple[int, ...] = tuple(t.id for t in tasks)
        self._task_pos: dict[int, int] = {t.id: i for i, t in enumerate(tasks)}
        self._resource_ids: tuple[int, ...] = tuple(sorted(suite.resources))
        self._resource_pos: dict[int, int] = {
            r: i for i, r in enumerate(self._resource_ids)
        }
        self.n_tasks = len(tasks)
        self.n_resources = len(self._resource_ids)
        self.n_actions = self.n_resources * self.n_tasks + 1

        self._task_by_id = {t.id: t for t in tasks}
        self._process_by_task = {
            t.id: p for p in suite.processes for t in p.tasks
        }
        self._efficiency = dict(suite.eligibility.entries)
        elig_by_task = {
            t.id: tuple(
                r for r in self._resource_ids if (r, t.id) in self._efficiency
            )
            for t in tasks
        }
        self._elig_by_task = MappingProxyType(elig_by_task)
        self._elig_matrix = np.zeros((self.n_resources, self.n_tasks), dtype=bool)
        for (r, t) in self._efficiency:
            self._elig_matrix[self._resource_pos[r], self._task_pos[t]] = True
        self._elig_flat_pm1 = np.where(self._elig_matrix.ravel(), 1.0, -1.0)

        self._processes = list(suite.processes)
        self._start_tasks = [p.start_task() for p in self._processes]
        freqs = np.array([p.frequency for p in self._processes], dtype=float)
        self._cum_freq = np.cumsum(freqs / freqs.sum())

        self.reset()

    # -- lifecycle ------------------------------------------------------

    def reset(self, seed=None) -> np.ndarray:
        """Restore the empty state and reseed both random streams.

        ``seed`` may be an int, a tuple of ints, or a numpy SeedSequence;
        by default the configured seed is used, so two engines with equal
        configs replay the same randomness.
        """
        if seed is None:
            seed = self.config.seed
        if isinstance(seed, np.random.SeedSequence):
            ss = seed
        else:
            ss = np.random.SeedSequence(seed)
        arrival_ss, exec_ss = ss.spawn(2)
        self._arrival_rng = np.random.default_rng(arrival_ss)
        self._exec_rng = np.random.default_rng(exec_ss)

        self._enabled: list[_Instance] = []
        self._current: list[_Instance] = []
        self._cases: dict[int, _Case] = {}
        self._free: set[int] = set(self._resource_ids)
        self._rho: list[int] = [-1] * self.n_resources
        self._enabled_counts: list[int] = [0] * self.n_tasks
        self._enabled_d_sum: float = 0.0
        self._next_case_id = 0
        self.step_count = 0
        self.completed_reward_total = 0.0
        self.completed_by_process = {p.id: 0 for p in self._processes}
        return self.encode()

    def step(self, action: Assign | None) -> tuple[np.ndarray, float]:
        """Advance one time step; returns (observation, reward)."""
        # 1. arrival
        if self._arrival_rng.random() < self.config.arrival_probability:
            u = self._arrival_rng.random()
            pidx = int(np.searchsorted(self._cum_freq, u, side="right"))
            if pidx >= len(self._processes):
                pidx = len(self._processes) - 1
            start = self._start_tasks[pidx]
            if self._enabled_d_sum + start.mean_duration <= self.config.enabled_duration_cap:
                case_id = self._next_case_id
                self._next_case_id += 1
                self._cases[case_id] = _Case(
                    process_id=self._processes[pidx].id,
                    current_task=start.id,
                    status=RUNNING,
                    arrival_step=self.step_count,
                )
                self._push_enabled(start.id, case_id)

        # 2. allocation
        if action is not None:
            k, i = action.resource, action.task
            if k not in self._resource_pos:
                raise KeyError(f"unknown resource id {k}")
            if i not in self._task_pos:
                raise KeyError(f"unknown task id {i}")
            if (
                k in self._free
                and (k, i) in self._efficiency
                and self._enabled_counts[self._task_pos[i]] > 0
            ):
                inst = self._pop_oldest_enabled(i)
                task = self._task_by_id[i]
                inst.resource = k
                inst.remaining = sample_duration(
                    task, self._efficiency[(k, i)], self._exec_rng
                )
                self._free.remove(k)
                self._rho[self._resource_pos[k]] = i
                self._current.append(inst)

        # 3. countdown
        reward = 0.0
        finished: list[_Instance] = []
        for inst in self._current:
            inst.remaining -= 1
            if inst.remaining == 0:
                finished.append(inst)
        if finished:
            self._current = [inst for inst in self._current if inst.remaining > 0]
            for inst in finished:
                self._free.add(inst.resource)
                self._rho[self._resource_pos[inst.resource]] = -1
                case = self._cases[inst.case_id]
                nxt = sample_next_task(self._task_by_id[inst.task_id], self._exec_rng)
                if nxt is None:
                    case.status = COMPLETED
                    process = self._process_by_task[inst.task_id]
                    reward += process.reward
                    self.completed_by_process[process.id] += 1
                else:
                    case.current_task = nxt
                    self._push_enabled(nxt, inst.case_id)

        self.step_count += 1
        self.completed_reward_total += reward
        return self.encode(), reward

    # -- enabled-pool bookkeeping ----------------------------------------

    def _push_enabled(self, task_id: int, case_id: int) -> None:
        self._enabled.append(_Instance(task_id=task_id, case_id=case_id))
        self._enabled_counts[self._task_pos[task_id]] += 1
        self._enabled_d_sum += self._task_by_id[task_id].mean_duration

    def _pop_oldest_enabled(self, task_id: int) -> _Instance:
        best_idx = -1
        best_key = None
        for idx, inst in enumerate(self._enabled):
            if inst.task_id != task_id:
                continue
            case = self._cases[inst.case_id]
            key = (case.arrival_step, inst.case_id)
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        inst = self._enabled.pop(best_idx)
        self._enabled_counts[self._task_pos[task_id]] -= 1
        self._enabled_d_sum -= self._task_by_id[task_id].mean_duration
        return inst

    # -- observations ----------------------------------------------------

    def encode(self, encoding: str | None = None) -> np.ndarray:
        """Build the observation vector in the requested encoding.

        std: |R| x |T| matrix flattened row-major; 1 where the resource
             executes the task, 0 where it is eligible and the task is
             waiting, -1 otherwise.
        a1:  per resource the executed task id (or -1), then per task the
             number of waiting instances.
        a10: as a1 but the waiting counts are normalized to fractions of
             the whole waiting pool (all zero when the pool is empty).
        a2:  a1 followed by the +-1 eligibility matrix, flattened.
        """
        tag = encoding if encoding is not None else self.config.encoding
        if tag == "a1":
            return np.array(self._rho + self._enabled_counts, dtype=float)
        if tag == "a10":
            total = sum(self._enabled_counts)
            if total:
                zeta = [c / total for c in self._enabled_counts]
            else:
                zeta = [0.0] * self.n_tasks
            return np.array(self._rho + zeta, dtype=float)
        if tag == "a2":
            head = np.array(self._rho + self._enabled_counts, dtype=float)
            return np.concatenate([head, self._elig_flat_pm1])
        if tag == "std":
            present = np.array(self._enabled_counts, dtype=bool)
            m = np.where(self._elig_matrix & present[None, :], 0.0, -1.0)
            for kpos, tid in enumerate(self._rho):
                if tid >= 0:
                    m[kpos, self._task_pos[tid]] = 1.0
            return m.ravel()
        raise ValueError(f"unknown encoding {tag!r}")

    def observation_width(self, encoding: str | None = None) -> int:
        tag = encoding if encoding is not None else self.config.encoding
        if tag == "std":
            return self.n_resources * self.n_tasks
        if tag in ("a1", "a10"):
            return self.n_resources + self.n_tasks
        if tag == "a2":
            return self.n_resources + self.n_tasks + self.n_resources * self.n_tasks
        raise ValueError(f"unknown encoding {tag!r}")

    def decode_action(self, index: int) -> Assign | None:
        """Map a flat action index to an Assign, or None for the last index."""
        if not 0 <= index <= self.n_resources * self.n_tasks:
            raise IndexError(
                f"action index {index} out of range [0, {self.n_resources * self.n_tasks}]"
            )
        if index == self.n_resources * self.n_tasks:
            return None
        return Assign(
            resource=self._resource_ids[index // self.n_tasks],
            task=self._task_ids[index % self.n_tasks],
        )

    def encode_action(self, action: Assign | None) -> int:
        """Inverse of decode_action."""
        if action is None:
            return self.n_resources * self.n_tasks
        return (
            self._resource_pos[action.resource] * self.n_tasks
            + self._task_pos[action.task]
        )

    def observe_privileged(self) -> PrivilegedView:
        """Immutable snapshot for dispatch heuristics; no state change."""
        entries = tuple(
            EnabledEntry(
                task_id=inst.task_id,
                case_id=inst.case_id,
                arrival_step=self._cases[inst.case_id].arrival_step,
                mean_duration=self._task_by_id[inst.task_id].mean_duration,
            )
            for inst in self._enabled
        )
        return PrivilegedView(
            enabled=entries,
            free_resources=frozenset(self._free),
            eligible_resources=self._elig_by_task,
            step_count=self.step_count,
        )
