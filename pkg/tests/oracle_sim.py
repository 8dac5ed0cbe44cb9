"""Independent reference implementation of the engine semantics.

Deliberately written from the ground up with plain dicts and loops (no
shared code with allocsim.engine beyond the suite data model) so that the
two implementations can check each other. Keep this file boring.
"""

from __future__ import annotations

import math

import numpy as np


class OracleSim:
    """Straight-line re-implementation of reset()/step() for cross-checks."""

    def __init__(self, suite, arrival_probability, cap, seed):
        self.suite = suite
        self.arrival_probability = arrival_probability
        self.cap = cap
        self.seed = seed
        self.task = {t.id: t for p in suite.processes for t in p.tasks}
        self.task_ids = sorted(self.task)
        self.resource_ids = sorted(suite.resources)
        self.process_of = {
            t.id: p for p in suite.processes for t in p.tasks
        }
        self.elig = dict(suite.eligibility.entries)
        total_freq = 0.0
        for p in suite.processes:
            total_freq += p.frequency
        self.cum = []
        acc = 0.0
        for p in suite.processes:
            acc += p.frequency / total_freq
            self.cum.append(acc)
        self.reset(seed)

    def reset(self, seed=None):
        if seed is None:
            seed = self.seed
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        kids = ss.spawn(2)
        self.arrival_rng = np.random.default_rng(kids[0])
        self.exec_rng = np.random.default_rng(kids[1])
        # enabled/current entries: dicts with task/case (+resource/remaining)
        self.enabled = []
        self.current = []
        self.cases = {}
        self.free = set(self.resource_ids)
        self.next_case = 0
        self.steps_done = 0
        self.total_reward = 0.0
        return self.encode_a10()

    def enabled_d_sum(self):
        return sum(self.task[e["task"]].mean_duration for e in self.enabled)

    def step(self, action):
        """action: None or (resource, task)."""
        # phase 1: arrival
        if self.arrival_rng.random() < self.arrival_probability:
            u = self.arrival_rng.random()
            chosen = len(self.cum) - 1
            for i, c in enumerate(self.cum):
                if u < c:
                    chosen = i
                    break
            process = self.suite.processes[chosen]
            start = [t for t in process.tasks if t.is_start][0]
            if self.enabled_d_sum() + start.mean_duration <= self.cap:
                self.cases[self.next_case] = {
                    "process": process.id,
                    "task": start.id,
                    "done": False,
                    "arrived": self.steps_done,
                }
                self.enabled.append({"task": start.id, "case": self.next_case})
                self.next_case += 1

        # phase 2: allocation
        if action is not None:
            resource, task_id = action
            waiting = [e for e in self.enabled if e["task"] == task_id]
            if resource in self.free and (resource, task_id) in self.elig and waiting:
                waiting.sort(
                    key=lambda e: (self.cases[e["case"]]["arrived"], e["case"])
                )
                entry = waiting[0]
                self.enabled.remove(entry)
                x = self.exec_rng.normal(
                    self.task[task_id].mean_duration, self.task[task_id].duration_std
                )
                scaled = x * self.elig[(resource, task_id)]
                if scaled >= 0:
                    dur = math.floor(scaled + 0.5)
                else:
                    dur = math.ceil(scaled - 0.5)
                dur = max(1, dur)
                self.free.discard(resource)
                self.current.append(
                    {"task": task_id, "case": entry["case"], "resource": resource,
                     "remaining": dur}
                )

        # phase 3: countdown
        reward = 0.0
        survivors = []
        finished = []
        for inst in self.current:
            inst["remaining"] -= 1
            (finished if inst["remaining"] == 0 else survivors).append(inst)
        self.current = survivors
        for inst in finished:
            self.free.add(inst["resource"])
            task = self.task[inst["task"]]
            nxt = None
            if task.transitions:
                u = self.exec_rng.random()
                acc = 0.0
                for tr in task.transitions:
                    acc += tr.probability
                    if u < acc:
                        nxt = tr.target
                        break
            case = self.cases[inst["case"]]
            if nxt is None:
                case["done"] = True
                reward += self.process_of[inst["task"]].reward
            else:
                case["task"] = nxt
                self.enabled.append({"task": nxt, "case": inst["case"]})

        self.steps_done += 1
        self.total_reward += reward
        return self.encode_a10(), reward

    def encode_a10(self):
        rho = []
        executing = {}
        for inst in self.current:
            executing[inst["resource"]] = inst["task"]
        for r in self.resource_ids:
            rho.append(float(executing.get(r, -1)))
        counts = [0] * len(self.task_ids)
        for e in self.enabled:
            counts[self.task_ids.index(e["task"])] += 1
        total = sum(counts)
        zeta = [c / total if total else 0.0 for c in counts]
        return rho + zeta

    def free_sorted(self):
        return sorted(self.free)

    def enabled_snapshot(self):
        return sorted(
            (e["task"], e["case"], self.cases[e["case"]]["arrived"])
            for e in self.enabled
        )
