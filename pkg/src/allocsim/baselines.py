"""Dispatch heuristics used as comparison policies.

Both are pure functions of a PrivilegedView and only ever return feasible
assignments (free resource, eligible pair, waiting task) or None.
"""

from __future__ import annotations

from .engine import Assign, PrivilegedView

__all__ = ["fifo_action", "spt_action"]


def fifo_action(view: PrivilegedView) -> Assign | None:
    """Serve the earliest-arrived case that can be served right now.

    Scans cases by (arrival_step, case_id); the first one whose waiting
    task has a free eligible resource gets the lowest-id such resource.
    Falls through to younger cases when the oldest cannot be served.
    """
    for entry in sorted(view.enabled, key=lambda e: (e.arrival_step, e.case_id)):
        for resource in view.eligible_resources.get(entry.task_id, ()):
            if resource in view.free_resources:
                return Assign(resource=resource, task=entry.task_id)
    return None


def spt_action(view: PrivilegedView) -> Assign | None:
    """Serve the waiting task with the shortest nominal duration.

    Efficiency modifiers are deliberately ignored; the key is the task's
    mean duration, with ties broken by task id, then arrival order. The
    chosen task gets the lowest-id free eligible resource.
    """
    best = None
    best_key = None
    best_resource = None
    for entry in view.enabled:
        key = (entry.mean_duration, entry.task_id, entry.arrival_step, entry.case_id)
        if best_key is not None and key >= best_key:
            continue
        for resource in view.eligible_resources.get(entry.task_id, ()):
            if resource in view.free_resources:
                best, best_key, best_resource = entry, key, resource
                break
    if best is None:
        return None
    return Assign(resource=best_resource, task=best.task_id)
