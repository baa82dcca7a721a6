"""Exhaustive-search oracles over ground tasks (independent of the planner's
search module: plain BFS on exact states)."""

from __future__ import annotations

from collections import deque

from flowplan.model import GroundTask, State, applicable, apply_effects, is_goal


def optimal_plan(task: GroundTask, max_depth: int = 12,
                 max_states: int = 500_000) -> list[int] | None:
    """Shortest plan by breadth-first search, or None within the horizon."""
    if is_goal(task.initial, task):
        return []
    queue = deque([(task.initial, [])])
    seen = {(task.initial.facts, task.initial.values)}
    while queue:
        state, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for action in task.actions:
            if not applicable(state, action):
                continue
            nxt = apply_effects(state, action)
            key = (nxt.facts, nxt.values)
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > max_states:
                raise RuntimeError("state cap exceeded in brute-force search")
            new_path = path + [action.id]
            if is_goal(nxt, task):
                return new_path
            queue.append((nxt, new_path))
    return None


def all_plans(task: GroundTask, max_len: int) -> list[list[int]]:
    """Every valid plan (goal-reaching action sequence) up to a length bound."""
    plans: list[list[int]] = []

    def walk(state: State, path: list[int]) -> None:
        if is_goal(state, task):
            plans.append(list(path))
        if len(path) >= max_len:
            return
        for action in task.actions:
            if applicable(state, action):
                path.append(action.id)
                walk(apply_effects(state, action), path)
                path.pop()

    walk(task.initial, [])
    return plans


def reachable_states(task: GroundTask, max_states: int = 200_000) -> list[State]:
    queue = deque([task.initial])
    seen = {(task.initial.facts, task.initial.values)}
    out = [task.initial]
    while queue:
        state = queue.popleft()
        for action in task.actions:
            if not applicable(state, action):
                continue
            nxt = apply_effects(state, action)
            key = (nxt.facts, nxt.values)
            if key not in seen:
                seen.add(key)
                out.append(nxt)
                queue.append(nxt)
                if len(out) >= max_states:
                    return out
    return out
