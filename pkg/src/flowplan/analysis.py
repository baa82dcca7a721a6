"""Producer-consumer classification and static task analysis.

Classifies every numeric variable as producer-consumer, catalytic-extended
(read at a threshold but unaffected by the reading action) or
non-conforming; detects one-shot action sets; derives per-action count
bounds; rewrites eligible assignment effects into increases; and extracts
delete-relaxation landmarks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .model import (
    GE, GT, LE, LT, EQ,
    GroundAction, GroundTask, NumericCondition, NumericEffect, State,
)

log = logging.getLogger(__name__)

PRODUCER_CONSUMER = "producer-consumer"
CATALYTIC = "catalytic-extended"
NON_CONFORMING = "non-conforming"

DEFAULT_COUNT_CAP = Fraction(1_000_000)


@dataclass(frozen=True)
class CatalyticGroup:
    """Actions requiring `variable op threshold` without affecting the variable."""

    variable: int
    op: str  # ">=" or "<="
    threshold: Fraction
    actions: tuple[int, ...]


@dataclass
class PCClassification:
    status: dict[int, str]
    reasons: dict[int, str]                      # why a variable is non-conforming
    ub: dict[int, Fraction | None]               # None encodes +infinity
    lb: dict[int, Fraction | None]               # None encodes -infinity
    prod: dict[int, list[int]]
    cons: dict[int, list[int]]
    delta: dict[int, dict[int, Fraction]]        # action id -> {var id: signed change}
    max_prod: dict[tuple[int, int], Fraction | None]
    min_cons: dict[tuple[int, int], Fraction | None]
    count_bound: dict[int, Fraction] = field(default_factory=dict)
    catalytic_groups: tuple[CatalyticGroup, ...] = ()

    def conforming(self) -> bool:
        return all(s != NON_CONFORMING for s in self.status.values())

    def non_conforming_report(self, task: GroundTask) -> list[str]:
        return [f"{task.var_names[v]}: {self.reasons[v]}"
                for v in sorted(self.status)
                if self.status[v] == NON_CONFORMING]

    def delta_of(self, action_id: int, var: int) -> Fraction:
        return self.delta.get(action_id, {}).get(var, Fraction(0))


@dataclass(frozen=True)
class OneShotSet:
    fact: int
    actions: tuple[int, ...]


@dataclass(frozen=True)
class LandmarkSet:
    conjunctive: tuple[int, ...]                 # fact ids
    disjunctive: tuple[frozenset[int], ...]      # fact-id sets

    def __len__(self) -> int:
        return len(self.conjunctive) + len(self.disjunctive)


# ---------------------------------------------------------------------------
# Classification


def _threshold_form(cond: NumericCondition) -> tuple[int, str, Fraction] | None:
    """Normalise a single-variable condition to (var, op, bound) with weight 1."""
    var = cond.single_variable()
    if var is None:
        return None
    weight = cond.expr.terms[0][1]
    bound = cond.rhs / weight
    op = cond.op
    if weight < 0:
        op = {GE: LE, GT: LT, LE: GE, LT: GT, EQ: EQ}[op]
    return var, op, bound


def classify(task: GroundTask) -> PCClassification:
    """Classify every variable against the producer/consumer definitions.

    Expects strict inequalities to have been rewritten already; surviving
    strict thresholds on affected variables mark them non-conforming.
    """
    n_vars = len(task.var_names)
    status = {v: PRODUCER_CONSUMER for v in range(n_vars)}
    reasons: dict[int, str] = {}
    prod: dict[int, list[int]] = {v: [] for v in range(n_vars)}
    cons: dict[int, list[int]] = {v: [] for v in range(n_vars)}
    delta: dict[int, dict[int, Fraction]] = {}
    max_prod: dict[tuple[int, int], Fraction | None] = {}
    min_cons: dict[tuple[int, int], Fraction | None] = {}
    producer_ubs: dict[int, list[Fraction | None]] = {v: [] for v in range(n_vars)}
    consumer_lbs: dict[int, list[Fraction]] = {v: [] for v in range(n_vars)}
    catalytic: dict[tuple[int, str, Fraction], list[int]] = {}

    def mark(var: int, reason: str) -> None:
        if status[var] != NON_CONFORMING:
            status[var] = NON_CONFORMING
            reasons[var] = reason

    for action in task.actions:
        affected: dict[int, NumericEffect] = {e.variable: e for e in action.numeric_effects}
        # conditions on each variable, normalised to weight-1 thresholds
        conditions_on: dict[int, list[tuple[str, Fraction] | None]] = {}
        for cond in action.numeric_preconditions:
            form = _threshold_form(cond)
            if form is None:
                # multi-variable condition: allowed for unaffected variables,
                # outside the definitions for affected ones
                for var, _ in cond.expr.terms:
                    if var in affected:
                        mark(var, f"multi-variable precondition on an affector: "
                                  f"{cond.render(list(task.var_names))} ({action.name})")
                continue
            var, op, bound = form
            conditions_on.setdefault(var, []).append((op, bound))

        deltas: dict[int, Fraction] = {}
        for var, effect in affected.items():
            change = effect.delta()
            if change is None:
                if effect.op == "assign":
                    mark(var, f"assignment effect ({action.name})")
                else:
                    mark(var, f"non-constant effect magnitude ({action.name})")
                continue
            if change == 0:
                continue
            deltas[var] = change
            conds = conditions_on.get(var, [])
            if len(conds) > 1:
                mark(var, f"multiple preconditions on an affected variable ({action.name})")
                continue
            if change > 0:
                prod[var].append(action.id)
                if not conds:
                    producer_ubs[var].append(None)  # simple producer
                    max_prod[(action.id, var)] = None
                else:
                    op, bound = conds[0]
                    if op != LE:
                        mark(var, f"producer precondition is not an upper bound "
                                  f"({action.name})")
                        continue
                    producer_ubs[var].append(bound + change)
                    max_prod[(action.id, var)] = bound + change
            else:
                cons[var].append(action.id)
                if not conds:
                    mark(var, f"consumer without an availability precondition ({action.name})")
                    continue
                op, bound = conds[0]
                if op != GE:
                    mark(var, f"consumer precondition is not a lower bound ({action.name})")
                    continue
                consumer_lbs[var].append(bound + change)  # change < 0: lb = bound - |change|
                min_cons[(action.id, var)] = bound + change
        delta[action.id] = deltas

        # threshold conditions on variables this action does not affect
        for var, conds in conditions_on.items():
            if var in affected:
                continue
            for op, bound in conds:
                if op in (GE, GT):
                    catalytic.setdefault((var, GE, bound), []).append(action.id)
                elif op in (LE, LT):
                    catalytic.setdefault((var, LE, bound), []).append(action.id)
                else:  # equality reader constrains both sides
                    catalytic.setdefault((var, GE, bound), []).append(action.id)
                    catalytic.setdefault((var, LE, bound), []).append(action.id)

    ub: dict[int, Fraction | None] = {}
    lb: dict[int, Fraction | None] = {}
    for var in range(n_vars):
        ubs = producer_ubs[var]
        if any(u is None for u in ubs):
            if any(u is not None for u in ubs):
                mark(var, "mix of simple and bounded producers")
            ub[var] = None
        elif ubs:
            if len(set(ubs)) > 1:
                mark(var, "bounded producers disagree on the upper bound")
            ub[var] = ubs[0]
        else:
            ub[var] = None
        lbs = consumer_lbs[var]
        if lbs:
            if len(set(lbs)) > 1:
                mark(var, "consumers disagree on the lower bound")
            lb[var] = lbs[0]
        else:
            lb[var] = None

    groups = []
    for (var, op, bound), actions in sorted(catalytic.items()):
        if status[var] != NON_CONFORMING:
            status[var] = CATALYTIC
            groups.append(CatalyticGroup(var, op, bound, tuple(sorted(set(actions)))))

    result = PCClassification(status, reasons, ub, lb, prod, cons, delta,
                              max_prod, min_cons, catalytic_groups=tuple(groups))
    for var in sorted(reasons):
        log.debug("variable %s non-conforming: %s", task.var_names[var], reasons[var])
    return result


# ---------------------------------------------------------------------------
# One-shot sets and count bounds


def detect_one_shot_sets(task: GroundTask) -> list[OneShotSet]:
    """Maximal sets of actions sharing a never-re-added precondition fact they delete."""
    added_somewhere: set[int] = set()
    for action in task.actions:
        added_somewhere.update(action.add_effects)
    sets: list[OneShotSet] = []
    for fact in range(len(task.fact_names)):
        if fact in added_somewhere:
            continue
        members = tuple(sorted(
            a.id for a in task.actions
            if fact in a.preconditions and fact in a.del_effects))
        if members:
            sets.append(OneShotSet(fact, members))
    return sets


def compute_count_bounds(task: GroundTask, cls: PCClassification,
                         one_shot_sets: list[OneShotSet] | None = None,
                         cap: Fraction = DEFAULT_COUNT_CAP) -> PCClassification:
    """Fill per-action count upper bounds U_a into the classification.

    An action consuming a producer-less variable w is bounded by how far w
    can fall from its initial value before hitting the consumers' shared
    lower bound; one-shot membership caps the count at 1; everything else
    gets the configured large cap.
    """
    if one_shot_sets is None:
        one_shot_sets = detect_one_shot_sets(task)
    one_shot_members: set[int] = set()
    for oss in one_shot_sets:
        if oss.fact in task.initial.facts:
            one_shot_members.update(oss.actions)

    bounds: dict[int, Fraction] = {}
    for action in task.actions:
        best = cap
        for var, change in cls.delta.get(action.id, {}).items():
            if change >= 0 or cls.prod[var]:
                continue
            floor = cls.lb[var] if cls.lb[var] is not None else Fraction(0)
            budget = task.initial.values[var] - floor
            bound = max(Fraction(0), budget) / -change
            best = min(best, bound)
        if action.id in one_shot_members:
            best = min(best, Fraction(1))
        bounds[action.id] = best
    cls.count_bound = bounds
    return cls


# ---------------------------------------------------------------------------
# Assignment rewriting


def rewrite_assignments(task: GroundTask, cls: PCClassification) -> GroundTask:
    """Rewrite eligible assignment effects v := k into increases by k - v(I).

    Eligible when either (a) assignments are the only effects on v and all
    assign exactly the initial value (provable no-ops), or (b) the
    assigning actions are gated: a fact achieved by exactly those actions
    guards every other read/write of v, and the assigners form (part of) a
    one-shot set, so at most one assignment ever fires, with v still at
    its initial value. Ineligible assignments leave v non-conforming.
    """
    assigners: dict[int, list[GroundAction]] = {}
    other_effects: dict[int, bool] = {}
    for action in task.actions:
        for effect in action.numeric_effects:
            if effect.op == "assign":
                assigners.setdefault(effect.variable, []).append(action)
            else:
                other_effects[effect.variable] = True
    if not assigners:
        return task

    adders: dict[int, set[int]] = {f: set() for f in range(len(task.fact_names))}
    for action in task.actions:
        for fact in action.add_effects:
            adders[fact].add(action.id)

    def references(action: GroundAction, var: int) -> bool:
        for cond in action.numeric_preconditions:
            if any(v == var for v, _ in cond.expr.terms):
                return True
        return any(e.variable == var for e in action.numeric_effects)

    rewritable: dict[int, Fraction] = {}  # var -> pre-assignment value
    for var, actions in sorted(assigners.items()):
        init = task.initial.values[var]
        if any(not e.magnitude.is_constant()
               for a in actions for e in a.numeric_effects
               if e.op == "assign" and e.variable == var):
            cls.status[var] = NON_CONFORMING
            cls.reasons.setdefault(var, "non-constant assignment magnitude")
            continue
        if not other_effects.get(var):
            values = {e.magnitude.constant
                      for a in actions for e in a.numeric_effects
                      if e.op == "assign" and e.variable == var}
            if values == {init}:
                rewritable[var] = init  # provable no-op assignments
                continue
        member_ids = {a.id for a in actions}
        if any(references_precondition(a, var) for a in actions):
            cls.status[var] = NON_CONFORMING
            cls.reasons.setdefault(var, "assigning action reads the assigned variable")
            continue
        gate_candidates = frozenset.intersection(*(frozenset(a.add_effects)
                                                   for a in actions))
        gate = None
        for fact in sorted(gate_candidates):
            if fact in task.initial.facts or adders[fact] != member_ids:
                continue
            if all(fact in b.preconditions
                   for b in task.actions
                   if b.id not in member_ids and references(b, var)):
                gate = fact
                break
        shared_consumed = frozenset.intersection(
            *(frozenset(m.preconditions & m.del_effects) for m in actions))
        one_shot = any(not adders[fact] for fact in shared_consumed)
        if gate is not None and one_shot:
            rewritable[var] = init
        else:
            cls.status[var] = NON_CONFORMING
            cls.reasons.setdefault(
                var, "assignment not guarded by a one-shot gate fact")

    if not rewritable:
        return task

    new_actions = []
    rewritten_ids = set(task.assignment_rewritten)
    for action in task.actions:
        changed = False
        new_effects = []
        for effect in action.numeric_effects:
            if effect.op == "assign" and effect.variable in rewritable:
                base = rewritable[effect.variable]
                new_effects.append(NumericEffect(
                    effect.variable, "increase", effect.magnitude.shift(-base)))
                changed = True
            else:
                new_effects.append(effect)
        if changed:
            rewritten_ids.add(action.id)
            new_actions.append(replace(action, numeric_effects=tuple(new_effects)))
        else:
            new_actions.append(action)
    return replace(task, actions=tuple(new_actions),
                   assignment_rewritten=frozenset(rewritten_ids))


def references_precondition(action: GroundAction, var: int) -> bool:
    return any(any(v == var for v, _ in cond.expr.terms)
               for cond in action.numeric_preconditions)


# ---------------------------------------------------------------------------
# Landmarks


def relaxed_reachable_facts(task: GroundTask, state: State,
                            banned: frozenset[int] = frozenset()) -> frozenset[int]:
    """Delete-free propositional fixpoint ignoring numeric preconditions.

    Ignoring numerics over-approximates reachability, which keeps the
    landmark verification below conservative.
    """
    facts = set(state.facts)
    pending = [a for a in task.actions if a.id not in banned]
    changed = True
    while changed:
        changed = False
        remaining = []
        for action in pending:
            if action.preconditions <= facts:
                new = action.add_effects - facts
                if new:
                    facts.update(new)
                    changed = True
            else:
                remaining.append(action)
        pending = remaining
    return frozenset(facts)


def extract_landmarks(task: GroundTask, state: State,
                      max_disjunction: int = 4,
                      max_landmarks_per_goal: int = 10) -> LandmarkSet:
    """Backward-chain verified delete-relaxation landmarks from the goal facts."""
    goal_facts = [g for g in sorted(task.goal_facts) if g not in state.facts]
    cap = max_landmarks_per_goal * max(1, len(task.goal_facts))
    adders: dict[int, list[GroundAction]] = {}
    for action in task.actions:
        for fact in action.add_effects:
            adders.setdefault(fact, []).append(action)

    def verified(candidate_facts: frozenset[int]) -> bool:
        banned = frozenset(a.id for f in candidate_facts for a in adders.get(f, []))
        reachable = relaxed_reachable_facts(task, state, banned)
        return not (task.goal_facts <= reachable and
                    all(g in reachable for g in goal_facts))

    conjunctive: list[int] = []
    disjunctive: list[frozenset[int]] = []
    seen: set[int] = set()
    queue = list(goal_facts)
    while queue and len(conjunctive) + len(disjunctive) < cap:
        fact = queue.pop(0)
        if fact in seen or fact in state.facts:
            continue
        seen.add(fact)
        if fact not in task.goal_facts and not verified(frozenset([fact])):
            continue
        conjunctive.append(fact)
        # first achievers: adders still reachable once the fact's adders are banned
        banned = frozenset(a.id for a in adders.get(fact, []))
        reachable = relaxed_reachable_facts(task, state, banned)
        first = [a for a in adders.get(fact, []) if a.preconditions <= reachable]
        if not first:
            continue
        common = frozenset.intersection(*(a.preconditions for a in first))
        for pre in sorted(common):
            if pre not in state.facts and pre not in seen:
                queue.append(pre)
        if len(first) > 1:
            disjunction = _disjunctive_candidate(task, state, first, max_disjunction, common)
            if disjunction and disjunction not in disjunctive and verified(disjunction):
                disjunctive.append(disjunction)
    return LandmarkSet(tuple(conjunctive), tuple(disjunctive))


def _disjunctive_candidate(task: GroundTask, state: State, achievers: list[GroundAction],
                           max_width: int, already_common: frozenset[int]) -> frozenset[int] | None:
    """A small fact set hitting every achiever's preconditions, grouped by predicate."""
    def predicate(fact: int) -> str:
        return task.fact_names[fact].strip("()").split()[0]

    by_predicate: dict[str, list[set[int]]] = {}
    for action in achievers:
        candidates = {f for f in action.preconditions
                      if f not in state.facts and f not in already_common}
        groups: dict[str, set[int]] = {}
        for fact in candidates:
            groups.setdefault(predicate(fact), set()).add(fact)
        for name, facts in groups.items():
            by_predicate.setdefault(name, []).append(facts)
    for name in sorted(by_predicate):
        per_achiever = by_predicate[name]
        if len(per_achiever) != len(achievers):
            continue  # some achiever has no precondition with this predicate
        union = frozenset().union(*per_achiever)
        if 1 < len(union) <= max_width:
            return frozenset(union)
    return None


# ---------------------------------------------------------------------------
# Pipeline


@dataclass(frozen=True)
class AnalysedTask:
    """Ground task after strict-inequality and assignment rewriting, with analysis."""

    task: GroundTask
    classification: PCClassification
    one_shot_sets: tuple[OneShotSet, ...]
    landmarks: LandmarkSet


def analyse(task: GroundTask, cap: Fraction = DEFAULT_COUNT_CAP,
            with_landmarks: bool = True) -> AnalysedTask:
    """Run the full static pipeline on a strict-rewritten ground task."""
    preliminary = classify(task)
    task = rewrite_assignments(task, preliminary)
    cls = classify(task)  # surviving assignments re-mark their variables here
    one_shot = tuple(detect_one_shot_sets(task))
    cls = compute_count_bounds(task, cls, list(one_shot), cap)
    landmarks = extract_landmarks(task, task.initial) if with_landmarks else LandmarkSet((), ())
    return AnalysedTask(task, cls, one_shot, landmarks)
