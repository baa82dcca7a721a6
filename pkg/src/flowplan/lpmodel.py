"""Flow models: LP/MIP encodings of resource flow over an action layer.

A FlowModel wraps an MPModel with one count column per action in the
layer and one post-value column per tracked numeric variable, tied by a
flow-conservation row per variable. Optional rows encode one-shot sets,
catalytic bounds and switches, propositional goals, landmarks, the
full-proposition encoding, and the numeric goal conjunct. The model
grows monotonically as RPG layers add actions; temporary rows (goal
checks, subgoal constraints, bound clamps) are scratch-scoped.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from fractions import Fraction

from . import mpsolver as mp
from .analysis import AnalysedTask, CATALYTIC
from .errors import SolverError
from .model import GE, GT, LE, LT, EQ, GroundTask, NumericCondition, State

log = logging.getLogger(__name__)

WEIGHT_LAYER = "layer"
WEIGHT_HADD = "hadd"
WEIGHT_HMAX = "hmax"

INTS_MINIMAL = "minimal"
INTS_FIRST_LAYER = "first-layer"
INTS_PROP_GOAL = "prop-goal-achievers"
INTS_NUM_GOAL = "num-goal-achievers"
INTS_ALL = "all"

_INT_POLICIES = (INTS_MINIMAL, INTS_FIRST_LAYER, INTS_PROP_GOAL, INTS_NUM_GOAL, INTS_ALL)


@dataclass(frozen=True)
class HeuristicConfig:
    """Ablation axes of the heuristic; defaults follow the evaluation setup:
    layer weighting with k=3, first-layer integrality, propositional goals
    and landmarks in the LP, numeric goal conjunct on."""

    weight_scheme: str = WEIGHT_LAYER
    layer_k: Fraction = Fraction(3)
    integrality: str = INTS_FIRST_LAYER
    include_prop_goals: bool = True
    include_landmarks: bool = True
    include_all_propositions: bool = False
    include_numeric_goal_conjunct: bool = True
    lp_call_budget: int = 500
    max_layers: int = 200

    def __post_init__(self):
        if self.weight_scheme not in (WEIGHT_LAYER, WEIGHT_HADD, WEIGHT_HMAX):
            raise ValueError(f"unknown weight scheme {self.weight_scheme}")
        if self.weight_scheme == WEIGHT_LAYER and self.layer_k < 1:
            raise ValueError("layer weighting needs k >= 1")
        if self.integrality not in _INT_POLICIES:
            raise ValueError(f"unknown integrality policy {self.integrality}")
        if self.include_landmarks and not self.include_prop_goals:
            raise ValueError("landmarks in the LP require propositional goals in the LP")
        if self.include_all_propositions and not self.include_landmarks:
            raise ValueError("the all-propositions encoding requires landmarks in the LP")

    def uses_goal_check(self) -> bool:
        return (self.include_prop_goals or self.include_landmarks
                or self.include_all_propositions or self.include_numeric_goal_conjunct)


@dataclass(frozen=True)
class LandmarkView:
    """Unachieved-landmark slice passed to model building by the search."""

    conjunctive: tuple[int, ...] = ()
    disjunctive: tuple[frozenset[int], ...] = ()


def tracked_variables(task: GroundTask) -> frozenset[int]:
    """Variables appearing in any numeric precondition or goal; others are
    excluded from the LP entirely."""
    seen: set[int] = set()
    for action in task.actions:
        for cond in action.numeric_preconditions:
            seen.update(v for v, _ in cond.expr.terms)
    for cond in task.goal_conditions:
        seen.update(v for v, _ in cond.expr.terms)
    return frozenset(seen)


class FlowModel:
    """Mutable flow encoding for a growing action layer.

    Build with `build_flow`, extend with `extend`; every query that needs
    extra rows (bounds, goal checks, subgoals) pushes a scratch mark and
    pops it afterwards, so the persistent model only ever contains the
    flow skeleton for the current layer.
    """

    def __init__(self, analysed: AnalysedTask, state: State,
                 counters: mp.Counters | None = None):
        self.analysed = analysed
        self.task = analysed.task
        self.cls = analysed.classification
        self.state = state
        self.counters = counters if counters is not None else mp.Counters()
        self.model = mp.MPModel(self.counters)
        self.tracked = tracked_variables(self.task)
        self.action_col: dict[int, int] = {}
        self.post_col: dict[int, int] = {}
        self.up_col: dict[int, int] = {}
        self.down_col: dict[int, int] = {}
        self.flow_row: dict[int, int] = {}
        self.up_row: dict[int, int] = {}
        self.down_row: dict[int, int] = {}
        self.one_shot_rows: list[tuple[frozenset[int], int]] = []  # (members, row)
        self.switch_cols: list[int] = []
        # catalytic switches: (group members, switch col, bigM row, bound row)
        self.switches: list[tuple[frozenset[int], int, int, int]] = []
        self.has_increaser: dict[int, bool] = {v: False for v in self.tracked}
        self.has_decreaser: dict[int, bool] = {v: False for v in self.tracked}
        self._build_skeleton()

    # -- construction --------------------------------------------------------

    def _build_skeleton(self) -> None:
        start = time.perf_counter()
        task, cls = self.task, self.cls
        for var in sorted(self.tracked):
            name = task.var_names[var]
            # clamp by the evaluated state so zero counts stay feasible even
            # when the state sits outside the producer/consumer bounds
            value = self.state.values[var]
            lb = None if cls.lb[var] is None else min(cls.lb[var], value)
            ub = None if cls.ub[var] is None else max(cls.ub[var], value)
            col = self.model.add_variable(lb, ub, name=f"post {name}")
            self.post_col[var] = col
            self.flow_row[var] = self.model.add_constraint(
                {col: Fraction(1)}, "=", value, name=f"flow {name}")
        for oss in self.analysed.one_shot_sets:
            if oss.fact in self.state.facts:
                row = self.model.add_constraint(
                    {}, "<=", Fraction(1), name=f"oneshot {task.fact_names[oss.fact]}")
                self.one_shot_rows.append((frozenset(oss.actions), row))
        self.counters.build_time += time.perf_counter() - start

    def add_catalytic(self) -> None:
        """Optimistic-ordering bound columns and switch rows for catalytic variables."""
        start = time.perf_counter()
        task, cls = self.task, self.cls
        for var in sorted(self.tracked):
            if cls.status.get(var) != CATALYTIC:
                continue
            name = task.var_names[var]
            up = self.model.add_variable(None, None, name=f"up {name}")
            down = self.model.add_variable(None, None, name=f"down {name}")
            self.up_col[var] = up
            self.down_col[var] = down
            self.up_row[var] = self.model.add_constraint(
                {up: Fraction(1)}, "=", self.state.values[var], name=f"uprow {name}")
            self.down_row[var] = self.model.add_constraint(
                {down: Fraction(1)}, "=", self.state.values[var], name=f"downrow {name}")
        for index, group in enumerate(self.cls.catalytic_groups):
            if group.variable not in self.up_col:
                continue
            switch = self.model.add_variable(Fraction(0), Fraction(1),
                                             name=f"switch{index}")
            self.switch_cols.append(switch)
            # N*s >= sum of group counts; N grows with the layer (sum of U_a)
            big_m_row = self.model.add_constraint(
                {switch: Fraction(0)}, ">=", Fraction(0), name=f"bigM{index}")
            var = group.variable
            if group.op == GE:
                anchor = self.cls.lb[var]
                if anchor is None:
                    anchor = self.state.values[var]
                # up >= anchor + (threshold - anchor) * s
                bound_row = self.model.add_constraint(
                    {self.up_col[var]: Fraction(1),
                     switch: -(group.threshold - anchor)}, ">=", anchor,
                    name=f"catal{index}")
            else:
                anchor = self.cls.ub[var]
                if anchor is None:
                    anchor = self.state.values[var]
                # down <= anchor - (anchor - threshold) * s
                bound_row = self.model.add_constraint(
                    {self.down_col[var]: Fraction(1),
                     switch: (anchor - group.threshold)}, "<=", anchor,
                    name=f"catal{index}")
            self.switches.append((frozenset(group.actions), switch, big_m_row, bound_row))
        self._refresh_switch_rows()
        self.counters.build_time += time.perf_counter() - start

    def extend(self, new_action_ids) -> None:
        """Append columns for newly reachable actions and wire them into rows."""
        start = time.perf_counter()
        cls = self.cls
        added = False
        for action_id in sorted(new_action_ids):
            if action_id in self.action_col:
                continue
            added = True
            action = self.task.actions[action_id]
            col = self.model.add_variable(Fraction(0), cls.count_bound[action_id],
                                          name=f"count {action.name}")
            self.action_col[action_id] = col
            for var, delta in cls.delta.get(action_id, {}).items():
                if var not in self.tracked:
                    continue
                self.model.set_coefficient(self.flow_row[var], col, -delta)
                if delta > 0:
                    self.has_increaser[var] = True
                    if var in self.up_row:
                        self.model.set_coefficient(self.up_row[var], col, -delta)
                else:
                    self.has_decreaser[var] = True
                    if var in self.down_row:
                        self.model.set_coefficient(self.down_row[var], col, -delta)
            for members, row in self.one_shot_rows:
                if action_id in members:
                    self.model.set_coefficient(row, col, Fraction(1))
        if added:
            self._refresh_switch_rows()
        self.counters.build_time += time.perf_counter() - start

    def _refresh_switch_rows(self) -> None:
        for members, switch, big_m_row, _ in self.switches:
            present = [a for a in members if a in self.action_col]
            big_m = sum((self.cls.count_bound[a] for a in present), Fraction(0))
            self.model.set_coefficient(big_m_row, switch, big_m)
            for action_id in present:
                self.model.set_coefficient(big_m_row, self.action_col[action_id],
                                           Fraction(-1))

    # -- temporary structure -------------------------------------------------

    def restrict_to(self, action_ids: frozenset[int]) -> None:
        """Scratch-scope: pin counts of actions outside the given set to zero."""
        for action_id, col in self.action_col.items():
            if action_id not in action_ids:
                self.model.set_variable_bounds(col, Fraction(0), Fraction(0))

    def condition_row(self, cond: NumericCondition) -> tuple[dict[int, Fraction], str, Fraction]:
        """A numeric condition as a row over post-value columns.

        Strict comparisons are relaxed to their closed forms (the model is
        already a relaxation); equalities stay equalities.
        """
        coeffs = {self.post_col[v]: w for v, w in cond.expr.terms}
        op = {GE: ">=", GT: ">=", LE: "<=", LT: "<=", EQ: "="}[cond.op]
        return coeffs, op, cond.rhs

    def add_goal_constraints(self, config: HeuristicConfig, landmarks: LandmarkView,
                             layer_action_ids: frozenset[int]) -> None:
        """Add the configured goal/landmark/proposition rows (scratch-scope them).

        A goal fact with no in-layer achiever produces an unsatisfiable
        0 >= 1 row, which is what drives further RPG extension.
        """
        start = time.perf_counter()
        task, state = self.task, self.state
        adders: dict[int, list[int]] = {}
        for action_id in layer_action_ids:
            for fact in task.actions[action_id].add_effects:
                adders.setdefault(fact, []).append(action_id)

        def achiever_row(facts, name: str) -> None:
            coeffs: dict[int, Fraction] = {}
            for fact in facts:
                for action_id in adders.get(fact, []):
                    col = self.action_col[action_id]
                    coeffs[col] = Fraction(1)
            self.model.add_constraint(coeffs, ">=", Fraction(1), name=name)

        if config.include_numeric_goal_conjunct:
            for index, cond in enumerate(task.goal_conditions):
                coeffs, op, rhs = self.condition_row(cond)
                self.model.add_constraint(coeffs, op, rhs, name=f"numgoal{index}")
        if config.include_prop_goals:
            for fact in sorted(task.goal_facts):
                if fact not in state.facts:
                    achiever_row([fact], f"goal {task.fact_names[fact]}")
        if config.include_landmarks:
            for fact in landmarks.conjunctive:
                if fact not in state.facts and fact not in task.goal_facts:
                    achiever_row([fact], f"landmark {task.fact_names[fact]}")
            for index, group in enumerate(landmarks.disjunctive):
                if not (group & state.facts):
                    achiever_row(sorted(group), f"disjlandmark{index}")
        if config.include_all_propositions:
            self._add_all_propositions(layer_action_ids, adders)
        self.counters.build_time += time.perf_counter() - start

    def _add_all_propositions(self, layer_action_ids: frozenset[int],
                              adders: dict[int, list[int]]) -> None:
        """Binary fact columns: adders cover the fact, big-M links requirers."""
        task, state = self.task, self.state
        requirers: dict[int, list[int]] = {}
        for action_id in layer_action_ids:
            for fact in task.actions[action_id].preconditions:
                if fact not in state.facts:
                    requirers.setdefault(fact, []).append(action_id)
        for fact in sorted(requirers):
            name = task.fact_names[fact]
            fcol = self.model.add_variable(Fraction(0), Fraction(1), kind=mp.BINARY,
                                           name=f"fact {name}")
            add_coeffs = {self.action_col[a]: Fraction(1) for a in adders.get(fact, [])}
            add_coeffs[fcol] = Fraction(-1)
            self.model.add_constraint(add_coeffs, ">=", Fraction(0), name=f"covers {name}")
            users = requirers[fact]
            big_m = sum((self.cls.count_bound[a] for a in users), Fraction(0))
            req_coeffs = {self.action_col[a]: Fraction(-1) for a in users}
            req_coeffs[fcol] = big_m
            self.model.add_constraint(req_coeffs, ">=", Fraction(0), name=f"needs {name}")

    def set_action_objective(self, weights: dict[int, Fraction]) -> None:
        """Minimise the weighted action-count sum; non-action columns weigh zero."""
        coeffs = {self.action_col[a]: w for a, w in weights.items()
                  if a in self.action_col}
        self.model.set_objective(coeffs, mp.MINIMIZE)

    def apply_integrality(self, config: HeuristicConfig,
                          first_layer_ids: frozenset[int],
                          goal_achiever_ids: frozenset[int],
                          numeric_goal_affector_ids: frozenset[int]) -> None:
        """Set column kinds for the configured policy (scratch-scope this too).

        Binary switch/fact columns are made binary under every policy.
        """
        policy = config.integrality
        integral: set[int] = set(self.task.assignment_rewritten)
        if policy in (INTS_FIRST_LAYER, INTS_PROP_GOAL, INTS_NUM_GOAL, INTS_ALL):
            integral |= set(first_layer_ids)
        if policy in (INTS_PROP_GOAL, INTS_NUM_GOAL, INTS_ALL):
            integral |= set(goal_achiever_ids)
        if policy in (INTS_NUM_GOAL, INTS_ALL):
            integral |= set(numeric_goal_affector_ids)
        if policy == INTS_ALL:
            integral |= set(self.action_col)
        for action_id in integral:
            col = self.action_col.get(action_id)
            if col is not None:
                self.model.set_variable_kind(col, mp.INTEGER)
        for col in self.switch_cols:
            self.model.set_variable_kind(col, mp.BINARY)

    # -- queries --------------------------------------------------------------

    def feasible(self) -> bool:
        """LP-relaxation feasibility of the current model (plus scratch rows)."""
        self.model.push_scratch()
        try:
            self.model.set_objective({}, mp.MINIMIZE)
            solution = self.model.solve()
        finally:
            self.model.pop_scratch()
        if solution.status == mp.LIMIT:
            log.warning("LP iteration limit during feasibility check; assuming feasible")
            return True
        return solution.status == mp.OPTIMAL

    def query_bound(self, var: int, direction: str,
                    previous: Fraction | None) -> Fraction | None:
        """Max/min of a tracked variable's post-value over the current layer.

        Returns None for an unbounded direction. The previous layer's bound
        enters as a temporary constraint so the result can never be tighter
        than it (bounds widen monotonically as layers grow); a previous bound
        already beyond the layer optimum is simply kept.
        """
        if direction == "max" and not self.has_increaser.get(var):
            return previous if previous is not None else self.state.values[var]
        if direction == "min" and not self.has_decreaser.get(var):
            return previous if previous is not None else self.state.values[var]
        col = self.post_col[var]
        self.model.push_scratch()
        try:
            if previous is not None:
                op = ">=" if direction == "max" else "<="
                self.model.add_constraint({col: Fraction(1)}, op, previous,
                                          name="monotone clamp")
            sense = mp.MAXIMIZE if direction == "max" else mp.MINIMIZE
            self.model.set_objective({col: Fraction(1)}, sense)
            solution = self.model.solve()
        finally:
            self.model.pop_scratch()
        if solution.status == mp.UNBOUNDED:
            return None
        if solution.status == mp.LIMIT:
            log.warning("LP iteration limit during bound query; treating as unbounded")
            return None
        if solution.status != mp.OPTIMAL:
            if previous is not None:
                return previous  # the clamp itself binds: keep the wider bound
            raise SolverError(
                f"bound query infeasible for {self.task.var_names[var]} ({direction})")
        return solution.objective


def layer_weights(config: HeuristicConfig, first_action_layer: dict[int, int],
                  action_costs: dict[int, Fraction] | None) -> dict[int, Fraction]:
    """Objective weight per action: k^layer, or 1 + propagated cost."""
    weights: dict[int, Fraction] = {}
    if config.weight_scheme == WEIGHT_LAYER:
        for action_id, layer in first_action_layer.items():
            weights[action_id] = config.layer_k ** layer
    else:
        assert action_costs is not None, "cost propagation required for hadd/hmax weights"
        for action_id in first_action_layer:
            weights[action_id] = Fraction(1) + action_costs.get(action_id, Fraction(0))
    return weights
