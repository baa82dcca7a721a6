"""Programmatic GroundTask construction for tests."""

from __future__ import annotations

from fractions import Fraction

from flowplan.model import (
    GroundAction, GroundTask, LinearExpr, NumericCondition, NumericEffect, State,
)


def frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class TaskBuilder:
    def __init__(self):
        self.fact_names: list[str] = []
        self.var_names: list[str] = []
        self.init_values: list[Fraction] = []
        self.init_facts: set[int] = set()
        self.actions: list[GroundAction] = []
        self.goal_facts: set[int] = set()
        self.goal_conditions: list[NumericCondition] = []

    def fact(self, name: str, initially_true: bool = False) -> int:
        if name in self.fact_names:
            index = self.fact_names.index(name)
        else:
            index = len(self.fact_names)
            self.fact_names.append(name)
        if initially_true:
            self.init_facts.add(index)
        return index

    def var(self, name: str, init=0) -> int:
        if name in self.var_names:
            return self.var_names.index(name)
        self.var_names.append(name)
        self.init_values.append(frac(init))
        return self.var_names.index(name)

    def condition(self, coeffs: dict[int, object], op: str, rhs) -> NumericCondition:
        return NumericCondition(
            LinearExpr.build({v: frac(w) for v, w in coeffs.items()}), op, frac(rhs))

    def action(self, name: str, pre=(), num_pre=(), add=(), delete=(), effects=()):
        """effects: iterable of (var, op, magnitude) with magnitude a number or
        a (coeff-dict, const) pair."""
        numeric_effects = []
        for var, op, magnitude in effects:
            if isinstance(magnitude, tuple):
                coeffs, const = magnitude
                expr = LinearExpr.build({v: frac(w) for v, w in coeffs.items()},
                                        frac(const))
            else:
                expr = LinearExpr.build({}, frac(magnitude))
            numeric_effects.append(NumericEffect(var, op, expr))
        self.actions.append(GroundAction(
            id=len(self.actions),
            name=name if name.startswith("(") else f"({name})",
            preconditions=frozenset(pre),
            numeric_preconditions=tuple(num_pre),
            add_effects=frozenset(add),
            del_effects=frozenset(delete),
            numeric_effects=tuple(numeric_effects),
        ))
        return self.actions[-1].id

    def goal(self, facts=(), conditions=()):
        self.goal_facts.update(facts)
        self.goal_conditions.extend(conditions)

    def build(self) -> GroundTask:
        return GroundTask(
            fact_names=tuple(self.fact_names),
            var_names=tuple(self.var_names),
            actions=tuple(self.actions),
            initial=State(frozenset(self.init_facts), tuple(self.init_values)),
            goal_facts=frozenset(self.goal_facts),
            goal_conditions=tuple(self.goal_conditions),
        )
