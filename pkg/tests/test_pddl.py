"""Parser front-end tests for the supported PDDL fragment."""

from fractions import Fraction

import pytest

from flowplan import pddl
from flowplan.errors import (
    MissingInitialValueError, ParseError, UnsupportedConstructError, ValidationError,
)

FELL_TIMBER = """
(define (domain settlers-frag)
  (:requirements :strips :typing :fluents)
  (:types place)
  (:predicates (has-cabin ?p - place))
  (:functions (available-timber ?p - place))
  (:action fell-timber
    :parameters (?p - place)
    :precondition (has-cabin ?p)
    :effect (increase (available-timber ?p) 1)))
"""


def test_fell_timber_action_parses_to_one_increase_effect():
    domain = pddl.parse_domain(FELL_TIMBER)
    assert [a.name for a in domain.actions] == ["fell-timber"]
    action = domain.actions[0]
    assert action.parameters == (("?p", "place"),)
    assert action.pre_atoms == (pddl.Atom("has-cabin", ("?p",)),)
    assert len(action.numeric_effects) == 1
    effect = action.numeric_effects[0]
    assert effect.op == "increase"
    assert effect.fluent == pddl.FluentRef("available-timber", ("?p",))
    assert effect.magnitude.value == 1


def test_empty_domain_has_no_actions():
    domain = pddl.parse_domain("(define (domain empty))")
    assert domain.actions == ()


def test_scale_up_effect_is_rejected_by_name():
    text = """
    (define (domain bad)
      (:functions (x))
      (:action boom :parameters ()
        :precondition ()
        :effect (scale-up (x) 2)))
    """
    with pytest.raises(UnsupportedConstructError) as err:
        pddl.parse_domain(text)
    assert "scale-up" in str(err.value)


@pytest.mark.parametrize("snippet,construct", [
    ("(:action a :parameters () :precondition (or (p) (q)) :effect (p))", "or"),
    ("(:action a :parameters () :precondition (not (p)) :effect (p))", "negative"),
    ("(:durative-action a)", ":durative-action"),
    ("(:requirements :durative-actions)", ":durative-actions"),
])
def test_unsupported_constructs_name_the_construct(snippet, construct):
    text = f"(define (domain bad) (:predicates (p) (q)) {snippet})"
    with pytest.raises(UnsupportedConstructError) as err:
        pddl.parse_domain(text)
    assert construct in str(err.value)


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as err:
        pddl.parse_domain("(define (domain broken)")
    assert err.value.line == 1 and err.value.column >= 1


TWO_VALUE_DOMAIN = """
(define (domain pathway)
  (:requirements :fluents :typing)
  (:types mol)
  (:functions (available ?m - mol))
  (:action make
    :parameters (?m - mol)
    :precondition ()
    :effect (increase (available ?m) 1)))
"""


def test_multi_variable_goal_parses_as_one_comparison():
    domain = pddl.parse_domain(TWO_VALUE_DOMAIN)
    problem = pddl.parse_problem("""
    (define (problem p) (:domain pathway)
      (:objects a b - mol)
      (:init (= (available a) 0) (= (available b) 0))
      (:goal (>= (+ (available a) (available b)) 3)))
    """, domain)
    assert len(problem.goal_comparisons) == 1
    comparison = problem.goal_comparisons[0]
    assert comparison.op == ">="
    assert comparison.left.op == "+"


def test_empty_goal_gives_empty_sets():
    domain = pddl.parse_domain(TWO_VALUE_DOMAIN)
    problem = pddl.parse_problem("""
    (define (problem p) (:domain pathway)
      (:objects a - mol)
      (:init (= (available a) 0))
      (:goal ()))
    """, domain)
    assert problem.goal_atoms == ()
    assert problem.goal_comparisons == ()


def test_missing_initial_value_for_nullary_function_used_by_action():
    domain = pddl.parse_domain("""
    (define (domain shop)
      (:functions (money))
      (:action spend :parameters ()
        :precondition (>= (money) 1)
        :effect (decrease (money) 1)))
    """)
    with pytest.raises(MissingInitialValueError):
        pddl.parse_problem("(define (problem p) (:domain shop) (:init) (:goal ()))",
                           domain)


def test_undeclared_predicate_rejected():
    domain = pddl.parse_domain(TWO_VALUE_DOMAIN)
    with pytest.raises(ValidationError):
        pddl.parse_problem("""
        (define (problem p) (:domain pathway)
          (:objects a - mol)
          (:init (shiny a) (= (available a) 0))
          (:goal ()))
        """, domain)


def test_metric_section_rejected():
    domain = pddl.parse_domain(TWO_VALUE_DOMAIN)
    with pytest.raises(UnsupportedConstructError):
        pddl.parse_problem("""
        (define (problem p) (:domain pathway)
          (:objects a - mol)
          (:init (= (available a) 0))
          (:goal ())
          (:metric minimize (available a)))
        """, domain)


def test_decimal_constants_parse_exactly():
    domain = pddl.parse_domain("""
    (define (domain d) (:functions (x))
      (:action a :parameters () :precondition (>= (x) 0.25)
        :effect (increase (x) 1.5)))
    """)
    action = domain.actions[0]
    assert action.pre_comparisons[0].right.value == Fraction(1, 4)
    assert action.numeric_effects[0].magnitude.value == Fraction(3, 2)
