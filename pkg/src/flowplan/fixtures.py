"""Bundled micro-domains used as named regression fixtures.

Each function returns (domain_text, problem_text). These pin down the
behaviours the planner is built around: exact flow bounds on a tiny
producer/consumer fragment, the cyclical-resource-transfer mirage, the
partially-applied-helpful-action case, resource persistence, and the
on/off pump encoding with a catalytic threshold reader.
"""

from __future__ import annotations

EXCHANGE_FRAGMENT = "exchange-fragment"
CRT = "crt"
CRT_WITH_PRODUCER = "crt-with-producer"
FIVE_CART = "five-cart"
RESOURCE_PERSISTENCE = "resource-persistence"
HELPFUL_DISTORTION = "helpful-distortion"
PUMP = "pump"
PUMP_UNSOLVABLE = "pump-unsolvable"

_EXCHANGE_DOMAIN = """\
(define (domain fragment)
  (:requirements :fluents)
  (:functions (v0) (v1))
  (:action c
    :parameters ()
    :precondition (>= (v1) 2)
    :effect (and (increase (v0) 2) (decrease (v1) 2))))
"""

_EXCHANGE_PROBLEM = """\
(define (problem fragment-1)
  (:domain fragment)
  (:init (= (v0) 0) (= (v1) 2))
  (:goal (>= (v0) 4)))
"""

_CRT_DOMAIN = """\
(define (domain crt)
  (:requirements :strips :typing :fluents)
  (:types vehicle place)
  (:predicates (at ?v - vehicle ?p - place)
               (has-forest ?p - place))
  (:functions (available ?p - place)
              (stored ?v - vehicle)
              (space ?v - vehicle))
  (:action load
    :parameters (?v - vehicle ?p - place)
    :precondition (and (at ?v ?p) (>= (available ?p) 1) (>= (space ?v) 1))
    :effect (and (decrease (available ?p) 1)
                 (increase (stored ?v) 1)
                 (decrease (space ?v) 1)))
  (:action unload
    :parameters (?v - vehicle ?p - place)
    :precondition (and (at ?v ?p) (>= (stored ?v) 1))
    :effect (and (increase (available ?p) 1)
                 (decrease (stored ?v) 1)
                 (increase (space ?v) 1))))
"""

_CRT_PRODUCER_DOMAIN = _CRT_DOMAIN.rstrip()[:-1] + """
  (:action fell
    :parameters (?p - place)
    :precondition (has-forest ?p)
    :effect (increase (available ?p) 1)))
"""

_CRT_PROBLEM = """\
(define (problem crt-1)
  (:domain crt)
  (:objects v1 - vehicle p1 - place)
  (:init (at v1 p1)
         (= (available p1) 1) (= (stored v1) 0) (= (space v1) 1))
  (:goal (>= (available p1) 2)))
"""

_CRT_PRODUCER_PROBLEM = _CRT_PROBLEM.replace(
    "(at v1 p1)", "(at v1 p1) (has-forest p1)")

_FIVE_CART_DOMAIN = """\
(define (domain five-cart)
  (:requirements :strips :typing :fluents)
  (:types cart)
  (:predicates (at-depot ?c - cart) (at-site ?c - cart))
  (:functions (timber-depot) (timber-site) (in-cart ?c - cart))
  (:action load
    :parameters (?c - cart)
    :precondition (and (at-depot ?c) (>= (timber-depot) 1))
    :effect (and (decrease (timber-depot) 1) (increase (in-cart ?c) 1)))
  (:action move
    :parameters (?c - cart)
    :precondition (and (at-depot ?c) (>= (in-cart ?c) 1))
    :effect (and (not (at-depot ?c)) (at-site ?c)))
  (:action unload
    :parameters (?c - cart)
    :precondition (and (at-site ?c) (>= (in-cart ?c) 1))
    :effect (and (decrease (in-cart ?c) 1) (increase (timber-site) 1))))
"""

_FIVE_CART_PROBLEM = """\
(define (problem five-cart-1)
  (:domain five-cart)
  (:objects c1 c2 c3 c4 c5 - cart)
  (:init (at-depot c1) (at-depot c2) (at-depot c3) (at-depot c4) (at-depot c5)
         (= (timber-depot) 1) (= (timber-site) 0)
         (= (in-cart c1) 0) (= (in-cart c2) 0) (= (in-cart c3) 0)
         (= (in-cart c4) 0) (= (in-cart c5) 0))
  (:goal (>= (timber-site) 1)))
"""

_PERSISTENCE_DOMAIN = """\
(define (domain stall)
  (:requirements :strips :fluents)
  (:predicates (open-for-business))
  (:functions (coins) (trinkets) (ribbons))
  (:action buy-trinket
    :parameters ()
    :precondition (>= (coins) 1)
    :effect (and (decrease (coins) 1) (increase (trinkets) 1)))
  (:action buy-ribbon
    :parameters ()
    :precondition (>= (coins) 1)
    :effect (and (decrease (coins) 1) (increase (ribbons) 1)))
  (:action work
    :parameters ()
    :precondition (open-for-business)
    :effect (increase (coins) 1)))
"""

_PERSISTENCE_PROBLEM = """\
(define (problem stall-1)
  (:domain stall)
  (:init (open-for-business) (= (coins) 1) (= (trinkets) 0) (= (ribbons) 0))
  (:goal (and (>= (trinkets) 1) (>= (ribbons) 1))))
"""

_DISTORTION_DOMAIN = """\
(define (domain haul)
  (:requirements :strips :fluents)
  (:predicates (track-clear))
  (:functions (timber-forest) (on-sled) (timber-village))
  (:action fell
    :parameters ()
    :precondition (track-clear)
    :effect (increase (timber-forest) 1))
  (:action load
    :parameters ()
    :precondition (>= (timber-forest) 1)
    :effect (and (decrease (timber-forest) 1) (increase (on-sled) 1)
                 (not (track-clear))))
  (:action unload
    :parameters ()
    :precondition (>= (on-sled) 1)
    :effect (and (decrease (on-sled) 1) (increase (timber-village) 1))))
"""

_DISTORTION_PROBLEM = """\
(define (problem haul-1)
  (:domain haul)
  (:init (track-clear)
         (= (timber-forest) 1) (= (on-sled) 0) (= (timber-village) 0))
  (:goal (>= (timber-village) 2)))
"""

_PUMP_DOMAIN = """\
(define (domain pumphouse)
  (:requirements :strips :typing :fluents)
  (:types pump)
  (:functions (pumping ?p - pump) (water-flow) (energy))
  (:action activate
    :parameters (?p - pump)
    :precondition (<= (pumping ?p) 0)
    :effect (and (increase (pumping ?p) 1) (increase (water-flow) 1)))
  (:action deactivate
    :parameters (?p - pump)
    :precondition (and (>= (pumping ?p) 1) (>= (water-flow) 1))
    :effect (and (decrease (pumping ?p) 1) (decrease (water-flow) 1)))
  (:action generate
    :parameters ()
    :precondition (>= (water-flow) 2)
    :effect (increase (energy) 1)))
"""


def _pump_problem(pumps: int, flow_goal: int, energy_goal: int) -> str:
    names = [f"p{i + 1}" for i in range(pumps)]
    init = ["(= (water-flow) 0)", "(= (energy) 0)"]
    init += [f"(= (pumping {name}) 0)" for name in names]
    goal = [f"(>= (water-flow) {flow_goal})"]
    if energy_goal:
        goal.append(f"(>= (energy) {energy_goal})")
    return (
        "(define (problem pumphouse-1)\n"
        "  (:domain pumphouse)\n"
        f"  (:objects {' '.join(names)} - pump)\n"
        f"  (:init {' '.join(init)})\n"
        f"  (:goal (and {' '.join(goal)})))\n"
    )


def fixture(name: str) -> tuple[str, str]:
    """Domain and problem text for a named bundled fixture."""
    table = {
        EXCHANGE_FRAGMENT: (_EXCHANGE_DOMAIN, _EXCHANGE_PROBLEM),
        CRT: (_CRT_DOMAIN, _CRT_PROBLEM),
        CRT_WITH_PRODUCER: (_CRT_PRODUCER_DOMAIN, _CRT_PRODUCER_PROBLEM),
        FIVE_CART: (_FIVE_CART_DOMAIN, _FIVE_CART_PROBLEM),
        RESOURCE_PERSISTENCE: (_PERSISTENCE_DOMAIN, _PERSISTENCE_PROBLEM),
        HELPFUL_DISTORTION: (_DISTORTION_DOMAIN, _DISTORTION_PROBLEM),
        PUMP: (_PUMP_DOMAIN, _pump_problem(2, 2, 1)),
        PUMP_UNSOLVABLE: (_PUMP_DOMAIN, _pump_problem(2, 3, 0)),
    }
    if name not in table:
        raise KeyError(f"unknown fixture {name}; available: {sorted(table)}")
    return table[name]


FIXTURE_NAMES = (EXCHANGE_FRAGMENT, CRT, CRT_WITH_PRODUCER, FIVE_CART,
                 RESOURCE_PERSISTENCE, HELPFUL_DISTORTION, PUMP, PUMP_UNSOLVABLE)
