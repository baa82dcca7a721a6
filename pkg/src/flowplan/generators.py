"""Deterministic problem generators for the bundled micro-domains.

Three families: market-trader (buy low / travel / sell high with a food
budget), mini-settlers (timber-to-wood refinement with cart transport and
simple builds), and pump-catalyst (on/off pumps feeding a flow threshold
plus a catalytic generator). Generation is a pure function of (size,
seed); identical arguments produce byte-identical files.
"""

from __future__ import annotations

import random
from fractions import Fraction

MARKET_TRADER = "market-trader"
MINI_SETTLERS = "mini-settlers"
PUMP_CATALYST = "pump-catalyst"

GENERATOR_NAMES = (MARKET_TRADER, MINI_SETTLERS, PUMP_CATALYST)

SIZE_LIMITS = {MARKET_TRADER: (1, 8), MINI_SETTLERS: (2, 6), PUMP_CATALYST: (1, 6)}

MARKET_TRADER_DOMAIN = """\
(define (domain market-trader)
  (:requirements :strips :typing :fluents)
  (:types market goods)
  (:predicates (at ?m - market) (road ?a - market ?b - market))
  (:functions (money) (food)
              (stock ?g - goods)
              (supply ?g - goods ?m - market)
              (buy-price ?g - goods ?m - market)
              (sell-price ?g - goods ?m - market))
  (:action travel
    :parameters (?from - market ?to - market)
    :precondition (and (at ?from) (road ?from ?to) (>= (food) 1))
    :effect (and (not (at ?from)) (at ?to) (decrease (food) 1)))
  (:action buy
    :parameters (?g - goods ?m - market)
    :precondition (and (at ?m) (>= (supply ?g ?m) 1)
                       (>= (money) (buy-price ?g ?m)))
    :effect (and (decrease (supply ?g ?m) 1)
                 (decrease (money) (buy-price ?g ?m))
                 (increase (stock ?g) 1)))
  (:action sell
    :parameters (?g - goods ?m - market)
    :precondition (and (at ?m) (>= (stock ?g) 1))
    :effect (and (decrease (stock ?g) 1)
                 (increase (money) (sell-price ?g ?m)))))
"""

MINI_SETTLERS_DOMAIN = """\
(define (domain mini-settlers)
  (:requirements :strips :typing :fluents)
  (:types place cart)
  (:predicates (cart-at ?c - cart ?p - place)
               (has-forest ?p - place) (has-sawmill ?p - place)
               (has-quarry ?p - place) (house ?p - place)
               (linked ?a - place ?b - place))
  (:functions (timber ?p - place) (wood ?p - place) (stone ?p - place)
              (in-cart ?c - cart) (space ?c - cart))
  (:action fell-timber
    :parameters (?p - place)
    :precondition (has-forest ?p)
    :effect (increase (timber ?p) 1))
  (:action saw-wood
    :parameters (?p - place)
    :precondition (and (has-sawmill ?p) (>= (timber ?p) 1))
    :effect (and (decrease (timber ?p) 1) (increase (wood ?p) 1)))
  (:action quarry-stone
    :parameters (?p - place)
    :precondition (has-quarry ?p)
    :effect (increase (stone ?p) 1))
  (:action build-house
    :parameters (?p - place)
    :precondition (and (>= (wood ?p) 1) (>= (stone ?p) 1))
    :effect (and (decrease (wood ?p) 1) (decrease (stone ?p) 1) (house ?p)))
  (:action load-wood
    :parameters (?c - cart ?p - place)
    :precondition (and (cart-at ?c ?p) (>= (wood ?p) 1) (>= (space ?c) 1))
    :effect (and (decrease (wood ?p) 1) (decrease (space ?c) 1)
                 (increase (in-cart ?c) 1)))
  (:action unload-wood
    :parameters (?c - cart ?p - place)
    :precondition (and (cart-at ?c ?p) (>= (in-cart ?c) 1))
    :effect (and (increase (wood ?p) 1) (increase (space ?c) 1)
                 (decrease (in-cart ?c) 1)))
  (:action move-cart
    :parameters (?c - cart ?a - place ?b - place)
    :precondition (and (cart-at ?c ?a) (linked ?a ?b))
    :effect (and (not (cart-at ?c ?a)) (cart-at ?c ?b))))
"""

PUMP_CATALYST_DOMAIN = """\
(define (domain pump-catalyst)
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
  (:action run-generator
    :parameters ()
    :precondition (>= (water-flow) 2)
    :effect (increase (energy) 1)))
"""


def _check_size(name: str, size: int) -> None:
    low, high = SIZE_LIMITS[name]
    if not low <= size <= high:
        raise ValueError(f"{name} size must be in [{low}, {high}], got {size}")


def market_trader_problem(markets: int, seed: int) -> str:
    """A trader must grow a small purse to a profit goal.

    Markets sit on a line. Cloth is cheap at the first market and commands
    a good price only at the far end; spice is mirrored, so the profitable
    pattern is a full circuit hauling goods both ways. Travel burns camel
    food, which nothing replenishes, so wandering is fatal; local resale
    prices are positive but below cost, which makes the stay-at-home
    sell-the-same-unit mirage attractive to the pure interval relaxation.
    Prices are in tenths to keep money off a coarse grid.
    """
    _check_size(MARKET_TRADER, markets)
    rng = random.Random(seed)
    market_names = [f"m{i + 1}" for i in range(markets)]
    goods = ["cloth", "spice"] if markets > 1 else ["cloth"]
    home = {"cloth": market_names[0], "spice": market_names[-1]}
    peak = {"cloth": market_names[-1], "spice": market_names[0]}

    def cents(lo100: int, hi100: int) -> Fraction:
        return Fraction(rng.randint(lo100, hi100), 100)

    units = 2 if markets <= 2 else 3
    buy_price: dict[tuple[str, str], Fraction] = {}
    sell_price: dict[tuple[str, str], Fraction] = {}
    supply: dict[tuple[str, str], int] = {}
    for good in goods:
        base = cents(100, 160)
        margin = cents(120, 200)
        for market in market_names:
            if market == home[good]:
                buy_price[good, market] = base
                sell_price[good, market] = cents(20, 60)
                supply[good, market] = units
            else:
                # decoy stock: buying away from home always loses money, but
                # under the interval relaxation one bought unit can be resold
                # forever, so these look like profit engines
                buy_price[good, market] = base + cents(200, 300)
                sell_price[good, market] = (base + margin if market == peak[good]
                                            else cents(20, 60))
                supply[good, market] = 1 if markets > 2 else 0
                if market == peak[good]:
                    buy_price[good, market] = sell_price[good, market] + cents(30, 80)

    start = market_names[0]
    money = units * buy_price["cloth", start] + cents(10, 40)
    if markets == 1:
        sell_price["cloth", start] = buy_price["cloth", start] + cents(50, 90)
    profit = sum(units * (sell_price[g, peak[g]] - buy_price[g, home[g]])
                 for g in goods)
    goal = money + profit
    # one circuit plus two spare legs of food: enough slack to wander fatally
    food = 2 * (markets - 1) + 2 if markets > 1 else 1

    lines = [f"(define (problem market-trader-{markets}-{seed})",
             "  (:domain market-trader)",
             f"  (:objects {' '.join(market_names)} - market {' '.join(goods)} - goods)",
             "  (:init",
             f"    (at {start})",
             f"    (= (money) {money})",
             f"    (= (food) {food})"]
    for a, b in zip(market_names, market_names[1:]):
        lines.append(f"    (road {a} {b})")
        lines.append(f"    (road {b} {a})")
    if markets == 1:
        lines.append(f"    (road {start} {start})")
    for good in goods:
        lines.append(f"    (= (stock {good}) 0)")
    for good in goods:
        for market in market_names:
            lines.append(f"    (= (supply {good} {market}) {supply[good, market]})")
            lines.append(f"    (= (buy-price {good} {market}) {buy_price[good, market]})")
            lines.append(f"    (= (sell-price {good} {market}) {sell_price[good, market]})")
    lines.append("  )")
    lines.append(f"  (:goal (>= (money) {goal})))")
    return "\n".join(lines) + "\n"


def mini_settlers_problem(places: int, seed: int) -> str:
    """Refine timber into wood and haul it to the last settlement.

    The forest and sawmill sit at the first place; the goal asks for wood
    (and, for three places or more, a house) at the far end.
    """
    _check_size(MINI_SETTLERS, places)
    rng = random.Random(seed)
    place_names = [f"l{i + 1}" for i in range(places)]
    target = place_names[-1]
    wood_goal = 2
    want_house = places >= 3

    lines = [f"(define (problem mini-settlers-{places}-{seed})",
             "  (:domain mini-settlers)",
             f"  (:objects {' '.join(place_names)} - place cart1 - cart)",
             "  (:init",
             f"    (cart-at cart1 {place_names[0]})",
             f"    (has-forest {place_names[0]})",
             f"    (has-sawmill {place_names[0]})"]
    if want_house:
        lines.append(f"    (has-quarry {target})")
    for a, b in zip(place_names, place_names[1:]):
        lines.append(f"    (linked {a} {b})")
        lines.append(f"    (linked {b} {a})")
    initial_timber = rng.randint(1, 2)
    for place in place_names:
        timber = initial_timber if place == place_names[0] else 0
        lines.append(f"    (= (timber {place}) {timber})")
        lines.append(f"    (= (wood {place}) 0)")
        lines.append(f"    (= (stone {place}) 0)")
    lines.append("    (= (in-cart cart1) 0)")
    lines.append(f"    (= (space cart1) {wood_goal})")
    lines.append("  )")
    goals = [f"(>= (wood {target}) {wood_goal})"]
    if want_house:
        goals.append(f"(house {target})")
    lines.append(f"  (:goal (and {' '.join(goals)})))")
    return "\n".join(lines) + "\n"


def pump_catalyst_problem(pumps: int, seed: int, threshold: int | None = None) -> str:
    """Reach a water-flow level while also running the catalytic generator.

    The default threshold is attainable (at most the pump count); passing a
    threshold above the pump count produces a provably unsolvable instance.
    """
    _check_size(PUMP_CATALYST, pumps)
    rng = random.Random(seed)
    if threshold is None:
        threshold = max(1, pumps - rng.randint(0, 1))
    pump_names = [f"p{i + 1}" for i in range(pumps)]
    energy_goal = 1 if pumps >= 2 and threshold <= pumps else 0
    lines = [f"(define (problem pump-catalyst-{pumps}-{seed})",
             "  (:domain pump-catalyst)",
             f"  (:objects {' '.join(pump_names)} - pump)",
             "  (:init",
             "    (= (water-flow) 0)",
             "    (= (energy) 0)"]
    for pump in pump_names:
        lines.append(f"    (= (pumping {pump}) 0)")
    lines.append("  )")
    goals = [f"(>= (water-flow) {threshold})"]
    if energy_goal:
        goals.append(f"(>= (energy) {energy_goal})")
    lines.append(f"  (:goal (and {' '.join(goals)})))")
    return "\n".join(lines) + "\n"


def generate(name: str, size: int, seed: int, threshold: int | None = None
             ) -> tuple[str, str]:
    """(domain_text, problem_text) for a named generator."""
    if name == MARKET_TRADER:
        return MARKET_TRADER_DOMAIN, market_trader_problem(size, seed)
    if name == MINI_SETTLERS:
        return MINI_SETTLERS_DOMAIN, mini_settlers_problem(size, seed)
    if name == PUMP_CATALYST:
        return PUMP_CATALYST_DOMAIN, pump_catalyst_problem(size, seed, threshold)
    raise ValueError(f"unknown generator {name}; available: {GENERATOR_NAMES}")
