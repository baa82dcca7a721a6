"""Self-contained LP/MIP solver behind a small model-building interface.

The simplex works on exact rationals, so identical models always produce
identical solutions and the optimum is exact whenever the inputs are
exact. Dense two-phase tableau with implicit variable upper bounds
(bound-flip substitution); entering column by most-negative reduced cost
with Bland's lowest-index rule as the anti-cycling fallback after a run
of degenerate pivots. Models containing integer or binary variables are
solved by depth-first branch-and-bound over the simplex relaxation:
branch on the lowest-index fractional variable, floor branch first,
prune on bound.

The model is single-owner mutable; `push_scratch`/`pop_scratch` give
exact undo of any mutations made in between, which callers use for
temporary constraints and temporary integrality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

from .errors import SolverError

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

DEFAULT_PIVOT_LIMIT = 100_000
DEFAULT_NODE_LIMIT = 100_000

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _frac(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass
class Counters:
    """Shared accounting for model building and solving."""

    solves: int = 0
    build_time: float = 0.0
    solve_time: float = 0.0


@dataclass
class MPSolution:
    status: str
    objective: Fraction | None
    values: tuple[Fraction, ...]


@dataclass
class _Variable:
    lb: Fraction | None
    ub: Fraction | None
    kind: str
    name: str


@dataclass
class _Constraint:
    coeffs: dict[int, Fraction]
    op: str  # "<=", ">=", "="
    rhs: Fraction
    name: str


class MPModel:
    def __init__(self, counters: Counters | None = None,
                 feasibility_tol: Fraction = Fraction(1, 10**6),
                 integrality_tol: Fraction = Fraction(1, 10**6),
                 pivot_limit: int = DEFAULT_PIVOT_LIMIT,
                 node_limit: int = DEFAULT_NODE_LIMIT):
        self.variables: list[_Variable] = []
        self.constraints: list[_Constraint] = []
        self.objective: dict[int, Fraction] = {}
        self.sense = MINIMIZE
        self.counters = counters if counters is not None else Counters()
        self.feasibility_tol = feasibility_tol
        self.integrality_tol = integrality_tol
        self.pivot_limit = pivot_limit
        self.node_limit = node_limit
        self._undo: list[tuple] = []
        self._marks: list[int] = []

    # -- building -----------------------------------------------------------

    def add_variable(self, lb=Fraction(0), ub=None, kind: str = CONTINUOUS,
                     name: str = "") -> int:
        lb = None if lb is None else _frac(lb)
        ub = None if ub is None else _frac(ub)
        if lb is not None and ub is not None and lb > ub:
            raise SolverError(f"variable bounds crossed: [{lb}, {ub}]")
        index = len(self.variables)
        self.variables.append(_Variable(lb, ub, kind, name or f"x{index}"))
        self._undo.append(("pop_variable",))
        return index

    def add_constraint(self, coeffs: dict[int, Fraction], op: str, rhs,
                       name: str = "") -> int:
        if op not in ("<=", ">=", "="):
            raise SolverError(f"unsupported constraint operator {op}")
        clean = {}
        for col, weight in coeffs.items():
            if not 0 <= col < len(self.variables):
                raise SolverError(f"constraint references unknown column {col}")
            weight = _frac(weight)
            if weight != 0:
                clean[col] = weight
        index = len(self.constraints)
        self.constraints.append(_Constraint(clean, op, _frac(rhs), name or f"c{index}"))
        self._undo.append(("pop_constraint",))
        return index

    def set_objective(self, coeffs: dict[int, Fraction], sense: str = MINIMIZE) -> None:
        if sense not in (MINIMIZE, MAXIMIZE):
            raise SolverError(f"unknown objective sense {sense}")
        self._undo.append(("objective", dict(self.objective), self.sense))
        self.objective = {col: _frac(w) for col, w in coeffs.items() if _frac(w) != 0}
        self.sense = sense

    def set_variable_kind(self, index: int, kind: str) -> None:
        if kind not in (CONTINUOUS, INTEGER, BINARY):
            raise SolverError(f"unknown variable kind {kind}")
        var = self._var(index)
        self._undo.append(("kind", index, var.kind))
        var.kind = kind

    def set_variable_bounds(self, index: int, lb, ub) -> None:
        var = self._var(index)
        lb = None if lb is None else _frac(lb)
        ub = None if ub is None else _frac(ub)
        if lb is not None and ub is not None and lb > ub:
            raise SolverError(f"variable bounds crossed: [{lb}, {ub}]")
        self._undo.append(("bounds", index, var.lb, var.ub))
        var.lb, var.ub = lb, ub

    def set_coefficient(self, row: int, col: int, value) -> None:
        if not 0 <= row < len(self.constraints):
            raise SolverError(f"unknown constraint row {row}")
        self._var(col)
        coeffs = self.constraints[row].coeffs
        self._undo.append(("coefficient", row, col, coeffs.get(col)))
        value = _frac(value)
        if value == 0:
            coeffs.pop(col, None)
        else:
            coeffs[col] = value

    def _var(self, index: int) -> _Variable:
        if not 0 <= index < len(self.variables):
            raise SolverError(f"unknown variable index {index}")
        return self.variables[index]

    # -- scratch ------------------------------------------------------------

    def push_scratch(self) -> None:
        self._marks.append(len(self._undo))

    def pop_scratch(self) -> None:
        if not self._marks:
            raise SolverError("pop_scratch without a matching push_scratch")
        mark = self._marks.pop()
        while len(self._undo) > mark:
            entry = self._undo.pop()
            tag = entry[0]
            if tag == "pop_variable":
                self.variables.pop()
            elif tag == "pop_constraint":
                self.constraints.pop()
            elif tag == "objective":
                self.objective, self.sense = entry[1], entry[2]
            elif tag == "kind":
                self.variables[entry[1]].kind = entry[2]
            elif tag == "bounds":
                self.variables[entry[1]].lb, self.variables[entry[1]].ub = entry[2], entry[3]
            elif tag == "coefficient":
                row, col, old = entry[1], entry[2], entry[3]
                if old is None:
                    self.constraints[row].coeffs.pop(col, None)
                else:
                    self.constraints[row].coeffs[col] = old

    # -- diagnostics ---------------------------------------------------------

    def effective_bounds(self, index: int) -> tuple[Fraction | None, Fraction | None]:
        var = self.variables[index]
        lb, ub = var.lb, var.ub
        if var.kind == BINARY:
            lb = _ZERO if lb is None else max(lb, _ZERO)
            ub = _ONE if ub is None else min(ub, _ONE)
        return lb, ub

    def check_assignment(self, values: list[Fraction]) -> list[str]:
        """Constraint/bound violations of a full assignment (within tolerance)."""
        tol = self.feasibility_tol
        problems = []
        for index, var in enumerate(self.variables):
            lb, ub = self.effective_bounds(index)
            value = _frac(values[index])
            if lb is not None and value < lb - tol:
                problems.append(f"{var.name} = {value} below lower bound {lb}")
            if ub is not None and value > ub + tol:
                problems.append(f"{var.name} = {value} above upper bound {ub}")
            if var.kind in (INTEGER, BINARY):
                if abs(value - _nearest_integer(value)) > self.integrality_tol:
                    problems.append(f"{var.name} = {value} not integral")
        for constraint in self.constraints:
            total = sum((w * _frac(values[c]) for c, w in constraint.coeffs.items()),
                        _ZERO)
            ok = (total <= constraint.rhs + tol if constraint.op == "<="
                  else total >= constraint.rhs - tol if constraint.op == ">="
                  else abs(total - constraint.rhs) <= tol)
            if not ok:
                problems.append(
                    f"{constraint.name}: {total} {constraint.op} {constraint.rhs} violated")
        return problems

    def write_lp(self, stream) -> None:
        """Dump the model in CPLEX LP text format (fixed layout, for hand checks)."""
        def term_string(coeffs: dict[int, Fraction]) -> str:
            parts = []
            for col in sorted(coeffs):
                weight = coeffs[col]
                name = _sanitize(self.variables[col].name)
                sign = "+" if weight >= 0 else "-"
                parts.append(f"{sign} {abs(weight)} {name}")
            if not parts:
                return "0 x_nothing"
            joined = " ".join(parts)
            return joined[2:] if joined.startswith("+ ") else joined

        stream.write("\\ flowplan mpsolver model\n")
        stream.write("Minimize\n" if self.sense == MINIMIZE else "Maximize\n")
        stream.write(f" obj: {term_string(self.objective)}\n")
        stream.write("Subject To\n")
        op_text = {"<=": "<=", ">=": ">=", "=": "="}
        for constraint in self.constraints:
            stream.write(f" {_sanitize(constraint.name)}: {term_string(constraint.coeffs)} "
                         f"{op_text[constraint.op]} {constraint.rhs}\n")
        stream.write("Bounds\n")
        for index, var in enumerate(self.variables):
            lb, ub = self.effective_bounds(index)
            name = _sanitize(var.name)
            left = "-inf" if lb is None else str(lb)
            right = "+inf" if ub is None else str(ub)
            stream.write(f" {left} <= {name} <= {right}\n")
        generals = [v.name for v in self.variables if v.kind == INTEGER]
        binaries = [v.name for v in self.variables if v.kind == BINARY]
        if generals:
            stream.write("Generals\n " + " ".join(_sanitize(n) for n in generals) + "\n")
        if binaries:
            stream.write("Binaries\n " + " ".join(_sanitize(n) for n in binaries) + "\n")
        stream.write("End\n")

    # -- solving ------------------------------------------------------------

    def solve(self) -> MPSolution:
        start = time.perf_counter()
        self.counters.solves += 1
        try:
            if any(v.kind in (INTEGER, BINARY) for v in self.variables):
                return self._branch_and_bound()
            return self._solve_relaxation({})
        finally:
            self.counters.solve_time += time.perf_counter() - start

    def _solve_relaxation(self, extra_bounds: dict[int, tuple[Fraction | None, Fraction | None]]
                          ) -> MPSolution:
        lo: list[Fraction | None] = []
        hi: list[Fraction | None] = []
        for index in range(len(self.variables)):
            lb, ub = self.effective_bounds(index)
            if index in extra_bounds:
                extra_lb, extra_ub = extra_bounds[index]
                if extra_lb is not None:
                    lb = extra_lb if lb is None else max(lb, extra_lb)
                if extra_ub is not None:
                    ub = extra_ub if ub is None else min(ub, extra_ub)
            if lb is not None and ub is not None and lb > ub:
                return MPSolution(INFEASIBLE, None, ())
            lo.append(lb)
            hi.append(ub)
        simplex = _Simplex(self, lo, hi)
        return simplex.run()

    def _branch_and_bound(self) -> MPSolution:
        integer_cols = [i for i, v in enumerate(self.variables)
                        if v.kind in (INTEGER, BINARY)]
        minimize = self.sense == MINIMIZE
        best: MPSolution | None = None
        nodes = 0
        hit_limit = False
        # depth-first stack of extra bound dictionaries; floor branch pushed
        # last so it is explored first
        stack: list[dict[int, tuple[Fraction | None, Fraction | None]]] = [{}]
        while stack:
            if nodes >= self.node_limit:
                hit_limit = True
                break
            bounds = stack.pop()
            nodes += 1
            relaxed = self._solve_relaxation(bounds)
            if relaxed.status == LIMIT:
                hit_limit = True
                break
            if relaxed.status == INFEASIBLE:
                continue
            if relaxed.status == UNBOUNDED:
                # unbounded relaxation at the root means the MIP is unbounded
                # (bounded feasible integer region would have bounded relaxation)
                return MPSolution(UNBOUNDED, None, ())
            if best is not None and not _better(relaxed.objective, best.objective, minimize):
                continue
            # exact arithmetic: a value is integral iff its denominator is 1,
            # so big-M-sized coefficients can never fake integrality
            fractional = None
            for col in integer_cols:
                value = relaxed.values[col]
                if value.denominator != 1:
                    fractional = (col, value)
                    break
            if fractional is None:
                candidate = MPSolution(OPTIMAL, relaxed.objective, relaxed.values)
                if best is None or _better(candidate.objective, best.objective, minimize):
                    best = candidate
                continue
            col, value = fractional
            down = Fraction(floor(value))
            up = Fraction(ceil(value))
            ceil_bounds = dict(bounds)
            ceil_bounds[col] = (_merge_lb(bounds.get(col), up), _merge_ub(bounds.get(col)))
            floor_bounds = dict(bounds)
            floor_bounds[col] = (_merge_lb(bounds.get(col), None), _merge_ub(bounds.get(col), down))
            stack.append(ceil_bounds)
            stack.append(floor_bounds)
        if best is not None:
            return best
        return MPSolution(LIMIT if hit_limit else INFEASIBLE, None, ())


def _merge_lb(existing: tuple | None, new_lb: Fraction | None = None) -> Fraction | None:
    current = existing[0] if existing else None
    if new_lb is None:
        return current
    return new_lb if current is None else max(current, new_lb)


def _merge_ub(existing: tuple | None, new_ub: Fraction | None = None) -> Fraction | None:
    current = existing[1] if existing else None
    if new_ub is None:
        return current
    return new_ub if current is None else min(current, new_ub)


def _better(a: Fraction, b: Fraction, minimize: bool) -> bool:
    return a < b if minimize else a > b


def _nearest_integer(value: Fraction) -> Fraction:
    return Fraction(floor(value + Fraction(1, 2)))


def _sanitize(name: str) -> str:
    out = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in name)
    return out if out and not out[0].isdigit() else "v_" + out


# ---------------------------------------------------------------------------
# Dense two-phase simplex with implicit upper bounds


class _Simplex:
    """One-shot simplex over a standard-form copy of the model.

    Every structural variable is shifted/mirrored/split so its lower
    bound is 0; finite upper bounds stay implicit and are handled by
    bound-flip substitution (a nonbasic variable conceptually sitting at
    its upper bound is replaced by its complement, so all nonbasic
    variables read 0).
    """

    def __init__(self, model: MPModel, lo: list[Fraction | None], hi: list[Fraction | None]):
        self.model = model
        self.lo = lo
        self.hi = hi
        self.pivot_limit = model.pivot_limit
        # columns: per model variable one or two transformed columns
        self.col_of: list[list[tuple[int, int]]] = []  # model var -> [(col, sign)]
        self.offset: list[Fraction] = []               # model var -> additive offset
        self.upper: list[Fraction | None] = []         # transformed upper bounds
        self.flipped: list[bool] = []
        ncols = 0
        for index in range(len(model.variables)):
            lb, ub = lo[index], hi[index]
            if lb is not None:
                self.col_of.append([(ncols, 1)])
                self.offset.append(lb)
                self.upper.append(None if ub is None else ub - lb)
                ncols += 1
            elif ub is not None:
                self.col_of.append([(ncols, -1)])
                self.offset.append(ub)
                self.upper.append(None)
                ncols += 1
            else:
                self.col_of.append([(ncols, 1), (ncols + 1, -1)])
                self.offset.append(_ZERO)
                self.upper.extend([None, None])
                ncols += 2
        self.nstruct = ncols

    def run(self) -> MPSolution:
        model = self.model
        rows: list[list[Fraction]] = []
        rhs: list[Fraction] = []
        ops: list[str] = []
        for constraint in model.constraints:
            row = [_ZERO] * self.nstruct
            shift = _ZERO
            for var, weight in constraint.coeffs.items():
                shift += weight * self.offset[var]
                for col, sign in self.col_of[var]:
                    row[col] += weight * sign
            rows.append(row)
            rhs.append(constraint.rhs - shift)
            ops.append(constraint.op)

        # normalise rhs >= 0, add slack columns, remember artificial needs
        m = len(rows)
        self.flipped = [False] * self.nstruct
        slack_cols: list[int | None] = [None] * m
        needs_artificial: list[bool] = [False] * m
        ncols = self.nstruct
        for i in range(m):
            if rhs[i] < 0:
                rows[i] = [-x for x in rows[i]]
                rhs[i] = -rhs[i]
                ops[i] = {"<=": ">=", ">=": "<=", "=": "="}[ops[i]]
            if ops[i] == "<=":
                slack_cols[i] = ncols
                ncols += 1
            elif ops[i] == ">=":
                slack_cols[i] = ncols  # surplus, coefficient -1
                ncols += 1
                needs_artificial[i] = True
            else:
                needs_artificial[i] = True
        nslack_end = ncols

        tableau: list[list[Fraction]] = []
        for i in range(m):
            row = rows[i] + [_ZERO] * (nslack_end - self.nstruct)
            if slack_cols[i] is not None:
                row[slack_cols[i]] = _ONE if ops[i] == "<=" else Fraction(-1)
            tableau.append(row)
        self.upper.extend([None] * (nslack_end - self.nstruct))
        self.flipped.extend([False] * (nslack_end - self.nstruct))

        basis: list[int] = [-1] * m
        # crash: slacks for <= rows; singleton structural columns for the rest
        occurrences: dict[int, list[int]] = {}
        for i in range(m):
            for j in range(self.nstruct):
                if tableau[i][j] != 0:
                    occurrences.setdefault(j, []).append(i)
        for i in range(m):
            if ops[i] == "<=":
                basis[i] = slack_cols[i]
        for j in range(self.nstruct):
            hit = occurrences.get(j, [])
            if len(hit) != 1:
                continue
            i = hit[0]
            if basis[i] != -1 or not needs_artificial[i]:
                continue
            coeff = tableau[i][j]
            value = rhs[i] / coeff
            limit = self.upper[j]
            if value < 0 or (limit is not None and value > limit):
                continue
            inv = 1 / coeff
            tableau[i] = [x * inv for x in tableau[i]]
            rhs[i] = value
            basis[i] = j
            needs_artificial[i] = False

        artificial_cols: list[int] = []
        for i in range(m):
            if basis[i] == -1:
                col = len(self.upper)
                for r in range(m):
                    tableau[r].append(_ONE if r == i else _ZERO)
                self.upper.append(None)
                self.flipped.append(False)
                artificial_cols.append(col)
                basis[i] = col

        self.tableau = tableau
        self.rhs = rhs
        self.basis = basis
        self.ncols = len(self.upper)
        self.pivots = 0

        if artificial_cols:
            cost = [_ZERO] * self.ncols
            for col in artificial_cols:
                cost[col] = _ONE
            status = self._optimize(cost)
            if status == LIMIT:
                return MPSolution(LIMIT, None, ())
            if self._objective_value(cost) > 0:
                return MPSolution(INFEASIBLE, None, ())
            self._drive_out(artificial_cols)
            for col in artificial_cols:
                self.upper[col] = _ZERO  # pin artificials at zero for phase 2

        cost = [_ZERO] * self.ncols
        sign = _ONE if self.model.sense == MINIMIZE else Fraction(-1)
        for var, weight in self.model.objective.items():
            for col, col_sign in self.col_of[var]:
                cost[col] += sign * weight * col_sign
        status = self._optimize(cost)
        if status == LIMIT:
            return MPSolution(LIMIT, None, ())
        if status == UNBOUNDED:
            return MPSolution(UNBOUNDED, None, ())
        values = self._extract_values()
        objective = sum((w * values[v] for v, w in self.model.objective.items()), _ZERO)
        return MPSolution(OPTIMAL, objective, tuple(values))

    # -- core pivoting -------------------------------------------------------

    def _reduced_costs(self, cost: list[Fraction]) -> list[Fraction]:
        reduced = list(cost)
        for j, flip in enumerate(self.flipped):
            if flip:
                reduced[j] = -reduced[j]
        for i, b in enumerate(self.basis):
            cb = reduced[b]
            if cb:
                row = self.tableau[i]
                for j in range(self.ncols):
                    if row[j]:
                        reduced[j] -= cb * row[j]
        return reduced

    def _objective_value(self, cost: list[Fraction]) -> Fraction:
        total = _ZERO
        for i, b in enumerate(self.basis):
            coeff = cost[b]
            if coeff:
                value = self.rhs[i]
                if self.flipped[b]:
                    value = (self.upper[b] or _ZERO) - value
                total += coeff * value
        for j, flip in enumerate(self.flipped):
            if flip and cost[j] and j not in self.basis:
                total += cost[j] * (self.upper[j] or _ZERO)
        return total

    def _optimize(self, cost: list[Fraction]) -> str:
        reduced = self._reduced_costs(cost)
        basic = set(self.basis)
        m = len(self.tableau)
        degenerate_streak = 0
        bland_threshold = 4 * (m + self.ncols)
        bland = False
        while True:
            if self.pivots >= self.pivot_limit:
                return LIMIT
            entering = -1
            if bland:
                for j in range(self.ncols):
                    if j not in basic and reduced[j] < 0:
                        entering = j
                        break
            else:
                best = _ZERO
                for j in range(self.ncols):
                    if j not in basic and reduced[j] < best:
                        best = reduced[j]
                        entering = j
            if entering == -1:
                return OPTIMAL

            # ratio test: how far can the entering variable rise before a
            # basic variable hits one of its bounds?
            best_t: Fraction | None = None
            leave_row = -1
            leave_to_upper = False
            for i in range(m):
                a = self.tableau[i][entering]
                if a > 0:
                    t = self.rhs[i] / a          # basic variable falls to 0
                    hits_upper = False
                elif a < 0:
                    cap = self.upper[self.basis[i]]
                    if cap is None:
                        continue
                    t = (cap - self.rhs[i]) / (-a)  # basic variable climbs to cap
                    hits_upper = True
                else:
                    continue
                if (best_t is None or t < best_t or
                        (t == best_t and self.basis[i] < self.basis[leave_row])):
                    best_t, leave_row, leave_to_upper = t, i, hits_upper

            limit = self.upper[entering]         # entering hits its own bound
            if limit is not None and (best_t is None or limit <= best_t):
                self.pivots += 1
                degenerate_streak = degenerate_streak + 1 if limit == 0 else 0
                bland = degenerate_streak > bland_threshold
                self._flip_column(entering)
                reduced[entering] = -reduced[entering]
                continue
            if best_t is None:
                return UNBOUNDED

            self.pivots += 1
            degenerate_streak = degenerate_streak + 1 if best_t == 0 else 0
            bland = degenerate_streak > bland_threshold

            leaving = self.basis[leave_row]
            self._pivot(leave_row, entering)
            basic.discard(leaving)
            basic.add(entering)
            factor = reduced[entering]
            if factor:
                row = self.tableau[leave_row]
                for j in range(self.ncols):
                    if row[j]:
                        reduced[j] -= factor * row[j]
            reduced[entering] = _ZERO
            if leave_to_upper:
                # leaving variable exits at its upper bound; flip so the
                # nonbasic value-0 convention holds
                self._flip_column(leaving)
                reduced[leaving] = -reduced[leaving]

    def _flip_column(self, col: int) -> None:
        bound = self.upper[col]
        if bound is None:
            raise SolverError("cannot flip a column without an upper bound")
        for i in range(len(self.tableau)):
            a = self.tableau[i][col]
            if a:
                self.rhs[i] -= a * bound
                self.tableau[i][col] = -a
        self.flipped[col] = not self.flipped[col]

    def _pivot(self, row: int, col: int) -> None:
        pivot_row = self.tableau[row]
        pivot = pivot_row[col]
        inv = 1 / pivot
        if inv != 1:
            self.tableau[row] = pivot_row = [x * inv for x in pivot_row]
            self.rhs[row] *= inv
        pr_rhs = self.rhs[row]
        for i in range(len(self.tableau)):
            if i == row:
                continue
            factor = self.tableau[i][col]
            if factor:
                target = self.tableau[i]
                self.tableau[i] = [a - factor * b for a, b in zip(target, pivot_row)]
                self.rhs[i] -= factor * pr_rhs
        self.basis[row] = col

    def _drive_out(self, artificial_cols: list[int]) -> None:
        artificial = set(artificial_cols)
        for i in range(len(self.tableau)):
            if self.basis[i] not in artificial:
                continue
            row = self.tableau[i]
            pivot_col = -1
            for j in range(self.ncols):
                if j not in artificial and row[j] != 0:
                    pivot_col = j
                    break
            if pivot_col != -1:
                self._pivot(i, pivot_col)
            # an all-zero row is redundant; its artificial stays basic at 0

    def _extract_values(self) -> list[Fraction]:
        transformed = [_ZERO] * self.ncols
        for j in range(self.ncols):
            if self.flipped[j]:
                transformed[j] = self.upper[j] or _ZERO
        for i, b in enumerate(self.basis):
            value = self.rhs[i]
            if self.flipped[b]:
                value = (self.upper[b] or _ZERO) - value
            transformed[b] = value
        values = []
        for var in range(len(self.model.variables)):
            total = self.offset[var]
            for col, sign in self.col_of[var]:
                total += sign * transformed[col]
            values.append(total)
        return values
