"""Exact-rational linear programming: dense two-phase primal simplex.

Every LP in the pipeline (configuration-LP masters, assignment LPs, vertex
re-solves before rounding) goes through `solve_lp`/`solve_feasibility`.  The
solver works entirely over `fractions.Fraction` with deterministic pivoting
(Dantzig entering, falling back to Bland's anti-cycling rule), and returns
exact primal values together with exact dual values per constraint.  Dual
values are what drives column-generation pricing, so they are asserted
against strong duality on every optimal solve.

The tableau is dense; the LPs this package builds stay small (tens of rows,
at most a few hundred columns), which keeps exact arithmetic affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

ZERO = Fraction(0)

RELATIONS = ("<=", ">=", "=")

# Steepest-coefficient (Dantzig) entering keeps pivot counts low; after this
# many pivots the rule degrades to Bland's, whose anti-cycling property
# guarantees termination from any basis.  Both rules are deterministic.
DANTZIG_PIVOT_LIMIT = 2000


@dataclass
class LinearProgram:
    """``maximize c.x  s.t.  rows, bounds``; bounds default to [0, +inf).

    ``objective`` and constraint rows are sparse maps from variable index to
    coefficient.  A bound entry of None means unbounded on that side.
    """

    variable_count: int
    objective: dict[int, Fraction] = field(default_factory=dict)
    constraints: list[tuple[dict[int, Fraction], str, Fraction]] = field(default_factory=list)
    bounds: list[tuple[Fraction | None, Fraction | None]] | None = None

    def add_constraint(self, coeffs: Mapping[int, Fraction], relation: str, rhs) -> None:
        if relation not in RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        row = {}
        for v, a in coeffs.items():
            if v < 0 or v >= self.variable_count:
                raise ValueError(f"variable index {v} out of range")
            a = Fraction(a)
            if a != 0:
                row[v] = a
        self.constraints.append((row, relation, Fraction(rhs)))

    def effective_bounds(self) -> list[tuple[Fraction | None, Fraction | None]]:
        if self.bounds is None:
            return [(ZERO, None)] * self.variable_count
        if len(self.bounds) != self.variable_count:
            raise ValueError("bounds length must equal variable_count")
        out = []
        for lo, hi in self.bounds:
            lo = None if lo is None else Fraction(lo)
            hi = None if hi is None else Fraction(hi)
            if lo is not None and hi is not None and lo > hi:
                raise ValueError("lower bound exceeds upper bound")
            out.append((lo, hi))
        return out


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: tuple[Fraction, ...] | None = None
    objective_value: Fraction | None = None
    dual_values: tuple[Fraction, ...] | None = None
    #: per constraint row, the user variable basic there (None: slack or
    #: artificial); feeds warm starts of re-solves with added columns.
    row_basis: tuple[int | None, ...] | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def solve_feasibility(lp: LinearProgram) -> LpSolution:
    """Solve with a zero objective: any feasible vertex, or infeasible."""
    probe = LinearProgram(
        variable_count=lp.variable_count,
        objective={},
        constraints=lp.constraints,
        bounds=lp.bounds,
    )
    return solve_lp(probe)


def solve_lp(lp: LinearProgram, basis_hint: Sequence[int | None] | None = None) -> LpSolution:
    """Solve the LP; ``basis_hint`` optionally names, per constraint row, a
    user variable whose columns form a primal-feasible starting basis (rows
    hinted None fall back to their slack).  A valid hint skips phase 1; an
    invalid one raises, because hints come from this solver's own output.
    """
    bounds = lp.effective_bounds()

    # Variable standardization: every internal column is >= 0.
    #   (v, +1, off): x_v = off + col        (finite lower bound)
    #   (v, -1, off): x_v = off - col        (upper bound only)
    # Free variables get a (+1, 0) and a (-1, 0) column.
    cols: list[tuple[int, int, Fraction]] = []
    var_cols: list[list[int]] = [[] for _ in range(lp.variable_count)]
    extra_rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
    for v, (lo, hi) in enumerate(bounds):
        if lo is not None:
            var_cols[v].append(len(cols))
            cols.append((v, 1, lo))
            if hi is not None:
                extra_rows.append(({len(cols) - 1: Fraction(1)}, "<=", hi - lo))
        elif hi is not None:
            var_cols[v].append(len(cols))
            cols.append((v, -1, hi))
        else:
            var_cols[v].append(len(cols))
            cols.append((v, 1, ZERO))
            var_cols[v].append(len(cols))
            cols.append((v, -1, ZERO))

    nstruct = len(cols)

    # Internal rows: user constraints first (remembering sign flips for the
    # dual mapping), then bound rows.
    internal: list[list[Fraction]] = []
    relations: list[str] = []
    rhs: list[Fraction] = []
    flips: list[int] = []
    user_rows = len(lp.constraints)

    def push_row(row_map: Mapping[int, Fraction], relation: str, b: Fraction) -> None:
        dense = [ZERO] * nstruct
        for v, a in row_map.items():
            for c in var_cols[v]:
                _, sign, _ = cols[c]
                dense[c] += a * sign
        # a * (off + sign*col): the constant part a*off moves to the rhs.
        # Only a variable's first column carries an offset (split columns
        # both carry zero), so summing over that column alone is exact.
        b = b - sum((a * cols[var_cols[v][0]][2] for v, a in row_map.items()), ZERO)
        flip = 1
        if b < 0:
            dense = [-a for a in dense]
            b = -b
            relation = {"<=": ">=", ">=": "<=", "=": "="}[relation]
            flip = -1
        internal.append(dense)
        relations.append(relation)
        rhs.append(b)
        flips.append(flip)

    for row_map, relation, b in lp.constraints:
        push_row(row_map, relation, Fraction(b))
    for dense_map, relation, b in extra_rows:
        # bound rows are already over internal columns
        dense = [ZERO] * nstruct
        for c, a in dense_map.items():
            dense[c] = a
        b = Fraction(b)
        flip = 1
        if b < 0:
            dense = [-a for a in dense]
            b = -b
            relation = {"<=": ">=", ">=": "<=", "=": "="}[relation]
            flip = -1
        internal.append(dense)
        relations.append(relation)
        rhs.append(b)
        flips.append(flip)

    nrows = len(internal)

    # Tableau columns: structural | slack/surplus | artificial.
    slack_of_row: list[int | None] = [None] * nrows
    art_of_row: list[int | None] = [None] * nrows
    ncols = nstruct
    for r in range(nrows):
        if relations[r] in ("<=", ">="):
            slack_of_row[r] = ncols
            ncols += 1
    art_cols: list[int] = []
    for r in range(nrows):
        if relations[r] in (">=", "="):
            art_of_row[r] = ncols
            art_cols.append(ncols)
            ncols += 1

    tableau = []
    basis: list[int] = []
    for r in range(nrows):
        row = internal[r] + [ZERO] * (ncols - nstruct) + [rhs[r]]
        if slack_of_row[r] is not None:
            row[slack_of_row[r]] = Fraction(1) if relations[r] == "<=" else Fraction(-1)
        if art_of_row[r] is not None:
            row[art_of_row[r]] = Fraction(1)
            basis.append(art_of_row[r])
        else:
            basis.append(slack_of_row[r])
        tableau.append(row)

    banned = set(art_cols)

    if basis_hint is not None:
        _install_basis_hint(tableau, basis, basis_hint, var_cols, ncols, user_rows)

    # Phase 1: maximize -(sum of artificials); skipped when a hint already
    # produced an artificial-free feasible basis.
    if any(basis[r] in banned for r in range(nrows)):
        cost1 = [ZERO] * ncols
        for c in art_cols:
            cost1[c] = Fraction(-1)
        status, _ = _run_simplex(tableau, basis, cost1, ncols, banned=set())
        assert status == "optimal", "phase-1 objective is bounded by construction"
        infeas = sum(tableau[r][ncols] for r in range(nrows) if basis[r] in banned)
        if infeas != 0:
            return LpSolution(status="infeasible")
        _expel_artificials(tableau, basis, ncols, banned)

    # Phase 2 objective over internal columns.  Offsets only shift the
    # objective by a constant; the reported value is recomputed from the
    # recovered user values, so they never enter the cost row.
    cost2 = [ZERO] * ncols
    for v, cv in lp.objective.items():
        cv = Fraction(cv)
        if cv == 0:
            continue
        for c in var_cols[v]:
            _, sign, _ = cols[c]
            cost2[c] += cv * sign

    status, zrow = _run_simplex(tableau, basis, cost2, ncols, banned=banned)
    if status == "unbounded":
        return LpSolution(status="unbounded")

    # Recover user-variable values.
    col_val = [ZERO] * ncols
    for r in range(nrows):
        col_val[basis[r]] = tableau[r][ncols]
    values = []
    for v in range(lp.variable_count):
        x = ZERO
        first = True
        for c in var_cols[v]:
            _, sign, off = cols[c]
            x += sign * col_val[c]
            if first:
                x += off
                first = False
        values.append(x)

    obj_val = sum((Fraction(cv) * values[v] for v, cv in lp.objective.items()), ZERO)

    # Exact feasibility of every user constraint.
    for row_map, relation, b in lp.constraints:
        lhs = sum((a * values[v] for v, a in row_map.items()), ZERO)
        ok = lhs <= b if relation == "<=" else lhs >= b if relation == ">=" else lhs == b
        assert ok, "optimal solution violates a constraint; simplex bug"

    # Duals read off the final reduced-cost row: the entry under a row's
    # initial identity column (its artificial, or its slack for <= rows) is
    # exactly -y_r, since those columns carry zero cost in phase 2.
    duals = []
    for r in range(nrows):
        if art_of_row[r] is not None:
            duals.append(-zrow[art_of_row[r]])
        else:
            duals.append(-zrow[slack_of_row[r]])
    # Strong duality on the internal standard form certifies the basis.
    internal_obj = sum((cost2[c] * col_val[c] for c in range(ncols)), ZERO)
    dual_obj = sum((duals[r] * rhs[r] for r in range(nrows)), ZERO)
    assert dual_obj == internal_obj, "duality gap at optimum; simplex bug"

    user_duals = tuple(duals[r] * flips[r] for r in range(user_rows))
    row_basis = []
    for r in range(user_rows):
        b = basis[r]
        v = None
        if b < nstruct:
            owner = cols[b][0]
            if var_cols[owner][0] == b:
                v = owner
        row_basis.append(v)
    return LpSolution(
        status="optimal",
        values=tuple(values),
        objective_value=obj_val + ZERO,
        dual_values=user_duals,
        row_basis=tuple(row_basis),
    )


def _run_simplex(tableau, basis, cost, ncols, banned) -> str:
    """Primal simplex on a tableau already in basic form.

    Dantzig entering (largest reduced cost, lowest index on ties) until
    DANTZIG_PIVOT_LIMIT, then Bland's rule; leaving rows break ratio ties on
    the smallest basic variable, completing Bland's anti-cycling guarantee.
    """
    nrows = len(tableau)
    # Reduced-cost row: z[j] = cost[j] - cost_B . B^-1 A_j.
    z = list(cost) + [ZERO]
    for r in range(nrows):
        cb = cost[basis[r]]
        if cb != 0:
            row = tableau[r]
            for j in range(ncols + 1):
                if row[j] != 0:
                    z[j] -= cb * row[j]
    pivots = 0
    while True:
        enter = -1
        if pivots < DANTZIG_PIVOT_LIMIT:
            best = ZERO
            for j in range(ncols):
                if j in banned:
                    continue
                if z[j] > best:
                    best = z[j]
                    enter = j
        else:
            for j in range(ncols):
                if j in banned:
                    continue
                if z[j] > 0:
                    enter = j
                    break
        if enter < 0:
            return "optimal", z
        pivots += 1
        # Ratio test; ties resolved by smallest basis variable (Bland).
        leave = -1
        best_ratio = None
        for r in range(nrows):
            a = tableau[r][enter]
            if a > 0:
                ratio = tableau[r][ncols] / a
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[r] < basis[leave]
                ):
                    best_ratio = ratio
                    leave = r
        if leave < 0:
            return "unbounded", z
        _pivot(tableau, z, basis, leave, enter, ncols)


def _pivot(tableau, z, basis, r, c, ncols) -> None:
    row = tableau[r]
    piv = row[c]
    if piv != 1:
        inv = 1 / piv
        for j in range(ncols + 1):
            if row[j] != 0:
                row[j] *= inv
    for rr, other in enumerate(tableau):
        if rr == r:
            continue
        f = other[c]
        if f != 0:
            for j in range(ncols + 1):
                if row[j] != 0:
                    other[j] -= f * row[j]
    f = z[c]
    if f != 0:
        for j in range(ncols + 1):
            if row[j] != 0:
                z[j] -= f * row[j]
    basis[r] = c


def _install_basis_hint(tableau, basis, hint, var_cols, ncols, user_rows) -> None:
    """Gauss-Jordan the hinted variable set into the basis; reject bad hints.

    The hint names one variable per constraint row, but a basis is a column
    set: the row each column lands in is chosen during elimination (a fixed
    row order could hit spurious zero pivots).  Hints come from this solver's
    own `row_basis` output, so a singular set or a negative rhs means the
    caller mapped rows wrongly; both raise rather than silently falling back.
    """
    if len(hint) != user_rows:
        raise ValueError("basis hint length must match the constraint count")
    dummy = [ZERO] * (ncols + 1)
    want = []
    seen = set()
    for v in hint:
        if v is None:
            continue
        col = var_cols[v][0]
        if col in seen:
            raise ValueError("basis hint repeats a variable")
        seen.add(col)
        want.append(col)
    assigned: set[int] = set()
    for col in want:
        row = next(
            (
                r
                for r in range(len(tableau))
                if r not in assigned and basis[r] == col
            ),
            None,
        )
        if row is None:
            row = next(
                (
                    r
                    for r in range(len(tableau))
                    if r not in assigned
                    and basis[r] not in seen
                    and tableau[r][col] != 0
                ),
                None,
            )
            if row is None:
                raise ValueError("basis hint columns are singular")
            _pivot(tableau, dummy, basis, row, col, ncols)
        assigned.add(row)
    for row_vals in tableau:
        if row_vals[ncols] < 0:
            raise ValueError("basis hint is primal infeasible")


def _expel_artificials(tableau, basis, ncols, banned) -> None:
    """Pivot zero-valued artificials out of the basis where possible.

    A row whose artificial cannot leave is redundant; the artificial stays
    basic at zero and the banned set keeps it from ever re-entering.
    """
    nrows = len(tableau)
    for r in range(nrows):
        if basis[r] not in banned:
            continue
        assert tableau[r][ncols] == 0
        enter = -1
        for j in range(ncols):
            if j in banned:
                continue
            if tableau[r][j] != 0:
                enter = j
                break
        if enter < 0:
            continue
        dummy_z = [ZERO] * (ncols + 1)
        _pivot(tableau, dummy_z, basis, r, enter, ncols)
