"""Configuration-LP family: knapsack pricing, column generation, the T search.

A configuration (bundle) is a set of jobs for one machine.  It is minimal at
threshold tau when its total size reaches tau and dropping any member falls
below tau.  The covering LP over minimal configurations asks for fractional
weights so that every machine group reaches its cover requirement while no
job is used more than once in total.

Solving works by column generation: a restricted master (exact simplex) is
re-solved as pricing adds improving columns.  Pricing is a minimum-knapsack
dynamic program over the master's dual values: a column prices in exactly
when its jobs' dual cost is below the group's cover dual.  With exact
arithmetic, pricing convergence with a positive shortfall objective is a
proof of infeasibility, not a numeric judgement call.

The same engine serves three covers: the per-machine configuration LP
(cover >= 1), the small-jobs-only variant with cover >= 1/2 used by the
no-upper-class branch, and the composite-machine extension with exact unit
cover at threshold ceil(T/6).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .instances import Instance
from .rat import ceil_frac
from .ratlp import LinearProgram, solve_lp

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, order=True)
class Configuration:
    """A sorted job bundle and its total size under the sizes it was built with."""

    jobs: tuple[int, ...]
    total_size: int

    def __contains__(self, job: int) -> bool:
        return job in self.jobs


def make_configuration(jobs: Iterable[int], sizes: Sequence[int]) -> Configuration:
    tup = tuple(sorted(set(jobs)))
    return Configuration(jobs=tup, total_size=sum(sizes[j] for j in tup))


def is_minimal(jobs: Iterable[int], tau: Fraction, sizes: Sequence[int]) -> bool:
    tup = tuple(set(jobs))
    total = sum(sizes[j] for j in tup)
    if total < tau:
        return False
    return all(total - sizes[j] < tau for j in tup)


def prune_to_minimal(
    jobs: Iterable[int],
    tau: Fraction,
    sizes: Sequence[int],
    costs: Mapping[int, Fraction] | None = None,
) -> Configuration:
    """Drop removable jobs, largest cost first (ties: smallest index).

    Without costs the job size stands in for the cost, so seeds reuse the
    same deterministic rule.
    """
    chosen = sorted(set(jobs))
    total = sum(sizes[j] for j in chosen)
    if total < tau:
        raise ValueError("cannot prune a bundle that does not reach tau")
    while True:
        drop = None
        drop_key = None
        for j in chosen:
            if total - sizes[j] >= tau:
                key = costs.get(j, ZERO) if costs is not None else Fraction(sizes[j])
                if drop is None or key > drop_key:
                    drop, drop_key = j, key
        if drop is None:
            return Configuration(jobs=tuple(chosen), total_size=total)
        chosen.remove(drop)
        total -= sizes[drop]


def price_min_knapsack(
    pool: Sequence[int],
    sizes: Sequence[int],
    costs: Mapping[int, Fraction],
    tau: Fraction,
) -> Configuration | None:
    """Cheapest subset of ``pool`` with total size >= tau, pruned to minimality.

    Dynamic program over integer size totals capped at ceil(tau); returns
    None when even the whole pool falls short.  Skipping is preferred on cost
    ties during reconstruction, so the raw cover leans on low job indices
    before pruning makes the final call.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    pool = sorted(pool)
    cap = ceil_frac(tau)
    if sum(sizes[j] for j in pool) < tau:
        return None
    K = len(pool)
    NO = None
    dp = [[NO] * (cap + 1) for _ in range(K + 1)]
    dp[0][0] = ZERO
    for k in range(1, K + 1):
        j = pool[k - 1]
        c = costs.get(j, ZERO)
        w = sizes[j]
        prev = dp[k - 1]
        cur = dp[k]
        for s in range(cap + 1):
            base = prev[s]
            if base is None:
                continue
            if cur[s] is None or base < cur[s]:
                cur[s] = base
            s2 = min(cap, s + w)
            cand = base + c
            if cur[s2] is None or cand < cur[s2]:
                cur[s2] = cand
    if dp[K][cap] is None:
        return None
    # Reconstruct, preferring "skip" whenever it explains the table entry.
    chosen = []
    s = cap
    for k in range(K, 0, -1):
        if dp[k - 1][s] is not None and dp[k - 1][s] == dp[k][s]:
            continue
        j = pool[k - 1]
        c = costs.get(j, ZERO)
        w = sizes[j]
        pre = None
        for s_pre in range(cap + 1):
            if min(cap, s_pre + w) != s:
                continue
            base = dp[k - 1][s_pre]
            if base is not None and base + c == dp[k][s]:
                pre = s_pre
                break
        assert pre is not None, "knapsack reconstruction failed"
        chosen.append(j)
        s = pre
    return prune_to_minimal(chosen, tau, sizes, costs)


@dataclass
class ClpSolution:
    """Feasible point of a covering LP: (machine, configuration) -> weight."""

    tau: Fraction
    weights: dict[tuple[int, Configuration], Fraction]
    cover_rhs: Fraction
    exact_cover: bool
    groups: tuple[tuple[int, ...], ...]

    def machine_cover(self, machine: int) -> Fraction:
        return sum(
            (w for (i, _), w in self.weights.items() if i == machine), ZERO
        )

    def job_usage(self) -> dict[int, Fraction]:
        usage: dict[int, Fraction] = {}
        for (_, cfg), w in self.weights.items():
            for j in cfg.jobs:
                usage[j] = usage.get(j, ZERO) + w
        return usage

    def carried(self, machine: int) -> list[tuple[Configuration, Fraction]]:
        out = [(cfg, w) for (i, cfg), w in self.weights.items() if i == machine]
        out.sort(key=lambda t: t[0])
        return out

    def dump_columns(self) -> list[dict]:
        """Debug view of the carried columns as plain JSON-able rows."""
        rows = []
        for (i, cfg), w in sorted(self.weights.items()):
            rows.append(
                {
                    "machine": i,
                    "jobs": list(cfg.jobs),
                    "total_size": cfg.total_size,
                    "weight": f"{w.numerator}/{w.denominator}",
                }
            )
        return rows


def check_cover_solution(
    sol: ClpSolution,
    pools: Mapping[int, Sequence[int]],
    sizes: Sequence[int],
) -> tuple[bool, str | None]:
    """Exact feasibility check: cover, job usage, minimality, eligibility."""
    for (i, cfg), w in sol.weights.items():
        if w < 0 or w > 1:
            return False, f"weight out of [0,1] on machine {i}"
        pool = set(pools.get(i, ()))
        if not set(cfg.jobs) <= pool:
            return False, f"machine {i} carries a job outside its pool"
        if not is_minimal(cfg.jobs, sol.tau, sizes):
            return False, f"machine {i} carries a non-minimal configuration {cfg.jobs}"
    for g, group in enumerate(sol.groups):
        cover = sum((sol.machine_cover(i) for i in group), ZERO)
        if sol.exact_cover:
            if cover != sol.cover_rhs:
                return False, f"group {g} cover {cover} != {sol.cover_rhs}"
        elif cover < sol.cover_rhs:
            return False, f"group {g} cover {cover} < {sol.cover_rhs}"
    for j, used in sorted(sol.job_usage().items()):
        if used > 1:
            return False, f"job {j} used {used} > 1"
    return True, None


def solve_cover_lp(
    groups: Sequence[Sequence[int]],
    pools: Mapping[int, Sequence[int]],
    sizes: Sequence[int],
    tau: Fraction,
    cover_rhs: Fraction = ONE,
    exact_cover: bool = False,
    seeds: Mapping[int, Iterable[tuple[int, ...]]] | None = None,
    counters: dict[str, int] | None = None,
) -> ClpSolution | None:
    """Column generation for the covering LP; None means certified infeasible.

    ``groups`` are disjoint machine tuples sharing one cover row each (plain
    configuration LP: singletons).  ``pools[i]`` lists the jobs machine i may
    bundle (eligibility already applied).  ``seeds`` optionally warm-start
    the master with job bundles re-pruned to minimality at this tau.
    """
    tau = Fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    groups = tuple(tuple(sorted(g)) for g in groups)
    group_of = {}
    for g, group in enumerate(groups):
        for i in group:
            if i in group_of:
                raise ValueError(f"machine {i} belongs to two groups")
            group_of[i] = g

    columns: list[tuple[int, int, Configuration]] = []
    colset: set[tuple[int, int, Configuration]] = set()

    def add_column(i: int, cfg: Configuration) -> bool:
        key = (group_of[i], i, cfg)
        if key in colset:
            return False
        colset.add(key)
        columns.append(key)
        return True

    # Warm start: seeds first, then one greedy column per machine whose pool
    # reaches tau at all.
    if seeds:
        for i in sorted(seeds):
            if i not in group_of:
                continue
            pool = set(pools.get(i, ()))
            for jobs in sorted(set(tuple(sorted(js)) for js in seeds[i])):
                if not set(jobs) <= pool:
                    continue
                if sum(sizes[j] for j in jobs) >= tau:
                    add_column(i, prune_to_minimal(jobs, tau, sizes))
    for i in sorted(group_of):
        pool = sorted(pools.get(i, ()))
        if pool and sum(sizes[j] for j in pool) >= tau:
            add_column(i, prune_to_minimal(pool, tau, sizes))

    all_jobs = sorted({j for i in group_of for j in pools.get(i, ())})
    ngroups = len(groups)

    # The master carries its own shortfall (a), excess (e) and job-slack (s)
    # variables so that every row is an equality over named variables.  The
    # previous optimal basis then re-installs verbatim after columns are
    # appended (fresh rows start on their own slack), and no phase-1 run is
    # ever needed: the very first basis is shortfall+slack.
    prev_basis: dict[tuple, tuple] | None = None

    while True:
        if counters is not None:
            counters["master_solves"] = counters.get("master_solves", 0) + 1
        ncols = len(columns)
        job_rows = [
            j for j in all_jobs if any(j in cfg.jobs for (_, _, cfg) in columns)
        ]
        names: list[tuple] = [("a", g) for g in range(ngroups)]
        if not exact_cover:
            names += [("e", g) for g in range(ngroups)]
        names += [("col", c) for c in range(ncols)]
        names += [("s", j) for j in job_rows]
        index = {name: v for v, name in enumerate(names)}

        lp = LinearProgram(len(names))
        for g in range(ngroups):
            lp.objective[index[("a", g)]] = Fraction(-1)
        row_ids: list[tuple] = []
        for g in range(ngroups):
            row = {
                index[("col", c)]: ONE
                for c, (gg, _, _) in enumerate(columns)
                if gg == g
            }
            row[index[("a", g)]] = ONE
            if not exact_cover:
                row[index[("e", g)]] = Fraction(-1)
            row_ids.append(("cover", g))
            lp.add_constraint(row, "=", cover_rhs)
        job_row_of = {}
        for j in job_rows:
            row = {
                index[("col", c)]: ONE
                for c, (_, _, cfg) in enumerate(columns)
                if j in cfg.jobs
            }
            row[index[("s", j)]] = ONE
            job_row_of[j] = len(lp.constraints)
            row_ids.append(("job", j))
            lp.add_constraint(row, "=", ONE)

        hint = []
        for rid in row_ids:
            name = None
            if prev_basis is not None:
                name = prev_basis.get(rid)
            if name is None:
                name = ("a", rid[1]) if rid[0] == "cover" else ("s", rid[1])
            hint.append(index[name])
        sol = solve_lp(lp, basis_hint=hint)
        assert sol.is_optimal, "shortfall master is always feasible and bounded"
        prev_basis = {
            rid: (names[v] if v is not None else None)
            for rid, v in zip(row_ids, sol.row_basis)
        }

        duals = sol.dual_values
        lam = {g: -duals[g] for g in range(ngroups)}
        mu = {j: duals[r] for j, r in job_row_of.items()}

        improved = False
        for g, group in enumerate(groups):
            for i in group:
                pool = pools.get(i, ())
                if not pool:
                    continue
                cfg = price_min_knapsack(pool, sizes, mu, tau)
                if cfg is None:
                    continue
                reduced = lam[g] - sum((mu.get(j, ZERO) for j in cfg.jobs), ZERO)
                if reduced > 0:
                    fresh = add_column(i, cfg)
                    assert fresh, "an improving column was already in the master"
                    improved = True
        if improved:
            continue

        shortfall = -sol.objective_value
        if shortfall != 0:
            return None
        weights = {}
        for c, (_, i, cfg) in enumerate(columns):
            w = sol.values[index[("col", c)]]
            if w != 0:
                weights[(i, cfg)] = weights.get((i, cfg), ZERO) + w
        result = ClpSolution(
            tau=tau,
            weights=weights,
            cover_rhs=Fraction(cover_rhs),
            exact_cover=exact_cover,
            groups=groups,
        )
        ok, why = check_cover_solution(result, pools, sizes)
        assert ok, f"cover LP postcondition violated: {why}"
        return result


def machine_pools(inst: Instance, job_pool: Iterable[int] | None = None) -> dict[int, tuple[int, ...]]:
    allowed = set(range(inst.job_count)) if job_pool is None else set(job_pool)
    return {
        i: tuple(j for j in inst.eligible_jobs(i) if j in allowed)
        for i in range(inst.machine_count)
    }


def solve_clp_feasibility(
    inst: Instance,
    tau: Fraction,
    mode: str = "cover-at-least-1",
    job_pool: Iterable[int] | None = None,
    pools: Mapping[int, Sequence[int]] | None = None,
    sizes: Sequence[int] | None = None,
    cover_rhs: Fraction = ONE,
    seeds: Mapping[int, Iterable[tuple[int, ...]]] | None = None,
    counters: dict[str, int] | None = None,
) -> ClpSolution | None:
    """Per-machine configuration LP (one cover row per machine)."""
    if mode not in ("cover-at-least-1", "cover-exactly-1"):
        raise ValueError(f"unknown mode {mode!r}")
    if pools is None:
        pools = machine_pools(inst, job_pool)
    if sizes is None:
        sizes = inst.sizes()
    return solve_cover_lp(
        groups=[(i,) for i in range(inst.machine_count)],
        pools=pools,
        sizes=sizes,
        tau=tau,
        cover_rhs=cover_rhs,
        exact_cover=(mode == "cover-exactly-1"),
        seeds=seeds,
        counters=counters,
    )


def find_T(inst: Instance, counters: dict[str, int] | None = None) -> Fraction:
    T, _ = find_T_with_seeds(inst, counters)
    return Fraction(T)


def find_T_with_seeds(
    inst: Instance, counters: dict[str, int] | None = None
) -> tuple[int, dict[int, set[tuple[int, ...]]]]:
    """Largest integer tau with a feasible configuration LP, plus column seeds.

    Integer search is exact: with integer sizes the minimal-configuration
    family is constant on (k, k+1], so feasibility only changes at integers.
    Columns discovered at one tau re-seed the master at the next, re-pruned.
    """
    pools = machine_pools(inst)
    if any(not pools[i] for i in range(inst.machine_count)):
        return 0, {}
    sizes = inst.sizes()
    seeds: dict[int, set[tuple[int, ...]]] = {i: set() for i in pools}

    def feasible(tau: int) -> bool:
        if counters is not None:
            counters["clp_solves"] = counters.get("clp_solves", 0) + 1
        sol = solve_clp_feasibility(
            inst, Fraction(tau), pools=pools, sizes=sizes, seeds=seeds, counters=counters
        )
        if sol is None:
            return False
        for (i, cfg), _ in sol.weights.items():
            seeds[i].add(cfg.jobs)
        return True

    if not feasible(1):
        return 0, seeds
    lo, hi = 1, inst.total_size()
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo, seeds


@dataclass(frozen=True)
class FractionalAssignment:
    """Sparse fractional machine-job assignment with a per-machine value floor."""

    y: dict[tuple[int, int], Fraction]
    target: Fraction


def clp_to_alp(sol: ClpSolution, sizes: Sequence[int]) -> FractionalAssignment:
    """Collapse configuration weights to job level: y[i,j] = sum of weights of
    machine i's carried configurations containing j.

    Per machine the value is at least cover * tau, so the assignment meets a
    uniform floor of cover_rhs * tau; per job the mass stays within 1 because
    the covering LP already charged each job at most once.
    """
    y: dict[tuple[int, int], Fraction] = {}
    for (i, cfg), w in sol.weights.items():
        if w == 0:
            continue
        for j in cfg.jobs:
            y[(i, j)] = y.get((i, j), ZERO) + w
    return FractionalAssignment(y=y, target=sol.cover_rhs * sol.tau)


def check_mclp(clusters, xstar: ClpSolution | None = None) -> tuple[bool, str | None]:
    """Composite-machine cover check: every composite carries small-bundle
    weight of at least 1/2 and no small job is fractionally used above 1.
    """
    if xstar is None:
        xstar = clusters.xstar
    small = clusters.job_classes.small
    half = Fraction(1, 2)
    for d, comp in enumerate(clusters.composites):
        mass = ZERO
        for i in comp.machines:
            for cfg, w in xstar.carried(i):
                if set(cfg.jobs) <= small:
                    mass += w
        if mass < half:
            return False, f"composite {d} (machines {list(comp.machines)}) small weight {mass} < 1/2"
    usage: dict[int, Fraction] = {}
    for (i, cfg), w in xstar.weights.items():
        if set(cfg.jobs) <= small:
            for j in cfg.jobs:
                usage[j] = usage.get(j, ZERO) + w
    for j in sorted(usage):
        if usage[j] > 1:
            return False, f"small job {j} used {usage[j]} > 1"
    return True, None
