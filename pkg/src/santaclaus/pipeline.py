"""End-to-end certified solver.

The pipeline computes the largest threshold T with a feasible configuration
LP, reshapes the instance through the 12-gap, classifies machines by where
their covering weight sits, and then branches:

* no upper-class machines: every machine's cover is at least half small
  bundles already, so a small-jobs-only cover at rhs 1/2 converts to a
  fractional assignment worth T/2 per machine and rounds to at least 5T/12;
* otherwise: upper machines are clustered into super machines over the big
  support forest, composite machines are matched to disjoint small bundles
  worth at least T/6 (or a selection is found by enumeration and rounded),
  every non-selected super member receives a distinct big job from its
  cluster, and saturated clusters pay every machine with a matched big job.

Every stage's output is re-validated as it is produced, and the final
allocation is evaluated against the original instance; the run aborts rather
than return anything whose minimum load is not certifiably at least T/12.
Since T bounds the true optimum from above, that certifies a factor-12
approximation on every successful run.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .clustering import (
    bipartite_match,
    build_big_graph,
    eliminate_cycles,
    extract_clusters,
)
from .configlp import (
    FractionalAssignment,
    check_mclp,
    clp_to_alp,
    find_T_with_seeds,
    machine_pools,
    solve_clp_feasibility,
)
from .eap import EapSolution, check_eap, eap_from_matching, restrict_eap, select_by_enumeration
from .gapclasses import build_gap_instance, classify_jobs, classify_machines
from .instances import Allocation, Instance, verify_allocation
from .matching import find_perfect_matching
from .rat import rat_to_str
from .rounding import round_assignment

ZERO = Fraction(0)

STRATEGIES = ("matching", "enumeration")


class PipelineError(RuntimeError):
    """A stage postcondition failed; the allocation could not be certified."""


@dataclass
class SolveReport:
    T: Fraction
    branch: str  # "trivial" | "no-upper" | "clustered"
    allocation: Allocation
    certified_ratio_bound: Fraction | None
    strategy: str
    seed: int
    branch_detail: str
    counters: dict[str, int] = field(default_factory=dict)
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {
            "T": rat_to_str(self.T),
            "branch": self.branch,
            "strategy": self.strategy,
            "seed": self.seed,
            "branch_detail": self.branch_detail,
            "min_value": rat_to_str(self.allocation.min_value),
            "certified_ratio_bound": (
                rat_to_str(self.certified_ratio_bound)
                if self.certified_ratio_bound is not None
                else None
            ),
            "owner": {str(j): i for j, i in sorted(self.allocation.owner.items())},
            "counters": {k: self.counters[k] for k in sorted(self.counters)},
        }
        if include_timings:
            doc["timings_ms"] = {
                k: round(self.timings_ms[k], 3) for k in sorted(self.timings_ms)
            }
        return doc

    def canonical_json(self) -> str:
        """Deterministic serialization: everything except wall-clock timings."""
        return json.dumps(self.to_dict(include_timings=False), separators=(",", ":"))


class _Stopwatch:
    def __init__(self) -> None:
        self.timings_ms: dict[str, float] = {}
        self._mark = time.perf_counter()

    def lap(self, stage: str) -> None:
        now = time.perf_counter()
        self.timings_ms[stage] = self.timings_ms.get(stage, 0.0) + (now - self._mark) * 1000
        self._mark = now


def solve(
    inst: Instance,
    strategy: str = "matching",
    alpha: int = 12,
    seed: int = 0,
    matching_budget: int = 10**6,
    selection_budget: int = 10**5,
) -> SolveReport:
    """Run the full pipeline and return a certified allocation report.

    ``seed`` is recorded in the report for reproducibility bookkeeping; the
    pipeline itself is deterministic and draws no randomness from it.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    watch = _Stopwatch()
    counters: dict[str, int] = {}

    T_int, seeds = find_T_with_seeds(inst, counters)
    T = Fraction(T_int)
    watch.lap("find_T")
    if T == 0:
        alloc = Allocation(owner={}, min_value=ZERO)
        return SolveReport(
            T=T,
            branch="trivial",
            allocation=alloc,
            certified_ratio_bound=None,
            strategy=strategy,
            seed=seed,
            branch_detail="uncoverable machine, optimum is zero",
            counters=counters,
            timings_ms=watch.timings_ms,
        )

    gap = build_gap_instance(inst, T, alpha)
    job_classes = classify_jobs(gap)
    x = solve_clp_feasibility(
        inst, T, pools=machine_pools(inst), sizes=gap.gap_size, seeds=seeds,
        counters=counters,
    )
    if x is None:
        raise PipelineError("gap-instance cover LP infeasible at T; T search bug")
    machine_classes = classify_machines(gap, job_classes, x)
    watch.lap("classify")

    if not machine_classes.upper:
        owner, detail = _solve_no_upper(inst, gap, job_classes, T, counters)
        branch = "no-upper"
        floor = 5 * T / 12
    else:
        owner, detail = _solve_clustered(
            inst, gap, job_classes, machine_classes, x, T, strategy,
            matching_budget, selection_budget, counters,
        )
        branch = "clustered"
        floor = T / 12
    watch.lap("branch")

    alloc = Allocation(owner=owner, min_value=verify_allocation(inst, Allocation(owner, ZERO)))
    if alloc.min_value < floor:
        raise PipelineError(
            f"certification failed: minimum load {alloc.min_value} below the "
            f"{branch} branch floor {floor}"
        )
    ratio = T / alloc.min_value if alloc.min_value > 0 else None
    watch.lap("assemble")
    return SolveReport(
        T=T,
        branch=branch,
        allocation=alloc,
        certified_ratio_bound=ratio,
        strategy=strategy,
        seed=seed,
        branch_detail=detail,
        counters=counters,
        timings_ms=watch.timings_ms,
    )


def _solve_no_upper(inst, gap, job_classes, T, counters):
    """Small-only cover at rhs 1/2, then loss-bounded rounding.

    The classifying solution witnesses feasibility (each machine is middle,
    so its small weight already reaches 1/2); re-solving over the small pool
    keeps this branch independent of where the classifying weights happened
    to sit.
    """
    pools = machine_pools(inst, job_pool=job_classes.small)
    z = solve_clp_feasibility(
        inst, T, pools=pools, sizes=inst.sizes(), cover_rhs=Fraction(1, 2),
        counters=counters,
    )
    if z is None:
        raise PipelineError("small-only cover at 1/2 infeasible; classification bug")
    assignment = clp_to_alp(z, inst.sizes())
    owner = round_assignment(assignment, inst.sizes())
    counters["small_rounded_jobs"] = len(owner)
    return owner, "resolved small-only cover at rhs 1/2"


def _solve_clustered(
    inst, gap, job_classes, machine_classes, x, T, strategy,
    matching_budget, selection_budget, counters,
):
    graph = build_big_graph(gap, x, job_classes, machine_classes)
    forest, xstar = eliminate_cycles(graph, x, gap)
    clusters = extract_clusters(forest, xstar, job_classes, machine_classes, gap)
    counters["supers"] = len(clusters.supers)
    counters["saturated"] = len(clusters.saturated)
    counters["composites"] = len(clusters.composites)
    ok, why = check_mclp(clusters)
    if not ok:
        raise PipelineError(f"composite cover check failed: {why}")

    owner: dict[int, int] = {}

    def give(job: int, machine: int) -> None:
        if job in owner:
            raise PipelineError(f"job {job} assigned twice during assembly")
        owner[job] = machine

    if strategy == "matching":
        state = find_perfect_matching(
            clusters, T, strategy="alternating-tree", budget=matching_budget
        )
        counters["matching_steps"] = state.steps
        eap = eap_from_matching(state, clusters)
        ok, why = check_eap(eap, clusters, T)
        if not ok:
            raise PipelineError(f"assignment-program check failed: {why}")
        selected = {d: e.member for d, e in state.matched.items()}
        for d, e in sorted(state.matched.items()):
            for j in e.bundle:
                give(j, e.member)
        detail = "perfect bundle matching"
    else:
        selection, shares = select_by_enumeration(clusters, T, budget=selection_budget)
        eap = EapSolution(
            u=dict(shares),
            s={
                i: Fraction(1 if i == selection.chosen[d] else 0)
                for d, comp in enumerate(clusters.composites)
                for i in comp.machines
            },
        )
        ok, why = check_eap(eap, clusters, T)
        if not ok:
            raise PipelineError(f"assignment-program check failed: {why}")
        eap = restrict_eap(eap, clusters, T)
        assignment = FractionalAssignment(y=dict(eap.u), target=T / 6)
        rounded = round_assignment(assignment, inst.sizes())
        for j, i in sorted(rounded.items()):
            give(j, i)
        selected = dict(selection.chosen)
        detail = "selection enumeration plus rounding"

    # Non-selected super members each take a distinct big job of the cluster.
    super_of_composite = {}
    super_index = 0
    for d, comp in enumerate(clusters.composites):
        if comp.kind == "super":
            super_of_composite[d] = clusters.supers[super_index]
            super_index += 1
    for d, cluster in sorted(super_of_composite.items()):
        chosen = selected[d]
        rest = [i for i in cluster.machines if i != chosen]
        adj = {
            j: sorted(inst.jobs[j].eligible & set(rest)) for j in cluster.jobs
        }
        placement = bipartite_match(list(cluster.jobs), adj)
        if len(placement) != len(cluster.jobs):
            raise PipelineError(
                f"big-job placement failed for super machine {cluster.machines}"
            )
        for j, i in sorted(placement.items()):
            give(j, i)

    for cluster in clusters.saturated:
        for i, j in cluster.assignment:
            give(j, i)

    return owner, detail
