"""Super-machine clustering over the big-job support graph.

The weighted bipartite graph between upper-class machines and big jobs (one
edge per positive big-singleton weight) is first made acyclic by rotating
weight around cycles, which preserves every per-machine and per-job total
exactly.  The resulting forest is then cut into clusters.

A standard cluster ("super machine") is a set of machines plus connector
jobs, each connector sitting between exactly two of the cluster's machines,
so the jobs form the edges of a tree over the machines.  That shape gives the
two combinatorial properties the pipeline needs for free: one fewer job than
machines, and a perfect placement of the jobs onto the machines no matter
which single machine is left out (orient the tree away from it).

A cluster whose machines carry almost no small-configuration weight cannot
feed its left-out machine with small jobs; in that case the machines must all
be paid with big jobs instead.  Such clusters are "saturated": every machine
is matched to a distinct eligible big job (a Hall-style argument guarantees a
matching exists exactly when the small weight falls under 1/2 and the
candidate jobs are free), and they drop out of the composite-machine list.
Every cluster set is re-validated before it is returned; a failed property is
raised as a defect, never silently accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .configlp import ClpSolution, Configuration
from .gapclasses import GapInstance, JobClasses, MachineClasses

ZERO = Fraction(0)
HALF = Fraction(1, 2)


class ClusteringError(RuntimeError):
    pass


@dataclass
class BigGraph:
    """Machine-job support graph of big-singleton weights, all positive."""

    weights: dict[tuple[int, int], Fraction]

    def machines(self) -> list[int]:
        return sorted({i for i, _ in self.weights})

    def jobs(self) -> list[int]:
        return sorted({j for _, j in self.weights})

    def machine_total(self, i: int) -> Fraction:
        return sum((w for (ii, _), w in self.weights.items() if ii == i), ZERO)

    def job_total(self, j: int) -> Fraction:
        return sum((w for (_, jj), w in self.weights.items() if jj == j), ZERO)

    def to_dot(self) -> str:
        lines = ["graph big_support {"]
        for (i, j), w in sorted(self.weights.items()):
            lines.append(f'  "m{i}" -- "g{j}" [label="{w}"];')
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Cluster:
    machines: tuple[int, ...]
    jobs: tuple[int, ...]


@dataclass(frozen=True)
class SaturatedCluster:
    machines: tuple[int, ...]
    jobs: tuple[int, ...]
    assignment: tuple[tuple[int, int], ...]  # (machine, job) pairs


@dataclass(frozen=True)
class Composite:
    """A super machine or a middle-class singleton, as one matching unit."""

    machines: tuple[int, ...]
    kind: str  # "super" | "middle"


@dataclass
class ClusterSet:
    supers: tuple[Cluster, ...]
    saturated: tuple[SaturatedCluster, ...]
    composites: tuple[Composite, ...]
    xstar: ClpSolution
    gap: GapInstance
    job_classes: JobClasses
    machine_classes: MachineClasses


def bipartite_match(left: list[int], adj: dict[int, list[int]]) -> dict[int, int]:
    """Maximum matching saturating as much of ``left`` as possible (Kuhn's)."""
    match_right: dict[int, int] = {}

    def try_augment(u: int, seen: set[int]) -> bool:
        for v in adj.get(u, ()):
            if v in seen:
                continue
            seen.add(v)
            if v not in match_right or try_augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in sorted(left):
        try_augment(u, set())
    return {u: v for v, u in match_right.items()}


def build_big_graph(
    gap: GapInstance, x: ClpSolution, job_classes: JobClasses, machine_classes: MachineClasses
) -> BigGraph:
    weights = {}
    for (i, cfg), w in x.weights.items():
        if w == 0 or i not in machine_classes.upper:
            continue
        if len(cfg.jobs) == 1 and cfg.jobs[0] in job_classes.big:
            weights[(i, cfg.jobs[0])] = weights.get((i, cfg.jobs[0]), ZERO) + w
    return BigGraph(weights={k: w for k, w in weights.items() if w > 0})


def _find_cycle(weights: dict[tuple[int, int], Fraction]) -> list[tuple[int, int]] | None:
    adj: dict[tuple[str, int], list[tuple[str, int]]] = {}
    for i, j in weights:
        adj.setdefault(("m", i), []).append(("j", j))
        adj.setdefault(("j", j), []).append(("m", i))
    for v in adj:
        adj[v].sort()

    visited: set[tuple[str, int]] = set()
    parent: dict[tuple[str, int], tuple[str, int] | None] = {}

    def dfs(v) -> list | None:
        visited.add(v)
        for u in adj[v]:
            if u == parent[v]:
                continue
            if u in visited:
                # back edge: walk v up to u
                path = [v]
                while path[-1] != u:
                    path.append(parent[path[-1]])
                return path
            parent[u] = v
            found = dfs(u)
            if found is not None:
                return found
        return None

    for start in sorted(adj):
        if start in visited:
            continue
        parent[start] = None
        cycle_vertices = dfs(start)
        if cycle_vertices is not None:
            verts = cycle_vertices + [cycle_vertices[0]]
            edges = []
            for a, b in zip(verts, verts[1:]):
                if a[0] == "m":
                    edges.append((a[1], b[1]))
                else:
                    edges.append((b[1], a[1]))
            return edges
    return None


def eliminate_cycles(
    graph: BigGraph, x: ClpSolution, gap: GapInstance
) -> tuple[BigGraph, ClpSolution]:
    """Rotate weight around cycles until the support is a forest.

    Around an (even) cycle the rotation alternates -eps/+eps starting from
    the lexicographically smallest edge, with eps the smallest decremented
    weight, so at least one edge vanishes per rotation while every machine
    and job total is untouched.  The covering solution is updated in step so
    the big-singleton weights always mirror the graph.
    """
    weights = dict(graph.weights)
    t_int = gap.tau.numerator
    while True:
        cycle = _find_cycle(weights)
        if cycle is None:
            break
        assert len(cycle) % 2 == 0, "bipartite cycles are even"
        start = cycle.index(min(cycle))
        cycle = cycle[start:] + cycle[:start]
        # Making the next edge share the starting edge's job fixes the
        # traversal direction deterministically.
        if cycle[1][1] != cycle[0][1]:
            cycle = [cycle[0]] + list(reversed(cycle[1:]))
        assert cycle[1][1] == cycle[0][1]
        eps = min(weights[e] for e in cycle[0::2])
        assert eps > 0
        for pos, e in enumerate(cycle):
            weights[e] = weights[e] - eps if pos % 2 == 0 else weights[e] + eps
        for e in cycle[0::2]:
            if weights[e] == 0:
                del weights[e]

    new_weights = dict(x.weights)
    for (i, cfg) in list(new_weights):
        if len(cfg.jobs) == 1 and cfg.jobs[0] in _graph_jobs(graph):
            if i in _graph_machines(graph):
                new_weights.pop((i, cfg))
    for (i, j), w in weights.items():
        new_weights[(i, Configuration(jobs=(j,), total_size=t_int))] = w
    xstar = ClpSolution(
        tau=x.tau,
        weights=new_weights,
        cover_rhs=x.cover_rhs,
        exact_cover=x.exact_cover,
        groups=x.groups,
    )
    return BigGraph(weights=weights), xstar


def _graph_machines(graph: BigGraph) -> set[int]:
    return {i for i, _ in graph.weights}


def _graph_jobs(graph: BigGraph) -> set[int]:
    return {j for _, j in graph.weights}


def small_mass_by_machine(xstar: ClpSolution, job_classes: JobClasses) -> dict[int, Fraction]:
    mass: dict[int, Fraction] = {}
    for (i, cfg), w in xstar.weights.items():
        if set(cfg.jobs) <= job_classes.small:
            mass[i] = mass.get(i, ZERO) + w
    return mass


def extract_clusters(
    forest: BigGraph,
    xstar: ClpSolution,
    job_classes: JobClasses,
    machine_classes: MachineClasses,
    gap: GapInstance,
) -> ClusterSet:
    """Cut the forest into super machines, saturating small-starved clusters.

    Bottom-up over each tree rooted at its smallest machine: every machine
    starts as its own one-machine cluster, and every job with machine
    children below it promotes exactly one child cluster into its parent's
    (the heaviest edge wins, smallest machine id on ties); the job becomes
    the connector between the two.  Children not promoted are finished
    clusters.  Connector bookkeeping keeps |jobs| = |machines| - 1 invariant
    throughout.

    Clusters whose total small-configuration weight falls below 1/2 are
    repaired jointly afterwards: their machines are matched to distinct
    eligible big jobs that no surviving cluster claims as a connector.  A
    failed repair or a failed property check raises, because the final
    allocation could not certify its floor otherwise.
    """
    small_mass = small_mass_by_machine(xstar, job_classes)

    adj_m: dict[int, list[int]] = {}
    adj_j: dict[int, list[int]] = {}
    for i, j in forest.weights:
        adj_m.setdefault(i, []).append(j)
        adj_j.setdefault(j, []).append(i)
    for v in adj_m:
        adj_m[v].sort()
    for v in adj_j:
        adj_j[v].sort()

    emitted: list[dict] = []
    seen_machines: set[int] = set()

    for root in sorted(machine_classes.upper):
        if root in seen_machines:
            continue
        if root not in adj_m:
            raise ClusteringError(
                f"upper machine {root} has no big support edge; classification bug"
            )
        # Orient the tree: BFS from the root, alternating machine/job levels.
        parent_of_job: dict[int, int] = {}
        children_jobs: dict[int, list[int]] = {root: []}
        children_machines: dict[int, list[int]] = {}
        order: list[int] = [root]
        seen_jobs: set[int] = set()
        seen_machines.add(root)
        queue = [root]
        while queue:
            i = queue.pop(0)
            children_jobs.setdefault(i, [])
            for j in adj_m.get(i, ()):
                if j in seen_jobs:
                    continue
                seen_jobs.add(j)
                parent_of_job[j] = i
                children_jobs[i].append(j)
                children_machines[j] = []
                for w in adj_j.get(j, ()):
                    if w in seen_machines:
                        continue
                    seen_machines.add(w)
                    children_machines[j].append(w)
                    order.append(w)
                    queue.append(w)

        cluster_of: dict[int, dict] = {
            i: {"machines": [i], "jobs": []} for i in order
        }
        # Post-order: children before parents.
        for v in reversed(order):
            mine = cluster_of[v]
            for j in children_jobs.get(v, ()):
                kids = children_machines.get(j, [])
                if not kids:
                    continue  # leaf job: stays free for the repair pool
                best = max(kids, key=lambda w: (forest.weights[(w, j)], -w))
                for w in kids:
                    if w is best:
                        continue
                    emitted.append(cluster_of[w])
                absorbed = cluster_of[best]
                mine["machines"].extend(absorbed["machines"])
                mine["jobs"].extend(absorbed["jobs"])
                mine["jobs"].append(j)
        emitted.append(cluster_of[root])

    uppers = set(machine_classes.upper)
    covered = [i for c in emitted for i in c["machines"]]
    assert sorted(covered) == sorted(uppers), "clusters must partition the upper machines"

    keep: list[Cluster] = []
    defects: list[dict] = []
    for c in emitted:
        total_small = sum((small_mass.get(i, ZERO) for i in c["machines"]), ZERO)
        if total_small >= HALF:
            keep.append(
                Cluster(machines=tuple(sorted(c["machines"])), jobs=tuple(sorted(c["jobs"])))
            )
        else:
            defects.append(c)
    keep.sort(key=lambda c: c.machines[0])

    saturated: list[SaturatedCluster] = []
    if defects:
        claimed = {j for c in keep for j in c.jobs}
        candidates = set(job_classes.big) - claimed
        inst = gap.base
        left = sorted(i for c in defects for i in c["machines"])
        adj = {
            i: sorted(j for j in candidates if i in inst.jobs[j].eligible)
            for i in left
        }
        matching = bipartite_match(left, adj)
        for c in defects:
            pairs = []
            for i in sorted(c["machines"]):
                if i not in matching:
                    raise ClusteringError(
                        "clustering postcondition violated: cluster with machines "
                        f"{sorted(c['machines'])} has small weight below 1/2 and no "
                        f"big-job matching for machine {i}"
                    )
                pairs.append((i, matching[i]))
            saturated.append(
                SaturatedCluster(
                    machines=tuple(sorted(c["machines"])),
                    jobs=tuple(sorted(j for _, j in pairs)),
                    assignment=tuple(pairs),
                )
            )
        saturated.sort(key=lambda c: c.machines[0])

    composites = tuple(
        [Composite(machines=c.machines, kind="super") for c in keep]
        + [Composite(machines=(i,), kind="middle") for i in sorted(machine_classes.middle)]
    )
    clusters = ClusterSet(
        supers=tuple(keep),
        saturated=tuple(saturated),
        composites=composites,
        xstar=xstar,
        gap=gap,
        job_classes=job_classes,
        machine_classes=machine_classes,
    )
    ok, why = check_cluster_properties(clusters, gap)
    if not ok:
        raise ClusteringError(f"clustering postcondition violated: {why}")
    _check_saturated(clusters)
    return clusters


def _check_saturated(clusters: ClusterSet) -> None:
    inst = clusters.gap.base
    used: set[int] = {j for c in clusters.supers for j in c.jobs}
    for c in clusters.saturated:
        assert len(c.jobs) == len(c.machines)
        for i, j in c.assignment:
            if j in used:
                raise ClusteringError(f"big job {j} claimed twice during saturation")
            used.add(j)
            if i not in inst.jobs[j].eligible:
                raise ClusteringError(f"saturated machine {i} got ineligible job {j}")
            if j not in clusters.job_classes.big:
                raise ClusteringError(f"saturated machine {i} got a small job {j}")


def check_cluster_properties(clusters: ClusterSet, gap: GapInstance) -> tuple[bool, str | None]:
    """The three super-machine properties, checked exactly.

    1. one fewer job than machines;
    2. the jobs can be placed on the machines leaving out any one machine
       (verified by running a bipartite matching per left-out machine);
    3. combined small-configuration weight at least 1/2.
    """
    small_mass = small_mass_by_machine(clusters.xstar, clusters.job_classes)
    inst = gap.base
    for k, cluster in enumerate(clusters.supers):
        if len(cluster.jobs) != len(cluster.machines) - 1:
            return False, (
                f"cluster {k}: property 1 fails, |jobs|={len(cluster.jobs)} "
                f"but |machines|-1={len(cluster.machines) - 1}"
            )
        members = set(cluster.machines)
        for leave_out in cluster.machines:
            targets = members - {leave_out}
            adj = {
                j: sorted(inst.jobs[j].eligible & targets) for j in cluster.jobs
            }
            matching = bipartite_match(list(cluster.jobs), adj)
            if len(matching) != len(cluster.jobs):
                return False, (
                    f"cluster {k}: property 2 fails leaving out machine {leave_out}"
                )
        total_small = sum((small_mass.get(i, ZERO) for i in cluster.machines), ZERO)
        if total_small < HALF:
            return False, (
                f"cluster {k}: property 3 fails, small weight {total_small} < 1/2"
            )
    return True, None
