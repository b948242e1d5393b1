"""Gap instances and the big/small, upper/middle classifications.

The alpha-gap instance reshapes job sizes relative to a threshold T: any job
of size at least T/alpha counts as exactly T (a "big" job), everything else
keeps its size ("small").  At alpha = 12 and tau = T this gives the pipeline
two structural facts it leans on throughout: every minimal configuration
containing a big job is a big singleton, and any machine that is not
big-heavy ("upper class") carries small-configuration weight of at least 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .configlp import ClpSolution
from .instances import Instance

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class GapInstance:
    base: Instance
    tau: Fraction
    alpha: int
    gap_size: tuple[int, ...]


@dataclass(frozen=True)
class JobClasses:
    big: frozenset[int]
    small: frozenset[int]


@dataclass(frozen=True)
class MachineClasses:
    upper: frozenset[int]
    middle: frozenset[int]
    big_mass: dict[int, Fraction]
    small_mass: dict[int, Fraction]


def build_gap_instance(inst: Instance, T: Fraction, alpha: int) -> GapInstance:
    T = Fraction(T)
    if T <= 0:
        raise ValueError("T must be positive; a zero T short-circuits the pipeline")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if T.denominator != 1:
        raise ValueError("T must be an integer (the T search returns integers)")
    threshold = T / alpha
    t_int = T.numerator
    gap = tuple(
        job.size if job.size < threshold else t_int for job in inst.jobs
    )
    return GapInstance(base=inst, tau=T, alpha=alpha, gap_size=gap)


def classify_jobs(gap: GapInstance) -> JobClasses:
    """Partition jobs: big iff the gap size was snapped to T.

    Also asserts the structural fact used downstream: a big job alone already
    reaches tau in the gap instance, so no minimal configuration can contain
    a big job alongside anything else.
    """
    t_int = gap.tau.numerator
    threshold = gap.tau / gap.alpha
    big = frozenset(
        j for j, job in enumerate(gap.base.jobs) if job.size >= threshold
    )
    small = frozenset(range(len(gap.gap_size))) - big
    for j in big:
        assert gap.gap_size[j] == t_int
    for j in small:
        assert gap.gap_size[j] == gap.base.jobs[j].size < threshold
    return JobClasses(big=big, small=small)


def classify_machines(
    gap: GapInstance, job_classes: JobClasses, x: ClpSolution
) -> MachineClasses:
    """Threshold-1/2 split on big-singleton weight, with exact mass bookkeeping.

    In the gap instance at tau = T the carried configurations are either big
    singletons or all-small bundles; anything else is a solver bug and is
    rejected loudly.  Middle machines inherit small mass >= 1/2 from their
    unit cover, which is asserted rather than assumed.
    """
    m = gap.base.machine_count
    big_mass = {i: Fraction(0) for i in range(m)}
    small_mass = {i: Fraction(0) for i in range(m)}
    for (i, cfg), w in x.weights.items():
        members = set(cfg.jobs)
        if members & job_classes.big:
            assert len(cfg.jobs) == 1, (
                f"machine {i} carries a mixed configuration {cfg.jobs}; "
                "big jobs must appear as singletons in the gap instance"
            )
            big_mass[i] += w
        else:
            small_mass[i] += w
    upper = frozenset(i for i in range(m) if big_mass[i] >= HALF)
    middle = frozenset(range(m)) - upper
    for i in middle:
        assert small_mass[i] >= HALF, (
            f"middle machine {i} has small mass {small_mass[i]} < 1/2; "
            "the covering solution lost its unit cover"
        )
    return MachineClasses(
        upper=upper, middle=middle, big_mass=big_mass, small_mass=small_mass
    )
