from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from santaclaus.instances import (
    Allocation,
    Instance,
    InstanceFormatError,
    JobSpec,
    OracleBudgetError,
    exact_optimum,
    exact_optimum_with_witness,
    generate_random,
    parse_allocation,
    parse_instance,
    serialize_allocation,
    serialize_instance,
    verify_allocation,
)
from conftest import tiny_instance


# ---------------------------------------------------------------- parsing

def test_parse_minimal():
    inst = parse_instance('{"machines":1,"jobs":[{"size":3,"eligible":[0]}]}')
    assert inst.machine_count == 1
    assert inst.jobs == (JobSpec(size=3, eligible=frozenset({0})),)


def test_parse_symmetric_two_machine():
    text = '{"machines":2,"jobs":[{"size":4,"eligible":[0,1]},{"size":4,"eligible":[0,1]}]}'
    inst = parse_instance(text)
    assert inst.machine_count == 2
    assert all(job.size == 4 and job.eligible == frozenset({0, 1}) for job in inst.jobs)


def test_parse_rejects_zero_size():
    with pytest.raises(InstanceFormatError, match="size must be positive") as err:
        parse_instance('{"machines":1,"jobs":[{"size":0,"eligible":[0]}]}')
    assert "jobs[0].size" in str(err.value)


def test_parse_rejects_out_of_range_machine():
    with pytest.raises(InstanceFormatError, match="machine index out of range") as err:
        parse_instance('{"machines":2,"jobs":[{"size":1,"eligible":[2]}]}')
    assert "jobs[0].eligible[0]" in str(err.value)


def test_parse_rejects_malformed_document():
    with pytest.raises(InstanceFormatError, match="malformed JSON"):
        parse_instance("{nope")
    with pytest.raises(InstanceFormatError, match="unknown field"):
        parse_instance('{"machines":1,"jobs":[],"extra":1}')


def test_parse_canonicalizes_duplicate_eligibility():
    inst = parse_instance('{"machines":2,"jobs":[{"size":3,"eligible":[1,0,1]}]}')
    assert inst.jobs[0].eligible == frozenset({0, 1})
    assert serialize_instance(inst) == '{"machines":2,"jobs":[{"size":3,"eligible":[0,1]}]}'


def test_zero_job_instance():
    inst = parse_instance('{"machines":2,"jobs":[]}')
    assert exact_optimum(inst) == 0
    from santaclaus.pipeline import solve

    report = solve(inst)
    assert report.T == 0 and report.allocation.owner == {}


def instances_strategy():
    def build(m, raw_jobs):
        jobs = tuple(
            JobSpec(size=s, eligible=frozenset(i for i in elig if i < m))
            for s, elig in raw_jobs
        )
        return Instance(machine_count=m, jobs=jobs)

    return st.builds(
        build,
        st.integers(min_value=1, max_value=4),
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=30),
                st.sets(st.integers(min_value=0, max_value=3), max_size=4),
            ),
            max_size=6,
        ),
    )


@settings(max_examples=60, derandomize=True)
@given(instances_strategy())
def test_serialize_round_trip(inst):
    assert parse_instance(serialize_instance(inst)) == inst
    # serialization is canonical: a second trip is byte-identical
    assert serialize_instance(parse_instance(serialize_instance(inst))) == serialize_instance(inst)


def test_allocation_round_trip():
    alloc = Allocation(owner={10: 1, 2: 0}, min_value=Fraction(7, 3))
    text = serialize_allocation(alloc)
    assert parse_allocation(text) == alloc
    # numeric key order, not lexicographic
    assert text.index('"2"') < text.index('"10"')


def test_parse_allocation_rejects_bad_rational():
    with pytest.raises(InstanceFormatError, match="min_value"):
        parse_allocation('{"owner":{},"min_value":"1.5"}')


# ---------------------------------------------------------------- verify

def test_verify_single_machine_sums():
    inst = tiny_instance([(3, [0]), (4, [0])], machines=1)
    alloc = Allocation(owner={0: 0, 1: 0}, min_value=Fraction(7))
    assert verify_allocation(inst, alloc) == 7


def test_verify_split_pair():
    inst = tiny_instance([(4, [0, 1]), (4, [0, 1])], machines=2)
    # oracle by hand: both-on-one gives 0, one each gives 4
    alloc = Allocation(owner={0: 0, 1: 1}, min_value=Fraction(4))
    assert verify_allocation(inst, alloc) == 4
    both = Allocation(owner={0: 0, 1: 0}, min_value=Fraction(0))
    assert verify_allocation(inst, both) == 0


def test_verify_rejects_ineligible():
    inst = tiny_instance([(5, [0])], machines=2)
    alloc = Allocation(owner={0: 1}, min_value=Fraction(0))
    with pytest.raises(ValueError, match="job 0 assigned to machine 1"):
        verify_allocation(inst, alloc)


# ---------------------------------------------------------------- oracle

def test_oracle_single_machine_assigns_everything():
    inst = tiny_instance([(3, [0]), (4, [0])], machines=1)
    assert exact_optimum(inst) == 7


def test_oracle_symmetric_pair():
    inst = tiny_instance([(4, [0, 1]), (4, [0, 1])], machines=2)
    assert exact_optimum(inst) == 4


def test_oracle_starved_machine():
    inst = tiny_instance([(5, [0])], machines=2)
    assert exact_optimum(inst) == 0


def test_oracle_witness_matches_value():
    for seed in range(25):
        inst = generate_random(m=3, n=5, max_size=9, density=Fraction(1, 2), seed=seed)
        value, witness = exact_optimum_with_witness(inst)
        assert verify_allocation(inst, witness) == value
        assert witness.min_value == value


def test_oracle_monotone_under_added_job():
    for seed in range(15):
        inst = generate_random(m=2, n=4, max_size=8, density=Fraction(2, 3), seed=seed)
        bigger = Instance(
            machine_count=inst.machine_count,
            jobs=inst.jobs + (JobSpec(size=3, eligible=frozenset({0, 1})),),
        )
        assert exact_optimum(bigger) >= exact_optimum(inst)


def test_oracle_budget_guard():
    inst = generate_random(m=6, n=12, max_size=5, density=Fraction(1), seed=0)
    with pytest.raises(OracleBudgetError):
        exact_optimum(inst)


# ---------------------------------------------------------------- generator

def test_generator_full_density_covers_everything():
    inst = generate_random(m=2, n=3, max_size=10, density=Fraction(1), seed=7)
    assert all(job.eligible == frozenset({0, 1}) for job in inst.jobs)
    assert all(1 <= job.size <= 10 for job in inst.jobs)


def test_generator_deterministic():
    a = generate_random(m=3, n=6, max_size=12, density=Fraction(1, 2), seed=42)
    b = generate_random(m=3, n=6, max_size=12, density=Fraction(1, 2), seed=42)
    assert a == b
    c = generate_random(m=3, n=6, max_size=12, density=Fraction(1, 2), seed=43)
    assert c == generate_random(m=3, n=6, max_size=12, density=Fraction(1, 2), seed=43)


def test_generator_rejects_bad_density():
    with pytest.raises(ValueError):
        generate_random(m=1, n=1, max_size=1, density=Fraction(0), seed=0)
    with pytest.raises(ValueError):
        generate_random(m=1, n=1, max_size=1, density=Fraction(3, 2), seed=0)
