"""Acceptance suite: one test per shipped guarantee, each printing a
PASS/FAIL line.  Sweeps are seeded and exhaustive at desk scale; stated
runtime ceilings are asserted with a monotonic clock.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import pytest

from ttcgoals import (
    ChebyshevObjective,
    DiscreteMetricObjective,
    Distribution,
    Matching,
    Objective,
    PolicyGoal,
    TabulatedObjective,
    build_balanced_exchange_goal,
    build_combined_goal,
    build_diversity_goal,
    build_exchange_feasibility_goal,
    confirm_pseudo_witness,
    enumerate_constrained_efficient_ir,
    enumerate_feasible,
    induced_distribution,
    is_constrained_efficient,
    is_m_convex,
    is_mnat_convex,
    is_pseudo_mnat_concave,
    lift_add_unassigned,
    run_ttc,
    upper_contours_all_mnat_convex,
    verify_individual_rationality,
    verify_strategy_proofness,
    verify_weak_improvement,
)
from ttcgoals.convexity import ConvexityWitness
from ttcgoals.ttc import Option

from conftest import APPENDIX_A_OUTCOME, EXAMPLE_1_MU, EXAMPLE_1_MU_TILDE
from randgen import (
    anchored_quota_goal,
    anchored_targets,
    concave_objective,
    district_economy,
    mechanism_economy,
    random_goal,
    random_master,
    random_profile,
    random_table,
    small_economy,
)


def report(criterion: str, detail: str) -> None:
    print(f"ACCEPTANCE {criterion} PASS {detail}")


def cycle_as_set(cycle):
    return frozenset(cycle)


def test_c01_appendix_a_bit_exact(appendix_a):
    started = time.monotonic()
    econ = appendix_a.economy
    f = appendix_a.build_objective()
    outcome, trace = run_ttc(econ, f, appendix_a.preferences, appendix_a.master_list)

    assert outcome.to_ids(econ) == APPENDIX_A_OUTCOME
    assert len(trace.steps) == 5

    s = econ.student_index
    step1 = trace.steps[0]
    assert len(step1.cycles) == 1
    assert cycle_as_set(step1.cycles[0]) == frozenset({
        (s["s7"], Option(1, 1)),  # s7 takes the (c2, t2) slot
        (s["s3"], Option(3, 0)),  # s3 takes the (c4, t1) slot
    })

    step2 = trace.steps[1]
    assert sorted(len(c) for c in step2.cycles) == [1, 1]
    assert {c[0] for c in step2.cycles} == {
        (s["s1"], Option(1, 0)), (s["s6"], Option(2, 1)),
    }
    assert set(step2.removed) == {Option(3, 0), Option(3, 1), Option(1, 1)}

    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    report("C1", f"outcome+trace exact in {elapsed:.3f}s")


def test_c02_example_1_frontier(example_1):
    started = time.monotonic()
    econ = example_1.economy
    f = example_1.build_objective()
    frontier = enumerate_constrained_efficient_ir(econ, f, example_1.preferences)
    got = {m for m in frontier}
    want = {
        Matching.from_ids(econ, EXAMPLE_1_MU),
        Matching.from_ids(econ, EXAMPLE_1_MU_TILDE),
    }
    assert got == want
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    report("C2", f"frontier == {{mu, mu~}} in {elapsed:.1f}s")


def test_c03_example_1_concavity_failure(example_1):
    econ = example_1.economy
    first_district = [econ.school_index[c] for c in ("c1", "c2", "c3")]

    def case_value(xi: Distribution) -> int:
        if xi.total() != 6:
            return 0
        for ti in range(econ.num_types):
            if sum(xi.entry(ci, ti) for ci in first_district) != 1:
                return 0
        return 1

    objective = TabulatedObjective.from_function(econ, case_value)
    result = is_pseudo_mnat_concave(objective)
    assert not result.holds
    assert confirm_pseudo_witness(objective, result.witness)

    # The documented violating pair is itself a valid witness.
    mu = Matching.from_ids(econ, EXAMPLE_1_MU)
    mu_t = Matching.from_ids(econ, EXAMPLE_1_MU_TILDE)
    pivot = econ.school_index["c3"] * econ.num_types + econ.type_index["t1"]
    documented = ConvexityWitness(
        induced_distribution(econ, mu).flat(),
        induced_distribution(econ, mu_t).flat(),
        pivot,
    )
    assert confirm_pseudo_witness(objective, documented)

    district_goal = example_1.build_goal()
    goal_result = is_mnat_convex(district_goal)
    assert not goal_result.holds
    report("C3", "objective not pseudo-mnat-concave; district goal not mnat-convex")


def test_c04_appendix_b_exact_values(appendix_b):
    f = appendix_b.build_objective()
    goal = appendix_b.build_goal()

    def val(x, y):
        return f.value(Distribution(((x, y),)))

    assert val(3, 1) == -1
    assert val(2, 0) == -1
    assert val(2, 1) == 0
    assert val(3, 0) == -2
    assert is_mnat_convex(goal).holds
    result = is_pseudo_mnat_concave(f)
    assert not result.holds
    assert confirm_pseudo_witness(f, result.witness)
    report("C4", "distance values exact; goal mnat-convex; objective not concave")


def test_c05_contour_characterization_sweep():
    started = time.monotonic()
    rng = random.Random(1205)
    agreements = 0
    concave_seen = 0
    for _ in range(1000):
        econ = small_economy(rng)
        objective = random_table(rng, econ, enumerate_feasible(econ))
        direct = is_pseudo_mnat_concave(objective)
        sweep = upper_contours_all_mnat_convex(objective)
        assert direct.holds == sweep.holds
        agreements += 1
        concave_seen += direct.holds
    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    report("C5", f"{agreements}/1000 agree ({concave_seen} concave) in {elapsed:.1f}s")


def test_c06_goal_objective_equivalences():
    rng = random.Random(1306)
    concave_seen = 0
    for _ in range(1000):
        econ = small_economy(rng)
        feasible = enumerate_feasible(econ)
        goal = random_goal(rng, econ, feasible)
        expected = is_mnat_convex(goal).holds
        cheb = is_pseudo_mnat_concave(ChebyshevObjective(goal), feasible).holds
        indicator = is_pseudo_mnat_concave(DiscreteMetricObjective(goal), feasible).holds
        assert cheb == expected
        assert indicator == expected
        concave_seen += expected
    report("C6", f"1000/1000 triple-equivalences hold ({concave_seen} convex goals)")


def test_c07_policy_goal_convexity():
    rng = random.Random(1407)
    rounds = 100
    for _ in range(rounds):
        econ = district_economy(rng)
        feasible = enumerate_feasible(econ)
        anchor = rng.choice(feasible)

        floors, ceilings = {}, {}
        for ci, cid in enumerate(econ.school_ids):
            floors[cid], ceilings[cid] = {}, {}
            for ti, tid in enumerate(econ.type_ids):
                have = anchor.entry(ci, ti)
                floors[cid][tid] = rng.randint(0, have)
                ceilings[cid][tid] = rng.randint(have, econ.capacities[ci])
        atleast = anchored_targets(rng, econ, anchor, exact=False)
        exact = anchored_targets(rng, econ, anchor, exact=True)

        mnat_goals = [
            anchored_quota_goal(rng, econ, anchor),
            build_diversity_goal(econ, floors, ceilings),
            build_exchange_feasibility_goal(econ, atleast),
            build_combined_goal(econ, floors, ceilings, atleast, "exchange"),
        ]
        m_goals = [
            build_balanced_exchange_goal(econ, exact),
            build_combined_goal(econ, floors, ceilings, exact, "balanced"),
        ]
        for goal in mnat_goals:
            assert is_mnat_convex(goal, feasible).holds
        for goal in m_goals:
            assert is_m_convex(goal).holds
            assert is_mnat_convex(goal).holds
    report("C7", f"{rounds} parameterizations x 6 builders all convex")


@dataclass
class CompositeCase:
    economy: object
    objective: Objective
    goal: PolicyGoal | None
    prefs: tuple
    master: tuple
    outcome: Matching


@pytest.fixture(scope="module")
def composite_corpus():
    rng = random.Random(1508)
    cases = []
    for _ in range(200):
        econ = mechanism_economy(rng)
        objective, goal = concave_objective(rng, econ)
        prefs = random_profile(rng, econ)
        master = random_master(rng, econ)
        outcome, _ = run_ttc(econ, objective, prefs, master)
        cases.append(CompositeCase(econ, objective, goal, prefs, master, outcome))
    return cases


def test_c08_composite_guarantees(composite_corpus):
    started = time.monotonic()
    for case in composite_corpus:
        econ = case.economy
        assert is_pseudo_mnat_concave(case.objective).holds
        assert verify_weak_improvement(econ, case.objective, case.outcome).passed
        assert verify_individual_rationality(econ, case.prefs, case.outcome).passed
        assert is_constrained_efficient(
            econ, case.objective, case.prefs, case.outcome
        ).passed
        assert verify_strategy_proofness(
            econ, case.objective, case.prefs, case.master
        ).passed
    elapsed = time.monotonic() - started
    assert elapsed < 600.0
    report("C8", f"200/200 instances pass all four oracles in {elapsed:.1f}s")


def test_c09_goal_satisfaction(composite_corpus):
    checked = 0
    for case in composite_corpus:
        if case.goal is None:
            continue
        econ = case.economy
        initial = induced_distribution(econ, econ.initial)
        assert initial in case.goal.members
        assert induced_distribution(econ, case.outcome) in case.goal.members
        checked += 1
    assert checked >= 40
    report("C9", f"{checked} membership-indicator runs stay inside their goal")


def test_c10_lifting_equivalence():
    rng = random.Random(1610)
    for _ in range(500):
        econ = small_economy(rng)
        goal = random_goal(rng, econ, enumerate_feasible(econ))
        students = max(xi.total() for xi in goal.members) + rng.randint(0, 3)
        lifted = lift_add_unassigned(goal, students)
        assert is_mnat_convex(goal).holds == is_m_convex(lifted).holds
    report("C10", "500/500 lifting equivalences hold")
