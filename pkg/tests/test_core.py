from __future__ import annotations

import math
import random
from itertools import product

import pytest

from ttcgoals import (
    BudgetExceededError,
    Distribution,
    Economy,
    Matching,
    Preference,
    enumerate_feasible,
    induced_distribution,
    is_feasible,
    is_individually_rational,
    pareto_dominates,
    zero_distribution,
)

from randgen import mechanism_economy, random_profile


def tiny_economy(num_schools=2, num_types=2, caps=(1, 1)):
    return Economy.build(
        schools=[(f"c{i+1}", caps[i]) for i in range(num_schools)],
        types=[f"t{i+1}" for i in range(num_types)],
        students=[],
        initial={},
    )


class TestEconomy:
    def test_build_resolves_ids(self, appendix_a):
        econ = appendix_a.economy
        assert econ.school_ids == ("c1", "c2", "c3", "c4")
        assert econ.capacities == (3, 2, 1, 1)
        assert econ.student_types == (0, 0, 0, 0, 1, 1, 1)
        assert econ.initial.to_ids(econ)["s4"] is None

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            Economy.build([("c1", 1), ("c1", 1)], ["t1"], [], {})

    def test_initial_matching_capacity_checked(self):
        with pytest.raises(ValueError, match="capacity"):
            Economy.build(
                [("c1", 1)], ["t1"],
                [("s1", "t1"), ("s2", "t1")],
                {"s1": "c1", "s2": "c1"},
            )

    def test_unknown_references_rejected(self):
        with pytest.raises(ValueError):
            Economy.build([("c1", 1)], ["t1"], [("s1", "t9")], {"s1": None})
        with pytest.raises(ValueError):
            Economy.build([("c1", 1)], ["t1"], [("s1", "t1")], {"s1": "c9"})

    def test_district_column(self, example_1):
        econ = example_1.economy
        assert econ.districts == ("d1", "d1", "d1", "d2", "d2", "d2")
        assert econ.district_ids == ("d1", "d2")


class TestPreference:
    def test_ranking_must_be_complete(self):
        econ = Economy.build([("c1", 1), ("c2", 1)], ["t1"], [("s1", "t1")], {"s1": None})
        with pytest.raises(ValueError):
            Preference.from_ids(econ, "s1", ["c1", "@none"])
        with pytest.raises(ValueError):
            Preference.from_ids(econ, "s1", ["c1", "c1", "c2", "@none"])

    def test_strict_and_weak_comparisons(self):
        pref = Preference(0, (1, 0, None))
        assert pref.prefers(1, 0)
        assert not pref.prefers(0, 1)
        assert pref.weakly_prefers(0, 0)
        assert not pref.weakly_prefers(None, 1)


class TestDistribution:
    def test_entries_validated(self):
        with pytest.raises(ValueError):
            Distribution(((-1, 0),))
        with pytest.raises(ValueError):
            Distribution(((0,), (0, 0)))

    def test_flat_round_trip(self):
        xi = Distribution(((1, 2), (0, 3)))
        assert Distribution.from_flat(xi.flat(), 2, 2) == xi
        assert xi.total() == 6
        assert xi.school_total(1) == 3


class TestInducedDistribution:
    def test_appendix_a_initial(self, appendix_a):
        econ = appendix_a.economy
        xi = induced_distribution(econ, econ.initial)
        assert xi.counts == ((2, 0), (1, 0), (0, 1), (0, 1))

    def test_empty_matching_is_zero_grid(self, appendix_a):
        econ = appendix_a.economy
        empty = Matching((None,) * econ.num_students)
        assert induced_distribution(econ, empty) == zero_distribution(econ)

    def test_example_1_initial_is_unit_diagonal(self, example_1):
        econ = example_1.economy
        xi = induced_distribution(econ, econ.initial)
        for ci in range(6):
            row = [0, 0, 0]
            row[econ.student_types[ci]] = 1
            assert xi.counts[ci] == tuple(row)

    def test_induced_is_always_feasible_and_counts_assigned(self):
        rng = random.Random(7)
        for _ in range(50):
            econ = mechanism_economy(rng)
            xi = induced_distribution(econ, econ.initial)
            assert is_feasible(econ, xi)
            assigned = sum(1 for ci in econ.initial.assignment if ci is not None)
            assert xi.total() == assigned


class TestIsFeasible:
    def test_zero_grid(self, appendix_a):
        assert is_feasible(appendix_a.economy, zero_distribution(appendix_a.economy))

    def test_initial_distribution(self, appendix_a):
        econ = appendix_a.economy
        assert is_feasible(econ, induced_distribution(econ, econ.initial))

    def test_over_capacity(self, appendix_a):
        econ = appendix_a.economy
        assert not is_feasible(econ, Distribution(((4, 0), (0, 0), (0, 0), (0, 0))))

    def test_dimension_mismatch(self, appendix_a):
        with pytest.raises(ValueError):
            is_feasible(appendix_a.economy, Distribution(((0, 0),)))


class TestEnumerateFeasible:
    def test_one_school_one_type(self):
        econ = Economy.build([("c1", 2)], ["t1"], [], {})
        assert [xi.flat() for xi in enumerate_feasible(econ)] == [(0,), (1,), (2,)]

    def test_one_school_two_types(self):
        econ = Economy.build([("c1", 1)], ["t1", "t2"], [], {})
        assert {xi.flat() for xi in enumerate_feasible(econ)} == {(0, 0), (1, 0), (0, 1)}

    def test_two_schools_product(self):
        econ = tiny_economy()
        assert len(enumerate_feasible(econ)) == 9

    def test_lexicographic_order(self):
        econ = tiny_economy()
        flats = [xi.flat() for xi in enumerate_feasible(econ)]
        assert flats == sorted(flats)

    def test_matches_brute_force_filter(self):
        econ = Economy.build([("c1", 2), ("c2", 1), ("c3", 1)], ["t1", "t2"], [], {})
        cap = max(econ.capacities)
        brute = set()
        for cells in product(range(cap + 1), repeat=6):
            xi = Distribution.from_flat(cells, 3, 2)
            if is_feasible(econ, xi):
                brute.add(xi)
        assert set(enumerate_feasible(econ)) == brute

    def test_budget(self):
        econ = Economy.build([("c1", 5), ("c2", 5)], ["t1", "t2"], [], {})
        with pytest.raises(BudgetExceededError) as err:
            enumerate_feasible(econ, budget=10)
        assert "10" in str(err.value)


class TestParetoDominates:
    def test_irreflexive(self, example_1):
        econ = example_1.economy
        assert not pareto_dominates(example_1.preferences, econ.initial, econ.initial)

    def test_example_1_pair_incomparable(self, example_1):
        from conftest import EXAMPLE_1_MU, EXAMPLE_1_MU_TILDE
        econ = example_1.economy
        mu = Matching.from_ids(econ, EXAMPLE_1_MU)
        mu_t = Matching.from_ids(econ, EXAMPLE_1_MU_TILDE)
        assert not pareto_dominates(example_1.preferences, mu, mu_t)
        assert not pareto_dominates(example_1.preferences, mu_t, mu)

    def test_appendix_a_outcome_dominates_initial(self, appendix_a):
        from conftest import APPENDIX_A_OUTCOME
        econ = appendix_a.economy
        outcome = Matching.from_ids(econ, APPENDIX_A_OUTCOME)
        assert pareto_dominates(appendix_a.preferences, outcome, econ.initial)

    def test_transitive_on_random_profiles(self):
        rng = random.Random(11)
        for _ in range(40):
            econ = mechanism_economy(rng)
            prefs = random_profile(rng, econ)
            seats = list(range(econ.num_schools)) + [None]
            matchings = []
            for _ in range(3):
                load = [0] * econ.num_schools
                chosen = []
                for _ in range(econ.num_students):
                    pool = [c for c in seats if c is None or load[c] < econ.capacities[c]]
                    pick = rng.choice(pool)
                    if pick is not None:
                        load[pick] += 1
                    chosen.append(pick)
                matchings.append(Matching(tuple(chosen)))
            a, b, c = matchings
            if pareto_dominates(prefs, a, b) and pareto_dominates(prefs, b, c):
                assert pareto_dominates(prefs, a, c)


class TestIndividualRationality:
    def test_initial_matching_is_ir(self, appendix_a):
        econ = appendix_a.economy
        assert is_individually_rational(econ, appendix_a.preferences, econ.initial)

    def test_appendix_a_outcome(self, appendix_a):
        from conftest import APPENDIX_A_OUTCOME
        econ = appendix_a.economy
        outcome = Matching.from_ids(econ, APPENDIX_A_OUTCOME)
        assert is_individually_rational(econ, appendix_a.preferences, outcome)

    def test_example_1_pair(self, example_1):
        from conftest import EXAMPLE_1_MU, EXAMPLE_1_MU_TILDE
        econ = example_1.economy
        for ids in (EXAMPLE_1_MU, EXAMPLE_1_MU_TILDE):
            assert is_individually_rational(
                econ, example_1.preferences, Matching.from_ids(econ, ids)
            )

    def test_demotion_is_not_ir(self, appendix_a):
        econ = appendix_a.economy
        demoted = dict(econ.initial.to_ids(econ))
        demoted["s1"] = None  # s1 ranks @none last
        assert not is_individually_rational(
            econ, appendix_a.preferences, Matching.from_ids(econ, demoted)
        )


def test_matching_count_formula_cross_check():
    # Independent oracle for the enumerator used elsewhere: the number of
    # capacity-respecting matchings of n students into n unit schools is
    # sum_k C(n,k)^2 k!.
    n = 4
    econ = Economy.build(
        [(f"c{i}", 1) for i in range(n)], ["t1"],
        [(f"s{i}", "t1") for i in range(n)],
        {f"s{i}": None for i in range(n)},
    )
    from ttcgoals import enumerate_matchings
    count = sum(1 for _ in enumerate_matchings(econ))
    assert count == sum(math.comb(n, k) ** 2 * math.factorial(k) for k in range(n + 1))
