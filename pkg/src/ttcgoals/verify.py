"""Exhaustive desk-scale oracles for the mechanism's guaranteed properties.

Weak improvement and individual rationality are direct predicates; the
constrained-efficiency oracle enumerates every capacity-respecting matching,
and the strategy-proofness oracle replays the mechanism against enumerated
(or sampled) misreports.  Witnesses are always the first violation in
enumeration order, so reports are deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Iterator, Sequence

from .core import (
    BudgetExceededError,
    Economy,
    Matching,
    Preference,
    induced_distribution,
    is_individually_rational,
    pareto_dominates,
    validate_profile,
)
from .objectives import Objective, Value
from .ttc import run_ttc

DEFAULT_MATCHING_BUDGET = 10_000_000
DEFAULT_RUN_BUDGET = 1_000_000

Mechanism = Callable[[tuple[Preference, ...]], Matching]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one oracle: which property, verdict, witness, search size."""

    property: str
    passed: bool
    witness: object | None
    search_size: int
    seed: int | None = None


def enumerate_matchings(
    economy: Economy, budget: int | None = None
) -> Iterator[Matching]:
    """Stream every capacity-respecting total assignment exactly once.

    Order is lexicographic over assignment vectors with schools in economy
    order and the outside option last.
    """
    budget = DEFAULT_MATCHING_BUDGET if budget is None else budget
    space = (economy.num_schools + 1) ** economy.num_students
    if space > budget:
        raise BudgetExceededError(space, budget, "matchings")
    caps = economy.capacities
    loads = [0] * economy.num_schools
    seats: list[int | None] = [None] * economy.num_students

    def rec(si: int) -> Iterator[Matching]:
        if si == economy.num_students:
            yield Matching(tuple(seats))
            return
        for ci in range(economy.num_schools):
            if loads[ci] < caps[ci]:
                seats[si] = ci
                loads[ci] += 1
                yield from rec(si + 1)
                loads[ci] -= 1
        seats[si] = None
        yield from rec(si + 1)

    yield from rec(0)


def _value_memo(objective: Objective) -> Callable[[Matching], Value]:
    economy = objective.economy
    memo: dict[tuple[int, ...], Value] = {}

    def value(matching: Matching) -> Value:
        xi = induced_distribution(economy, matching)
        flat = xi.flat()
        v = memo.get(flat)
        if v is None:
            v = objective.value(xi)
            memo[flat] = v
        return v

    return value


def verify_weak_improvement(
    economy: Economy, objective: Objective, mu: Matching
) -> VerificationReport:
    """Whether the matching scores at least the initial matching's value."""
    value = _value_memo(objective)
    before = value(economy.initial)
    after = value(mu)
    passed = after >= before
    witness = None if passed else {"initial_value": before, "outcome_value": after}
    return VerificationReport("improve", passed, witness, 1)


def verify_individual_rationality(
    economy: Economy, prefs: Sequence[Preference], mu: Matching
) -> VerificationReport:
    """Whether every student weakly prefers her outcome to her initial seat."""
    profile = validate_profile(economy, prefs)
    for si, pref in enumerate(profile):
        if not pref.weakly_prefers(mu.assignment[si], economy.initial.assignment[si]):
            witness = {
                "student": economy.student_ids[si],
                "outcome": mu.assignment[si],
                "initial": economy.initial.assignment[si],
            }
            return VerificationReport("ir", False, witness, si + 1)
    return VerificationReport("ir", True, None, economy.num_students)


def is_constrained_efficient(
    economy: Economy,
    objective: Objective,
    prefs: Sequence[Preference],
    mu: Matching,
    budget: int | None = None,
) -> VerificationReport:
    """No weakly-improving matching may Pareto-dominate ``mu``.

    ``mu`` itself must weakly improve the objective; the notion is only
    defined for improving matchings.
    """
    profile = validate_profile(economy, prefs)
    value = _value_memo(objective)
    baseline = value(economy.initial)
    if value(mu) < baseline:
        raise ValueError("matching under test does not weakly improve the objective")
    examined = 0
    for candidate in enumerate_matchings(economy, budget):
        examined += 1
        if value(candidate) >= baseline and pareto_dominates(profile, candidate, mu):
            return VerificationReport("efficient", False, candidate, examined)
    return VerificationReport("efficient", True, None, examined)


def enumerate_constrained_efficient_ir(
    economy: Economy,
    objective: Objective,
    prefs: Sequence[Preference],
    budget: int | None = None,
) -> tuple[Matching, ...]:
    """All matchings that weakly improve, are individually rational, and are
    undominated among the weakly-improving ones; enumeration order."""
    profile = validate_profile(economy, prefs)
    value = _value_memo(objective)
    baseline = value(economy.initial)
    improving = [
        m for m in enumerate_matchings(economy, budget) if value(m) >= baseline
    ]
    candidates = [
        m for m in improving if is_individually_rational(economy, profile, m)
    ]
    return tuple(
        m for m in candidates
        if not any(pareto_dominates(profile, other, m) for other in improving)
    )


def verify_strategy_proofness(
    economy: Economy,
    objective: Objective,
    prefs: Sequence[Preference],
    master_list: Sequence[int] | None = None,
    mode: str = "exhaustive",
    samples: int | None = None,
    seed: int | None = None,
    budget: int | None = None,
    mechanism: Mechanism | None = None,
) -> VerificationReport:
    """No student may gain a strictly better seat by misreporting.

    Exhaustive mode replays the mechanism for every student and every
    possible ranking; sampled mode draws ``samples`` (student, ranking)
    pairs from a seeded generator.  The mechanism defaults to the top
    trading cycles run configured by ``objective`` and ``master_list``.
    """
    profile = validate_profile(economy, prefs)
    budget = DEFAULT_RUN_BUDGET if budget is None else budget
    if mechanism is None:
        def mechanism(p: tuple[Preference, ...]) -> Matching:
            return run_ttc(economy, objective, p, master_list)[0]

    baseline = mechanism(profile)
    outcomes = list(range(economy.num_schools)) + [None]
    runs = 0

    def deviation(si: int, ranking: tuple[int | None, ...]) -> Matching | None:
        nonlocal runs
        runs += 1
        trial = list(profile)
        trial[si] = Preference(si, ranking)
        shifted = mechanism(tuple(trial))
        if profile[si].prefers(shifted.assignment[si], baseline.assignment[si]):
            return shifted
        return None

    if mode == "exhaustive":
        space = math.factorial(len(outcomes)) * economy.num_students
        if space > budget:
            raise BudgetExceededError(
                space, budget,
                "misreport runs (use sampled mode for a budgeted check)",
            )
        for si in range(economy.num_students):
            for perm in permutations(outcomes):
                shifted = deviation(si, perm)
                if shifted is not None:
                    witness = {
                        "student": economy.student_ids[si],
                        "misreport": perm,
                        "improved_outcome": shifted.assignment[si],
                    }
                    return VerificationReport("strategyproof", False, witness, runs)
        return VerificationReport("strategyproof", True, None, runs)

    if mode == "sampled":
        if samples is None or samples <= 0:
            raise ValueError("sampled mode needs a positive sample count")
        rng = random.Random(seed)
        for _ in range(samples):
            si = rng.randrange(economy.num_students)
            ranking = tuple(rng.sample(outcomes, len(outcomes)))
            shifted = deviation(si, ranking)
            if shifted is not None:
                witness = {
                    "student": economy.student_ids[si],
                    "misreport": ranking,
                    "improved_outcome": shifted.assignment[si],
                }
                return VerificationReport("strategyproof", False, witness, runs, seed)
        return VerificationReport("strategyproof", True, None, runs, seed)

    raise ValueError(f"unknown strategy-proofness mode {mode!r}")
