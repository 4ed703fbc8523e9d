"""Seeded random instances shared by the property sweeps.

Everything draws from an explicit ``random.Random`` so sweeps are exactly
reproducible from their seeds.
"""

from __future__ import annotations

import random

from ttcgoals import (
    ChebyshevObjective,
    DiscreteMetricObjective,
    Distribution,
    Economy,
    Objective,
    PolicyGoal,
    Preference,
    TabulatedObjective,
    build_diversity_goal,
    build_quota_goal,
    district_totals,
    enumerate_feasible,
    induced_distribution,
    is_pseudo_mnat_concave,
)

# Economy shapes with at most four grid cells, for the contour/equivalence sweeps.
SMALL_SHAPES = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (1, 4), (4, 1)]


def small_economy(rng: random.Random, cap_max: int = 2) -> Economy:
    """Studentless economy with |schools| * |types| <= 4 and capacities <= cap_max."""
    n_c, n_t = rng.choice(SMALL_SHAPES)
    schools = [(f"c{i + 1}", rng.randint(0, cap_max)) for i in range(n_c)]
    if all(q == 0 for _, q in schools):
        schools[0] = (schools[0][0], 1)
    return Economy.build(
        schools=schools,
        types=[f"t{i + 1}" for i in range(n_t)],
        students=[],
        initial={},
    )


def district_economy(rng: random.Random) -> Economy:
    """Small economy with districts, used by the goal-builder sweeps."""
    n_c = rng.randint(2, 3)
    n_t = rng.randint(1, 2)
    n_d = rng.randint(1, 2)
    schools = [(f"c{i + 1}", rng.randint(1, 2)) for i in range(n_c)]
    districts = {cid: f"d{rng.randint(1, n_d)}" for cid, _ in schools}
    return Economy.build(
        schools=schools,
        types=[f"t{i + 1}" for i in range(n_t)],
        students=[],
        initial={},
        districts=districts,
    )


def mechanism_economy(rng: random.Random) -> Economy:
    """Economy with students and a random feasible initial matching."""
    n_c = rng.randint(1, 3)
    n_t = rng.randint(1, 2)
    n_s = rng.randint(1, 5)
    caps = []
    left = 6
    for _ in range(n_c):
        q = rng.randint(0, min(3, left))
        caps.append(q)
        left -= q
    if all(q == 0 for q in caps):
        caps[0] = 1
    schools = [(f"c{i + 1}", caps[i]) for i in range(n_c)]
    types = [f"t{i + 1}" for i in range(n_t)]
    students = [(f"s{i + 1}", rng.choice(types)) for i in range(n_s)]
    load = {cid: 0 for cid, _ in schools}
    initial: dict[str, str | None] = {}
    for sid, _ in students:
        open_schools = [cid for cid, q in schools if load[cid] < q]
        pick = rng.choice(open_schools + [None]) if open_schools else None
        if pick is not None:
            load[pick] += 1
        initial[sid] = pick
    return Economy.build(schools, types, students, initial)


def random_profile(rng: random.Random, economy: Economy) -> tuple[Preference, ...]:
    outcomes = list(range(economy.num_schools)) + [None]
    return tuple(
        Preference(si, tuple(rng.sample(outcomes, len(outcomes))))
        for si in range(economy.num_students)
    )


def random_master(rng: random.Random, economy: Economy) -> tuple[int, ...]:
    order = list(range(economy.num_students))
    rng.shuffle(order)
    return tuple(order)


def random_goal(rng: random.Random, economy: Economy,
                feasible: tuple[Distribution, ...]) -> PolicyGoal:
    size = rng.randint(1, len(feasible))
    return PolicyGoal(economy, frozenset(rng.sample(feasible, size)))


def random_table(rng: random.Random, economy: Economy,
                 feasible: tuple[Distribution, ...], span: int = 4) -> TabulatedObjective:
    return TabulatedObjective(
        economy, {xi: rng.randint(0, span) for xi in feasible}
    )


def anchored_quota_goal(rng: random.Random, economy: Economy,
                        anchor: Distribution) -> PolicyGoal:
    floors = {}
    ceilings = {}
    for ci, cid in enumerate(economy.school_ids):
        have = anchor.school_total(ci)
        floors[cid] = rng.randint(0, have)
        ceilings[cid] = rng.randint(have, economy.capacities[ci])
    return build_quota_goal(economy, floors, ceilings)


def anchored_diversity_goal(rng: random.Random, economy: Economy,
                            anchor: Distribution) -> PolicyGoal:
    floors = {}
    ceilings = {}
    for ci, cid in enumerate(economy.school_ids):
        floors[cid] = {}
        ceilings[cid] = {}
        for ti, tid in enumerate(economy.type_ids):
            have = anchor.entry(ci, ti)
            floors[cid][tid] = rng.randint(0, have)
            ceilings[cid][tid] = rng.randint(have, max(have, economy.capacities[ci]))
    return build_diversity_goal(economy, floors, ceilings)


def anchored_targets(rng: random.Random, economy: Economy,
                     anchor: Distribution, exact: bool) -> dict[str, int]:
    totals = district_totals(economy, anchor)
    if exact:
        return totals
    return {d: rng.randint(0, n) for d, n in totals.items()}


def concave_objective(
    rng: random.Random, economy: Economy
) -> tuple[Objective, PolicyGoal | None]:
    """A seeded objective confirmed pseudo mnat-concave by the checker.

    Goal-based draws anchor their goal at the initial distribution, so the
    membership-indicator ones are also usable for goal-satisfaction checks.
    Returns the goal for membership-indicator objectives, else None.

    Every candidate is confirmed by the checker before being returned: the
    membership indicator over a convex goal always passes, but the distance
    objectives can fail concavity when exchanges run into capacity walls, and
    random tables usually fail.
    """
    feasible = enumerate_feasible(economy)
    anchor = induced_distribution(economy, economy.initial)
    kind = rng.choice(["fd_quota", "fd_diversity", "fc_quota", "fc_diversity", "table"])
    if kind == "table":
        for _ in range(3):
            candidate = random_table(rng, economy, feasible, span=2)
            if is_pseudo_mnat_concave(candidate, feasible):
                return candidate, None
        kind = "fd_diversity"
    if kind.endswith("quota"):
        goal = anchored_quota_goal(rng, economy, anchor)
    else:
        goal = anchored_diversity_goal(rng, economy, anchor)
    if kind.startswith("fc"):
        candidate = ChebyshevObjective(goal)
        if is_pseudo_mnat_concave(candidate, feasible):
            return candidate, None
    return DiscreteMetricObjective(goal), goal
