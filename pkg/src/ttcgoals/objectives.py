"""Distributional objectives and policy-goal builders.

An objective scores feasible distributions; anything infeasible (or of the
wrong shape) evaluates to the ``NEG_INF`` sentinel, so callers never need a
separate feasibility branch.  Policy goals are always materialized as
explicit finite sets of distributions, which keeps distance minimization and
the convexity checkers exhaustive and exact.  All arithmetic is integer;
only user-supplied tabulated values may be floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .core import (
    Distribution,
    Economy,
    Matching,
    district_totals,
    enumerate_feasible,
    induced_distribution,
    is_feasible,
)

NEG_INF = float("-inf")

Value = int | float


class GoalConstructionError(ValueError):
    """A goal builder was given inconsistent parameters or an empty result."""


def chebyshev_distance(xi: Distribution, xi2: Distribution) -> int:
    """Largest absolute entrywise difference between two grids."""
    if len(xi.counts) != len(xi2.counts) or (
        xi.counts and len(xi.counts[0]) != len(xi2.counts[0])
    ):
        raise ValueError("distributions have different dimensions")
    return max(
        (abs(a - b) for ra, rb in zip(xi.counts, xi2.counts) for a, b in zip(ra, rb)),
        default=0,
    )


def manhattan_distance(xi: Distribution, xi2: Distribution) -> int:
    """Sum of absolute entrywise differences between two grids."""
    if len(xi.counts) != len(xi2.counts) or (
        xi.counts and len(xi.counts[0]) != len(xi2.counts[0])
    ):
        raise ValueError("distributions have different dimensions")
    return sum(
        abs(a - b) for ra, rb in zip(xi.counts, xi2.counts) for a, b in zip(ra, rb)
    )


@dataclass(frozen=True)
class PolicyGoal:
    """A non-empty explicit set of feasible distributions."""

    economy: Economy
    members: frozenset[Distribution]

    def __post_init__(self) -> None:
        if not self.members:
            raise GoalConstructionError("a policy goal must be non-empty")
        for xi in self.members:
            if not is_feasible(self.economy, xi):
                raise GoalConstructionError("policy goal contains an infeasible distribution")

    def sorted_members(self) -> tuple[Distribution, ...]:
        return tuple(sorted(self.members, key=lambda xi: xi.flat()))

    def __contains__(self, xi: Distribution) -> bool:
        return xi in self.members

    def __len__(self) -> int:
        return len(self.members)


class Objective:
    """Maps feasible distributions of one economy to values.

    ``value`` returns ``NEG_INF`` outside the feasible set, including for
    grids of the wrong shape; subclasses implement ``score`` for feasible
    input only.
    """

    def __init__(self, economy: Economy):
        self.economy = economy

    def value(self, xi: Distribution) -> Value:
        try:
            ok = is_feasible(self.economy, xi)
        except ValueError:
            return NEG_INF
        if not ok:
            return NEG_INF
        return self.score(xi)

    def score(self, xi: Distribution) -> Value:
        raise NotImplementedError


class TabulatedObjective(Objective):
    """Objective defined by an explicit value table over the feasible set.

    The table (after filling with ``default``, when given) must be total on
    the feasible set and hold only finite values.
    """

    def __init__(
        self,
        economy: Economy,
        table: Mapping[Distribution, Value],
        default: Value | None = None,
        budget: int | None = None,
    ):
        super().__init__(economy)
        feasible = enumerate_feasible(economy, budget)
        full: dict[Distribution, Value] = {}
        for xi, v in table.items():
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError("tabulated values must be finite numbers")
            if not is_feasible(economy, xi):
                raise ValueError("tabulated entry for an infeasible distribution")
            full[xi] = v
        if default is not None:
            for xi in feasible:
                full.setdefault(xi, default)
        missing = len(feasible) - len(full)
        if missing:
            raise ValueError(f"table is not total on the feasible set ({missing} entries missing)")
        self.table = full

    @classmethod
    def from_function(
        cls,
        economy: Economy,
        fn: Callable[[Distribution], Value],
        budget: int | None = None,
    ) -> "TabulatedObjective":
        feasible = enumerate_feasible(economy, budget)
        return cls(economy, {xi: fn(xi) for xi in feasible}, budget=budget)

    def score(self, xi: Distribution) -> Value:
        return self.table[xi]


class ChebyshevObjective(Objective):
    """Negated Chebyshev distance from the distribution to the goal set."""

    def __init__(self, goal: PolicyGoal):
        super().__init__(goal.economy)
        self.goal = goal
        self._members = goal.sorted_members()

    def score(self, xi: Distribution) -> int:
        return -min(chebyshev_distance(xi, m) for m in self._members)


class ManhattanObjective(Objective):
    """Negated Manhattan distance from the distribution to the goal set."""

    def __init__(self, goal: PolicyGoal):
        super().__init__(goal.economy)
        self.goal = goal
        self._members = goal.sorted_members()

    def score(self, xi: Distribution) -> int:
        return -min(manhattan_distance(xi, m) for m in self._members)


class DiscreteMetricObjective(Objective):
    """Membership indicator: 1 inside the goal set, 0 elsewhere."""

    def __init__(self, goal: PolicyGoal):
        super().__init__(goal.economy)
        self.goal = goal

    def score(self, xi: Distribution) -> int:
        return 1 if xi in self.goal.members else 0


def weakly_improves(objective: Objective, matching: Matching) -> bool:
    """Whether the matching scores at least as well as the initial matching."""
    economy = objective.economy
    after = objective.value(induced_distribution(economy, matching))
    before = objective.value(induced_distribution(economy, economy.initial))
    return after >= before


def _filter_goal(
    economy: Economy,
    keep: Callable[[Distribution], bool],
    what: str,
    budget: int | None,
) -> PolicyGoal:
    members = frozenset(xi for xi in enumerate_feasible(economy, budget) if keep(xi))
    if not members:
        raise GoalConstructionError(f"{what} admits no feasible distribution")
    return PolicyGoal(economy, members)


def _per_school(economy: Economy, given: Mapping[str, int] | None, default_of) -> list[int]:
    out = [default_of(ci) for ci in range(economy.num_schools)]
    if given:
        for cid, v in given.items():
            if cid not in economy.school_index:
                raise GoalConstructionError(f"unknown school {cid!r}")
            if not isinstance(v, int) or v < 0:
                raise GoalConstructionError(f"bound for school {cid!r} must be a nonnegative integer")
            out[economy.school_index[cid]] = v
    return out


def _per_school_type(
    economy: Economy, given: Mapping[str, Mapping[str, int]] | None, default_of
) -> list[list[int]]:
    out = [
        [default_of(ci, ti) for ti in range(economy.num_types)]
        for ci in range(economy.num_schools)
    ]
    if given:
        for cid, row in given.items():
            if cid not in economy.school_index:
                raise GoalConstructionError(f"unknown school {cid!r}")
            for tid, v in row.items():
                if tid not in economy.type_index:
                    raise GoalConstructionError(f"unknown type {tid!r}")
                if not isinstance(v, int) or v < 0:
                    raise GoalConstructionError(
                        f"bound for school {cid!r}, type {tid!r} must be a nonnegative integer"
                    )
                out[economy.school_index[cid]][economy.type_index[tid]] = v
    return out


def build_quota_goal(
    economy: Economy,
    floors: Mapping[str, int] | None = None,
    ceilings: Mapping[str, int] | None = None,
    budget: int | None = None,
) -> PolicyGoal:
    """Distributions whose per-school totals lie between floor and ceiling.

    Missing floors default to 0 and missing ceilings to the school capacity.
    """
    lo = _per_school(economy, floors, lambda ci: 0)
    hi = _per_school(economy, ceilings, lambda ci: economy.capacities[ci])
    for ci in range(economy.num_schools):
        if hi[ci] < lo[ci]:
            raise GoalConstructionError(
                f"school {economy.school_ids[ci]!r}: ceiling {hi[ci]} below floor {lo[ci]}"
            )

    def keep(xi: Distribution) -> bool:
        return all(lo[ci] <= xi.school_total(ci) <= hi[ci] for ci in range(economy.num_schools))

    return _filter_goal(economy, keep, "quota policy", budget)


def build_diversity_goal(
    economy: Economy,
    floors: Mapping[str, Mapping[str, int]] | None = None,
    ceilings: Mapping[str, Mapping[str, int]] | None = None,
    budget: int | None = None,
) -> PolicyGoal:
    """Distributions meeting type-specific floors and ceilings at each school.

    Missing floors default to 0 and missing ceilings to the school capacity.
    Every school must have enough capacity to cover the sum of its floors.
    """
    lo = _per_school_type(economy, floors, lambda ci, ti: 0)
    hi = _per_school_type(economy, ceilings, lambda ci, ti: economy.capacities[ci])
    for ci in range(economy.num_schools):
        for ti in range(economy.num_types):
            if hi[ci][ti] < lo[ci][ti]:
                raise GoalConstructionError(
                    f"school {economy.school_ids[ci]!r}, type {economy.type_ids[ti]!r}: "
                    f"ceiling {hi[ci][ti]} below floor {lo[ci][ti]}"
                )
        if sum(lo[ci]) > economy.capacities[ci]:
            raise GoalConstructionError(
                f"school {economy.school_ids[ci]!r}: floors exceed capacity"
            )

    def keep(xi: Distribution) -> bool:
        return all(
            lo[ci][ti] <= xi.counts[ci][ti] <= hi[ci][ti]
            for ci in range(economy.num_schools)
            for ti in range(economy.num_types)
        )

    return _filter_goal(economy, keep, "diversity policy", budget)


def _district_targets(
    economy: Economy, targets: Mapping[str, int] | None
) -> dict[str, int]:
    if economy.districts is None:
        raise GoalConstructionError("economy defines no districts")
    if targets is None:
        # Default to the per-district assignment counts of the initial matching.
        return district_totals(economy, induced_distribution(economy, economy.initial))
    out = {d: 0 for d in economy.district_ids}
    for did, v in targets.items():
        if did not in out:
            raise GoalConstructionError(f"unknown district {did!r}")
        if not isinstance(v, int) or v < 0:
            raise GoalConstructionError(f"target for district {did!r} must be a nonnegative integer")
        out[did] = v
    return out


def build_exchange_feasibility_goal(
    economy: Economy,
    targets: Mapping[str, int] | None = None,
    budget: int | None = None,
) -> PolicyGoal:
    """Distributions where each district keeps at least its target head count.

    Targets default to the district head counts of the initial matching.
    """
    need = _district_targets(economy, targets)

    def keep(xi: Distribution) -> bool:
        totals = district_totals(economy, xi)
        return all(totals[d] >= need[d] for d in need)

    return _filter_goal(economy, keep, "exchange-feasibility policy", budget)


def build_balanced_exchange_goal(
    economy: Economy,
    targets: Mapping[str, int] | None = None,
    budget: int | None = None,
) -> PolicyGoal:
    """Distributions where each district keeps exactly its target head count."""
    need = _district_targets(economy, targets)

    def keep(xi: Distribution) -> bool:
        totals = district_totals(economy, xi)
        return all(totals[d] == need[d] for d in need)

    return _filter_goal(economy, keep, "balanced-exchange policy", budget)


def build_combined_goal(
    economy: Economy,
    floors: Mapping[str, Mapping[str, int]] | None = None,
    ceilings: Mapping[str, Mapping[str, int]] | None = None,
    targets: Mapping[str, int] | None = None,
    mode: str = "exchange",
    budget: int | None = None,
) -> PolicyGoal:
    """Intersection of the diversity policy with a district head-count policy.

    ``mode`` selects the district side: ``"exchange"`` keeps head counts at or
    above target, ``"balanced"`` keeps them exactly at target.
    """
    if mode not in ("exchange", "balanced"):
        raise GoalConstructionError(f"unknown combination mode {mode!r}")
    diversity = build_diversity_goal(economy, floors, ceilings, budget)
    if mode == "exchange":
        district = build_exchange_feasibility_goal(economy, targets, budget)
    else:
        district = build_balanced_exchange_goal(economy, targets, budget)
    members = diversity.members & district.members
    if not members:
        raise GoalConstructionError("combined policy admits no feasible distribution")
    return PolicyGoal(economy, members)


def build_district_diversity_goal(
    economy: Economy,
    floors: Mapping[str, Mapping[str, int]] | None = None,
    ceilings: Mapping[str, Mapping[str, int]] | None = None,
    budget: int | None = None,
) -> PolicyGoal:
    """Distributions meeting type-specific floors and ceilings per district.

    Missing floors default to 0 and missing ceilings to the district's total
    capacity.
    """
    if economy.districts is None:
        raise GoalConstructionError("economy defines no districts")
    district_ids = economy.district_ids
    cap = {d: 0 for d in district_ids}
    for ci, d in enumerate(economy.districts):
        cap[d] += economy.capacities[ci]
    lo = {d: [0] * economy.num_types for d in district_ids}
    hi = {d: [cap[d]] * economy.num_types for d in district_ids}
    for given, store, label in ((floors, lo, "floor"), (ceilings, hi, "ceiling")):
        if not given:
            continue
        for did, row in given.items():
            if did not in lo:
                raise GoalConstructionError(f"unknown district {did!r}")
            for tid, v in row.items():
                if tid not in economy.type_index:
                    raise GoalConstructionError(f"unknown type {tid!r}")
                if not isinstance(v, int) or v < 0:
                    raise GoalConstructionError(
                        f"{label} for district {did!r}, type {tid!r} must be a nonnegative integer"
                    )
                store[did][economy.type_index[tid]] = v
    for d in district_ids:
        for ti in range(economy.num_types):
            if hi[d][ti] < lo[d][ti]:
                raise GoalConstructionError(
                    f"district {d!r}, type {economy.type_ids[ti]!r}: "
                    f"ceiling {hi[d][ti]} below floor {lo[d][ti]}"
                )

    def keep(xi: Distribution) -> bool:
        per_type = {d: [0] * economy.num_types for d in district_ids}
        for ci, row in enumerate(xi.counts):
            bucket = per_type[economy.districts[ci]]
            for ti, v in enumerate(row):
                bucket[ti] += v
        return all(
            lo[d][ti] <= per_type[d][ti] <= hi[d][ti]
            for d in district_ids
            for ti in range(economy.num_types)
        )

    return _filter_goal(economy, keep, "district diversity policy", budget)


def explicit_goal(economy: Economy, members: Iterable[Distribution]) -> PolicyGoal:
    """Wrap an explicit member list, deduplicating and validating feasibility."""
    return PolicyGoal(economy, frozenset(members))
