"""Top trading cycles over school-type slots with a distributional gate.

The mechanism runs on a derived two-sided market: one side holds every
(school, type) slot plus a single outside slot, the other side holds the
students.  Each round, slots point at their highest-priority permissible
student (or leave the market), students point at their best remaining slot,
and every cycle of the resulting out-degree-one graph trades simultaneously.

A student is permissible to a slot when moving her alone from her initial
seat into that slot keeps the objective at or above its initial level;
infeasible moves evaluate to the sentinel and are never permissible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

from .core import (
    Distribution,
    Economy,
    Matching,
    Preference,
    induced_distribution,
    validate_profile,
)
from .objectives import NEG_INF, Objective, Value


class MechanismInvariantError(RuntimeError):
    """The mechanism reached a state its invariants rule out."""


@dataclass(frozen=True)
class Option:
    """A (school, type) slot, or the outside slot when both fields are None."""

    school: int | None
    type: int | None

    @property
    def is_outside(self) -> bool:
        return self.school is None

    def label(self, economy: Economy) -> str:
        if self.is_outside:
            return "(@none,@none)"
        return f"({economy.school_ids[self.school]},{economy.type_ids[self.type]})"


def options_for(economy: Economy) -> tuple[Option, ...]:
    """All slots in (school position, type position) order, outside slot last."""
    slots = [
        Option(ci, ti)
        for ci in range(economy.num_schools)
        for ti in range(economy.num_types)
    ]
    slots.append(Option(None, None))
    return tuple(slots)


@dataclass(frozen=True)
class LiftedPreference:
    """A student's strict ranking over every slot, best first.

    Own-type slots and the outside slot keep the order of the underlying
    school ranking; slots of other types form one block at the bottom in
    (school, type) order.  The block sits below the student's initial slot
    and is never reachable while that slot remains in the market, so its
    internal order is fixed purely for determinism.
    """

    student: int
    ranking: tuple[int, ...]


def _option_index(economy: Economy, school: int | None, type_: int | None) -> int:
    if school is None:
        return economy.num_schools * economy.num_types
    return school * economy.num_types + type_


def lift_preference(economy: Economy, pref: Preference) -> LiftedPreference:
    """Rank all slots for one student per her school ranking."""
    own_type = economy.student_types[pref.student]
    ranking = [
        _option_index(economy, ci, None if ci is None else own_type)
        for ci in pref.ranking
    ]
    for ci in range(economy.num_schools):
        for ti in range(economy.num_types):
            if ti != own_type:
                ranking.append(_option_index(economy, ci, ti))
    return LiftedPreference(pref.student, tuple(ranking))


def priority_order(
    economy: Economy, master_list: Sequence[int] | None, option: Option
) -> tuple[int, ...]:
    """Two priority classes, each sorted by the master list.

    A school slot ranks the students initially seated at its school first;
    the outside slot ranks the initially unmatched students first.  Everyone
    else follows.  The master list defaults to the economy's student order.
    """
    master = _validated_master(economy, master_list)
    initial = economy.initial.assignment
    owners = [si for si in master if initial[si] == option.school]
    others = [si for si in master if initial[si] != option.school]
    return tuple(owners + others)


def _validated_master(economy: Economy, master_list: Sequence[int] | None) -> tuple[int, ...]:
    if master_list is None:
        return tuple(range(economy.num_students))
    master = tuple(master_list)
    if sorted(master) != list(range(economy.num_students)):
        raise ValueError("master list must be a permutation of all students")
    return master


def is_permissible(
    objective: Objective, current: Matching, student: int, option: Option
) -> bool:
    """Whether moving the student from her initial seat into the slot keeps
    the objective at or above its initial level."""
    economy = objective.economy
    xi = induced_distribution(economy, current)
    initial_school = economy.initial.assignment[student]
    if initial_school is not None:
        xi = xi.sub(initial_school, economy.student_types[student])
    if not option.is_outside:
        xi = xi.add(option.school, option.type)
    baseline = objective.value(induced_distribution(economy, economy.initial))
    return objective.value(xi) >= baseline


@dataclass(frozen=True)
class TTCStep:
    """One round: the working matching entering the round, the slots that
    left the market, both pointing maps, and the executed cycles.

    Each cycle lists (student, slot) edges; the slot in each pair is both the
    student's pointee and her assignment.
    """

    index: int
    matching: Matching
    removed: tuple[Option, ...]
    option_pointees: tuple[tuple[Option, int], ...]
    student_pointees: tuple[tuple[int, Option], ...]
    cycles: tuple[tuple[tuple[int, Option], ...], ...]


@dataclass(frozen=True)
class TTCTrace:
    steps: tuple[TTCStep, ...]


def replay_trace(economy: Economy, trace: TTCTrace) -> Matching:
    """Apply every recorded cycle to the initial matching."""
    seats = list(economy.initial.assignment)
    for step in trace.steps:
        for cycle in step.cycles:
            for student, option in cycle:
                seats[student] = option.school
    return Matching(tuple(seats))


def _find_cycles(
    student_point: dict[int, int], option_point: dict[int, int]
) -> list[list[tuple[int, int]]]:
    """All cycles of the out-degree-one pointing graph.

    Nodes are students (even codes) and options (odd codes); every remaining
    node has exactly one successor, so cycles are disjoint.  Returned cycles
    start at their smallest student and are sorted by that student.
    """
    succ: dict[int, int] = {}
    for si, oi in student_point.items():
        succ[2 * si] = 2 * oi + 1
    for oi, si in option_point.items():
        succ[2 * oi + 1] = 2 * si
    state: dict[int, int] = {}  # 1 = on current path, 2 = settled
    cycles: list[list[tuple[int, int]]] = []
    for start in sorted(student_point):
        node = 2 * start
        path: list[int] = []
        while state.get(node, 0) == 0:
            state[node] = 1
            path.append(node)
            node = succ[node]
        if state[node] == 1:
            cycle_nodes = path[path.index(node):]
            students = [n // 2 for n in cycle_nodes if n % 2 == 0]
            lead = cycle_nodes.index(2 * min(students))
            ordered = cycle_nodes[lead:] + cycle_nodes[:lead]
            cycles.append([
                (ordered[i] // 2, succ[ordered[i]] // 2)
                for i in range(0, len(ordered), 2)
            ])
        for n in path:
            state[n] = 2
    cycles.sort(key=lambda cyc: cyc[0][0])
    return cycles


def run_ttc(
    economy: Economy,
    objective: Objective,
    prefs: Sequence[Preference],
    master_list: Sequence[int] | None = None,
) -> tuple[Matching, TTCTrace]:
    """Run the mechanism and return the outcome with a full per-round trace.

    Raises :class:`MechanismInvariantError` when a remaining student has no
    slot left to point at; with a finite initial objective value this can
    only happen after the objective has dropped below its initial level,
    which itself is reported as a warning.
    """
    if objective.economy != economy:
        raise ValueError("objective belongs to a different economy")
    profile = validate_profile(economy, prefs)
    master = _validated_master(economy, master_list)

    num_schools, num_types = economy.num_schools, economy.num_types
    options = options_for(economy)
    initial = economy.initial.assignment

    lifted = [lift_preference(economy, p).ranking for p in profile]
    priorities = [priority_order(economy, master, opt) for opt in options]

    # Flat distribution bookkeeping; the value memo folds feasibility into
    # the sentinel, so permissibility is a single lookup against f0.
    def cell(si: int) -> int | None:
        ci = initial[si]
        return None if ci is None else ci * num_types + economy.student_types[si]

    initial_cells = [cell(si) for si in range(economy.num_students)]
    option_cells = [
        None if opt.is_outside else opt.school * num_types + opt.type for opt in options
    ]

    memo: dict[tuple[int, ...], Value] = {}

    def value_of(flat: tuple[int, ...]) -> Value:
        v = memo.get(flat)
        if v is None:
            v = objective.value(Distribution.from_flat(flat, num_schools, num_types))
            memo[flat] = v
        return v

    current = list(induced_distribution(economy, economy.initial).flat())
    f0 = value_of(tuple(current))
    if f0 == NEG_INF:
        raise ValueError("the initial matching must have a finite objective value")

    remaining = [True] * economy.num_students
    remaining_count = economy.num_students
    removed = [False] * len(options)
    pref_cursor = [0] * economy.num_students
    assigned: list[int | None] = [None] * economy.num_students
    steps: list[TTCStep] = []
    improvement_warned = False

    while remaining_count:
        step_index = len(steps) + 1
        if step_index > economy.num_students:
            raise MechanismInvariantError("more rounds than students")

        snapshot: list[int | None] = []
        for si in range(economy.num_students):
            if remaining[si]:
                snapshot.append(initial[si])
            else:
                snapshot.append(options[assigned[si]].school)
        working = Matching(tuple(snapshot))

        option_point: dict[int, int] = {}
        newly_removed: list[int] = []
        for oi in range(len(options)):
            if removed[oi]:
                continue
            target = option_cells[oi]
            pointee = None
            for si in priorities[oi]:
                if not remaining[si]:
                    continue
                probe = list(current)
                src = initial_cells[si]
                if src is not None:
                    probe[src] -= 1
                if target is not None:
                    probe[target] += 1
                if value_of(tuple(probe)) >= f0:
                    pointee = si
                    break
            if pointee is None:
                removed[oi] = True
                newly_removed.append(oi)
            else:
                option_point[oi] = pointee

        student_point: dict[int, int] = {}
        for si in range(economy.num_students):
            if not remaining[si]:
                continue
            ranking = lifted[si]
            cursor = pref_cursor[si]
            while cursor < len(ranking) and removed[ranking[cursor]]:
                cursor += 1
            if cursor == len(ranking):
                raise MechanismInvariantError(
                    f"student {economy.student_ids[si]} has no slot left to point at"
                )
            pref_cursor[si] = cursor
            student_point[si] = ranking[cursor]

        cycles = _find_cycles(student_point, option_point)
        if not cycles:
            raise MechanismInvariantError("a pointing round produced no cycle")

        for cyc in cycles:
            for si, oi in cyc:
                assigned[si] = oi
                remaining[si] = False
                remaining_count -= 1
                src = initial_cells[si]
                if src is not None:
                    current[src] -= 1
                dst = option_cells[oi]
                if dst is not None:
                    current[dst] += 1

        steps.append(TTCStep(
            index=step_index,
            matching=working,
            removed=tuple(options[oi] for oi in newly_removed),
            option_pointees=tuple(
                (options[oi], si) for oi, si in sorted(option_point.items())
            ),
            student_pointees=tuple(
                (si, options[oi]) for si, oi in sorted(student_point.items())
            ),
            cycles=tuple(
                tuple((si, options[oi]) for si, oi in cyc) for cyc in cycles
            ),
        ))

        if not improvement_warned and value_of(tuple(current)) < f0:
            warnings.warn(
                f"objective value fell below its initial level after round "
                f"{step_index}; the supplied objective cannot be pseudo "
                f"mnat-concave and the run's guarantees no longer apply",
                RuntimeWarning,
                stacklevel=2,
            )
            improvement_warned = True

    outcome = Matching(tuple(
        options[assigned[si]].school for si in range(economy.num_students)
    ))
    return outcome, TTCTrace(tuple(steps))
