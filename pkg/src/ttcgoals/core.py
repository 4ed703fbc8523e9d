"""Domain primitives for matching markets with distributional objectives.

Everything here is an immutable value object: economies, preferences,
matchings, and type-count distributions.  All identifiers are opaque
strings at the API boundary; internally every operation works with the
position of an identifier in the economy's ordered lists, which keeps
iteration orders (and therefore every downstream result) deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

DEFAULT_ENUMERATION_BUDGET = 10_000_000

OUTSIDE_TOKEN = "@none"


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed its configured budget."""

    def __init__(self, required: int, budget: int, what: str):
        super().__init__(
            f"enumerating {what} needs {required} candidates, "
            f"which exceeds the budget of {budget}"
        )
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class Matching:
    """Total assignment of students to schools or the outside option.

    ``assignment[i]`` is the school position of student ``i``, or ``None``
    when the student is unmatched.  Capacity validity is checked by the
    factories and by :class:`Economy`; the raw constructor trusts its input
    so that bulk enumeration stays cheap.
    """

    assignment: tuple[int | None, ...]

    def school_of(self, student: int) -> int | None:
        return self.assignment[student]

    @classmethod
    def from_ids(cls, economy: "Economy", mapping: Mapping[str, str | None]) -> "Matching":
        """Build and validate a matching from ``{student_id: school_id | None}``."""
        seats: list[int | None] = [None] * len(economy.student_ids)
        seen = set()
        for sid, cid in mapping.items():
            if sid not in economy.student_index:
                raise ValueError(f"unknown student {sid!r} in matching")
            if sid in seen:
                raise ValueError(f"student {sid!r} assigned twice")
            seen.add(sid)
            if cid is None or cid == OUTSIDE_TOKEN:
                seats[economy.student_index[sid]] = None
            else:
                if cid not in economy.school_index:
                    raise ValueError(f"unknown school {cid!r} in matching")
                seats[economy.student_index[sid]] = economy.school_index[cid]
        if len(seen) != len(economy.student_ids):
            missing = sorted(set(economy.student_ids) - seen)
            raise ValueError(f"matching is not total; missing {missing}")
        matching = cls(tuple(seats))
        economy.validate_matching(matching)
        return matching

    def to_ids(self, economy: "Economy") -> dict[str, str | None]:
        return {
            economy.student_ids[si]: (None if ci is None else economy.school_ids[ci])
            for si, ci in enumerate(self.assignment)
        }


@dataclass(frozen=True)
class Economy:
    """Fixed market primitives: schools, capacities, types, students, districts.

    ``student_types[i]`` is the type position of student ``i``; ``districts``
    (when present) gives the district identifier of each school, parallel to
    ``school_ids``.
    """

    school_ids: tuple[str, ...]
    capacities: tuple[int, ...]
    type_ids: tuple[str, ...]
    student_ids: tuple[str, ...]
    student_types: tuple[int, ...]
    initial: Matching
    districts: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        for name, ids in (("school", self.school_ids), ("type", self.type_ids),
                          ("student", self.student_ids)):
            if len(set(ids)) != len(ids):
                raise ValueError(f"duplicate {name} identifiers")
        if len(self.capacities) != len(self.school_ids):
            raise ValueError("capacities must be parallel to school_ids")
        if any(q < 0 for q in self.capacities):
            raise ValueError("capacities must be nonnegative")
        if len(self.student_types) != len(self.student_ids):
            raise ValueError("student_types must be parallel to student_ids")
        if any(not 0 <= t < len(self.type_ids) for t in self.student_types):
            raise ValueError("student type out of range")
        if self.districts is not None and len(self.districts) != len(self.school_ids):
            raise ValueError("districts must be parallel to school_ids")
        self.validate_matching(self.initial)

    # Index maps are rebuilt on demand; the dataclass stays hashable because
    # they are derived, never stored as fields.
    @property
    def school_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_school_index")
        if cached is None:
            cached = {c: i for i, c in enumerate(self.school_ids)}
            self.__dict__["_school_index"] = cached
        return cached

    @property
    def type_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_type_index")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.type_ids)}
            self.__dict__["_type_index"] = cached
        return cached

    @property
    def student_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_student_index")
        if cached is None:
            cached = {s: i for i, s in enumerate(self.student_ids)}
            self.__dict__["_student_index"] = cached
        return cached

    @property
    def district_ids(self) -> tuple[str, ...]:
        """Distinct district identifiers in first-appearance order."""
        if self.districts is None:
            return ()
        seen: dict[str, None] = {}
        for d in self.districts:
            seen.setdefault(d)
        return tuple(seen)

    @property
    def num_schools(self) -> int:
        return len(self.school_ids)

    @property
    def num_types(self) -> int:
        return len(self.type_ids)

    @property
    def num_students(self) -> int:
        return len(self.student_ids)

    def validate_matching(self, matching: Matching) -> None:
        if len(matching.assignment) != self.num_students:
            raise ValueError("matching length does not match student count")
        loads = [0] * self.num_schools
        for ci in matching.assignment:
            if ci is None:
                continue
            if not 0 <= ci < self.num_schools:
                raise ValueError("school position out of range in matching")
            loads[ci] += 1
        for ci, load in enumerate(loads):
            if load > self.capacities[ci]:
                raise ValueError(
                    f"school {self.school_ids[ci]!r} over capacity: "
                    f"{load} > {self.capacities[ci]}"
                )

    @classmethod
    def build(
        cls,
        schools: Sequence[tuple[str, int]],
        types: Sequence[str],
        students: Sequence[tuple[str, str]],
        initial: Mapping[str, str | None],
        districts: Mapping[str, str] | None = None,
    ) -> "Economy":
        """Identifier-based convenience constructor."""
        school_ids = tuple(c for c, _ in schools)
        capacities = tuple(q for _, q in schools)
        type_ids = tuple(types)
        tindex = {t: i for i, t in enumerate(type_ids)}
        student_ids = tuple(s for s, _ in students)
        try:
            student_types = tuple(tindex[t] for _, t in students)
        except KeyError as exc:
            raise ValueError(f"unknown type {exc.args[0]!r}") from None
        district_col: tuple[str, ...] | None = None
        if districts is not None:
            missing = [c for c in school_ids if c not in districts]
            if missing:
                raise ValueError(f"districts missing for schools {missing}")
            unknown = sorted(set(districts) - set(school_ids))
            if unknown:
                raise ValueError(f"districts given for unknown schools {unknown}")
            district_col = tuple(districts[c] for c in school_ids)
        cindex = {c: i for i, c in enumerate(school_ids)}
        sindex = {s: i for i, s in enumerate(student_ids)}
        seats: list[int | None] = [None] * len(student_ids)
        for sid in student_ids:
            if sid not in initial:
                raise ValueError(f"initial matching missing student {sid!r}")
        for sid, cid in initial.items():
            if sid not in sindex:
                raise ValueError(f"unknown student {sid!r} in initial matching")
            if cid is None or cid == OUTSIDE_TOKEN:
                continue
            if cid not in cindex:
                raise ValueError(f"unknown school {cid!r} in initial matching")
            seats[sindex[sid]] = cindex[cid]
        return cls(
            school_ids=school_ids,
            capacities=capacities,
            type_ids=type_ids,
            student_ids=student_ids,
            student_types=student_types,
            initial=Matching(tuple(seats)),
            districts=district_col,
        )


@dataclass(frozen=True)
class Preference:
    """Strict ranking of all schools plus the outside option for one student.

    ``ranking`` lists school positions best-first; ``None`` stands for the
    outside option and must appear exactly once.
    """

    student: int
    ranking: tuple[int | None, ...]

    def positions(self) -> dict[int | None, int]:
        cached = self.__dict__.get("_positions")
        if cached is None:
            schools = [x for x in self.ranking if x is not None]
            if sorted(schools) != list(range(len(schools))) or self.ranking.count(None) != 1:
                raise ValueError("ranking must be a permutation of all schools plus None")
            cached = {outcome: pos for pos, outcome in enumerate(self.ranking)}
            self.__dict__["_positions"] = cached
        return cached

    def prefers(self, a: int | None, b: int | None) -> bool:
        """Strictly prefers outcome ``a`` to outcome ``b``."""
        pos = self.positions()
        return pos[a] < pos[b]

    def weakly_prefers(self, a: int | None, b: int | None) -> bool:
        pos = self.positions()
        return pos[a] <= pos[b]

    @classmethod
    def from_ids(
        cls, economy: Economy, student_id: str, ranked: Sequence[str | None]
    ) -> "Preference":
        if student_id not in economy.student_index:
            raise ValueError(f"unknown student {student_id!r}")
        ranking: list[int | None] = []
        for entry in ranked:
            if entry is None or entry == OUTSIDE_TOKEN:
                ranking.append(None)
            elif entry in economy.school_index:
                ranking.append(economy.school_index[entry])
            else:
                raise ValueError(f"unknown school {entry!r} in ranking of {student_id!r}")
        pref = cls(economy.student_index[student_id], tuple(ranking))
        positions = pref.positions()  # validates shape
        if len(positions) != economy.num_schools + 1:
            raise ValueError(f"ranking of {student_id!r} does not cover every school")
        return pref


Profile = tuple[Preference, ...]


def validate_profile(economy: Economy, prefs: Sequence[Preference]) -> Profile:
    """Check that ``prefs`` is one complete ranking per student, in order."""
    if len(prefs) != economy.num_students:
        raise ValueError("profile must contain one preference per student")
    for si, pref in enumerate(prefs):
        if pref.student != si:
            raise ValueError(f"preference at position {si} belongs to student {pref.student}")
        if len(pref.positions()) != economy.num_schools + 1:
            raise ValueError(f"ranking of student {si} does not cover every school")
    return tuple(prefs)


@dataclass(frozen=True)
class Distribution:
    """Grid counting students of each type at each school.

    ``counts[c][t]`` is the number of type-``t`` students at school ``c``.
    Rows follow the economy's school order, columns its type order.
    """

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        width = len(self.counts[0]) if self.counts else 0
        for row in self.counts:
            if len(row) != width:
                raise ValueError("distribution grid must be rectangular")
            for v in row:
                if not isinstance(v, int) or v < 0:
                    raise ValueError("distribution entries must be nonnegative integers")

    def total(self) -> int:
        """Number of assigned students."""
        return sum(sum(row) for row in self.counts)

    def school_total(self, school: int) -> int:
        return sum(self.counts[school])

    def entry(self, school: int, type_: int) -> int:
        return self.counts[school][type_]

    def flat(self) -> tuple[int, ...]:
        """School-major flattening: index ``c * num_types + t``."""
        return tuple(v for row in self.counts for v in row)

    @classmethod
    def from_flat(cls, flat: Sequence[int], num_schools: int, num_types: int) -> "Distribution":
        if len(flat) != num_schools * num_types:
            raise ValueError("flat vector has wrong length")
        return cls(tuple(
            tuple(flat[c * num_types:(c + 1) * num_types]) for c in range(num_schools)
        ))

    def add(self, school: int, type_: int) -> "Distribution":
        rows = [list(r) for r in self.counts]
        rows[school][type_] += 1
        return Distribution(tuple(tuple(r) for r in rows))

    def sub(self, school: int, type_: int) -> "Distribution":
        rows = [list(r) for r in self.counts]
        rows[school][type_] -= 1
        return Distribution(tuple(tuple(r) for r in rows))


def zero_distribution(economy: Economy) -> Distribution:
    return Distribution(tuple((0,) * economy.num_types for _ in range(economy.num_schools)))


def induced_distribution(economy: Economy, matching: Matching) -> Distribution:
    """Type-count grid of a matching: entry (c, t) counts type-t students at c."""
    rows = [[0] * economy.num_types for _ in range(economy.num_schools)]
    for si, ci in enumerate(matching.assignment):
        if ci is not None:
            rows[ci][economy.student_types[si]] += 1
    return Distribution(tuple(tuple(r) for r in rows))


def is_feasible(economy: Economy, xi: Distribution) -> bool:
    """Whether every school's total stays within its capacity."""
    if len(xi.counts) != economy.num_schools or (
        economy.num_schools and len(xi.counts[0]) != economy.num_types
    ):
        raise ValueError("distribution dimensions do not match the economy")
    return all(sum(row) <= q for row, q in zip(xi.counts, economy.capacities))


def district_totals(economy: Economy, xi: Distribution) -> dict[str, int]:
    """Number of assigned students per district."""
    if economy.districts is None:
        raise ValueError("economy has no districts")
    totals = {d: 0 for d in economy.district_ids}
    for ci, row in enumerate(xi.counts):
        totals[economy.districts[ci]] += sum(row)
    return totals


def _school_count_vectors(capacity: int, num_types: int) -> list[tuple[int, ...]]:
    """All type-count rows with sum <= capacity, in ascending lexicographic order."""
    rows: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int, slots: int) -> None:
        if slots == 0:
            rows.append(tuple(prefix))
            return
        for v in range(left + 1):
            prefix.append(v)
            rec(prefix, left - v, slots - 1)
            prefix.pop()

    rec([], capacity, num_types)
    return rows


def enumerate_feasible(
    economy: Economy, budget: int | None = None
) -> tuple[Distribution, ...]:
    """Every capacity-feasible distribution, in lexicographic flat order."""
    budget = DEFAULT_ENUMERATION_BUDGET if budget is None else budget
    count = 1
    for q in economy.capacities:
        count *= math.comb(q + economy.num_types, economy.num_types)
    if count > budget:
        raise BudgetExceededError(count, budget, "feasible distributions")
    per_school = [_school_count_vectors(q, economy.num_types) for q in economy.capacities]
    out: list[Distribution] = []

    def rec(ci: int, rows: list[tuple[int, ...]]) -> None:
        if ci == economy.num_schools:
            out.append(Distribution(tuple(rows)))
            return
        for row in per_school[ci]:
            rows.append(row)
            rec(ci + 1, rows)
            rows.pop()

    rec(0, [])
    return tuple(out)


def pareto_dominates(prefs: Sequence[Preference], mu: Matching, nu: Matching) -> bool:
    """Every student weakly prefers ``mu`` to ``nu`` and at least one strictly does."""
    strict = False
    for si, pref in enumerate(prefs):
        pos = pref.positions()
        a, b = pos[mu.assignment[si]], pos[nu.assignment[si]]
        if a > b:
            return False
        if a < b:
            strict = True
    return strict


def is_individually_rational(
    economy: Economy, prefs: Sequence[Preference], mu: Matching
) -> bool:
    """Every student weakly prefers her outcome to her initial assignment."""
    for si, pref in enumerate(prefs):
        if not pref.weakly_prefers(mu.assignment[si], economy.initial.assignment[si]):
            return False
    return True
