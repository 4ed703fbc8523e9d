"""Exact checkers for discrete-convexity exchange properties.

Two families of checks share one exhaustive scan:

* set checks: for every ordered pair of set members and every coordinate
  where the first exceeds the second, some one-step exchange keeps both
  adjusted points inside the set;
* objective checks (the "pseudo concave" family): the same quantifier shape
  over a finite domain, where an exchange succeeds when both adjusted points
  stay in the domain and the worse of their two values does not drop below
  the worse value of the original pair.

The "mnat" variants admit a plain add/subtract step (no second coordinate)
in addition to paired exchanges; the plain "m" variants require a paired
exchange.  Scans run in ascending lexicographic order over (first point,
second point, pivot coordinate) and report the first violation, so results
are deterministic no matter how the work might be partitioned.

Points are handled as flat integer tuples; distributions flatten school-major
(index ``c * num_types + t``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .core import Distribution, enumerate_feasible
from .objectives import NEG_INF, Objective, PolicyGoal, Value

Point = tuple[int, ...]


@dataclass(frozen=True)
class ConvexityWitness:
    """A pair of points and the pivot coordinate with no valid exchange.

    ``pivot`` indexes the flat vector; for distribution grids that is
    ``school_position * num_types + type_position``.
    """

    xi: Point
    xi2: Point
    pivot: int


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    witness: ConvexityWitness | None = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class ContourSweepResult:
    """Outcome of checking every attained-value upper contour set."""

    holds: bool
    threshold: Value | None = None
    witness: ConvexityWitness | None = None

    def __bool__(self) -> bool:
        return self.holds


def _as_points(collection) -> list[Point]:
    if isinstance(collection, PolicyGoal):
        return [xi.flat() for xi in collection.sorted_members()]
    points: list[Point] = []
    for item in collection:
        if isinstance(item, Distribution):
            points.append(item.flat())
        else:
            points.append(tuple(item))
    if points:
        width = len(points[0])
        if any(len(p) != width for p in points):
            raise ValueError("points have inconsistent dimensions")
    return sorted(set(points))


def _exchange_ok_set(members: frozenset[Point], xi: Point, xj: Point, k: int,
                     allow_unpaired: bool) -> bool:
    """Does some valid exchange at pivot ``k`` keep both points in the set?"""
    if allow_unpaired:
        p = xi[:k] + (xi[k] - 1,) + xi[k + 1:]
        q = xj[:k] + (xj[k] + 1,) + xj[k + 1:]
        if p in members and q in members:
            return True
    for k2, (a2, b2) in enumerate(zip(xi, xj)):
        if a2 < b2:
            p = list(xi)
            p[k] -= 1
            p[k2] += 1
            if tuple(p) not in members:
                continue
            q = list(xj)
            q[k] += 1
            q[k2] -= 1
            if tuple(q) in members:
                return True
    return False


def _scan_set(points: list[Point], allow_unpaired: bool) -> ConvexityWitness | None:
    # Same table layout as _scan_value with membership flags instead of
    # values: the pair loop is pure index lookups.
    if not points:
        return None
    members = frozenset(points)
    dim = len(points[0])
    n = len(points)
    supports = [tuple(k for k, v in enumerate(p) if v) for p in points]
    dec_in: list[list[bool]] = []
    inc_in: list[list[bool]] = []
    swap_out: list[list[bool]] = []
    swap_in: list[list[bool]] = []
    for p, sup in zip(points, supports):
        row_dec = [False] * dim
        row_out = [False] * (dim * dim)
        row_in = [False] * (dim * dim)
        for k in sup:
            down = p[:k] + (p[k] - 1,) + p[k + 1:]
            row_dec[k] = down in members
            base = k * dim
            for k2 in range(dim):
                row_out[base + k2] = (
                    down[:k2] + (down[k2] + 1,) + down[k2 + 1:]
                ) in members
        row_inc = []
        for k in range(dim):
            up = p[:k] + (p[k] + 1,) + p[k + 1:]
            row_inc.append(up in members)
            for k2 in sup:
                if k2 != k:
                    row_in[k * dim + k2] = (
                        up[:k2] + (up[k2] - 1,) + up[k2 + 1:]
                    ) in members
        dec_in.append(row_dec)
        inc_in.append(row_inc)
        swap_out.append(row_out)
        swap_in.append(row_in)
    for i in range(n):
        xi = points[i]
        sup_i = supports[i]
        dec_i = dec_in[i]
        out_i = swap_out[i]
        for j in range(n):
            if i == j:
                continue
            xj = points[j]
            inc_j = inc_in[j]
            in_j = swap_in[j]
            cands: list[int] | None = None
            for k in sup_i:
                if xi[k] <= xj[k]:
                    continue
                if allow_unpaired and dec_i[k] and inc_j[k]:
                    continue
                if cands is None:
                    cands = [k2 for k2 in supports[j] if xj[k2] > xi[k2]]
                base = k * dim
                for k2 in cands:
                    if out_i[base + k2] and in_j[base + k2]:
                        break
                else:
                    return ConvexityWitness(xi, xj, k)
    return None


def _exchange_ok_value(values: Mapping[Point, Value], xi: Point, xj: Point, k: int,
                       floor: Value, allow_unpaired: bool) -> bool:
    """Does some exchange at pivot ``k`` keep both adjusted values >= floor?

    Points missing from ``values`` count as the sentinel and never qualify.
    """
    get = values.get
    if allow_unpaired:
        p = xi[:k] + (xi[k] - 1,) + xi[k + 1:]
        q = xj[:k] + (xj[k] + 1,) + xj[k + 1:]
        if get(p, NEG_INF) >= floor and get(q, NEG_INF) >= floor:
            return True
    for k2, (a2, b2) in enumerate(zip(xi, xj)):
        if a2 < b2:
            p = list(xi)
            p[k] -= 1
            p[k2] += 1
            if get(tuple(p), NEG_INF) < floor:
                continue
            q = list(xj)
            q[k] += 1
            q[k2] -= 1
            if get(tuple(q), NEG_INF) >= floor:
                return True
    return False


def _scan_value(points: list[Point], values: dict[Point, Value],
                allow_unpaired: bool) -> ConvexityWitness | None:
    # Pivots live in the first point's support and exchange candidates in the
    # second's.  The scan precomputes the values of every one-step and
    # two-step neighbor a quantifier can reach, so the quadratic pair loop
    # does index lookups only and never builds tuples.
    if not points:
        return None
    get = values.get
    dim = len(points[0])
    n = len(points)
    supports = [tuple(k for k, v in enumerate(p) if v) for p in points]
    dec_val: list[list[Value]] = []       # value of point with coord k removed
    inc_val: list[list[Value]] = []       # value of point with coord k added
    swap_out: list[list[Value]] = []      # [k*dim+k2] = remove k, add k2
    swap_in: list[list[Value]] = []       # [k*dim+k2] = add k, remove k2
    for p, sup in zip(points, supports):
        row_dec = [NEG_INF] * dim
        row_out = [NEG_INF] * (dim * dim)
        row_in = [NEG_INF] * (dim * dim)
        for k in sup:
            down = p[:k] + (p[k] - 1,) + p[k + 1:]
            row_dec[k] = get(down, NEG_INF)
            base = k * dim
            for k2 in range(dim):
                row_out[base + k2] = get(
                    down[:k2] + (down[k2] + 1,) + down[k2 + 1:], NEG_INF
                )
        row_inc = []
        for k in range(dim):
            up = p[:k] + (p[k] + 1,) + p[k + 1:]
            row_inc.append(get(up, NEG_INF))
            for k2 in sup:
                if k2 != k:
                    row_in[k * dim + k2] = get(
                        up[:k2] + (up[k2] - 1,) + up[k2 + 1:], NEG_INF
                    )
        dec_val.append(row_dec)
        inc_val.append(row_inc)
        swap_out.append(row_out)
        swap_in.append(row_in)
    for i in range(n):
        xi = points[i]
        vi = values[xi]
        sup_i = supports[i]
        dec_i = dec_val[i]
        out_i = swap_out[i]
        for j in range(n):
            if i == j:
                continue
            xj = points[j]
            vj = values[xj]
            floor = vi if vi < vj else vj
            inc_j = inc_val[j]
            in_j = swap_in[j]
            cands: list[int] | None = None
            for k in sup_i:
                if xi[k] <= xj[k]:
                    continue
                if allow_unpaired and dec_i[k] >= floor and inc_j[k] >= floor:
                    continue
                if cands is None:
                    cands = [k2 for k2 in supports[j] if xj[k2] > xi[k2]]
                base = k * dim
                for k2 in cands:
                    if out_i[base + k2] >= floor and in_j[base + k2] >= floor:
                        break
                else:
                    return ConvexityWitness(xi, xj, k)
    return None


def _check_subset(points: list[Point], feasible) -> None:
    if feasible is None:
        return
    universe = frozenset(_as_points(feasible))
    stray = [p for p in points if p not in universe]
    if stray:
        raise ValueError(f"goal point {stray[0]} is not in the given feasible set")


def is_mnat_convex(goal, feasible=None) -> CheckResult:
    """Exchange property with the plain add/subtract step allowed.

    ``goal`` may be a :class:`PolicyGoal`, an iterable of distributions, or an
    iterable of flat integer tuples.  ``feasible``, when given, is only used
    to validate that the goal is contained in it.
    """
    points = _as_points(goal)
    _check_subset(points, feasible)
    witness = _scan_set(points, allow_unpaired=True)
    return CheckResult(witness is None, witness)


def is_m_convex(goal, feasible=None) -> CheckResult:
    """Exchange property requiring a paired exchange at a second coordinate."""
    points = _as_points(goal)
    _check_subset(points, feasible)
    witness = _scan_set(points, allow_unpaired=False)
    return CheckResult(witness is None, witness)


def _domain_values(
    objective: Objective, feasible
) -> tuple[list[Point], dict[Point, Value]]:
    economy = objective.economy
    if feasible is None:
        domain = enumerate_feasible(economy)
    else:
        domain = list(feasible)
    points: list[Point] = []
    values: dict[Point, Value] = {}
    for item in domain:
        xi = item if isinstance(item, Distribution) else Distribution.from_flat(
            item, economy.num_schools, economy.num_types
        )
        v = objective.value(xi)
        if v == NEG_INF:
            raise ValueError("objective is not total on the given feasible set")
        values[xi.flat()] = v
        points.append(xi.flat())
    return sorted(set(points)), values


def is_pseudo_mnat_concave(objective: Objective, feasible=None) -> CheckResult:
    """Discrete quasi-concavity: one-step moves toward each other never lower
    the worse of the two values, with the plain add/subtract step allowed.

    ``feasible`` defaults to the economy's full feasible set and is the
    quantification domain; exchange points outside it never qualify.
    """
    points, values = _domain_values(objective, feasible)
    witness = _scan_value(points, values, allow_unpaired=True)
    return CheckResult(witness is None, witness)


def is_pseudo_m_concave(objective: Objective, feasible=None) -> CheckResult:
    """Variant of :func:`is_pseudo_mnat_concave` requiring paired exchanges."""
    points, values = _domain_values(objective, feasible)
    witness = _scan_value(points, values, allow_unpaired=False)
    return CheckResult(witness is None, witness)


def confirm_set_witness(goal, witness: ConvexityWitness, mnat: bool = True) -> bool:
    """Replay the set-exchange quantifiers at a witness; True means the
    violation is real."""
    points = _as_points(goal)
    members = frozenset(points)
    if witness.xi not in members or witness.xi2 not in members:
        return False
    if witness.xi[witness.pivot] <= witness.xi2[witness.pivot]:
        return False
    return not _exchange_ok_set(members, witness.xi, witness.xi2, witness.pivot, mnat)


def confirm_pseudo_witness(
    objective: Objective, witness: ConvexityWitness, feasible=None, mnat: bool = True
) -> bool:
    """Replay the objective-exchange quantifiers at a witness."""
    points, values = _domain_values(objective, feasible)
    if witness.xi not in values or witness.xi2 not in values:
        return False
    if witness.xi[witness.pivot] <= witness.xi2[witness.pivot]:
        return False
    floor = min(values[witness.xi], values[witness.xi2])
    return not _exchange_ok_value(values, witness.xi, witness.xi2, witness.pivot,
                                  floor, mnat)


def upper_contour_set(
    objective: Objective, threshold: Value, feasible=None
) -> frozenset[Distribution]:
    """All domain distributions scoring at least ``threshold``; may be empty."""
    economy = objective.economy
    if feasible is None:
        domain: Iterable[Distribution] = enumerate_feasible(economy)
    else:
        domain = [
            item if isinstance(item, Distribution) else Distribution.from_flat(
                item, economy.num_schools, economy.num_types
            )
            for item in feasible
        ]
    return frozenset(xi for xi in domain if objective.value(xi) >= threshold)


def upper_contours_all_mnat_convex(
    objective: Objective, feasible=None
) -> ContourSweepResult:
    """Check every attained-value upper contour set for the mnat exchange
    property.

    Contour sets only change at attained values, so sweeping those thresholds
    covers every real threshold; the empty set above the maximum is vacuously
    fine.  Thresholds are swept from the highest (smallest contour) down, and
    the first failing one is reported.
    """
    points, values = _domain_values(objective, feasible)
    for threshold in sorted(set(values.values()), reverse=True):
        level = [p for p in points if values[p] >= threshold]
        witness = _scan_set(level, allow_unpaired=True)
        if witness is not None:
            return ContourSweepResult(False, threshold, witness)
    return ContourSweepResult(True)


def lift_add_unassigned(goal, num_students: int) -> frozenset[Point]:
    """Append a coordinate holding the count of unassigned students.

    Every member must assign at most ``num_students`` students.  The result
    lives in one extra dimension and can be fed back to the set checkers.
    """
    points = _as_points(goal)
    lifted = []
    for p in points:
        slack = num_students - sum(p)
        if slack < 0:
            raise ValueError(
                f"point {p} assigns {sum(p)} students, more than the given {num_students}"
            )
        lifted.append(p + (slack,))
    return frozenset(lifted)
