"""Batch front end: instance files, mechanism runs, oracles, convexity checks.

Instance documents are JSON with four sections (``economy``, ``preferences``,
``objective``, optional ``master_list``); the reserved token ``@none`` stands
for the outside option everywhere a school identifier could appear.  All
output is line-oriented and deterministic.

Exit codes: 0 ok/pass, 1 property failure, 2 parse or document error,
3 internal invariant violation, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .convexity import (
    CheckResult,
    is_m_convex,
    is_mnat_convex,
    is_pseudo_m_concave,
    is_pseudo_mnat_concave,
    upper_contours_all_mnat_convex,
)
from .core import (
    OUTSIDE_TOKEN,
    BudgetExceededError,
    Distribution,
    Economy,
    Matching,
    Preference,
    enumerate_feasible,
    induced_distribution,
)
from .objectives import (
    ChebyshevObjective,
    DiscreteMetricObjective,
    GoalConstructionError,
    ManhattanObjective,
    Objective,
    PolicyGoal,
    TabulatedObjective,
    build_balanced_exchange_goal,
    build_combined_goal,
    build_district_diversity_goal,
    build_diversity_goal,
    build_exchange_feasibility_goal,
    build_quota_goal,
    explicit_goal,
)
from .ttc import MechanismInvariantError, TTCTrace, run_ttc
from .verify import (
    enumerate_constrained_efficient_ir,
    is_constrained_efficient,
    verify_individual_rationality,
    verify_strategy_proofness,
    verify_weak_improvement,
)

# Diagnostic codes; each class of document error keeps its own.
E_JSON = "E_JSON"
E_SCHEMA = "E_SCHEMA"
E_NUMBER = "E_NUMBER"
E_UNKNOWN_REF = "E_UNKNOWN_REF"
E_DUP = "E_DUP"
E_RANKING = "E_RANKING"
E_CAPACITY = "E_CAPACITY"
E_OBJECTIVE = "E_OBJECTIVE"

ENV_FEASIBLE_BUDGET = "TTCGOALS_FEASIBLE_BUDGET"
ENV_MATCHING_BUDGET = "TTCGOALS_MATCHING_BUDGET"
ENV_RUN_BUDGET = "TTCGOALS_RUN_BUDGET"

OBJECTIVE_VARIANTS = ("tabulated", "chebyshev", "discrete", "manhattan")
GOAL_BUILDERS = (
    "quota",
    "diversity",
    "exchange",
    "balanced",
    "diversity+exchange",
    "diversity+balanced",
    "district-diversity",
    "explicit",
)


class InstanceParseError(ValueError):
    """Document rejected; ``code`` names the diagnostic class."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True, eq=True)
class InstanceDocument:
    """A parsed instance: economy, full preference profile, objective spec,
    and master list (student positions).

    The objective spec is kept as validated JSON data so documents round-trip
    through :func:`serialize_instance` losslessly.
    """

    economy: Economy
    preferences: tuple[Preference, ...]
    objective_spec: Mapping[str, Any]
    master_list: tuple[int, ...]

    def build_objective(self, budget: int | None = None) -> Objective:
        return _objective_from_spec(self.economy, self.objective_spec, budget)

    def build_goal(self, budget: int | None = None) -> PolicyGoal:
        goal_spec = self.objective_spec.get("goal")
        if goal_spec is None:
            raise InstanceParseError(
                E_OBJECTIVE, "the objective has no policy goal (tabulated variant)"
            )
        return _goal_from_spec(self.economy, goal_spec, budget)


def _need(mapping: Mapping[str, Any], key: str, kind, where: str):
    if key not in mapping:
        raise InstanceParseError(E_SCHEMA, f"{where}: missing field {key!r}")
    value = mapping[key]
    if kind is int and isinstance(value, bool):
        raise InstanceParseError(E_NUMBER, f"{where}: field {key!r} must be an integer")
    if not isinstance(value, kind):
        raise InstanceParseError(E_SCHEMA, f"{where}: field {key!r} has the wrong type")
    return value


def _nonneg_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InstanceParseError(E_NUMBER, f"{where}: expected a nonnegative integer")
    return value


def parse_instance(text: str) -> InstanceDocument:
    """Parse and validate an instance document, or raise the first error."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(
            E_JSON, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise InstanceParseError(E_SCHEMA, "top level must be an object")
    for section in ("economy", "preferences", "objective"):
        if section not in raw:
            raise InstanceParseError(E_SCHEMA, f"missing section {section!r}")
    known = {"economy", "preferences", "objective", "master_list"}
    for key in raw:
        if key not in known:
            raise InstanceParseError(E_SCHEMA, f"unknown section {key!r}")

    economy = _parse_economy(_need(raw, "economy", dict, "document"))
    preferences = _parse_preferences(economy, _need(raw, "preferences", dict, "document"))
    objective_spec = _validate_objective_spec(
        economy, _need(raw, "objective", dict, "document")
    )
    master = _parse_master(economy, raw.get("master_list"))
    return InstanceDocument(economy, preferences, objective_spec, master)


def _parse_economy(section: Mapping[str, Any]) -> Economy:
    where = "economy"
    schools_raw = _need(section, "schools", list, where)
    types_raw = _need(section, "types", list, where)
    students_raw = _need(section, "students", list, where)
    initial_raw = _need(section, "initial_matching", dict, where)

    schools: list[tuple[str, int]] = []
    for item in schools_raw:
        if not isinstance(item, dict):
            raise InstanceParseError(E_SCHEMA, "economy.schools entries must be objects")
        cid = _need(item, "id", str, "economy.schools")
        cap = _nonneg_int(_need(item, "capacity", int, "economy.schools"),
                          f"capacity of school {cid!r}")
        schools.append((cid, cap))
    school_ids = [c for c, _ in schools]
    if len(set(school_ids)) != len(school_ids):
        raise InstanceParseError(E_DUP, "duplicate school identifiers")

    if not all(isinstance(t, str) for t in types_raw):
        raise InstanceParseError(E_SCHEMA, "economy.types must be strings")
    if len(set(types_raw)) != len(types_raw):
        raise InstanceParseError(E_DUP, "duplicate type identifiers")

    students: list[tuple[str, str]] = []
    for item in students_raw:
        if not isinstance(item, dict):
            raise InstanceParseError(E_SCHEMA, "economy.students entries must be objects")
        sid = _need(item, "id", str, "economy.students")
        tid = _need(item, "type", str, "economy.students")
        if tid not in types_raw:
            raise InstanceParseError(E_UNKNOWN_REF, f"student {sid!r} has unknown type {tid!r}")
        students.append((sid, tid))
    student_ids = [s for s, _ in students]
    if len(set(student_ids)) != len(student_ids):
        raise InstanceParseError(E_DUP, "duplicate student identifiers")

    districts = None
    if "districts" in section and section["districts"] is not None:
        districts_raw = _need(section, "districts", dict, where)
        for cid, did in districts_raw.items():
            if cid not in school_ids:
                raise InstanceParseError(E_UNKNOWN_REF, f"district map names unknown school {cid!r}")
            if not isinstance(did, str):
                raise InstanceParseError(E_SCHEMA, "district identifiers must be strings")
        missing = [c for c in school_ids if c not in districts_raw]
        if missing:
            raise InstanceParseError(E_SCHEMA, f"district map missing schools {missing}")
        districts = dict(districts_raw)

    for sid, cid in initial_raw.items():
        if sid not in student_ids:
            raise InstanceParseError(E_UNKNOWN_REF, f"initial matching names unknown student {sid!r}")
        if not isinstance(cid, str) or (cid != OUTSIDE_TOKEN and cid not in school_ids):
            raise InstanceParseError(
                E_UNKNOWN_REF, f"initial matching of {sid!r} names unknown school {cid!r}"
            )
    missing_students = [s for s in student_ids if s not in initial_raw]
    if missing_students:
        raise InstanceParseError(E_SCHEMA, f"initial matching missing students {missing_students}")

    try:
        return Economy.build(schools, types_raw, students, initial_raw, districts)
    except ValueError as exc:
        if "capacity" in str(exc):
            raise InstanceParseError(E_CAPACITY, str(exc)) from None
        raise InstanceParseError(E_SCHEMA, str(exc)) from None


def _parse_preferences(
    economy: Economy, section: Mapping[str, Any]
) -> tuple[Preference, ...]:
    prefs: list[Preference | None] = [None] * economy.num_students
    for sid, ranking in section.items():
        if sid not in economy.student_index:
            raise InstanceParseError(E_UNKNOWN_REF, f"preferences name unknown student {sid!r}")
        if not isinstance(ranking, list) or not all(isinstance(x, str) for x in ranking):
            raise InstanceParseError(E_SCHEMA, f"ranking of {sid!r} must be a list of identifiers")
        for entry in ranking:
            if entry != OUTSIDE_TOKEN and entry not in economy.school_index:
                raise InstanceParseError(
                    E_UNKNOWN_REF, f"ranking of {sid!r} names unknown school {entry!r}"
                )
        if len(set(ranking)) != len(ranking):
            raise InstanceParseError(E_RANKING, f"ranking of {sid!r} repeats an entry")
        if len(ranking) != economy.num_schools + 1 or OUTSIDE_TOKEN not in ranking:
            raise InstanceParseError(
                E_RANKING,
                f"ranking of {sid!r} must list every school and {OUTSIDE_TOKEN!r} exactly once",
            )
        prefs[economy.student_index[sid]] = Preference.from_ids(economy, sid, ranking)
    holes = [economy.student_ids[i] for i, p in enumerate(prefs) if p is None]
    if holes:
        raise InstanceParseError(E_SCHEMA, f"preferences missing students {holes}")
    return tuple(prefs)  # type: ignore[arg-type]


def _parse_master(economy: Economy, raw: Any) -> tuple[int, ...]:
    if raw is None:
        return tuple(range(economy.num_students))
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise InstanceParseError(E_SCHEMA, "master_list must be a list of student identifiers")
    unknown = [s for s in raw if s not in economy.student_index]
    if unknown:
        raise InstanceParseError(E_UNKNOWN_REF, f"master_list names unknown students {unknown}")
    if sorted(raw) != sorted(economy.student_ids):
        raise InstanceParseError(E_SCHEMA, "master_list must be a permutation of all students")
    return tuple(economy.student_index[s] for s in raw)


def _parse_grid(economy: Economy, raw: Any, where: str) -> Distribution:
    if (not isinstance(raw, list) or len(raw) != economy.num_schools or
            any(not isinstance(row, list) or len(row) != economy.num_types for row in raw)):
        raise InstanceParseError(
            E_OBJECTIVE,
            f"{where}: expected a {economy.num_schools}x{economy.num_types} grid",
        )
    rows = []
    for row in raw:
        rows.append(tuple(_nonneg_int(v, where) for v in row))
    return Distribution(tuple(rows))


def _validate_objective_spec(
    economy: Economy, spec: Mapping[str, Any]
) -> dict[str, Any]:
    variant = _need(spec, "variant", str, "objective")
    if variant not in OBJECTIVE_VARIANTS:
        raise InstanceParseError(E_OBJECTIVE, f"unknown objective variant {variant!r}")
    if variant == "tabulated":
        allowed = {"variant", "entries", "default"}
        entries = _need(spec, "entries", list, "objective")
        seen_grids = set()
        for item in entries:
            if not isinstance(item, dict):
                raise InstanceParseError(E_OBJECTIVE, "tabulated entries must be objects")
            grid = _parse_grid(economy, _need(item, "counts", list, "objective.entries"),
                               "objective.entries")
            if grid in seen_grids:
                raise InstanceParseError(
                    E_DUP, f"tabulated entries repeat the grid {list(grid.counts)}"
                )
            seen_grids.add(grid)
            value = _need(item, "value", (int, float), "objective.entries")
            if isinstance(value, bool):
                raise InstanceParseError(E_NUMBER, "tabulated values must be numbers")
        if "default" in spec and not isinstance(spec["default"], (int, float)):
            raise InstanceParseError(E_NUMBER, "tabulated default must be a number")
    else:
        allowed = {"variant", "goal"}
        goal = _need(spec, "goal", dict, "objective")
        _validate_goal_spec(economy, goal)
    for key in spec:
        if key not in allowed:
            raise InstanceParseError(E_OBJECTIVE, f"unknown objective field {key!r}")
    return dict(spec)


def _validate_goal_spec(economy: Economy, spec: Mapping[str, Any]) -> None:
    builder = _need(spec, "builder", str, "objective.goal")
    if builder not in GOAL_BUILDERS:
        raise InstanceParseError(E_OBJECTIVE, f"unknown goal builder {builder!r}")
    allowed = {"builder"}
    if builder == "quota":
        allowed |= {"floors", "ceilings"}
        for key in ("floors", "ceilings"):
            if key in spec:
                bounds = _need(spec, key, dict, "objective.goal")
                for cid, v in bounds.items():
                    if cid not in economy.school_index:
                        raise InstanceParseError(
                            E_UNKNOWN_REF, f"goal {key} name unknown school {cid!r}")
                    _nonneg_int(v, f"goal {key} of {cid!r}")
    elif builder in ("diversity", "district-diversity"):
        allowed |= {"floors", "ceilings"}
        names = economy.school_index if builder == "diversity" else dict.fromkeys(economy.district_ids)
        for key in ("floors", "ceilings"):
            if key in spec:
                bounds = _need(spec, key, dict, "objective.goal")
                for name, row in bounds.items():
                    if name not in names:
                        raise InstanceParseError(
                            E_UNKNOWN_REF, f"goal {key} name unknown identifier {name!r}")
                    if not isinstance(row, dict):
                        raise InstanceParseError(E_SCHEMA, f"goal {key} rows must be objects")
                    for tid, v in row.items():
                        if tid not in economy.type_index:
                            raise InstanceParseError(
                                E_UNKNOWN_REF, f"goal {key} name unknown type {tid!r}")
                        _nonneg_int(v, f"goal {key} of {name!r}/{tid!r}")
    elif builder in ("exchange", "balanced"):
        allowed |= {"targets"}
        if "targets" in spec:
            targets = _need(spec, "targets", dict, "objective.goal")
            for did, v in targets.items():
                if did not in economy.district_ids:
                    raise InstanceParseError(
                        E_UNKNOWN_REF, f"goal targets name unknown district {did!r}")
                _nonneg_int(v, f"goal target of {did!r}")
    elif builder in ("diversity+exchange", "diversity+balanced"):
        allowed |= {"floors", "ceilings", "targets"}
        probe = dict(spec)
        probe["builder"] = "diversity"
        probe.pop("targets", None)
        _validate_goal_spec(economy, probe)
        probe = {"builder": "exchange"}
        if "targets" in spec:
            probe["targets"] = spec["targets"]
        _validate_goal_spec(economy, probe)
    elif builder == "explicit":
        allowed |= {"members"}
        members = _need(spec, "members", list, "objective.goal")
        if not members:
            raise InstanceParseError(E_OBJECTIVE, "explicit goal must list at least one member")
        for grid in members:
            _parse_grid(economy, grid, "objective.goal.members")
    for key in spec:
        if key not in allowed:
            raise InstanceParseError(E_OBJECTIVE, f"unknown goal field {key!r}")
    if builder in ("exchange", "balanced", "diversity+exchange",
                   "diversity+balanced", "district-diversity") and economy.districts is None:
        raise InstanceParseError(E_OBJECTIVE, f"goal builder {builder!r} needs districts")


def _goal_from_spec(
    economy: Economy, spec: Mapping[str, Any], budget: int | None
) -> PolicyGoal:
    builder = spec["builder"]
    if builder == "quota":
        return build_quota_goal(economy, spec.get("floors"), spec.get("ceilings"), budget)
    if builder == "diversity":
        return build_diversity_goal(economy, spec.get("floors"), spec.get("ceilings"), budget)
    if builder == "exchange":
        return build_exchange_feasibility_goal(economy, spec.get("targets"), budget)
    if builder == "balanced":
        return build_balanced_exchange_goal(economy, spec.get("targets"), budget)
    if builder == "diversity+exchange":
        return build_combined_goal(economy, spec.get("floors"), spec.get("ceilings"),
                                   spec.get("targets"), "exchange", budget)
    if builder == "diversity+balanced":
        return build_combined_goal(economy, spec.get("floors"), spec.get("ceilings"),
                                   spec.get("targets"), "balanced", budget)
    if builder == "district-diversity":
        return build_district_diversity_goal(
            economy, spec.get("floors"), spec.get("ceilings"), budget)
    if builder == "explicit":
        members = [
            _parse_grid(economy, grid, "objective.goal.members")
            for grid in spec["members"]
        ]
        return explicit_goal(economy, members)
    raise InstanceParseError(E_OBJECTIVE, f"unknown goal builder {builder!r}")


def _objective_from_spec(
    economy: Economy, spec: Mapping[str, Any], budget: int | None
) -> Objective:
    variant = spec["variant"]
    if variant == "tabulated":
        table = {
            _parse_grid(economy, item["counts"], "objective.entries"): item["value"]
            for item in spec["entries"]
        }
        try:
            return TabulatedObjective(economy, table, spec.get("default"), budget)
        except BudgetExceededError:
            raise
        except ValueError as exc:
            raise InstanceParseError(E_OBJECTIVE, str(exc)) from None
    goal = _goal_from_spec(economy, spec["goal"], budget)
    if variant == "chebyshev":
        return ChebyshevObjective(goal)
    if variant == "discrete":
        return DiscreteMetricObjective(goal)
    if variant == "manhattan":
        return ManhattanObjective(goal)
    raise InstanceParseError(E_OBJECTIVE, f"unknown objective variant {variant!r}")


def serialize_instance(doc: InstanceDocument) -> str:
    """Canonical JSON for a document; parse(serialize(doc)) == doc."""
    economy = doc.economy
    payload: dict[str, Any] = {
        "economy": {
            "schools": [
                {"id": cid, "capacity": q}
                for cid, q in zip(economy.school_ids, economy.capacities)
            ],
            "types": list(economy.type_ids),
            "students": [
                {"id": sid, "type": economy.type_ids[ti]}
                for sid, ti in zip(economy.student_ids, economy.student_types)
            ],
            "initial_matching": {
                sid: (OUTSIDE_TOKEN if ci is None else economy.school_ids[ci])
                for sid, ci in zip(economy.student_ids, economy.initial.assignment)
            },
        },
        "preferences": {
            economy.student_ids[pref.student]: [
                OUTSIDE_TOKEN if ci is None else economy.school_ids[ci]
                for ci in pref.ranking
            ]
            for pref in doc.preferences
        },
        "objective": doc.objective_spec,
        "master_list": [economy.student_ids[si] for si in doc.master_list],
    }
    if economy.districts is not None:
        payload["economy"]["districts"] = {
            cid: did for cid, did in zip(economy.school_ids, economy.districts)
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _budgets() -> dict[str, int | None]:
    def read(name: str) -> int | None:
        raw = os.environ.get(name)
        return int(raw) if raw else None

    return {
        "feasible": read(ENV_FEASIBLE_BUDGET),
        "matching": read(ENV_MATCHING_BUDGET),
        "runs": read(ENV_RUN_BUDGET),
    }


def _load_document(path: str) -> InstanceDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceParseError(E_SCHEMA, f"cannot read {path}: {exc}") from None
    return parse_instance(text)


def _fmt_value(v) -> str:
    return str(v) if isinstance(v, int) else repr(v)


def _fmt_matching(economy: Economy, matching: Matching) -> str:
    return ",".join(
        f"{sid}={OUTSIDE_TOKEN if ci is None else economy.school_ids[ci]}"
        for sid, ci in zip(economy.student_ids, matching.assignment)
    )


def _fmt_witness_point(economy: Economy, flat: tuple[int, ...]) -> str:
    return "(" + ",".join(str(v) for v in flat) + ")"


def _fmt_pivot(economy: Economy, pivot: int) -> str:
    if pivot >= economy.num_schools * economy.num_types:
        return f"slack:{pivot}"
    ci, ti = divmod(pivot, economy.num_types)
    return f"{economy.school_ids[ci]}:{economy.type_ids[ti]}"


def _write_trace(economy: Economy, trace: TTCTrace, directory: str) -> int:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for step in trace.steps:
        lines = [f"digraph step_{step.index} {{", "  rankdir=LR;"]
        lines.append(f"  // removed this step: "
                     + (" ".join(opt.label(economy) for opt in step.removed) or "none"))
        for si, _ in step.student_pointees:
            lines.append(f'  "s:{economy.student_ids[si]}" '
                         f'[shape=ellipse, label="{economy.student_ids[si]}"];')
        for opt, _ in step.option_pointees:
            lines.append(f'  "o:{opt.label(economy)}" '
                         f'[shape=box, label="{opt.label(economy)}"];')
        for opt in step.removed:
            lines.append(f'  "o:{opt.label(economy)}" '
                         f'[shape=box, style=dashed, label="{opt.label(economy)} removed"];')
        cycle_edges = set()
        for cyc in step.cycles:
            for pos, (si, opt) in enumerate(cyc):
                cycle_edges.add(("s", si, opt))
                nxt = cyc[(pos + 1) % len(cyc)][0]
                cycle_edges.add(("o", opt, nxt))
        for si, opt in step.student_pointees:
            mark = " [style=bold, color=red]" if ("s", si, opt) in cycle_edges else ""
            lines.append(f'  "s:{economy.student_ids[si]}" -> "o:{opt.label(economy)}"{mark};')
        for opt, si in step.option_pointees:
            mark = " [style=bold, color=red]" if ("o", opt, si) in cycle_edges else ""
            lines.append(f'  "o:{opt.label(economy)}" -> "s:{economy.student_ids[si]}"{mark};')
        lines.append("}")
        (out / f"step_{step.index}.dot").write_text("\n".join(lines) + "\n")
    return len(trace.steps)


def _cmd_run(args: argparse.Namespace) -> int:
    budgets = _budgets()
    doc = _load_document(args.instance)
    objective = doc.build_objective(budgets["feasible"])
    outcome, trace = run_ttc(doc.economy, objective, doc.preferences, doc.master_list)
    before = objective.value(induced_distribution(doc.economy, doc.economy.initial))
    after = objective.value(induced_distribution(doc.economy, outcome))
    print(f"f_initial {_fmt_value(before)}")
    print(f"f_outcome {_fmt_value(after)}")
    print(f"steps {len(trace.steps)}")
    for sid, ci in zip(doc.economy.student_ids, outcome.assignment):
        print(f"match {sid} {OUTSIDE_TOKEN if ci is None else doc.economy.school_ids[ci]}")
    if args.trace:
        written = _write_trace(doc.economy, trace, args.trace)
        print(f"trace_files {written}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    budgets = _budgets()
    doc = _load_document(args.instance)
    economy = doc.economy
    objective = doc.build_objective(budgets["feasible"])

    if args.matching:
        if args.which in ("strategyproof", "all"):
            raise InstanceParseError(
                E_SCHEMA, "--matching cannot be combined with strategy-proofness checks"
            )
        try:
            payload = json.loads(Path(args.matching).read_text())
            matching = Matching.from_ids(economy, payload)
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise InstanceParseError(E_SCHEMA, f"bad matching file: {exc}") from None
    else:
        matching, _ = run_ttc(economy, objective, doc.preferences, doc.master_list)

    which = ("improve", "ir", "efficient", "strategyproof") if args.which == "all" \
        else (args.which,)
    reports = []
    for name in which:
        if name == "improve":
            reports.append(verify_weak_improvement(economy, objective, matching))
        elif name == "ir":
            reports.append(verify_individual_rationality(economy, doc.preferences, matching))
        elif name == "efficient":
            reports.append(is_constrained_efficient(
                economy, objective, doc.preferences, matching, budgets["matching"]))
        elif name == "strategyproof":
            reports.append(verify_strategy_proofness(
                economy, objective, doc.preferences, doc.master_list,
                mode=args.mode, samples=args.samples, seed=args.seed,
                budget=budgets["runs"],
            ))
    failed = False
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        line = f"{status} {report.property} searched={report.search_size}"
        if report.seed is not None:
            line += f" seed={report.seed}"
        if not report.passed:
            failed = True
            if isinstance(report.witness, Matching):
                line += f" witness={_fmt_matching(economy, report.witness)}"
            else:
                line += f" witness={report.witness!r}"
        print(line)
    return 1 if failed else 0


def _cmd_check(args: argparse.Namespace) -> int:
    budgets = _budgets()
    doc = _load_document(args.instance)
    economy = doc.economy

    if args.which in ("mnat", "m"):
        goal = doc.build_goal(budgets["feasible"])
        result = is_mnat_convex(goal) if args.which == "mnat" else is_m_convex(goal)
        return _print_check(economy, args.which, result, f"members={len(goal)}")

    objective = doc.build_objective(budgets["feasible"])
    feasible = enumerate_feasible(economy, budgets["feasible"])
    if args.which in ("pseudo-mnat", "pseudo-m"):
        checker = is_pseudo_mnat_concave if args.which == "pseudo-mnat" else is_pseudo_m_concave
        result = checker(objective, feasible)
        return _print_check(economy, args.which, result, "")

    if args.which == "theorem2":
        direct = is_pseudo_mnat_concave(objective, feasible)
        sweep = upper_contours_all_mnat_convex(objective, feasible)
        print(f"pseudo-mnat {'true' if direct.holds else 'false'}")
        if sweep.holds:
            print("contours true")
        else:
            print(f"contours false threshold={_fmt_value(sweep.threshold)}")
        agree = direct.holds == sweep.holds
        print(f"{'PASS' if agree else 'FAIL'} theorem2 agree={'true' if agree else 'false'}")
        return 0 if agree else 1

    raise InstanceParseError(E_SCHEMA, f"unknown check {args.which!r}")


def _print_check(economy: Economy, name: str, result: CheckResult, extra: str) -> int:
    if result.holds:
        print(f"PASS {name}" + (f" {extra}" if extra else ""))
        return 0
    w = result.witness
    print(
        f"FAIL {name} xi={_fmt_witness_point(economy, w.xi)} "
        f"xi2={_fmt_witness_point(economy, w.xi2)} pivot={_fmt_pivot(economy, w.pivot)}"
    )
    return 1


def _cmd_goal(args: argparse.Namespace) -> int:
    budgets = _budgets()
    doc = _load_document(args.instance)
    goal = doc.build_goal(budgets["feasible"])
    print(f"members {len(goal)}")
    for xi in goal.sorted_members():
        print("member " + ",".join(str(v) for v in xi.flat()))
    return 0


def _cmd_frontier(args: argparse.Namespace) -> int:
    budgets = _budgets()
    doc = _load_document(args.instance)
    objective = doc.build_objective(budgets["feasible"])
    frontier = enumerate_constrained_efficient_ir(
        doc.economy, objective, doc.preferences, budgets["matching"]
    )
    print(f"count {len(frontier)}")
    for matching in frontier:
        print(f"matching {_fmt_matching(doc.economy, matching)}")
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ttcgoals",
        description="Top trading cycles with distributional objectives: "
                    "run, verify, and check instances.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the mechanism on an instance")
    run.add_argument("instance", help="path to an instance JSON file")
    run.add_argument("--trace", metavar="DIR",
                     help="write one DOT graph per round into DIR")
    run.set_defaults(func=_cmd_run)

    verify = sub.add_parser("verify", help="run property oracles on an instance")
    verify.add_argument("instance")
    verify.add_argument("which",
                        choices=["improve", "ir", "efficient", "strategyproof", "all"])
    verify.add_argument("--matching", metavar="FILE",
                        help="verify this matching instead of the mechanism outcome")
    verify.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--seed", type=int, default=None)
    verify.set_defaults(func=_cmd_verify)

    check = sub.add_parser("check", help="run convexity checkers on an instance")
    check.add_argument("instance")
    check.add_argument("which",
                       choices=["mnat", "m", "pseudo-mnat", "pseudo-m", "theorem2"])
    check.set_defaults(func=_cmd_check)

    goal = sub.add_parser("goal", help="materialize and print the instance's policy goal")
    goal.add_argument("instance")
    goal.set_defaults(func=_cmd_goal)

    frontier = sub.add_parser(
        "frontier", help="enumerate undominated improving individually-rational matchings")
    frontier.add_argument("instance")
    frontier.set_defaults(func=_cmd_frontier)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceParseError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except GoalConstructionError as exc:
        print(f"error E_OBJECTIVE: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"error E_BUDGET: {exc}", file=sys.stderr)
        return 4
    except MechanismInvariantError as exc:
        print(f"error E_INVARIANT: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
