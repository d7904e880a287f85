"""Scenario runner: replay mission phases and write deployment snapshots.

A scenario file is JSON with a schema version, the starting actors and
links, an ordered event list tagged with phase labels, and optional engine
configuration. `regroup run` replays it through the adaptation engine,
writing collab-<phase>.graphml and mw-<phase>.graphml per phase plus a
placement report; `regroup validate` checks a file without running it;
`regroup oracle` replays while cross-checking every selection against the
brute-force reference implementation.

Exit codes: 0 success, 1 input error, 2 at least one phase ended degraded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

from .adaptation import (
    EngineConfig,
    EngineState,
    Level,
    MissionEvent,
    Selector,
    initial_state,
    step,
)
from .errors import NoFeasibleCandidate, ParseError, RegroupError, ValidationError
from .graphs import MiddlewareGraph, MigrationPlan, diff, to_dot, to_graphml
from .model import (
    Actor,
    ApplicationModel,
    Device,
    Group,
    InvestigatorKind,
    Role,
    RoleKind,
    validate,
)
from .selection import DEFAULT_ENERGY_FLOOR, PolicyKind, select, select_by_scan

SCHEMA_VERSION = 1

_LEVEL_ORDER = [Level.INITIAL, Level.MIDDLEWARE, Level.COLLABORATION, Level.DEGRADED]


@dataclass(frozen=True)
class ScenarioConfig:
    e_min: int | None = None
    policy: PolicyKind | None = None
    initial_phase: str = "phase1"


@dataclass
class PhaseReport:
    phase: str
    level: str
    sessions: list[str]
    cm_hosts: dict[str, str]
    plan: MigrationPlan
    energies: dict[str, int]
    degraded: bool

    def record(self) -> dict:
        return {
            "phase": self.phase,
            "level": self.level,
            "sessions": self.sessions,
            "cm_hosts": self.cm_hosts,
            "plan": {
                "added": len(self.plan.added),
                "removed": len(self.plan.removed),
                "moved": len(self.plan.moved),
            },
            "energies": self.energies,
            "degraded": self.degraded,
        }


@dataclass
class RunReport:
    phases: list[PhaseReport] = field(default_factory=list)

    @property
    def any_degraded(self) -> bool:
        return any(p.degraded for p in self.phases)


# -- scenario parsing ---------------------------------------------------------

def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown field {sorted(unknown)[0]!r}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"{where}: missing field {sorted(missing)[0]!r}")


_ROLES = {r.value: r for r in RoleKind}
_INV_KINDS = {k.value: k for k in InvestigatorKind}


def _parse_role(obj: dict, where: str) -> Role:
    kind = _ROLES.get(obj.get("role", ""))
    if kind is None:
        raise ParseError(f"{where}: unknown role {obj.get('role')!r}")
    inv_kind = None
    if "investigator_kind" in obj:
        inv_kind = _INV_KINDS.get(obj["investigator_kind"])
        if inv_kind is None:
            raise ParseError(f"{where}: unknown investigator_kind {obj['investigator_kind']!r}")
    return Role(kind, inv_kind)


def _parse_actor_entry(obj: dict, where: str) -> tuple[Actor, Device, str]:
    _require_keys(obj, {"id", "role", "investigator_kind", "ip", "energy", "ssid", "group"},
                  {"id", "role", "ip", "energy", "ssid", "group"}, where)
    if not isinstance(obj["energy"], int) or isinstance(obj["energy"], bool):
        raise ParseError(f"{where}: energy must be an integer")
    role = _parse_role(obj, where)
    actor = Actor(obj["id"], role, obj["ip"], obj["group"])
    device = Device(obj["ip"], obj["energy"], obj["ssid"])
    return actor, device, obj["group"]


def _parse_event(obj: dict, index: int) -> MissionEvent:
    where = f"events[{index}]"
    kind = obj.get("kind")
    label = obj.get("phase")
    if not isinstance(label, str) or not label:
        raise ParseError(f"{where}: missing phase label")

    if kind == "energy_changed":
        _require_keys(obj, {"phase", "kind", "ip", "energy"}, {"ip", "energy"}, where)
        if not isinstance(obj["energy"], int) or isinstance(obj["energy"], bool):
            raise ParseError(f"{where}: energy must be an integer")
        return MissionEvent.energy_changed(obj["ip"], obj["energy"], label)
    if kind == "actor_arrived":
        _require_keys(obj, {"phase", "kind", "actor"}, {"actor"}, where)
        actor, device, group = _parse_actor_entry(obj["actor"], f"{where}.actor")
        return MissionEvent.actor_arrived(actor, device, group, label)
    if kind == "actor_departed":
        _require_keys(obj, {"phase", "kind", "actor_id"}, {"actor_id"}, where)
        return MissionEvent.actor_departed(obj["actor_id"], label)
    if kind == "role_changed":
        _require_keys(obj, {"phase", "kind", "actor_id", "role", "investigator_kind"},
                      {"actor_id", "role"}, where)
        return MissionEvent.role_changed(obj["actor_id"], _parse_role(obj, where), label)
    if kind == "link_changed":
        _require_keys(obj, {"phase", "kind", "a", "b", "state"}, {"a", "b", "state"}, where)
        if obj["state"] not in ("up", "down"):
            raise ParseError(f"{where}: state must be 'up' or 'down'")
        return MissionEvent.link_changed(obj["a"], obj["b"], obj["state"] == "up", label)
    raise ParseError(f"{where}: unknown event kind {kind!r}")


def parse_scenario(text: str) -> tuple[ApplicationModel, list[MissionEvent], ScenarioConfig]:
    """Parse and validate a scenario document.

    Raises ParseError for syntax and shape problems (with a position where
    available) and ValidationError, carrying the violation code, when the
    described model breaks a fact-base invariant.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError("scenario root must be an object")
    _require_keys(data, {"version", "config", "actors", "links", "events"},
                  {"version", "actors"}, "scenario")
    if data["version"] != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {data['version']!r}")

    config_obj = data.get("config", {})
    _require_keys(config_obj, {"e_min", "policy", "initial_phase"}, set(), "config")
    policy = None
    if "policy" in config_obj:
        try:
            policy = PolicyKind(config_obj["policy"])
        except ValueError:
            raise ParseError(f"config: unknown policy {config_obj['policy']!r}") from None
    config = ScenarioConfig(
        e_min=config_obj.get("e_min"),
        policy=policy,
        initial_phase=config_obj.get("initial_phase", "phase1"),
    )

    actors: list[Actor] = []
    devices: list[Device] = []
    groups: dict[str, list[str]] = {}
    for i, entry in enumerate(data["actors"]):
        actor, device, group = _parse_actor_entry(entry, f"actors[{i}]")
        actors.append(actor)
        devices.append(device)
        groups.setdefault(group, []).append(actor.id)

    links: list[tuple[str, str]] = []
    for i, pair in enumerate(data.get("links", [])):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParseError(f"links[{i}]: expected a pair of ips")
        links.append((pair[0], pair[1]))
        links.append((pair[1], pair[0]))

    model = ApplicationModel(
        actors=tuple(actors),
        devices=tuple(devices),
        groups=tuple(Group(gid, tuple(members)) for gid, members in groups.items()),
        links=tuple(links),
    )
    violations = validate(model)
    if violations:
        raise ValidationError(violations[0].code, violations[0].detail)

    events = [_parse_event(obj, i) for i, obj in enumerate(data.get("events", []))]
    return model, events, config


# -- running -------------------------------------------------------------------

def _engine_config(config: ScenarioConfig, e_min: int | None,
                   policy: str | None) -> EngineConfig:
    # precedence: CLI flag, then scenario config, then defaults
    chosen_e_min = e_min if e_min is not None else config.e_min
    chosen_policy = PolicyKind(policy) if policy else config.policy
    kwargs = {}
    if chosen_e_min is not None:
        kwargs["e_min"] = chosen_e_min
    if chosen_policy is not None:
        kwargs["policy_kind"] = chosen_policy
    return EngineConfig(**kwargs)


def _write_snapshots(out_dir: Path, phase: str, state: EngineState, fmt: str) -> None:
    if fmt in ("graphml", "both"):
        (out_dir / f"collab-{phase}.graphml").write_bytes(to_graphml(state.collab).encode())
        (out_dir / f"mw-{phase}.graphml").write_bytes(to_graphml(state.deployed).encode())
    if fmt in ("dot", "both"):
        (out_dir / f"collab-{phase}.dot").write_bytes(to_dot(state.collab).encode())
        (out_dir / f"mw-{phase}.dot").write_bytes(to_dot(state.deployed).encode())


def _phase_report(phase: str, state: EngineState, plan: MigrationPlan,
                  level: Level) -> PhaseReport:
    return PhaseReport(
        phase=phase,
        level=level.value,
        sessions=sorted(state.collab.session_names()),
        cm_hosts=dict(sorted(state.deployed.cm_hosts().items())),
        plan=plan,
        energies=dict(sorted(state.context.energy.items())),
        degraded=state.degraded,
    )


def _format_table(report: RunReport) -> str:
    headers = ["phase", "level", "sessions", "cm-hosts", "plan", "degraded"]
    rows = []
    for p in report.phases:
        hosts = " ".join(f"{s}={ip}" for s, ip in sorted(p.cm_hosts.items())) or "-"
        rows.append([
            p.phase, p.level, str(len(p.sessions)), hosts,
            p.plan.summary(), "yes" if p.degraded else "no",
        ])
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def run_scenario(text: str, out_dir: Path, *, e_min: int | None = None,
                 policy: str | None = None, fmt: str = "graphml",
                 selector: Selector = select) -> tuple[RunReport, int]:
    """Replay a scenario and write snapshots; returns (report, exit code).

    The selector is the selection procedure the engine uses; the oracle
    subcommand swaps in a cross-checking one.
    """
    model, events, config = parse_scenario(text)
    engine_config = _engine_config(config, e_min, policy)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = RunReport()
    state, trace = initial_state(model, engine_config, selector=selector)
    initial_plan = diff(MiddlewareGraph(), state.deployed)
    _write_snapshots(out_dir, config.initial_phase, state, fmt)
    report.phases.append(_phase_report(config.initial_phase, state, initial_plan, trace.level))

    index = 0
    while index < len(events):
        phase = events[index].label
        before = state.deployed
        levels: list[Level] = []
        while index < len(events) and events[index].label == phase:
            state, _, trace = step(state, events[index], selector=selector)
            levels.append(trace.level)
            index += 1
        phase_plan = diff(before, state.deployed)
        phase_level = max(levels, key=_LEVEL_ORDER.index)
        _write_snapshots(out_dir, phase, state, fmt)
        report.phases.append(_phase_report(phase, state, phase_plan, phase_level))

    return report, (2 if report.any_degraded else 0)


# -- selection cross-check (oracle subcommand) -----------------------------------

def checking_selector(candidates, context, policy, e_min=DEFAULT_ENERGY_FLOOR):
    """Run both selection implementations on identical inputs and compare.

    Returns the staged result when they agree (including agreeing that no
    candidate is feasible); raises on any divergence.
    """
    staged = scanned = None
    staged_exc = scanned_exc = None
    try:
        staged = select(candidates, context, policy, e_min=e_min)
    except NoFeasibleCandidate as exc:
        staged_exc = exc
    try:
        scanned = select_by_scan(candidates, context, policy, e_min=e_min)
    except NoFeasibleCandidate as exc:
        scanned_exc = exc

    if (staged_exc is None) != (scanned_exc is None) or staged != scanned:
        raise RegroupError("selection mismatch: staged and brute-force scan disagree")
    if staged_exc is not None:
        raise staged_exc
    return staged


# -- entry point -------------------------------------------------------------------

def _cmd_run(args: argparse.Namespace, stdout: TextIO) -> int:
    text = Path(args.scenario).read_text()
    selector = checking_selector if args.oracle else select
    report, code = run_scenario(
        text, Path(args.out), e_min=args.e_min, policy=args.policy,
        fmt=args.format, selector=selector,
    )
    if args.report == "machine":
        for phase in report.phases:
            stdout.write(json.dumps(phase.record(), sort_keys=True) + "\n")
    else:
        stdout.write(_format_table(report) + "\n")
    if args.oracle:
        stdout.write("oracle: all selections match the brute-force scan\n")
    return code


def _cmd_validate(args: argparse.Namespace, stdout: TextIO) -> int:
    text = Path(args.scenario).read_text()
    parse_scenario(text)
    stdout.write("ok\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regroup",
        description="Replay disaster-recovery mission scenarios and plan "
                    "group-communication deployments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="replay a scenario and write snapshots")
    run_p.add_argument("scenario", help="scenario file (JSON)")
    run_p.add_argument("--out", required=True, help="output directory for snapshots")
    run_p.add_argument("--policy", choices=["dispersion", "distance"], default=None,
                       help="tie-break policy for adaptation (default: distance)")
    run_p.add_argument("--e-min", type=int, default=None, dest="e_min",
                       help="minimum broker-host energy (default: 60)")
    run_p.add_argument("--format", choices=["graphml", "dot", "both"], default="graphml")
    run_p.add_argument("--report", choices=["table", "machine"], default="table")
    run_p.set_defaults(func=_cmd_run, oracle=False)

    val_p = sub.add_parser("validate", help="parse and validate a scenario file")
    val_p.add_argument("scenario")
    val_p.set_defaults(func=_cmd_validate)

    oracle_p = sub.add_parser(
        "oracle",
        help="replay while cross-checking every selection against the "
             "brute-force reference",
    )
    oracle_p.add_argument("scenario")
    oracle_p.add_argument("--out", required=True)
    oracle_p.add_argument("--e-min", type=int, default=None, dest="e_min")
    oracle_p.set_defaults(func=_cmd_run, oracle=True, policy=None,
                          format="graphml", report="table")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RegroupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
