"""Forward-chaining production rules over the mission fact base.

A rule body is a conjunction of predicates drawn from a fixed vocabulary,
matched against the fact base by a nested-loop join. Rule heads assert data
flows into the collaboration graph; each `creates` variable materializes one
flow with a deterministic id, so firing is idempotent and the fixpoint is
independent of rule order. Negation and retraction are deliberately absent:
reconfiguration rebuilds the graph from scratch instead of retracting facts,
which keeps inference monotone and confluent.

The built-in rule set wires up audio flows between:
  * a fireman coordinator and each reachable fireman-side investigator,
  * a robot coordinator and each reachable robot-side investigator,
  * a supervisor and the coordinators of its group.
"Reachable" means same network name (ssid), a radio signal link, and shared
group membership; the supervisor pairs require only roles and a shared group
since the command level is wired through interconnected routers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import InvalidModel, MalformedRule, NonTermination
from .graphs import (
    CollaborationGraph,
    DataType,
    Flow,
    build_collaboration,
    flow_id,
    receiver_id,
    sender_id,
)
from .model import Actor, ApplicationModel, Device, Group, InvestigatorKind, RoleKind, validate


@dataclass(frozen=True)
class RoleRef:
    """The role played by one actor, as a first-class entity."""

    actor_id: str
    kind: RoleKind
    investigator_kind: InvestigatorKind | None = None


@dataclass(frozen=True)
class SessionRef:
    """A session entity, keyed by the hub actor that anchors it."""

    name: str
    hub_actor_id: str


Entity = Union[Actor, Device, Group, RoleRef, SessionRef]
Binding = dict[str, Entity]


@dataclass(frozen=True)
class Predicate:
    name: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"


def pred(name: str, *args: str) -> Predicate:
    return Predicate(name, args)


@dataclass(frozen=True)
class Rule:
    id: str
    body: tuple[Predicate, ...]
    creates: tuple[str, ...] = ()
    head: tuple[Predicate, ...] = ()


# Fixed vocabulary: class predicates are unary, properties binary.
_BODY_ARITY = {
    "Investigator": 1,
    "FiremanCoordinator": 1,
    "RobotCoordinator": 1,
    "Supervisor": 1,
    "Node": 1,
    "Device": 1,
    "hasRole": 2,
    "hasHostingDevice": 2,
    "hasSameSSID": 2,
    "hasSignalWith": 2,
    "belongsToSameGroup": 2,
    "belongsToGroup": 2,
    "differentFrom": 2,
    "hasFiremanCordInvSession": 2,
    "hasRobotCordInvSession": 2,
    "hasSupCoordSession": 2,
}
_HEAD_ARITY = {
    "AudioFlow": 1,
    "hasSource": 2,
    "hasDestination": 2,
    "belongsToSession": 2,
}
VOCABULARY = {**_BODY_ARITY, **_HEAD_ARITY}

# Session families: head predicate -> (session base name, hub role).
_SESSION_FAMILIES = {
    "hasFiremanCordInvSession": ("Firecoor_inv_session", RoleKind.FIREMAN_COORDINATOR),
    "hasRobotCordInvSession": ("Robotcoor_inv_session", RoleKind.ROBOT_COORDINATOR),
    "hasSupCoordSession": ("sup_coor_session", RoleKind.SUPERVISOR),
}


def _is_var(term: str) -> bool:
    return term.startswith("?")


def check_rule(rule: Rule) -> None:
    """Raise MalformedRule on any arity, vocabulary, or binding defect."""
    body_vars: set[str] = set()
    for p in rule.body:
        if p.name not in _BODY_ARITY:
            if p.name in _HEAD_ARITY:
                raise MalformedRule(f"{rule.id}: {p.name} is assertion-only, not matchable")
            raise MalformedRule(f"{rule.id}: unknown predicate {p.name!r}")
        if len(p.args) != _BODY_ARITY[p.name]:
            raise MalformedRule(f"{rule.id}: {p} has wrong arity")
        body_vars.update(a for a in p.args if _is_var(a))

    creates = set(rule.creates)
    if creates & body_vars:
        raise MalformedRule(f"{rule.id}: creates variables may appear only in the head")
    for var in rule.creates:
        if not _is_var(var):
            raise MalformedRule(f"{rule.id}: creates entry {var!r} is not a variable")

    per_create: dict[str, list[str]] = {v: [] for v in rule.creates}
    for p in rule.head:
        if p.name not in _HEAD_ARITY:
            raise MalformedRule(f"{rule.id}: {p.name!r} cannot appear in a head")
        if len(p.args) != _HEAD_ARITY[p.name]:
            raise MalformedRule(f"{rule.id}: {p} has wrong arity")
        subject = p.args[0]
        if subject not in per_create:
            raise MalformedRule(f"{rule.id}: head subject {subject!r} is not a creates variable")
        per_create[subject].append(p.name)
        for term in p.args[1:]:
            if _is_var(term) and term not in body_vars:
                raise MalformedRule(f"{rule.id}: head variable {term!r} is unbound")

    for var, names in per_create.items():
        expected = ["AudioFlow", "belongsToSession", "hasDestination", "hasSource"]
        if sorted(names) != expected:
            raise MalformedRule(
                f"{rule.id}: {var} must be described by exactly "
                f"AudioFlow/hasSource/hasDestination/belongsToSession"
            )


def _entity_key(entity: Entity) -> str:
    if isinstance(entity, Actor):
        return f"actor:{entity.id}"
    if isinstance(entity, Device):
        return f"device:{entity.ip}"
    if isinstance(entity, Group):
        return f"group:{entity.id}"
    if isinstance(entity, RoleRef):
        return f"role:{entity.actor_id}"
    return f"session:{entity.name}"


def _session_name(model: ApplicationModel, base: str, hub: Actor) -> str:
    """Base name when the hub role is unique in the model; otherwise the
    hub's device ip disambiguates. Deterministic for a given model."""
    peers = [a for a in model.actors if a.role.kind is hub.role.kind]
    if len(peers) == 1:
        return base
    return f"{base}@{hub.device_ip}"


def _relation(name: str, model: ApplicationModel) -> list[tuple[Entity, ...]]:
    """Ground relation for one predicate, in deterministic order."""
    actors = model.actors

    def role_ref(a: Actor) -> RoleRef:
        return RoleRef(a.id, a.role.kind, a.role.investigator_kind)

    if name in ("Investigator", "FiremanCoordinator", "RobotCoordinator", "Supervisor"):
        kind = {
            "Investigator": RoleKind.INVESTIGATOR,
            "FiremanCoordinator": RoleKind.FIREMAN_COORDINATOR,
            "RobotCoordinator": RoleKind.ROBOT_COORDINATOR,
            "Supervisor": RoleKind.SUPERVISOR,
        }[name]
        return [(role_ref(a),) for a in actors if a.role.kind is kind]
    if name == "Node":
        return [(a,) for a in actors]
    if name == "Device":
        return [(d,) for d in model.devices]
    if name == "hasRole":
        return [(a, role_ref(a)) for a in actors]
    if name == "hasHostingDevice":
        out = []
        for a in actors:
            device = model.device(a.device_ip)
            if device is not None:
                out.append((a, device))
        return out
    if name == "hasSameSSID":
        return [(d1, d2) for d1 in model.devices for d2 in model.devices if d1.ssid == d2.ssid]
    if name == "hasSignalWith":
        out = []
        for ip_a, ip_b in model.links:
            da, db = model.device(ip_a), model.device(ip_b)
            if da is not None and db is not None:
                out.append((da, db))
        return out
    if name == "belongsToSameGroup":
        return [
            (role_ref(a), role_ref(b))
            for a in actors for b in actors
            if a.group_id == b.group_id
        ]
    if name == "belongsToGroup":
        out = []
        for a in actors:
            group = model.group(a.group_id)
            if group is not None:
                out.append((role_ref(a), group))
        return out
    if name == "differentFrom":
        refs = [role_ref(a) for a in actors]
        pairs: list[tuple[Entity, ...]] = [
            (x, y) for x in refs for y in refs if x.actor_id != y.actor_id
        ]
        pairs += [(a, b) for a in actors for b in actors if a.id != b.id]
        pairs += [(d1, d2) for d1 in model.devices for d2 in model.devices if d1.ip != d2.ip]
        return pairs
    if name in _SESSION_FAMILIES:
        base, hub_kind = _SESSION_FAMILIES[name]
        return [
            (a, SessionRef(_session_name(model, base, a), a.id))
            for a in actors if a.role.kind is hub_kind
        ]
    raise MalformedRule(f"unknown predicate {name!r}")


def _unify(binding: Binding, args: tuple[str, ...], row: tuple[Entity, ...]) -> Binding | None:
    out = dict(binding)
    for term, entity in zip(args, row):
        if _is_var(term):
            bound = out.get(term)
            if bound is None:
                out[term] = entity
            elif _entity_key(bound) != _entity_key(entity):
                return None
        elif _entity_key(entity) != term:
            return None
    return out


def match(rule: Rule, model: ApplicationModel) -> list[Binding]:
    """All bindings under which every body predicate holds.

    The result is deterministic: bindings are deduplicated and sorted by
    their bound entity keys.
    """
    check_rule(rule)
    bindings: list[Binding] = [{}]
    for p in rule.body:
        rows = _relation(p.name, model)
        extended: list[Binding] = []
        for binding in bindings:
            for row in rows:
                candidate = _unify(binding, p.args, row)
                if candidate is not None:
                    extended.append(candidate)
        bindings = extended
        if not bindings:
            return []

    unique: dict[tuple[tuple[str, str], ...], Binding] = {}
    for binding in bindings:
        key = tuple(sorted((var, _entity_key(e)) for var, e in binding.items()))
        unique[key] = binding
    return [unique[key] for key in sorted(unique)]


def fire(rule: Rule, binding: Binding, graph: CollaborationGraph) -> CollaborationGraph:
    """Assert the rule head under one binding.

    Each creates-variable becomes a flow whose id is derived from its session
    and endpoint devices, so refiring the same binding changes nothing.
    """
    check_rule(rule)
    spec: dict[str, dict[str, Entity]] = {v: {} for v in rule.creates}
    for p in rule.head:
        if p.name == "AudioFlow":
            continue
        target = binding.get(p.args[1]) if _is_var(p.args[1]) else None
        if target is None:
            raise MalformedRule(f"{rule.id}: {p.args[1]!r} is not bound")
        spec[p.args[0]][p.name] = target

    flows = {f.id: f for f in graph.flows}
    for var in rule.creates:
        parts = spec[var]
        src = parts.get("hasSource")
        dst = parts.get("hasDestination")
        session = parts.get("belongsToSession")
        if not (isinstance(src, Actor) and isinstance(dst, Actor)
                and isinstance(session, SessionRef)):
            raise MalformedRule(f"{rule.id}: {var} endpoints must be nodes and a session")
        fid = flow_id(session.name, src.device_ip, dst.device_ip)
        flows[fid] = Flow(
            id=fid,
            data_type=DataType.AUDIO,
            source=sender_id(session.name, src.device_ip),
            destination=receiver_id(session.name, dst.device_ip, src.device_ip),
            session=session.name,
        )
    return build_collaboration(flows.values())


def builtin_rules() -> tuple[Rule, ...]:
    """The three built-in rule families (the supervisor family needs one
    rule per coordinator kind because class predicates are fixed)."""

    def coordinator_investigator(rule_id: str, coordinator: str, session_pred: str) -> Rule:
        return Rule(
            id=rule_id,
            body=(
                pred("Investigator", "?inv"),
                pred("Node", "?ninv"),
                pred("Device", "?dinv"),
                pred("hasRole", "?ninv", "?inv"),
                pred("hasHostingDevice", "?ninv", "?dinv"),
                pred(coordinator, "?coo"),
                pred("Node", "?ncoo"),
                pred("hasRole", "?ncoo", "?coo"),
                pred("Device", "?dcoo"),
                pred("hasHostingDevice", "?ncoo", "?dcoo"),
                pred("hasSameSSID", "?dinv", "?dcoo"),
                pred("hasSignalWith", "?dinv", "?dcoo"),
                pred("belongsToSameGroup", "?inv", "?coo"),
                pred("differentFrom", "?inv", "?coo"),
                pred("belongsToGroup", "?coo", "?t"),
                pred(session_pred, "?ncoo", "?s"),
            ),
            creates=("?af1", "?af2"),
            head=(
                pred("AudioFlow", "?af1"),
                pred("hasSource", "?af1", "?ncoo"),
                pred("hasDestination", "?af1", "?ninv"),
                pred("belongsToSession", "?af1", "?s"),
                pred("AudioFlow", "?af2"),
                pred("hasSource", "?af2", "?ninv"),
                pred("hasDestination", "?af2", "?ncoo"),
                pred("belongsToSession", "?af2", "?s"),
            ),
        )

    def supervisor_coordinator(rule_id: str, coordinator: str) -> Rule:
        # Command-level pairs: roles plus shared group, no radio constraints.
        return Rule(
            id=rule_id,
            body=(
                pred(coordinator, "?coo"),
                pred("Node", "?ncoo"),
                pred("hasRole", "?ncoo", "?coo"),
                pred("Supervisor", "?sup"),
                pred("Node", "?nsup"),
                pred("hasRole", "?nsup", "?sup"),
                pred("belongsToSameGroup", "?coo", "?sup"),
                pred("differentFrom", "?coo", "?sup"),
                pred("belongsToGroup", "?sup", "?t"),
                pred("hasSupCoordSession", "?nsup", "?s"),
            ),
            creates=("?af1", "?af2"),
            head=(
                pred("AudioFlow", "?af1"),
                pred("hasSource", "?af1", "?nsup"),
                pred("hasDestination", "?af1", "?ncoo"),
                pred("belongsToSession", "?af1", "?s"),
                pred("AudioFlow", "?af2"),
                pred("hasSource", "?af2", "?ncoo"),
                pred("hasDestination", "?af2", "?nsup"),
                pred("belongsToSession", "?af2", "?s"),
            ),
        )

    return (
        coordinator_investigator(
            "fireman-coordinator-investigator-audio", "FiremanCoordinator",
            "hasFiremanCordInvSession"),
        coordinator_investigator(
            "robot-coordinator-investigator-audio", "RobotCoordinator",
            "hasRobotCordInvSession"),
        supervisor_coordinator("supervisor-fireman-coordinator-audio", "FiremanCoordinator"),
        supervisor_coordinator("supervisor-robot-coordinator-audio", "RobotCoordinator"),
    )


def infer_collaboration(model: ApplicationModel, rules: tuple[Rule, ...] | None = None,
                        *, firing_budget: int = 10_000) -> CollaborationGraph:
    """Run all rules to fixpoint and return the resulting collaboration graph.

    Raises InvalidModel when the fact base does not validate, and
    NonTermination when the firing budget is exhausted before the fixpoint.
    """
    violations = validate(model)
    if violations:
        raise InvalidModel("; ".join(str(v) for v in violations))
    if rules is None:
        rules = builtin_rules()

    graph = build_collaboration(())
    firings = 0
    changed = True
    while changed:
        changed = False
        for rule in rules:
            for binding in match(rule, model):
                updated = fire(rule, binding, graph)
                if updated != graph:
                    graph = updated
                    changed = True
                    firings += 1
                    if firings > firing_budget:
                        raise NonTermination(f"no fixpoint after {firing_budget} firings")
    return graph
