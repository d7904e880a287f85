"""Event-driven reconfiguration loop.

Each mission event is applied to the fact base, then resolved bottom-up:

  middleware     re-select a broker placement over the existing candidate
                 set (resource-only events such as energy changes);
  collaboration  re-run rule inference and refinement first (events that
                 change actors, roles, or connectivity invalidate the
                 candidate set, so they start here);
  degraded       no feasible deployment exists; the last valid deployment
                 is kept read-only and the cause is recorded.

Selection during adaptation defaults to the Distance policy against the
previous deployment, which minimizes migration churn; the initial deployment
has no predecessor and uses Dispersion. Events are processed strictly
sequentially; states are immutable snapshots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

from .errors import NoFeasibleCandidate, PlanMismatch, UnknownActor
from .graphs import (
    CollaborationGraph,
    MiddlewareGraph,
    MigrationPlan,
    canonical_edges,
    diff,
)
from .model import (
    Actor,
    ApplicationModel,
    Device,
    Role,
    add_actor,
    add_link,
    remove_actor,
    remove_link,
    set_energy,
)
from .refine import refine
from .rules import builtin_rules, infer_collaboration
from .selection import (
    DEFAULT_ENERGY_FLOOR,
    ContextSnapshot,
    Policy,
    PolicyKind,
    select,
)

log = logging.getLogger(__name__)


class EventKind(Enum):
    ENERGY_CHANGED = "energy_changed"
    ACTOR_ARRIVED = "actor_arrived"
    ACTOR_DEPARTED = "actor_departed"
    ROLE_CHANGED = "role_changed"
    LINK_CHANGED = "link_changed"


class Level(Enum):
    INITIAL = "initial"
    MIDDLEWARE = "middleware"
    COLLABORATION = "collaboration"
    DEGRADED = "degraded"


@dataclass(frozen=True)
class MissionEvent:
    """One mission occurrence; payload fields depend on the kind."""

    kind: EventKind
    label: str = ""
    ip: str | None = None
    energy: int | None = None
    actor: Actor | None = None
    device: Device | None = None
    group_id: str | None = None
    actor_id: str | None = None
    role: Role | None = None
    ip_a: str | None = None
    ip_b: str | None = None
    up: bool | None = None

    @classmethod
    def energy_changed(cls, ip: str, energy: int, label: str = "") -> "MissionEvent":
        return cls(EventKind.ENERGY_CHANGED, label, ip=ip, energy=energy)

    @classmethod
    def actor_arrived(cls, actor: Actor, device: Device, group_id: str,
                      label: str = "") -> "MissionEvent":
        return cls(EventKind.ACTOR_ARRIVED, label, actor=actor, device=device,
                   group_id=group_id)

    @classmethod
    def actor_departed(cls, actor_id: str, label: str = "") -> "MissionEvent":
        return cls(EventKind.ACTOR_DEPARTED, label, actor_id=actor_id)

    @classmethod
    def role_changed(cls, actor_id: str, role: Role, label: str = "") -> "MissionEvent":
        return cls(EventKind.ROLE_CHANGED, label, actor_id=actor_id, role=role)

    @classmethod
    def link_changed(cls, ip_a: str, ip_b: str, up: bool, label: str = "") -> "MissionEvent":
        return cls(EventKind.LINK_CHANGED, label, ip_a=ip_a, ip_b=ip_b, up=up)


# Events that can change which flows the rules infer.
_STRUCTURAL = frozenset({
    EventKind.ACTOR_ARRIVED,
    EventKind.ACTOR_DEPARTED,
    EventKind.ROLE_CHANGED,
    EventKind.LINK_CHANGED,
})


@dataclass(frozen=True)
class EngineConfig:
    e_min: int = DEFAULT_ENERGY_FLOOR
    policy_kind: PolicyKind = PolicyKind.DISTANCE
    candidate_limit: int = 10_000
    firing_budget: int = 10_000


@dataclass(frozen=True)
class EngineState:
    model: ApplicationModel
    collab: CollaborationGraph
    deployed: MiddlewareGraph
    context: ContextSnapshot
    config: EngineConfig
    degraded: bool = False
    degraded_reason: str = ""


@dataclass(frozen=True)
class StepTrace:
    """Structured record of how one event was resolved."""

    event_label: str
    level: Level
    rules_refired: bool
    plan_summary: str
    cm_hosts: tuple[tuple[str, str], ...]  # (session, host ip), sorted

    def line(self) -> str:
        hosts = " ".join(f"{s}={ip}" for s, ip in self.cm_hosts)
        return (f"event={self.event_label or '-'} level={self.level.value} "
                f"plan={self.plan_summary} cms=[{hosts}]")


def _snapshot(model: ApplicationModel) -> ContextSnapshot:
    return ContextSnapshot.from_model(model)


def _cm_hosts(graph: MiddlewareGraph) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(graph.cm_hosts().items()))


Selector = Callable[..., MiddlewareGraph]


def initial_state(model: ApplicationModel, config: EngineConfig | None = None,
                  *, selector: Selector = select) -> tuple[EngineState, StepTrace]:
    """Infer, refine, and deploy the first middleware graph.

    No predecessor exists yet, so ties break by Dispersion regardless of the
    configured adaptation policy.
    """
    config = config or EngineConfig()
    collab = infer_collaboration(model, builtin_rules(), firing_budget=config.firing_budget)
    context = _snapshot(model)
    candidates = refine(collab, model, candidate_limit=config.candidate_limit)

    degraded = False
    reason = ""
    if not candidates.candidates:
        deployed = MiddlewareGraph()
    else:
        try:
            deployed = selector(candidates, context, Policy(PolicyKind.DISPERSION),
                                e_min=config.e_min)
        except NoFeasibleCandidate as exc:
            deployed = MiddlewareGraph()
            degraded = True
            reason = str(exc)

    state = EngineState(model, collab, deployed, context, config, degraded, reason)
    plan = diff(MiddlewareGraph(), deployed)
    level = Level.DEGRADED if degraded else Level.INITIAL
    trace = StepTrace("initial", level, rules_refired=True,
                      plan_summary=plan.summary(), cm_hosts=_cm_hosts(deployed))
    log.info(trace.line())
    return state, trace


def _apply_event(model: ApplicationModel, event: MissionEvent) -> ApplicationModel:
    if event.kind is EventKind.ENERGY_CHANGED:
        return set_energy(model, event.ip, event.energy)
    if event.kind is EventKind.ACTOR_ARRIVED:
        updated = add_actor(model, event.actor, event.device, event.group_id)
        # Joining a network in infrastructure mode brings signal with the
        # devices already on that network name.
        for d in model.devices:
            if d.ssid == event.device.ssid and d.ip != event.device.ip:
                updated = add_link(updated, event.device.ip, d.ip)
        return updated
    if event.kind is EventKind.ACTOR_DEPARTED:
        return remove_actor(model, event.actor_id)
    if event.kind is EventKind.ROLE_CHANGED:
        actor = model.actor(event.actor_id)
        if actor is None:
            raise UnknownActor(f"no actor with id {event.actor_id!r}")
        changed = replace(actor, role=event.role)
        actors = tuple(changed if a.id == actor.id else a for a in model.actors)
        return replace(model, actors=actors)
    if event.kind is EventKind.LINK_CHANGED:
        if event.up:
            return add_link(model, event.ip_a, event.ip_b)
        return remove_link(model, event.ip_a, event.ip_b)
    raise ValueError(f"unhandled event kind {event.kind}")


def escalate(state: EngineState, event: MissionEvent, *, selector: Selector = select,
             ) -> tuple[Level, CollaborationGraph, MiddlewareGraph | None, str]:
    """Resolve an already-applied event, climbing levels until one works.

    Returns (level, collaboration graph, deployment or None, failure reason).
    The middleware level only applies to resource-only events: structural
    events invalidate the candidate set, so they start at collaboration.
    """
    config = state.config
    policy = (Policy(config.policy_kind, state.deployed)
              if config.policy_kind is PolicyKind.DISTANCE
              else Policy(PolicyKind.DISPERSION))

    if event.kind not in _STRUCTURAL:
        candidates = refine(state.collab, state.model,
                            candidate_limit=config.candidate_limit)
        if not candidates.candidates:
            return Level.MIDDLEWARE, state.collab, MiddlewareGraph(), ""
        try:
            chosen = selector(candidates, state.context, policy, e_min=config.e_min)
            return Level.MIDDLEWARE, state.collab, chosen, ""
        except NoFeasibleCandidate:
            pass  # climb

    collab = infer_collaboration(state.model, builtin_rules(),
                                 firing_budget=config.firing_budget)
    candidates = refine(collab, state.model, candidate_limit=config.candidate_limit)
    if not candidates.candidates:
        return Level.COLLABORATION, collab, MiddlewareGraph(), ""
    try:
        chosen = selector(candidates, state.context, policy, e_min=config.e_min)
        return Level.COLLABORATION, collab, chosen, ""
    except NoFeasibleCandidate as exc:
        return Level.DEGRADED, collab, None, str(exc)


def step(state: EngineState, event: MissionEvent, *, selector: Selector = select,
         ) -> tuple[EngineState, MigrationPlan, StepTrace]:
    """Apply one mission event and reconfigure.

    Unresolvable events do not raise: they produce a Degraded state that
    keeps the previous deployment read-only, with an empty plan. A later
    event that restores feasibility resolves normally.
    """
    model = _apply_event(state.model, event)
    context = _snapshot(model)
    working = replace(state, model=model, context=context)

    level, collab, deployed, reason = escalate(working, event, selector=selector)

    if level is Level.DEGRADED:
        next_state = replace(working, collab=collab, degraded=True,
                             degraded_reason=reason)
        plan = MigrationPlan()
    else:
        next_state = replace(working, collab=collab, deployed=deployed,
                             degraded=False, degraded_reason="")
        plan = diff(state.deployed, deployed)

    trace = StepTrace(
        event_label=event.label or event.kind.value,
        level=level,
        rules_refired=level is not Level.MIDDLEWARE,
        plan_summary=plan.summary(),
        cm_hosts=_cm_hosts(next_state.deployed),
    )
    log.info(trace.line())
    return next_state, plan, trace


def apply_plan(plan: MigrationPlan, graph: MiddlewareGraph) -> MiddlewareGraph:
    """Execute a migration plan against the graph it was derived from.

    Raises PlanMismatch when the plan does not fit: a removed or moved
    component is absent, a move's origin disagrees, or an added component
    already exists.
    """
    by_id = {v.id: v for v in graph.vertices}

    for v in plan.removed:
        if by_id.pop(v.id, None) is None:
            raise PlanMismatch(f"cannot remove absent component {v.id}")
    for move in plan.moved:
        existing = by_id.get(move.component_id)
        if existing is None:
            raise PlanMismatch(f"cannot move absent component {move.component_id}")
        if existing.ip != move.from_ip:
            raise PlanMismatch(
                f"{move.component_id} is on {existing.ip}, plan expected {move.from_ip}")
        by_id[move.component_id] = replace(existing, ip=move.to_ip)
    for v in plan.added:
        if v.id in by_id:
            raise PlanMismatch(f"cannot add duplicate component {v.id}")
        by_id[v.id] = v

    vertices = tuple(by_id.values())
    return MiddlewareGraph(vertices, canonical_edges(vertices))
