"""Deployment selection: context scoring with discard, then policy tie-breaks.

A candidate is infeasible (score -1) when a broker sits on a host below the
energy floor or when one device would run more than one broker; otherwise it
scores the minimum broker-host energy, so the best candidate keeps its most
fragile broker as healthy as possible. Producer/consumer hosts never affect
the score: their placement is forced, so they cannot discriminate candidates.

Ties are broken by the configured policy -- Dispersion prefers deployments
spread across more distinct devices, Distance prefers the cheapest migration
from the currently deployed graph -- and any remaining tie falls back to the
candidate set's deterministic order.

select_by_scan is a deliberately naive second implementation of the same
procedure (quadratic all-pairs comparisons, no shortcuts). It exists as a
cross-check oracle for tests and the CLI's `oracle` subcommand; keep it
independent of select().
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import MissingContext, MissingCurrent, NoFeasibleCandidate
from .graphs import MiddlewareGraph, MwKind, diff
from .model import ApplicationModel
from .refine import CandidateSet

DEFAULT_ENERGY_FLOOR = 60

INFEASIBLE = -1


class PolicyKind(Enum):
    DISPERSION = "dispersion"
    DISTANCE = "distance"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    current: MiddlewareGraph | None = None  # required for Distance


@dataclass(frozen=True)
class ContextSnapshot:
    """Current resource attributes per device.

    Only energy is populated today; the bandwidth and memory slots are
    reserved so scoring can grow more attributes without a schema change.
    """

    energy: dict[str, int] = field(default_factory=dict)
    bandwidth: dict[str, int] = field(default_factory=dict)
    memory: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: ApplicationModel) -> "ContextSnapshot":
        return cls(energy={d.ip: d.energy for d in model.devices})


def context_adaptation(candidate: MiddlewareGraph, context: ContextSnapshot,
                       e_min: int = DEFAULT_ENERGY_FLOOR) -> int:
    """Score one candidate against the context; -1 means not deployable.

    Raises MissingContext when any component host is absent from the
    snapshot (brokers and pinned components alike: a dead host invalidates
    the whole reading, even if it cannot change the score today).
    """
    for v in candidate.vertices:
        if v.ip not in context.energy:
            raise MissingContext(f"no energy reading for host {v.ip}")

    broker_hosts = [v.ip for v in candidate.vertices if v.kind is MwKind.CM]
    if len(set(broker_hosts)) != len(broker_hosts):
        return INFEASIBLE
    energies = [context.energy[ip] for ip in broker_hosts]
    if any(e < e_min for e in energies):
        return INFEASIBLE
    return min(energies) if energies else 100


def dispersion(candidate: MiddlewareGraph) -> int:
    """Number of distinct devices hosting at least one component."""
    return len({v.ip for v in candidate.vertices})


def relative_cost(current: MiddlewareGraph, candidate: MiddlewareGraph) -> int:
    """Migration cost from current to candidate: components added, removed,
    or moved."""
    return diff(current, candidate).size


def select(candidates: CandidateSet, context: ContextSnapshot, policy: Policy,
           e_min: int = DEFAULT_ENERGY_FLOOR) -> MiddlewareGraph:
    """Pick the deployment to run, per the staged selection procedure.

    Stage 1 keeps the feasible candidates with maximal score; a unique
    survivor wins outright. Stage 2 applies the policy tie-break, and any
    remaining tie resolves to the earliest candidate in enumeration order.
    Raises NoFeasibleCandidate when every candidate scores -1.
    """
    pool = candidates.candidates
    if not pool:
        raise NoFeasibleCandidate("candidate set is empty")
    if policy.kind is PolicyKind.DISTANCE and policy.current is None:
        raise MissingCurrent("Distance policy needs the currently deployed graph")

    scored = [(context_adaptation(c, context, e_min), i) for i, c in enumerate(pool)]
    best = max(score for score, _ in scored)
    if best == INFEASIBLE:
        raise NoFeasibleCandidate(f"all {len(pool)} candidates scored -1")
    stage1 = [i for score, i in scored if score == best]
    if len(stage1) == 1:
        return pool[stage1[0]]

    if policy.kind is PolicyKind.DISPERSION:
        spread = {i: dispersion(pool[i]) for i in stage1}
        target = max(spread.values())
        stage2 = [i for i in stage1 if spread[i] == target]
    else:
        cost = {i: relative_cost(policy.current, pool[i]) for i in stage1}
        target = min(cost.values())
        stage2 = [i for i in stage1 if cost[i] == target]

    return pool[min(stage2)]


def select_by_scan(candidates: CandidateSet, context: ContextSnapshot, policy: Policy,
                   e_min: int = DEFAULT_ENERGY_FLOOR) -> MiddlewareGraph:
    """Brute-force reference selection; see module docstring.

    Every set is built by literal all-pairs comparison scans rather than a
    running maximum, mirroring the procedure's universally-quantified
    definitions one line at a time.
    """
    pool = list(candidates.candidates)
    if not pool:
        raise NoFeasibleCandidate("candidate set is empty")
    if policy.kind is PolicyKind.DISTANCE and policy.current is None:
        raise MissingCurrent("Distance policy needs the currently deployed graph")

    def score(c: MiddlewareGraph) -> int:
        return context_adaptation(c, context, e_min)

    feasible = [c for c in pool if score(c) >= 0]
    if not feasible:
        raise NoFeasibleCandidate(f"all {len(pool)} candidates scored -1")

    stage1 = [c for c in feasible if all(score(c) >= score(x) for x in feasible)]
    if len(stage1) == 1:
        return stage1[0]

    if policy.kind is PolicyKind.DISPERSION:
        stage2 = [c for c in stage1 if all(dispersion(c) >= dispersion(x) for x in stage1)]
    else:
        stage2 = [
            c for c in stage1
            if all(relative_cost(policy.current, c) <= relative_cost(policy.current, x)
                   for x in stage1)
        ]

    if len(stage2) == 1:
        return stage2[0]
    for c in pool:  # "any" survivor, made deterministic: first in candidate order
        if c in stage2:
            return c
    raise AssertionError("stage-2 set cannot be empty")
