"""Collaboration-to-middleware refinement.

Senders become event producers and receivers become event consumers, both
pinned to their component's device. Each session gets one broker, and every
device that participates in a session is a legal broker host, so the
candidate set is the cross-product of per-session host choices. Candidates
that are infeasible under the current resource context are not filtered
here; scoring and discarding is the selection stage's job.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import CandidateLimitExceeded, InvariantError, UnresolvedDevice
from .graphs import (
    CollaborationGraph,
    MiddlewareGraph,
    Session,
    build_middleware,
    flow_endpoints,
    validate_collaboration,
)
from .model import ApplicationModel


@dataclass(frozen=True)
class CandidateSet:
    """All candidate deployments derived from one collaboration graph.

    Ordering is deterministic: sessions sorted by name, host choices sorted
    by ip, candidates enumerated lexicographically over that grid. The final
    tie-break in selection relies on this order.
    """

    candidates: tuple[MiddlewareGraph, ...]
    source: CollaborationGraph

    def __len__(self) -> int:
        return len(self.candidates)


def cm_host_choices(session: Session, collab: CollaborationGraph) -> list[str]:
    """Sorted, deduplicated ips of the devices participating in a session."""
    flows = {f.id: f for f in collab.flows}
    ips: set[str] = set()
    for fid in session.flow_ids:
        flow = flows.get(fid)
        if flow is None:
            raise InvariantError("session-partition", f"{fid} not in graph")
        src, dst = flow_endpoints(flow)
        ips.update((src, dst))
    return sorted(ips)


def refine(collab: CollaborationGraph, model: ApplicationModel,
           *, candidate_limit: int = 10_000) -> CandidateSet:
    """Enumerate every candidate deployment of a collaboration graph.

    An empty collaboration graph yields an empty candidate set. Producer and
    consumer placements are identical across candidates; only broker hosts
    vary. Raises UnresolvedDevice when a component sits on an ip the model
    does not know, and CandidateLimitExceeded past the enumeration guard.
    """
    violations = validate_collaboration(collab)
    if violations:
        raise InvariantError(violations[0].code, violations[0].detail)
    known = {d.ip for d in model.devices}
    for v in collab.vertices:
        if v.ip not in known:
            raise UnresolvedDevice(f"component {v.id} on unknown device {v.ip}")

    if not collab.sessions:
        return CandidateSet((), collab)

    names = [s.name for s in collab.sessions]
    choices = [cm_host_choices(s, collab) for s in collab.sessions]

    total = 1
    for hosts in choices:
        total *= len(hosts)
    if total > candidate_limit:
        raise CandidateLimitExceeded(f"{total} candidates exceed the limit of {candidate_limit}")

    candidates = tuple(
        build_middleware(collab, dict(zip(names, combo)))
        for combo in itertools.product(*choices)
    )
    return CandidateSet(candidates, collab)
