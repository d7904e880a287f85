"""Rule-driven reconfiguration of group-communication topologies for
disaster-recovery missions.

The pipeline has three model levels: the mission fact base (actors, roles,
devices, groups, radio links), the collaboration graph inferred from it by
production rules (sessions, senders, receivers, typed flows), and the
middleware graph (event producers/consumers plus one broker per session).
Refinement enumerates every broker placement, selection scores them against
the resource context, and the adaptation loop migrates deployments as
mission events arrive.
"""

from .adaptation import (
    EngineConfig,
    EngineState,
    EventKind,
    Level,
    MissionEvent,
    StepTrace,
    apply_plan,
    escalate,
    initial_state,
    step,
)
from .graphs import (
    CollaborationGraph,
    CollabVertex,
    DataType,
    Flow,
    LinkKind,
    MiddlewareGraph,
    MigrationPlan,
    Move,
    MwEdge,
    MwKind,
    MwVertex,
    Session,
    build_collaboration,
    build_middleware,
    diff,
    from_graphml,
    to_dot,
    to_graphml,
)
from .model import (
    Actor,
    ApplicationModel,
    Device,
    Group,
    InvestigatorKind,
    Role,
    RoleKind,
    Violation,
    add_actor,
    add_link,
    remove_actor,
    remove_link,
    set_energy,
    validate,
)
from .refine import CandidateSet, cm_host_choices, refine
from .rules import Binding, Predicate, Rule, builtin_rules, fire, infer_collaboration, match
from .selection import (
    ContextSnapshot,
    Policy,
    PolicyKind,
    context_adaptation,
    dispersion,
    relative_cost,
    select,
    select_by_scan,
)

__version__ = "0.1.0"
