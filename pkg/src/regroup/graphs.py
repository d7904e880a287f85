"""Collaboration-level and middleware-level graphs, plus their serialization.

Both graph kinds are immutable values with canonically sorted contents, so
equal graphs serialize to identical bytes. GraphML is the interchange format;
DOT export exists for eyeballing only.

Identifier scheme (load-bearing: diff() keys on it):
    flow      <session>/<src-ip>-><dst-ip>
    sender    <session>/snd@<ip>          one per node that sources flows
    receiver  <session>/rcv@<dst-ip><-<src-ip>   one per incoming flow
    producer  <session>/ep@<ip>
    consumer  <session>/ec@<dst-ip><-<src-ip>
    broker    <session>/cm                 host ip is an attribute, not id

Because the broker id does not embed its host, a re-hosted broker diffs as a
move rather than a remove+add.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union

from .errors import InvariantError, ParseError, SchemaError
from .model import Violation


class DataType(Enum):
    AUDIO = "audio"
    TEXT = "text"
    VIDEO = "video"


class CollabKind(Enum):
    SENDER = "sender"
    RECEIVER = "receiver"


class MwKind(Enum):
    EP = "EP"  # event producer
    EC = "EC"  # event consumer
    CM = "CM"  # channel manager (per-session broker)


class LinkKind(Enum):
    PUSH = "push"
    PULL = "pull"


@dataclass(frozen=True)
class Flow:
    id: str
    data_type: DataType
    source: str  # sender component id
    destination: str  # receiver component id
    session: str


@dataclass(frozen=True)
class Session:
    name: str
    flow_ids: tuple[str, ...]


@dataclass(frozen=True)
class CollabVertex:
    id: str
    kind: CollabKind
    ip: str
    data_type: DataType
    session: str


@dataclass(frozen=True)
class CollaborationGraph:
    vertices: tuple[CollabVertex, ...] = ()
    flows: tuple[Flow, ...] = ()
    sessions: tuple[Session, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "flows", tuple(sorted(self.flows, key=lambda f: f.id)))
        object.__setattr__(self, "sessions", tuple(sorted(self.sessions, key=lambda s: s.name)))

    def session_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.sessions)


@dataclass(frozen=True)
class MwVertex:
    id: str
    kind: MwKind
    data_type: DataType
    session: str
    ip: str


@dataclass(frozen=True)
class MwEdge:
    source: str
    target: str
    kind: LinkKind


@dataclass(frozen=True)
class MiddlewareGraph:
    vertices: tuple[MwVertex, ...] = ()
    edges: tuple[MwEdge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: (e.source, e.target))))

    def cm_hosts(self) -> dict[str, str]:
        """Session name -> broker host ip."""
        return {v.session: v.ip for v in self.vertices if v.kind is MwKind.CM}


@dataclass(frozen=True)
class Move:
    component_id: str
    from_ip: str
    to_ip: str


@dataclass(frozen=True)
class MigrationPlan:
    """Component-level diff between two middleware graphs."""

    added: tuple[MwVertex, ...] = ()
    removed: tuple[MwVertex, ...] = ()
    moved: tuple[Move, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "added", tuple(sorted(self.added, key=lambda v: v.id)))
        object.__setattr__(self, "removed", tuple(sorted(self.removed, key=lambda v: v.id)))
        object.__setattr__(self, "moved", tuple(sorted(self.moved, key=lambda m: m.component_id)))

    @property
    def empty(self) -> bool:
        return not (self.added or self.removed or self.moved)

    @property
    def size(self) -> int:
        return len(self.added) + len(self.removed) + len(self.moved)

    def summary(self) -> str:
        return f"+{len(self.added)} -{len(self.removed)} ~{len(self.moved)}"


AnyGraph = Union[CollaborationGraph, MiddlewareGraph]


# -- id scheme helpers -------------------------------------------------------

def flow_id(session: str, src_ip: str, dst_ip: str) -> str:
    return f"{session}/{src_ip}->{dst_ip}"


def flow_endpoints(flow: Flow) -> tuple[str, str]:
    """(src ip, dst ip), recovered from the flow id."""
    _, _, tail = flow.id.rpartition("/")
    src, _, dst = tail.partition("->")
    return src, dst


def sender_id(session: str, ip: str) -> str:
    return f"{session}/snd@{ip}"


def receiver_id(session: str, dst_ip: str, src_ip: str) -> str:
    return f"{session}/rcv@{dst_ip}<-{src_ip}"


def _dominant(types: Iterable[DataType]) -> DataType:
    counts = Counter(types)
    return sorted(counts, key=lambda t: (-counts[t], t.value))[0]


def build_collaboration(flows: Iterable[Flow]) -> CollaborationGraph:
    """Synthesize components and sessions from a flow set.

    One sender per node-and-session that sources at least one flow (fan-out
    goes through the session broker), one receiver per incoming flow. The
    whole graph is a pure function of its flows, which is what makes rule
    firing idempotent and order-independent.
    """
    flow_map = {f.id: f for f in flows}
    vertices: dict[str, CollabVertex] = {}
    sourced: dict[tuple[str, str], list[DataType]] = {}
    for f in flow_map.values():
        src, dst = flow_endpoints(f)
        sourced.setdefault((f.session, src), []).append(f.data_type)
        rid = receiver_id(f.session, dst, src)
        vertices[rid] = CollabVertex(rid, CollabKind.RECEIVER, dst, f.data_type, f.session)
    for (session, src), types in sourced.items():
        sid = sender_id(session, src)
        vertices[sid] = CollabVertex(sid, CollabKind.SENDER, src, _dominant(types), session)

    by_session: dict[str, list[str]] = {}
    for f in flow_map.values():
        by_session.setdefault(f.session, []).append(f.id)
    sessions = tuple(Session(name, tuple(sorted(ids))) for name, ids in by_session.items())

    return CollaborationGraph(tuple(vertices.values()), tuple(flow_map.values()), sessions)


def build_middleware(collab: CollaborationGraph, cm_hosts: dict[str, str]) -> MiddlewareGraph:
    """Realize a collaboration graph as an event-based deployment.

    Producers and consumers are pinned to their component's device; one
    broker per session is placed on cm_hosts[session]. Push/pull edges are
    canonical: producer->broker is push, broker->consumer is pull.
    """
    vertices: list[MwVertex] = []
    edges: list[MwEdge] = []
    session_types: dict[str, list[DataType]] = {}

    for f in collab.flows:
        src, dst = flow_endpoints(f)
        session_types.setdefault(f.session, []).append(f.data_type)
        ec = MwVertex(f"{f.session}/ec@{dst}<-{src}", MwKind.EC, f.data_type, f.session, dst)
        vertices.append(ec)
        edges.append(MwEdge(f"{f.session}/cm", ec.id, LinkKind.PULL))

    for v in collab.vertices:
        if v.kind is CollabKind.SENDER:
            ep = MwVertex(f"{v.session}/ep@{v.ip}", MwKind.EP, v.data_type, v.session, v.ip)
            vertices.append(ep)
            edges.append(MwEdge(ep.id, f"{v.session}/cm", LinkKind.PUSH))

    for session in collab.session_names():
        vertices.append(MwVertex(
            f"{session}/cm", MwKind.CM, _dominant(session_types[session]), session,
            cm_hosts[session],
        ))

    return MiddlewareGraph(tuple(vertices), tuple(edges))


def canonical_edges(vertices: Iterable[MwVertex]) -> tuple[MwEdge, ...]:
    """The edge set implied by a middleware vertex set."""
    cms = {v.session: v.id for v in vertices if v.kind is MwKind.CM}
    edges = []
    for v in vertices:
        if v.kind is MwKind.EP:
            edges.append(MwEdge(v.id, cms[v.session], LinkKind.PUSH))
        elif v.kind is MwKind.EC:
            edges.append(MwEdge(cms[v.session], v.id, LinkKind.PULL))
    return tuple(edges)


# -- validation ---------------------------------------------------------------

def validate_collaboration(graph: CollaborationGraph) -> list[Violation]:
    out: list[Violation] = []
    by_id = {v.id: v for v in graph.vertices}
    if len(by_id) != len(graph.vertices):
        out.append(Violation("duplicate-vertex-id", "collaboration vertex ids collide"))

    flow_ids = [f.id for f in graph.flows]
    if len(set(flow_ids)) != len(flow_ids):
        out.append(Violation("duplicate-flow-id", "flow ids collide"))

    for f in graph.flows:
        if f.source == f.destination:
            out.append(Violation("self-flow", f.id))
        src = by_id.get(f.source)
        dst = by_id.get(f.destination)
        if src is None or src.kind is not CollabKind.SENDER:
            out.append(Violation("flow-endpoints", f"{f.id}: source is not a sender"))
        if dst is None or dst.kind is not CollabKind.RECEIVER:
            out.append(Violation("flow-endpoints", f"{f.id}: destination is not a receiver"))

    # Sessions partition the flows.
    claimed: dict[str, str] = {}
    for s in graph.sessions:
        for fid in s.flow_ids:
            if fid in claimed:
                out.append(Violation("session-partition", f"{fid} in {claimed[fid]} and {s.name}"))
            claimed[fid] = s.name
    for f in graph.flows:
        if claimed.get(f.id) != f.session:
            out.append(Violation("session-partition", f"{f.id} not listed under {f.session}"))
    for fid in claimed:
        if fid not in set(flow_ids):
            out.append(Violation("session-partition", f"{fid} listed but absent"))
    return out


def validate_middleware(graph: MiddlewareGraph) -> list[Violation]:
    out: list[Violation] = []
    by_id = {v.id: v for v in graph.vertices}
    if len(by_id) != len(graph.vertices):
        out.append(Violation("duplicate-vertex-id", "middleware vertex ids collide"))

    cm_count: dict[str, int] = {}
    for v in graph.vertices:
        if v.kind is MwKind.CM:
            cm_count[v.session] = cm_count.get(v.session, 0) + 1
    for session, n in sorted(cm_count.items()):
        if n > 1:
            out.append(Violation("one-CM-per-session", f"{session} has {n} brokers"))
    for v in graph.vertices:
        if v.kind is not MwKind.CM and v.session not in cm_count:
            out.append(Violation("one-CM-per-session", f"{v.session} has no broker"))

    if not out and graph.edges != canonical_edges(graph.vertices):
        out.append(Violation("push-pull-shape",
                             "edges differ from the canonical producer->broker->consumer set"))
    return out


def _require_valid(graph: AnyGraph) -> None:
    violations = (validate_collaboration(graph) if isinstance(graph, CollaborationGraph)
                  else validate_middleware(graph))
    if violations:
        first = violations[0]
        raise InvariantError(first.code, first.detail)


# -- GraphML -------------------------------------------------------------------

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

_NODE_KEYS = ("id", "kind", "datatype", "session", "ip")
_EDGE_KEYS = ("id", "kind", "datatype", "session")


def to_graphml(graph: AnyGraph) -> str:
    """Serialize either graph level to GraphML.

    Output is byte-deterministic: keys are declared in a fixed order and
    nodes/edges appear sorted by id. A graph-level `level` attribute records
    which kind of graph this is so parsing needs no guesswork.
    """
    _require_valid(graph)
    is_mw = isinstance(graph, MiddlewareGraph)

    root = ET.Element("graphml", xmlns=_GRAPHML_NS)
    ET.SubElement(root, "key", id="g_level", **{"for": "graph"},
                  **{"attr.name": "level", "attr.type": "string"})
    for name in _NODE_KEYS:
        ET.SubElement(root, "key", id=f"n_{name}", **{"for": "node"},
                      **{"attr.name": name, "attr.type": "string"})
    for name in _EDGE_KEYS:
        ET.SubElement(root, "key", id=f"e_{name}", **{"for": "edge"},
                      **{"attr.name": name, "attr.type": "string"})

    g = ET.SubElement(root, "graph", id="G", edgedefault="directed")
    level = ET.SubElement(g, "data", key="g_level")
    level.text = "middleware" if is_mw else "collaboration"

    for v in graph.vertices:
        node = ET.SubElement(g, "node", id=v.id)
        values = {
            "id": v.id,
            "kind": v.kind.value,
            "datatype": v.data_type.value,
            "session": v.session,
            "ip": v.ip,
        }
        for name in _NODE_KEYS:
            data = ET.SubElement(node, "data", key=f"n_{name}")
            data.text = values[name]

    if is_mw:
        for e in graph.edges:
            edge = ET.SubElement(g, "edge", source=e.source, target=e.target)
            data = ET.SubElement(edge, "data", key="e_kind")
            data.text = e.kind.value
    else:
        for f in graph.flows:
            edge = ET.SubElement(g, "edge", source=f.source, target=f.destination)
            for name, value in (("id", f.id), ("datatype", f.data_type.value),
                                ("session", f.session)):
                data = ET.SubElement(edge, "data", key=f"e_{name}")
                data.text = value

    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _data_map(element: ET.Element) -> dict[str, str]:
    out = {}
    for data in element.findall(f"{{{_GRAPHML_NS}}}data"):
        key = data.get("key", "")
        # strip the for-scope prefix ("n_", "e_", "g_")
        name = key.split("_", 1)[1] if "_" in key else key
        out[name] = data.text or ""
    return out


def from_graphml(text: str) -> AnyGraph:
    """Parse GraphML produced by to_graphml (or schema-compatible input).

    Raises ParseError for malformed XML, SchemaError when a required
    attribute key is missing, and InvariantError when the parsed graph
    violates a structural invariant.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"line {line}, column {col}: {exc.msg if hasattr(exc, 'msg') else exc}") from exc

    graph_el = root.find(f"{{{_GRAPHML_NS}}}graph")
    if graph_el is None:
        raise SchemaError("graph", "no <graph> element")
    level = _data_map(graph_el).get("level")
    if level not in ("collaboration", "middleware"):
        raise SchemaError("level", "graph-level data key absent or unrecognized")

    nodes = []
    for node in graph_el.findall(f"{{{_GRAPHML_NS}}}node"):
        values = _data_map(node)
        for name in _NODE_KEYS:
            if name not in values:
                raise SchemaError(name, f"node {node.get('id')!r}")
        nodes.append(values)

    edges = []
    for edge in graph_el.findall(f"{{{_GRAPHML_NS}}}edge"):
        values = _data_map(edge)
        values["source"] = edge.get("source", "")
        values["target"] = edge.get("target", "")
        edges.append(values)

    try:
        if level == "middleware":
            vertices = tuple(
                MwVertex(v["id"], MwKind(v["kind"]), DataType(v["datatype"]),
                         v["session"], v["ip"])
                for v in nodes
            )
            mw_edges = []
            for e in edges:
                if "kind" not in e:
                    raise SchemaError("kind", f"edge {e['source']}->{e['target']}")
                mw_edges.append(MwEdge(e["source"], e["target"], LinkKind(e["kind"])))
            graph: AnyGraph = MiddlewareGraph(vertices, tuple(mw_edges))
        else:
            vertices = tuple(
                CollabVertex(v["id"], CollabKind(v["kind"]), v["ip"],
                             DataType(v["datatype"]), v["session"])
                for v in nodes
            )
            flows = []
            for e in edges:
                for name in ("id", "datatype", "session"):
                    if name not in e:
                        raise SchemaError(name, f"edge {e['source']}->{e['target']}")
                flows.append(Flow(e["id"], DataType(e["datatype"]), e["source"],
                                  e["target"], e["session"]))
            sessions: dict[str, list[str]] = {}
            for f in flows:
                sessions.setdefault(f.session, []).append(f.id)
            graph = CollaborationGraph(
                vertices, tuple(flows),
                tuple(Session(name, tuple(sorted(ids))) for name, ids in sessions.items()),
            )
    except ValueError as exc:  # unknown enum value
        raise ParseError(str(exc)) from exc

    _require_valid(graph)
    return graph


def to_dot(graph: AnyGraph) -> str:
    """DOT rendering for human inspection; same sorted ordering as GraphML."""
    lines = ["digraph G {"]
    for v in graph.vertices:
        kind = v.kind.value
        lines.append(f'  "{v.id}" [label="{kind}\\n{v.ip}\\n{v.session}"];')
    if isinstance(graph, MiddlewareGraph):
        for e in graph.edges:
            lines.append(f'  "{e.source}" -> "{e.target}" [label="{e.kind.value}"];')
    else:
        for f in graph.flows:
            lines.append(f'  "{f.source}" -> "{f.destination}" [label="{f.data_type.value}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- diffing --------------------------------------------------------------------

def diff(current: MiddlewareGraph, next_graph: MiddlewareGraph) -> MigrationPlan:
    """Component-level migration plan turning `current` into `next_graph`.

    A vertex present in both graphs under the same id counts as moved when
    only its host ip changed; any other attribute change is treated as a
    removal plus an addition.
    """
    cur = {v.id: v for v in current.vertices}
    nxt = {v.id: v for v in next_graph.vertices}

    added = [v for vid, v in nxt.items() if vid not in cur]
    removed = [v for vid, v in cur.items() if vid not in nxt]
    moved = []
    for vid in cur.keys() & nxt.keys():
        a, b = cur[vid], nxt[vid]
        if a == b:
            continue
        if (a.kind, a.data_type, a.session) == (b.kind, b.data_type, b.session):
            moved.append(Move(vid, a.ip, b.ip))
        else:
            removed.append(a)
            added.append(b)
    return MigrationPlan(tuple(added), tuple(removed), tuple(moved))
