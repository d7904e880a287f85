import random

import pytest

from conftest import FIREMAN1_IP, FIREMAN2_IP, build_phase1_model, robot_arrival
from generators import random_selection_instance
from regroup.errors import InvariantError, ParseError, SchemaError
from regroup.graphs import (
    CollaborationGraph,
    DataType,
    Flow,
    MiddlewareGraph,
    MwKind,
    MwVertex,
    build_collaboration,
    build_middleware,
    canonical_edges,
    diff,
    from_graphml,
    to_dot,
    to_graphml,
    validate_middleware,
)
from regroup.model import add_actor, add_link, set_energy
from regroup.refine import refine
from regroup.rules import infer_collaboration
from regroup.selection import ContextSnapshot, Policy, PolicyKind, select


def _selected(model, current=None):
    collab = infer_collaboration(model)
    candidates = refine(collab, model)
    policy = Policy(PolicyKind.DISTANCE, current) if current else Policy(PolicyKind.DISPERSION)
    return select(candidates, ContextSnapshot.from_model(model), policy)


@pytest.fixture
def phase1_selected(phase1_model):
    return _selected(phase1_model)


@pytest.fixture
def phase2_selected(phase1_model, phase1_selected):
    model = set_energy(phase1_model, FIREMAN1_IP, 50)
    return _selected(model, current=phase1_selected)


def test_phase1_middleware_graphml_counts(phase1_selected):
    text = to_graphml(phase1_selected)
    assert text.count("<node ") == 16
    assert text.count("<edge ") == 14
    assert text.count(">EP<") == 6
    assert text.count(">EC<") == 8
    assert text.count(">CM<") == 2


def test_empty_graphs_serialize(phase1_selected):
    for graph in (MiddlewareGraph(), CollaborationGraph()):
        text = to_graphml(graph)
        assert "<node" not in text
        assert from_graphml(text) == graph


def test_graphml_round_trip(phase1_model, phase1_selected):
    collab = infer_collaboration(phase1_model)
    for graph in (collab, phase1_selected):
        assert from_graphml(to_graphml(graph)) == graph


def test_graphml_is_byte_deterministic(phase1_selected):
    assert to_graphml(phase1_selected) == to_graphml(phase1_selected)


def test_graphml_injective_on_random_graphs():
    rng = random.Random(5150)
    seen = {}
    for _ in range(40):
        candidates, _, _ = random_selection_instance(rng)
        for graph in candidates.candidates[:3]:
            text = to_graphml(graph)
            if text in seen:
                assert seen[text] == graph
            seen[text] = graph
    texts = list(seen)
    assert len(set(texts)) == len(texts)


def test_missing_session_key_is_schema_error(phase1_selected):
    text = to_graphml(phase1_selected)
    broken = text.replace('<data key="n_session">sup_coor_session</data>', "", 1)
    with pytest.raises(SchemaError) as err:
        from_graphml(broken)
    assert err.value.key == "session"


def test_two_brokers_for_one_session_rejected():
    vertices = (
        MwVertex("s/cm", MwKind.CM, DataType.AUDIO, "s", "10.0.0.1"),
        MwVertex("s/cm2", MwKind.CM, DataType.AUDIO, "s", "10.0.0.2"),
    )
    graph = MiddlewareGraph(vertices, canonical_edges(vertices))
    assert "one-CM-per-session" in [v.code for v in validate_middleware(graph)]
    with pytest.raises(InvariantError) as err:
        to_graphml(graph)
    assert err.value.code == "one-CM-per-session"


def test_malformed_xml_is_parse_error():
    with pytest.raises(ParseError) as err:
        from_graphml("<graphml><graph>")
    assert "line" in str(err.value)


def test_noncanonical_edges_rejected():
    vertices = (
        MwVertex("s/cm", MwKind.CM, DataType.AUDIO, "s", "10.0.0.1"),
        MwVertex("s/ep@10.0.0.2", MwKind.EP, DataType.AUDIO, "s", "10.0.0.2"),
    )
    graph = MiddlewareGraph(vertices, ())  # missing the push edge
    assert "push-pull-shape" in [v.code for v in validate_middleware(graph)]


def test_diff_phase1_to_phase2_is_one_move(phase1_selected, phase2_selected):
    plan = diff(phase1_selected, phase2_selected)
    assert plan.added == ()
    assert plan.removed == ()
    assert [(m.component_id, m.from_ip, m.to_ip) for m in plan.moved] == [
        ("Firecoor_inv_session/cm", FIREMAN1_IP, FIREMAN2_IP),
    ]


def test_diff_identity_is_empty(phase1_selected):
    assert diff(phase1_selected, phase1_selected).empty


def test_diff_phase2_to_phase3_adds_robot_session(phase1_model, phase2_selected):
    actor, device, group = robot_arrival()
    model = set_energy(phase1_model, FIREMAN1_IP, 50)
    model = add_actor(model, actor, device, group)
    model = add_link(model, device.ip, "10.193.255.200")
    phase3 = _selected(model, current=phase2_selected)
    plan = diff(phase2_selected, phase3)
    assert plan.moved == ()
    assert plan.removed == ()
    kinds = sorted(v.kind.value for v in plan.added)
    assert kinds == ["CM", "EC", "EC", "EP", "EP"]
    assert all(v.session == "Robotcoor_inv_session" for v in plan.added)


def test_dominant_type_for_mixed_sessions():
    flows = [
        Flow("s/a->b", DataType.VIDEO, "s/snd@a", "s/rcv@b<-a", "s"),
        Flow("s/b->a", DataType.AUDIO, "s/snd@b", "s/rcv@a<-b", "s"),
        Flow("s/a->c", DataType.VIDEO, "s/snd@a", "s/rcv@c<-a", "s"),
    ]
    collab = build_collaboration(flows)
    mw = build_middleware(collab, {"s": "a"})
    broker = next(v for v in mw.vertices if v.kind is MwKind.CM)
    assert broker.data_type is DataType.VIDEO


def test_dot_output_is_sorted_and_stable(phase1_selected):
    dot = to_dot(phase1_selected)
    assert dot == to_dot(phase1_selected)
    assert dot.startswith("digraph G {")
    assert '"Firecoor_inv_session/cm"' in dot
