import random

import pytest

from conftest import FIRECOORD_IP, FIREMAN1_IP, FIREMAN2_IP, build_phase1_model, robot_arrival
from generators import (
    coordinator_family_ip_flows,
    coordinator_investigator_pairs,
    random_model,
)
from regroup.errors import MalformedRule, NonTermination
from regroup.graphs import CollabKind, DataType, build_collaboration, flow_endpoints
from regroup.model import ApplicationModel, add_actor, add_link, remove_link, validate
from regroup.rules import Rule, builtin_rules, fire, infer_collaboration, match, pred

FIRE_RULE = builtin_rules()[0]  # fireman coordinator <-> investigators


def test_match_fireman_rule_two_bindings(phase1_model):
    bindings = match(FIRE_RULE, phase1_model)
    assert len(bindings) == 2
    investigators = sorted(b["?ninv"].id for b in bindings)
    assert investigators == ["fireman1", "fireman2"]
    assert all(b["?ncoo"].id == "firecoord1" for b in bindings)


def test_match_requires_same_ssid(phase1_model):
    devices = tuple(
        d if d.ip != FIREMAN1_IP else type(d)(d.ip, d.energy, "other-net")
        for d in phase1_model.devices
    )
    model = ApplicationModel(phase1_model.actors, devices, phase1_model.groups,
                             phase1_model.links)
    bindings = match(FIRE_RULE, model)
    assert sorted(b["?ninv"].id for b in bindings) == ["fireman2"]


def test_match_requires_signal_link(phase1_model):
    model = remove_link(phase1_model, FIRECOORD_IP, FIREMAN1_IP)
    bindings = match(FIRE_RULE, model)
    assert sorted(b["?ninv"].id for b in bindings) == ["fireman2"]


def test_fire_creates_two_audio_flows(phase1_model):
    binding = next(b for b in match(FIRE_RULE, phase1_model)
                   if b["?ninv"].id == "fireman1")
    graph = fire(FIRE_RULE, binding, build_collaboration(()))
    assert len(graph.flows) == 2
    endpoints = {flow_endpoints(f) for f in graph.flows}
    assert endpoints == {(FIRECOORD_IP, FIREMAN1_IP), (FIREMAN1_IP, FIRECOORD_IP)}
    assert all(f.data_type is DataType.AUDIO for f in graph.flows)
    assert all(f.session == "Firecoor_inv_session" for f in graph.flows)


def test_fire_is_idempotent(phase1_model):
    binding = match(FIRE_RULE, phase1_model)[0]
    once = fire(FIRE_RULE, binding, build_collaboration(()))
    twice = fire(FIRE_RULE, binding, once)
    assert twice == once


def test_fire_on_no_bindings_leaves_graph_alone(phase1_model):
    graph = build_collaboration(())
    for binding in []:
        graph = fire(FIRE_RULE, binding, graph)
    assert graph == build_collaboration(())


def test_infer_phase1_counts(phase1_model):
    graph = infer_collaboration(phase1_model)
    assert len(graph.sessions) == 2
    assert len(graph.flows) == 8
    senders = [v for v in graph.vertices if v.kind is CollabKind.SENDER]
    receivers = [v for v in graph.vertices if v.kind is CollabKind.RECEIVER]
    assert len(senders) == 6
    assert len(receivers) == 8


def test_infer_empty_model():
    graph = infer_collaboration(ApplicationModel())
    assert graph.flows == ()
    assert graph.vertices == ()
    assert graph.sessions == ()


def test_infer_phase3_has_robot_session(phase1_model):
    actor, device, group = robot_arrival()
    model = add_actor(phase1_model, actor, device, group)
    model = add_link(model, device.ip, "10.193.255.200")
    graph = infer_collaboration(model)
    assert len(graph.sessions) == 3
    assert len(graph.flows) == 10
    assert "Robotcoor_inv_session" in graph.session_names()


def test_supervisor_session_spans_both_coordinators(phase1_model):
    graph = infer_collaboration(phase1_model)
    sup_flows = [f for f in graph.flows if f.session == "sup_coor_session"]
    endpoints = {flow_endpoints(f) for f in sup_flows}
    assert endpoints == {
        ("10.193.255.1", FIRECOORD_IP), (FIRECOORD_IP, "10.193.255.1"),
        ("10.193.255.1", "10.193.255.200"), ("10.193.255.200", "10.193.255.1"),
    }


def test_rule_order_does_not_change_fixpoint():
    rng = random.Random(20240811)
    for _ in range(25):
        model = random_model(rng)
        rules = list(builtin_rules())
        reference = infer_collaboration(model, tuple(rules))
        rng.shuffle(rules)
        assert infer_collaboration(model, tuple(rules)) == reference


def test_adding_investigator_never_removes_flows():
    rng = random.Random(77)
    from regroup.model import Actor, Device, InvestigatorKind, Role, RoleKind

    for trial in range(25):
        model = random_model(rng, max_actors=8)
        before = {f.id for f in infer_collaboration(model).flows}
        ip = "10.0.0.99"
        actor = Actor("late", Role(RoleKind.INVESTIGATOR, InvestigatorKind.FIREMAN),
                      ip, "team1")
        grown = add_actor(model, actor, Device(ip, 80, "net-a"), "team1")
        if grown.devices[0].ip != ip and len(grown.devices) > 1:
            grown = add_link(grown, ip, rng.choice(
                [d.ip for d in grown.devices if d.ip != ip]))
        after = {f.id for f in infer_collaboration(grown).flows}
        assert before <= after


def test_flows_are_bidirectional_per_session():
    rng = random.Random(31)
    for _ in range(25):
        graph = infer_collaboration(random_model(rng))
        pairs = {(f.session, *flow_endpoints(f)) for f in graph.flows}
        for session, src, dst in pairs:
            assert (session, dst, src) in pairs


def test_inferred_pairs_match_predicate_scan():
    rng = random.Random(97)
    for _ in range(50):
        model = random_model(rng)
        graph = infer_collaboration(model)
        expected = set()
        for coo, inv in coordinator_investigator_pairs(model):
            expected.add((coo.device_ip, inv.device_ip))
            expected.add((inv.device_ip, coo.device_ip))
        assert coordinator_family_ip_flows(graph) == expected


def test_match_rejects_wrong_arity(phase1_model):
    bad = Rule("bad", body=(pred("Investigator", "?a", "?b"),))
    with pytest.raises(MalformedRule):
        match(bad, phase1_model)


def test_match_rejects_unknown_predicate(phase1_model):
    bad = Rule("bad", body=(pred("knowsAbout", "?a", "?b"),))
    with pytest.raises(MalformedRule):
        match(bad, phase1_model)


def test_match_rejects_assertion_predicates_in_body(phase1_model):
    bad = Rule("bad", body=(pred("AudioFlow", "?f"),))
    with pytest.raises(MalformedRule):
        match(bad, phase1_model)


def test_rule_head_variables_must_be_bound(phase1_model):
    bad = Rule(
        "bad",
        body=(pred("Supervisor", "?sup"), pred("Node", "?n"), pred("hasRole", "?n", "?sup"),
              pred("hasSupCoordSession", "?n", "?s")),
        creates=("?af",),
        head=(pred("AudioFlow", "?af"), pred("hasSource", "?af", "?n"),
              pred("hasDestination", "?af", "?ghost"), pred("belongsToSession", "?af", "?s")),
    )
    with pytest.raises(MalformedRule):
        match(bad, phase1_model)


def test_firing_budget_guard(phase1_model):
    with pytest.raises(NonTermination):
        infer_collaboration(phase1_model, firing_budget=1)


def test_infer_rejects_invalid_model():
    from regroup.errors import InvalidModel
    from regroup.model import Device

    broken = ApplicationModel(devices=(Device("10.0.0.1", 150, "n"),))
    with pytest.raises(InvalidModel):
        infer_collaboration(broken)


def test_two_fireman_coordinators_get_distinct_sessions(phase1_model):
    from regroup.model import Actor, Device, Role, RoleKind

    second = Actor("firecoord2", Role(RoleKind.FIREMAN_COORDINATOR),
                   "10.193.255.101", "team1")
    model = add_actor(phase1_model, second, Device("10.193.255.101", 80, "fire-net"),
                      "team1")
    model = add_link(model, "10.193.255.101", FIREMAN1_IP)
    assert validate(model) == []
    graph = infer_collaboration(model)
    fire_sessions = {s for s in graph.session_names() if s.startswith("Firecoor")}
    assert fire_sessions == {
        f"Firecoor_inv_session@{FIRECOORD_IP}",
        "Firecoor_inv_session@10.193.255.101",
    }
