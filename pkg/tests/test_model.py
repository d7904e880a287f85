import random

import pytest
from hypothesis import given, strategies as st

from conftest import FIREMAN2_IP, build_phase1_model, robot_arrival
from regroup.errors import DuplicateId, OutOfRange, UnknownActor, UnknownDevice, UnknownGroup
from regroup.model import (
    Actor,
    ApplicationModel,
    Device,
    Group,
    InvestigatorKind,
    Role,
    RoleKind,
    add_actor,
    add_link,
    remove_actor,
    set_energy,
    validate,
)


def test_add_actor_new_robot(phase1_model):
    actor, device, group = robot_arrival()
    updated = add_actor(phase1_model, actor, device, group)
    assert len(updated.actors) == 6
    assert updated.device("10.193.255.202").ssid == "robot-net"
    assert validate(updated) == []


def test_add_actor_to_empty_model():
    actor = Actor("a1", Role(RoleKind.SUPERVISOR), "10.0.0.1", "g1")
    model = add_actor(ApplicationModel(), actor, Device("10.0.0.1", 80, "net"), "g1")
    assert len(model.actors) == 1
    assert len(model.devices) == 1
    assert model.group("g1").members == ("a1",)


def test_add_actor_duplicate_ip(phase1_model):
    actor = Actor("newcomer", Role(RoleKind.SUPERVISOR), "10.193.255.100", "team1")
    with pytest.raises(DuplicateId):
        add_actor(phase1_model, actor, Device("10.193.255.100", 50, "x"), "team1")


def test_add_actor_duplicate_id(phase1_model):
    actor = Actor("fireman1", Role(RoleKind.SUPERVISOR), "10.9.9.9", "team1")
    with pytest.raises(DuplicateId):
        add_actor(phase1_model, actor, Device("10.9.9.9", 50, "x"), "team1")


def test_add_actor_unknown_group_without_autocreate(phase1_model):
    actor = Actor("newcomer", Role(RoleKind.SUPERVISOR), "10.9.9.9", "team9")
    with pytest.raises(UnknownGroup):
        add_actor(phase1_model, actor, Device("10.9.9.9", 50, "x"), "team9",
                  create_group=False)


def test_set_energy_changes_only_that_device(phase1_model):
    updated = set_energy(phase1_model, "10.193.255.143", 50)
    assert updated.device("10.193.255.143").energy == 50
    others = [(d.ip, d.energy) for d in phase1_model.devices if d.ip != "10.193.255.143"]
    assert [(d.ip, d.energy) for d in updated.devices if d.ip != "10.193.255.143"] == others
    assert updated.actors == phase1_model.actors
    assert updated.links == phase1_model.links


def test_set_energy_same_value_is_noop(phase1_model):
    assert set_energy(phase1_model, "10.193.255.143", 93) == phase1_model


def test_set_energy_unknown_device(phase1_model):
    with pytest.raises(UnknownDevice):
        set_energy(phase1_model, "10.0.0.9", 40)


def test_set_energy_out_of_range(phase1_model):
    with pytest.raises(OutOfRange):
        set_energy(phase1_model, "10.193.255.143", 120)
    with pytest.raises(OutOfRange):
        set_energy(phase1_model, "10.193.255.143", -1)


def test_remove_actor_drops_device_and_links(phase1_model):
    updated = remove_actor(phase1_model, "fireman2")
    assert len(updated.actors) == 4
    assert updated.device(FIREMAN2_IP) is None
    assert all(FIREMAN2_IP not in pair for pair in updated.links)
    assert "fireman2" not in updated.group("team1").members
    assert validate(updated) == []


def test_remove_then_readd_restores_model(phase1_model):
    removed = remove_actor(phase1_model, "fireman2")
    actor = phase1_model.actor("fireman2")
    device = phase1_model.device(FIREMAN2_IP)
    restored = add_actor(removed, actor, device, "team1")
    restored = add_link(restored, "10.193.255.100", FIREMAN2_IP)
    assert restored == phase1_model


def test_remove_unknown_actor(phase1_model):
    with pytest.raises(UnknownActor):
        remove_actor(phase1_model, "ghost")


def test_remove_keeps_shared_device():
    base = ApplicationModel()
    a1 = Actor("a1", Role(RoleKind.SUPERVISOR), "10.0.0.1", "g")
    a2 = Actor("a2", Role(RoleKind.FIREMAN_COORDINATOR), "10.0.0.1", "g")
    model = add_actor(base, a1, Device("10.0.0.1", 70, "net"), "g")
    # second actor on the same device: insert directly, add_actor forbids it
    model = ApplicationModel(
        actors=model.actors + (a2,),
        devices=model.devices,
        groups=(Group("g", ("a1", "a2")),),
    )
    after = remove_actor(model, "a1")
    assert after.device("10.0.0.1") is not None


def test_validate_phase1_is_clean(phase1_model):
    assert validate(phase1_model) == []


def test_validate_asymmetric_link():
    model = ApplicationModel(
        actors=(Actor("a", Role(RoleKind.SUPERVISOR), "10.0.0.1", "g"),),
        devices=(Device("10.0.0.1", 80, "n"), Device("10.0.0.2", 80, "n")),
        groups=(Group("g", ("a",)),),
        links=(("10.0.0.1", "10.0.0.2"),),
    )
    codes = [v.code for v in validate(model)]
    assert codes == ["asymmetric-link"]


def test_validate_energy_range():
    model = ApplicationModel(devices=(Device("10.0.0.1", 120, "n"),))
    codes = [v.code for v in validate(model)]
    assert codes == ["energy-range"]


def test_validate_investigator_kind_mismatch():
    model = ApplicationModel(
        actors=(Actor("a", Role(RoleKind.SUPERVISOR, InvestigatorKind.FIREMAN),
                      "10.0.0.1", "g"),),
        devices=(Device("10.0.0.1", 80, "n"),),
        groups=(Group("g", ("a",)),),
    )
    assert "role-kind" in [v.code for v in validate(model)]


def test_signal_symmetry(phase1_model):
    for a in phase1_model.devices:
        for b in phase1_model.devices:
            assert phase1_model.has_signal(a.ip, b.ip) == phase1_model.has_signal(b.ip, a.ip)


@given(st.integers(min_value=0, max_value=100))
def test_set_energy_roundtrip(energy):
    model = build_phase1_model()
    original = model.device("10.193.255.146").energy
    there = set_energy(model, "10.193.255.146", energy)
    back = set_energy(there, "10.193.255.146", original)
    assert back == model


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_random_operation_sequences_stay_valid(seed):
    rng = random.Random(seed)
    model = build_phase1_model()
    next_id = 0
    for _ in range(rng.randint(1, 8)):
        op = rng.choice(["add", "remove", "energy"])
        if op == "add":
            ip = f"10.2.0.{next_id + 1}"
            actor = Actor(f"extra{next_id}",
                          Role(RoleKind.INVESTIGATOR, InvestigatorKind.ROBOT), ip, "team1")
            model = add_actor(model, actor, Device(ip, rng.randint(0, 100), "robot-net"),
                              "team1")
            next_id += 1
        elif op == "remove" and model.actors:
            model = remove_actor(model, rng.choice(model.actors).id)
        elif op == "energy" and model.devices:
            model = set_energy(model, rng.choice(model.devices).ip, rng.randint(0, 100))
    assert validate(model) == []
