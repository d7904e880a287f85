from importlib import resources

import pytest

from regroup.adaptation import initial_state
from regroup.model import Actor, ApplicationModel, Device, Group, InvestigatorKind, Role, RoleKind

SUPERVISOR_IP = "10.193.255.1"
FIRECOORD_IP = "10.193.255.100"
ROBOTCOORD_IP = "10.193.255.200"
FIREMAN1_IP = "10.193.255.143"
FIREMAN2_IP = "10.193.255.146"
ROBOT1_IP = "10.193.255.202"


def build_phase1_model() -> ApplicationModel:
    """The five-actor starting configuration used throughout the tests."""
    entries = [
        ("supervisor1", Role(RoleKind.SUPERVISOR), SUPERVISOR_IP, 86, "ctrl-net"),
        ("firecoord1", Role(RoleKind.FIREMAN_COORDINATOR), FIRECOORD_IP, 90, "fire-net"),
        ("robotcoord1", Role(RoleKind.ROBOT_COORDINATOR), ROBOTCOORD_IP, 79, "robot-net"),
        ("fireman1", Role(RoleKind.INVESTIGATOR, InvestigatorKind.FIREMAN),
         FIREMAN1_IP, 93, "fire-net"),
        ("fireman2", Role(RoleKind.INVESTIGATOR, InvestigatorKind.FIREMAN),
         FIREMAN2_IP, 88, "fire-net"),
    ]
    actors = tuple(Actor(aid, role, ip, "team1") for aid, role, ip, _, _ in entries)
    devices = tuple(Device(ip, energy, ssid) for _, _, ip, energy, ssid in entries)
    links = []
    for a, b in [(SUPERVISOR_IP, FIRECOORD_IP), (SUPERVISOR_IP, ROBOTCOORD_IP),
                 (FIRECOORD_IP, FIREMAN1_IP), (FIRECOORD_IP, FIREMAN2_IP)]:
        links += [(a, b), (b, a)]
    return ApplicationModel(
        actors=actors,
        devices=devices,
        groups=(Group("team1", tuple(a.id for a in actors)),),
        links=tuple(links),
    )


def robot_arrival() -> tuple[Actor, Device, str]:
    actor = Actor("robot1", Role(RoleKind.INVESTIGATOR, InvestigatorKind.ROBOT),
                  ROBOT1_IP, "team1")
    return actor, Device(ROBOT1_IP, 95, "robot-net"), "team1"


def bundled_scenario_text() -> str:
    return resources.files("regroup").joinpath("scenarios/rosace.scenario").read_text()


@pytest.fixture
def phase1_model() -> ApplicationModel:
    return build_phase1_model()


@pytest.fixture
def phase1_state(phase1_model):
    state, _ = initial_state(phase1_model)
    return state
