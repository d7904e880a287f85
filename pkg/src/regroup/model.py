"""Mission fact base: actors, roles, devices, groups, and radio connectivity.

Everything here is an immutable value. Operations take a model and return a
new model, so callers can keep snapshots, replay histories, and hand models
between threads without locking. Collections are stored canonically sorted,
which makes equality insensitive to insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import DuplicateId, OutOfRange, UnknownActor, UnknownDevice, UnknownGroup


class RoleKind(Enum):
    SUPERVISOR = "supervisor"
    FIREMAN_COORDINATOR = "fireman_coordinator"
    ROBOT_COORDINATOR = "robot_coordinator"
    INVESTIGATOR = "investigator"


class InvestigatorKind(Enum):
    FIREMAN = "fireman"
    ROBOT = "robot"


COORDINATOR_KINDS = (RoleKind.FIREMAN_COORDINATOR, RoleKind.ROBOT_COORDINATOR)


@dataclass(frozen=True)
class Role:
    """A mission role; investigator_kind is set exactly for investigators."""

    kind: RoleKind
    investigator_kind: InvestigatorKind | None = None


@dataclass(frozen=True)
class Device:
    """A participant's device, identified by its ip address."""

    ip: str
    energy: int  # percentage, 0..100
    ssid: str


@dataclass(frozen=True)
class Actor:
    id: str
    role: Role
    device_ip: str
    group_id: str


@dataclass(frozen=True)
class Group:
    id: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class Violation:
    """One invariant violation, with a stable machine-readable code."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


@dataclass(frozen=True)
class ApplicationModel:
    """The complete fact base for one mission.

    Signal links are stored as directed pairs with both directions present;
    symmetry is an invariant checked by validate(), not an implicit closure.
    Same-SSID adjacency is never stored: it is derived from Device.ssid.
    """

    actors: tuple[Actor, ...] = ()
    devices: tuple[Device, ...] = ()
    groups: tuple[Group, ...] = ()
    links: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(sorted(self.actors, key=lambda a: a.id)))
        object.__setattr__(self, "devices", tuple(sorted(self.devices, key=lambda d: d.ip)))
        groups = tuple(
            sorted((replace(g, members=tuple(sorted(g.members))) for g in self.groups),
                   key=lambda g: g.id)
        )
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "links", tuple(sorted(set(self.links))))

    # Lookup helpers. Models are small; linear scans keep the value type flat.

    def actor(self, actor_id: str) -> Actor | None:
        for a in self.actors:
            if a.id == actor_id:
                return a
        return None

    def device(self, ip: str) -> Device | None:
        for d in self.devices:
            if d.ip == ip:
                return d
        return None

    def group(self, group_id: str) -> Group | None:
        for g in self.groups:
            if g.id == group_id:
                return g
        return None

    def has_signal(self, ip_a: str, ip_b: str) -> bool:
        return (ip_a, ip_b) in self.links or (ip_b, ip_a) in self.links


def _check_energy(energy: int) -> None:
    if not 0 <= energy <= 100:
        raise OutOfRange(f"energy {energy} outside [0, 100]")


def add_actor(model: ApplicationModel, actor: Actor, device: Device, group_id: str,
              *, create_group: bool = True) -> ApplicationModel:
    """Add an actor together with its hosting device.

    The group is created on demand unless create_group is False, in which
    case an absent group raises UnknownGroup.
    """
    if actor.device_ip != device.ip:
        raise ValueError(f"actor {actor.id} references device {actor.device_ip}, got {device.ip}")
    if actor.group_id != group_id:
        raise ValueError(f"actor {actor.id} references group {actor.group_id}, got {group_id}")
    if model.actor(actor.id) is not None:
        raise DuplicateId(f"actor id {actor.id!r} already present")
    if model.device(device.ip) is not None:
        raise DuplicateId(f"device ip {device.ip!r} already present")
    _check_energy(device.energy)

    group = model.group(group_id)
    if group is None:
        if not create_group:
            raise UnknownGroup(f"group {group_id!r} does not exist")
        groups = model.groups + (Group(group_id, (actor.id,)),)
    else:
        updated = replace(group, members=group.members + (actor.id,))
        groups = tuple(updated if g.id == group_id else g for g in model.groups)

    return replace(
        model,
        actors=model.actors + (actor,),
        devices=model.devices + (device,),
        groups=groups,
    )


def set_energy(model: ApplicationModel, ip: str, energy: int) -> ApplicationModel:
    """Update one device's energy level; everything else is untouched."""
    _check_energy(energy)
    if model.device(ip) is None:
        raise UnknownDevice(f"no device with ip {ip!r}")
    devices = tuple(replace(d, energy=energy) if d.ip == ip else d for d in model.devices)
    return replace(model, devices=devices)


def remove_actor(model: ApplicationModel, actor_id: str) -> ApplicationModel:
    """Remove an actor, its device (when no other actor shares it), the
    device's links, and its group membership. Empty groups are dropped."""
    actor = model.actor(actor_id)
    if actor is None:
        raise UnknownActor(f"no actor with id {actor_id!r}")

    actors = tuple(a for a in model.actors if a.id != actor_id)
    device_shared = any(a.device_ip == actor.device_ip for a in actors)
    devices = model.devices
    links = model.links
    if not device_shared:
        devices = tuple(d for d in devices if d.ip != actor.device_ip)
        links = tuple(pair for pair in links if actor.device_ip not in pair)

    groups = []
    for g in model.groups:
        if g.id == actor.group_id:
            members = tuple(m for m in g.members if m != actor_id)
            if members:
                groups.append(replace(g, members=members))
        else:
            groups.append(g)

    return replace(model, actors=actors, devices=devices, groups=tuple(groups), links=links)


def add_link(model: ApplicationModel, ip_a: str, ip_b: str) -> ApplicationModel:
    """Record radio signal between two devices; stored in both directions."""
    if ip_a == ip_b:
        raise ValueError(f"signal links are irreflexive: {ip_a}")
    for ip in (ip_a, ip_b):
        if model.device(ip) is None:
            raise UnknownDevice(f"no device with ip {ip!r}")
    return replace(model, links=model.links + ((ip_a, ip_b), (ip_b, ip_a)))


def remove_link(model: ApplicationModel, ip_a: str, ip_b: str) -> ApplicationModel:
    dropped = {(ip_a, ip_b), (ip_b, ip_a)}
    return replace(model, links=tuple(p for p in model.links if p not in dropped))


def validate(model: ApplicationModel) -> list[Violation]:
    """Check every type invariant; returns one entry per violation.

    Violations are data, not exceptions: an invalid model is representable,
    which is what makes this function testable at all.
    """
    out: list[Violation] = []

    seen_ids: set[str] = set()
    for a in model.actors:
        if a.id in seen_ids:
            out.append(Violation("duplicate-actor-id", a.id))
        seen_ids.add(a.id)

    seen_ips: set[str] = set()
    for d in model.devices:
        if d.ip in seen_ips:
            out.append(Violation("duplicate-device-ip", d.ip))
        seen_ips.add(d.ip)
        if not 0 <= d.energy <= 100:
            out.append(Violation("energy-range", f"{d.ip} has energy {d.energy}"))

    group_ids = {g.id for g in model.groups}
    for a in model.actors:
        if model.device(a.device_ip) is None:
            out.append(Violation("unknown-device", f"{a.id} -> {a.device_ip}"))
        if a.group_id not in group_ids:
            out.append(Violation("unknown-group", f"{a.id} -> {a.group_id}"))
        is_inv = a.role.kind is RoleKind.INVESTIGATOR
        if is_inv != (a.role.investigator_kind is not None):
            out.append(Violation("role-kind", f"{a.id}: investigator_kind mismatch"))

    for g in model.groups:
        for member in g.members:
            actor = model.actor(member)
            if actor is None:
                out.append(Violation("group-membership", f"{g.id} lists unknown actor {member}"))
            elif actor.group_id != g.id:
                out.append(Violation("group-membership", f"{member} not in group {g.id}"))
    claimed = {a.id: a.group_id for a in model.actors}
    listed = {m: g.id for g in model.groups for m in g.members}
    for actor_id, gid in claimed.items():
        if listed.get(actor_id) != gid:
            out.append(Violation("group-membership", f"{actor_id} missing from group {gid}"))

    link_set = set(model.links)
    for a, b in model.links:
        if a == b:
            out.append(Violation("reflexive-link", a))
        if (b, a) not in link_set:
            out.append(Violation("asymmetric-link", f"{a} -> {b}"))
        for ip in (a, b):
            if ip not in seen_ips:
                out.append(Violation("link-unknown-device", ip))

    return out
