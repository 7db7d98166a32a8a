"""Design genome, structural constraints, chain expansion and URDF export.

A design is a sequence of joint types (Roll/Pitch/Yaw) and the link length
that follows each joint.  At ``q = 0`` the arm points straight up (+z) and
each joint type rotates about a fixed axis of its parent frame:
Roll about x, Pitch about y, Yaw about z.
"""

from __future__ import annotations

import enum
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_JOINT_LIMIT = 0.75 * math.pi
LENGTH_TOL = 1e-9


class GenomeError(ValueError):
    """Raised when a design violates a structural constraint."""


class JointType(str, enum.Enum):
    ROLL = "R"
    PITCH = "P"
    YAW = "Y"

    @property
    def axis(self) -> np.ndarray:
        return _AXES[self].copy()

    @classmethod
    def parse(cls, value: "JointType | str | int") -> "JointType":
        if isinstance(value, JointType):
            return value
        if isinstance(value, (int, np.integer)):
            return JOINT_CHOICES[int(value)]
        return cls(str(value).upper()[0])


# Index order used for categorical dimensions in the optimizer.
JOINT_CHOICES = (JointType.ROLL, JointType.PITCH, JointType.YAW)

_AXES = {
    JointType.ROLL: np.array([1.0, 0.0, 0.0]),
    JointType.PITCH: np.array([0.0, 1.0, 0.0]),
    JointType.YAW: np.array([0.0, 0.0, 1.0]),
}


def joints_to_str(joints: Sequence[JointType]) -> str:
    return "".join(JointType.parse(j).value for j in joints)


def joints_from_str(text: str) -> tuple[JointType, ...]:
    return tuple(JointType(c) for c in text.upper())


@dataclass(frozen=True)
class LengthBudget:
    """Total arm length and the per-link cap applied while sampling."""

    total: float = 0.6
    max_init: float = 0.3

    def __post_init__(self):
        if not (self.total > 0 and self.max_init > 0):
            raise ValueError("length budget values must be positive")


@dataclass(frozen=True)
class MassParams:
    m_motor: float = 0.5
    rho: float = 1000.0
    radius: float = 0.015
    g: float = 9.81

    def __post_init__(self):
        for name in ("m_motor", "rho", "radius", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def link_mass(self, length: float) -> float:
        return math.pi * self.radius**2 * length * self.rho


@dataclass(frozen=True)
class DesignGenome:
    joints: tuple[JointType, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        joints = tuple(JointType.parse(j) for j in self.joints)
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "lengths", lengths)
        if len(joints) != len(lengths) or not joints:
            raise GenomeError("joints and lengths must be non-empty and equally long")
        for a, b in zip(joints[:-1], joints[1:]):
            if a is JointType.YAW and b is not JointType.PITCH:
                raise GenomeError(f"Yaw must be followed by Pitch, got {joints_to_str(joints)}")
        if any(v < 0 or not math.isfinite(v) for v in lengths):
            raise GenomeError("link lengths must be finite and non-negative")

    @property
    def n_joint(self) -> int:
        return len(self.joints)

    @property
    def code(self) -> str:
        return joints_to_str(self.joints)

    def check_budget(self, budget: LengthBudget) -> None:
        if abs(sum(self.lengths) - budget.total) > LENGTH_TOL:
            raise GenomeError(f"lengths sum to {sum(self.lengths)!r}, expected {budget.total}")
        for i, v in enumerate(self.lengths[:-1]):
            if v > budget.max_init + LENGTH_TOL:
                raise GenomeError(f"length[{i}]={v} exceeds cap {budget.max_init}")

    def to_json(self) -> dict:
        return {"joints": [j.value for j in self.joints], "lengths": list(self.lengths)}

    @classmethod
    def from_json(cls, obj: dict) -> "DesignGenome":
        return cls(tuple(JointType.parse(j) for j in obj["joints"]), tuple(obj["lengths"]))


def canonicalize_joints(raw: Sequence[JointType | str | int]) -> tuple[JointType, ...]:
    """Force every joint that follows a Yaw to be Pitch.

    One left-to-right sweep that looks at the already rewritten sequence, so
    ``YYY`` becomes ``YPY``.
    """
    out: list[JointType] = []
    for j in raw:
        j = JointType.parse(j)
        if out and out[-1] is JointType.YAW:
            j = JointType.PITCH
        out.append(j)
    return tuple(out)


def length_bound(lengths_so_far: Sequence[float], budget: LengthBudget) -> float:
    """Upper bound for the next link length given the links already placed."""
    used = math.fsum(lengths_so_far)
    if used > budget.total + LENGTH_TOL:
        raise GenomeError(f"lengths so far ({used}) exceed total budget {budget.total}")
    return max(0.0, min(budget.max_init, budget.total - used))


def close_genome(
    joints: Sequence[JointType | str | int],
    partial_lengths: Sequence[float],
    budget: LengthBudget,
) -> DesignGenome:
    """Build a genome whose last link takes whatever length budget remains."""
    joints = tuple(JointType.parse(j) for j in joints)
    if len(partial_lengths) != len(joints) - 1:
        raise GenomeError("need exactly n_joint - 1 partial lengths")
    for i in range(len(partial_lengths)):
        v = float(partial_lengths[i])
        bound = length_bound(partial_lengths[:i], budget)
        if v < 0 or v > bound + LENGTH_TOL:
            raise GenomeError(f"length[{i}]={v} outside [0, {bound}]")
    last = budget.total - math.fsum(partial_lengths)
    if last < -LENGTH_TOL:
        raise GenomeError("partial lengths exceed the total budget")
    return DesignGenome(joints, tuple(float(v) for v in partial_lengths) + (max(last, 0.0),))


@dataclass(frozen=True)
class Segment:
    axis: np.ndarray
    length: float
    motor_mass: float
    link_mass: float


@dataclass(frozen=True, eq=False)
class KinematicChain:
    """Physical serial chain: one revolute joint followed by one straight link.

    Motor masses sit at joint origins, link masses at link midpoints.
    """

    axes: np.ndarray
    lengths: np.ndarray
    motor_masses: np.ndarray
    link_masses: np.ndarray
    joint_limits: np.ndarray
    radius: float
    g: float = 9.81
    collision_pairs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=float).reshape(-1, 3)
        n = axes.shape[0]
        arrays = {
            "axes": axes,
            "lengths": np.asarray(self.lengths, dtype=float).reshape(n),
            "motor_masses": np.asarray(self.motor_masses, dtype=float).reshape(n),
            "link_masses": np.asarray(self.link_masses, dtype=float).reshape(n),
            "joint_limits": np.asarray(self.joint_limits, dtype=float).reshape(n, 2),
        }
        if not np.allclose(np.linalg.norm(axes, axis=1), 1.0, atol=1e-12):
            raise ValueError("joint axes must be unit vectors")
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "collision_pairs", _collision_pairs(arrays["lengths"], self.radius))

    @property
    def n_joint(self) -> int:
        return self.axes.shape[0]

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def total_mass(self) -> float:
        return float(self.motor_masses.sum() + self.link_masses.sum())

    @property
    def segments(self) -> list[Segment]:
        return [
            Segment(self.axes[i].copy(), float(self.lengths[i]),
                    float(self.motor_masses[i]), float(self.link_masses[i]))
            for i in range(self.n_joint)
        ]

    def allclose(self, other: "KinematicChain", atol: float = 1e-9) -> bool:
        return (
            self.n_joint == other.n_joint
            and all(
                np.allclose(getattr(self, k), getattr(other, k), rtol=0, atol=atol)
                for k in ("axes", "lengths", "motor_masses", "link_masses", "joint_limits")
            )
            and abs(self.radius - other.radius) <= atol
        )


def _collision_pairs(lengths: np.ndarray, radius: float) -> tuple[tuple[int, int], ...]:
    # Pairs of non-degenerate links that are neither neighbours along the chain
    # nor already in contact in the straight pose.
    idx = [i for i, v in enumerate(lengths) if v > 0]
    pairs = []
    for a in range(len(idx)):
        for b in range(a + 2, len(idx)):
            i, j = idx[a], idx[b]
            if lengths[i + 1:j].sum() >= 2 * radius:
                pairs.append((i, j))
    return tuple(pairs)


def expand_genome(
    genome: DesignGenome,
    masses: MassParams = MassParams(),
    joint_limit: float = DEFAULT_JOINT_LIMIT,
) -> KinematicChain:
    n = genome.n_joint
    lengths = np.array(genome.lengths)
    return KinematicChain(
        axes=np.array([j.axis for j in genome.joints]),
        lengths=lengths,
        motor_masses=np.full(n, masses.m_motor),
        link_masses=np.array([masses.link_mass(v) for v in genome.lengths]),
        joint_limits=np.tile([-joint_limit, joint_limit], (n, 1)),
        radius=masses.radius,
        g=masses.g,
    )


# --- URDF -------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def _vec(v) -> str:
    return " ".join(_fmt(x) for x in v)


def _inertial(parent: ET.Element, mass: float, z: float, inertia: tuple[float, float, float]):
    inertial = ET.SubElement(parent, "inertial")
    ET.SubElement(inertial, "origin", xyz=_vec((0, 0, z)), rpy="0 0 0")
    ET.SubElement(inertial, "mass", value=_fmt(mass))
    ixx, iyy, izz = inertia
    ET.SubElement(inertial, "inertia", ixx=_fmt(ixx), ixy="0.0", ixz="0.0",
                  iyy=_fmt(iyy), iyz="0.0", izz=_fmt(izz))


def export_urdf(chain: KinematicChain, name: str = "arm", comment: str | None = None) -> str:
    """Serialize a chain as URDF XML.

    Each joint gets a ``link_i`` carrying the cylinder and its mass, plus a
    massive ``motor_i`` child on a fixed joint at the joint origin.
    ``comment`` is written as an XML comment at the top of the robot element.
    """
    robot = ET.Element("robot", name=name)
    if comment:
        robot.append(ET.Comment(f" {comment} "))
    ET.SubElement(robot, "link", name="base_link")
    r = chain.radius
    parent, offset = "base_link", 0.0
    for i in range(chain.n_joint):
        length = float(chain.lengths[i])
        lo, hi = chain.joint_limits[i]
        joint = ET.SubElement(robot, "joint", name=f"joint_{i}", type="revolute")
        ET.SubElement(joint, "parent", link=parent)
        ET.SubElement(joint, "child", link=f"link_{i}")
        ET.SubElement(joint, "origin", xyz=_vec((0, 0, offset)), rpy="0 0 0")
        ET.SubElement(joint, "axis", xyz=_vec(chain.axes[i]))
        ET.SubElement(joint, "limit", lower=_fmt(lo), upper=_fmt(hi), effort="100.0", velocity="3.14")

        link = ET.SubElement(robot, "link", name=f"link_{i}")
        m = float(chain.link_masses[i])
        # solid cylinder about its midpoint
        i_perp = m * (3 * r**2 + length**2) / 12.0
        _inertial(link, m, length / 2, (i_perp, i_perp, m * r**2 / 2))
        for tag in ("visual", "collision"):
            el = ET.SubElement(link, tag)
            ET.SubElement(el, "origin", xyz=_vec((0, 0, length / 2)), rpy="0 0 0")
            geom = ET.SubElement(el, "geometry")
            ET.SubElement(geom, "cylinder", radius=_fmt(r), length=_fmt(length))

        fixed = ET.SubElement(robot, "joint", name=f"motor_joint_{i}", type="fixed")
        ET.SubElement(fixed, "parent", link=f"link_{i}")
        ET.SubElement(fixed, "child", link=f"motor_{i}")
        ET.SubElement(fixed, "origin", xyz="0 0 0", rpy="0 0 0")
        motor = ET.SubElement(robot, "link", name=f"motor_{i}")
        _inertial(motor, float(chain.motor_masses[i]), 0.0, (0.0, 0.0, 0.0))

        parent, offset = f"link_{i}", length

    tip = ET.SubElement(robot, "joint", name="ee_joint", type="fixed")
    ET.SubElement(tip, "parent", link=parent)
    ET.SubElement(tip, "child", link="ee_link")
    ET.SubElement(tip, "origin", xyz=_vec((0, 0, offset)), rpy="0 0 0")
    ET.SubElement(robot, "link", name="ee_link")
    ET.indent(robot)
    return '<?xml version="1.0"?>\n' + ET.tostring(robot, encoding="unicode") + "\n"


def chain_from_urdf(xml_text: str, g: float = 9.81) -> KinematicChain:
    """Rebuild a chain from :func:`export_urdf` output."""
    root = ET.fromstring(xml_text)
    links = {el.get("name"): el for el in root.findall("link")}
    revolute = [j for j in root.findall("joint") if j.get("type") == "revolute"]
    revolute.sort(key=lambda j: int(j.get("name").split("_")[-1]))
    axes, lengths, motors, link_masses, limits = [], [], [], [], []
    radius = None
    for i, joint in enumerate(revolute):
        axes.append([float(v) for v in joint.find("axis").get("xyz").split()])
        lim = joint.find("limit")
        limits.append([float(lim.get("lower")), float(lim.get("upper"))])
        link = links[f"link_{i}"]
        cyl = link.find("visual/geometry/cylinder")
        lengths.append(float(cyl.get("length")))
        radius = float(cyl.get("radius"))
        link_masses.append(float(link.find("inertial/mass").get("value")))
        motors.append(float(links[f"motor_{i}"].find("inertial/mass").get("value")))
    if not revolute:
        raise ValueError("URDF contains no revolute joints")
    return KinematicChain(np.array(axes), np.array(lengths), np.array(motors),
                          np.array(link_masses), np.array(limits), radius, g)
