"""Model schema and file I/O.

A model file is YAML with three top-level sections:

    links:   name, mass [kg], com [m, link frame], inertia [3x3 about the
             com, link frame], optional capsules for self-collision
    joints:  name, parent/child link, origin [m] and origin_rpy_deg in the
             parent frame, axis (unit, child frame), limits_deg, effort [N m]
    frames:  named points of interest (feet, grippers, torso) attached to
             a link with a fixed offset

All angles in the file are degrees; they are converted to radians on
load.  Joint order in the file defines the generalized-coordinate order
after the 6 floating-base coordinates.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..math3d import rpy_to_mat

LEG_JOINT_COUNT = 12
ARM_JOINT_COUNT = 6
JOINT_COUNT = LEG_JOINT_COUNT + ARM_JOINT_COUNT
BASE_DOF = 6
NV = BASE_DOF + JOINT_COUNT

LEG_ORDER = ("FR", "FL", "RR", "RL")
FOOT_FRAMES = ("FR_foot", "FL_foot", "RR_foot", "RL_foot")
GRIPPER_FRAMES = ("right_gripper", "left_gripper")

# spans enforced for the three manipulator joints, degrees
ARM_RANGE_SPANS_DEG = (280.0, 210.0, 360.0)


class ModelError(ValueError):
    """Raised when a model file violates the schema or its invariants."""


@dataclass
class Capsule:
    p0: np.ndarray
    p1: np.ndarray
    radius: float


@dataclass
class LinkSpec:
    name: str
    mass: float
    com: np.ndarray
    inertia: np.ndarray
    capsules: list[Capsule] = field(default_factory=list)


@dataclass
class JointSpec:
    name: str
    parent: str
    child: str
    origin: np.ndarray
    origin_rpy: np.ndarray  # radians in memory
    axis: np.ndarray
    lower: float  # radians
    upper: float
    effort: float  # N m, actuator torque bound


@dataclass
class FrameSpec:
    name: str
    link: str
    offset: np.ndarray
    offset_rpy: np.ndarray


class RobotModel:
    """Validated model plus flat numeric arrays for the kernels.

    Bodies are indexed 0..n_bodies-1 with body 0 the floating trunk and
    body j+1 the child link of joint j.  Parents always precede children.
    """

    def __init__(self, name: str, gravity: np.ndarray, links: list[LinkSpec],
                 joints: list[JointSpec], frames: list[FrameSpec]):
        self.name = name
        self.gravity = np.asarray(gravity, dtype=float)
        self.links = links
        self.joints = joints
        self.frames = frames
        self.link_index = {l.name: i for i, l in enumerate(links)}
        self.joint_index = {j.name: i for i, j in enumerate(joints)}
        self.frame_index = {f.name: i for i, f in enumerate(frames)}
        self._validate()
        self._compile()

    # -- schema checks ----------------------------------------------------

    def _validate(self) -> None:
        if len(self.joints) != JOINT_COUNT:
            raise ModelError(f"expected {JOINT_COUNT} joints, got {len(self.joints)}")
        if len(set(l.name for l in self.links)) != len(self.links):
            raise ModelError("duplicate link names")
        if len(set(j.name for j in self.joints)) != len(self.joints):
            raise ModelError("duplicate joint names")
        root = self.links[0].name
        children = {root}
        for j in self.joints:
            if j.parent not in self.link_index:
                raise ModelError(f"joint {j.name}: unknown parent link {j.parent}")
            if j.child not in self.link_index:
                raise ModelError(f"joint {j.name}: unknown child link {j.child}")
            if j.parent not in children:
                raise ModelError(f"joint {j.name}: parent {j.parent} defined after child")
            if j.child in children:
                raise ModelError(f"joint {j.name}: link {j.child} has two parents")
            children.add(j.child)
            if abs(np.linalg.norm(j.axis) - 1.0) > 1e-8:
                raise ModelError(f"joint {j.name}: axis is not unit length")
            if j.upper <= j.lower:
                raise ModelError(f"joint {j.name}: empty range")
            if j.effort <= 0.0:
                raise ModelError(f"joint {j.name}: effort limit must be positive")
        if children != set(self.link_index):
            orphans = set(self.link_index) - children
            raise ModelError(f"links not connected to the tree: {sorted(orphans)}")
        for l in self.links:
            if l.mass < 0.0:
                raise ModelError(f"link {l.name}: negative mass")
            if l.mass > 0.0:
                w = np.linalg.eigvalsh(l.inertia)
                if np.any(w <= 0.0):
                    raise ModelError(f"link {l.name}: inertia not positive definite")
                if not np.allclose(l.inertia, l.inertia.T, atol=1e-12):
                    raise ModelError(f"link {l.name}: inertia not symmetric")
        for f in self.frames:
            if f.link not in self.link_index:
                raise ModelError(f"frame {f.name}: unknown link {f.link}")
        for req in ("torso",) + FOOT_FRAMES + GRIPPER_FRAMES:
            if req not in self.frame_index:
                raise ModelError(f"required frame missing: {req}")
        # the two 3-dof manipulators close the joint list: right q4-q6, left q4-q6
        for arm in range(2):
            for k in range(3):
                j = self.joints[LEG_JOINT_COUNT + 3 * arm + k]
                span = np.degrees(j.upper - j.lower)
                want = ARM_RANGE_SPANS_DEG[k]
                if abs(span - want) > 1e-6:
                    raise ModelError(
                        f"manipulator joint {j.name}: range {span:.3f} deg, expected {want}"
                    )

    # -- numeric form -----------------------------------------------------

    def _compile(self) -> None:
        nj = len(self.joints)
        self.n_bodies = nj + 1
        # body index of each link: trunk is 0, child of joint j is j+1
        self.body_of_link = {self.links[0].name: 0}
        for j_i, j in enumerate(self.joints):
            self.body_of_link[j.child] = j_i + 1
        self.parent_body = np.zeros(nj, dtype=np.int64)
        self.joint_origin = np.zeros((nj, 3))
        self.joint_rot = np.zeros((nj, 3, 3))
        self.joint_axis = np.zeros((nj, 3))
        for j_i, j in enumerate(self.joints):
            self.parent_body[j_i] = self.body_of_link[j.parent]
            self.joint_origin[j_i] = j.origin
            self.joint_rot[j_i] = rpy_to_mat(j.origin_rpy)
            self.joint_axis[j_i] = j.axis
        self.body_mass = np.zeros(self.n_bodies)
        self.body_com = np.zeros((self.n_bodies, 3))
        self.body_inertia = np.zeros((self.n_bodies, 3, 3))
        order = [self.links[0].name] + [j.child for j in self.joints]
        for b, link_name in enumerate(order):
            l = self.links[self.link_index[link_name]]
            self.body_mass[b] = l.mass
            self.body_com[b] = l.com
            self.body_inertia[b] = l.inertia
        nf = len(self.frames)
        self.frame_body = np.zeros(nf, dtype=np.int64)
        self.frame_offset = np.zeros((nf, 3))
        self.frame_rot = np.zeros((nf, 3, 3))
        for f_i, f in enumerate(self.frames):
            self.frame_body[f_i] = self.body_of_link[f.link]
            self.frame_offset[f_i] = f.offset
            self.frame_rot[f_i] = rpy_to_mat(f.offset_rpy)
        self.joint_lower = np.array([j.lower for j in self.joints])
        self.joint_upper = np.array([j.upper for j in self.joints])
        self.joint_effort = np.array([j.effort for j in self.joints])
        # ancestor chain of joint indices for each body, used by jacobians
        chains = [[] for _ in range(self.n_bodies)]
        for j_i in range(nj):
            parent = self.parent_body[j_i]
            chains[j_i + 1] = chains[parent] + [j_i]
        self.body_chain = chains
        # capsules flattened with their owning body and an adjacency map
        caps_body, caps_p0, caps_p1, caps_r = [], [], [], []
        for link_name in order:
            l = self.links[self.link_index[link_name]]
            b = self.body_of_link[link_name]
            for c in l.capsules:
                caps_body.append(b)
                caps_p0.append(c.p0)
                caps_p1.append(c.p1)
                caps_r.append(c.radius)
        self.capsule_body = np.asarray(caps_body, dtype=np.int64)
        self.capsule_p0 = np.asarray(caps_p0, dtype=float).reshape(-1, 3)
        self.capsule_p1 = np.asarray(caps_p1, dtype=float).reshape(-1, 3)
        self.capsule_radius = np.asarray(caps_r, dtype=float)
        adj = np.zeros((self.n_bodies, self.n_bodies), dtype=bool)
        for j_i in range(nj):
            a, b = self.parent_body[j_i], j_i + 1
            adj[a, b] = adj[b, a] = True
        self.body_adjacent = adj

    # -- convenience ------------------------------------------------------

    @property
    def nv(self) -> int:
        return BASE_DOF + len(self.joints)

    def frame_id(self, name: str) -> int:
        try:
            return self.frame_index[name]
        except KeyError:
            raise ModelError(f"unknown frame: {name}") from None

    def joint_slice(self, names: list[str]) -> np.ndarray:
        return np.array([self.joint_index[n] for n in names], dtype=np.int64)

    def leg_joint_ids(self, leg: str) -> np.ndarray:
        return self.joint_slice([f"{leg}_hip", f"{leg}_thigh", f"{leg}_calf"])

    def arm_joint_ids(self, side: str) -> np.ndarray:
        tag = "r" if side == "right" else "l"
        return self.joint_slice([f"arm_{tag}1", f"arm_{tag}2", f"arm_{tag}3"])


# -- file I/O -------------------------------------------------------------


def _vec(x, n=3) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(n)
    return a


def load_model(path_or_dict) -> RobotModel:
    """Load and validate a model file (path, file object or parsed dict)."""
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    elif hasattr(path_or_dict, "read"):
        raw = yaml.safe_load(path_or_dict.read())
    else:
        with open(path_or_dict) as fh:
            raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ModelError("model file is not a mapping")
    for section in ("links", "joints", "frames"):
        if section not in raw:
            raise ModelError(f"missing section: {section}")
    links = []
    for d in raw["links"]:
        try:
            caps = [
                Capsule(_vec(c["p0"]), _vec(c["p1"]), float(c["radius"]))
                for c in d.get("capsules", [])
            ]
            links.append(
                LinkSpec(
                    name=str(d["name"]),
                    mass=float(d["mass"]),
                    com=_vec(d["com"]),
                    inertia=np.asarray(d["inertia"], dtype=float).reshape(3, 3),
                    capsules=caps,
                )
            )
        except (KeyError, TypeError) as e:
            raise ModelError(f"bad link entry {d.get('name', '?')}: {e}") from None
    joints = []
    for d in raw["joints"]:
        try:
            lo, hi = d["limits_deg"]
            joints.append(
                JointSpec(
                    name=str(d["name"]),
                    parent=str(d["parent"]),
                    child=str(d["child"]),
                    origin=_vec(d["origin"]),
                    origin_rpy=np.radians(_vec(d.get("origin_rpy_deg", (0, 0, 0)))),
                    axis=_vec(d["axis"]),
                    lower=float(np.radians(lo)),
                    upper=float(np.radians(hi)),
                    effort=float(d["effort"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"bad joint entry {d.get('name', '?')}: {e}") from None
    frames = []
    for d in raw["frames"]:
        try:
            frames.append(
                FrameSpec(
                    name=str(d["name"]),
                    link=str(d["link"]),
                    offset=_vec(d["offset"]),
                    offset_rpy=np.radians(_vec(d.get("offset_rpy_deg", (0, 0, 0)))),
                )
            )
        except (KeyError, TypeError) as e:
            raise ModelError(f"bad frame entry {d.get('name', '?')}: {e}") from None
    return RobotModel(
        name=str(raw.get("name", "robot")),
        gravity=_vec(raw.get("gravity", (0.0, 0.0, -9.81))),
        links=links,
        joints=joints,
        frames=frames,
    )


def serialize_model(model: RobotModel) -> dict:
    """Inverse of load_model up to float formatting; returns a plain dict."""

    def caps(l: LinkSpec):
        return [
            {"p0": c.p0.tolist(), "p1": c.p1.tolist(), "radius": float(c.radius)}
            for c in l.capsules
        ]

    return {
        "name": model.name,
        "gravity": model.gravity.tolist(),
        "links": [
            {
                "name": l.name,
                "mass": float(l.mass),
                "com": l.com.tolist(),
                "inertia": l.inertia.tolist(),
                **({"capsules": caps(l)} if l.capsules else {}),
            }
            for l in model.links
        ],
        "joints": [
            {
                "name": j.name,
                "parent": j.parent,
                "child": j.child,
                "origin": j.origin.tolist(),
                "origin_rpy_deg": np.degrees(j.origin_rpy).tolist(),
                "axis": j.axis.tolist(),
                "limits_deg": [float(np.degrees(j.lower)), float(np.degrees(j.upper))],
                "effort": float(j.effort),
            }
            for j in model.joints
        ],
        "frames": [
            {
                "name": f.name,
                "link": f.link,
                "offset": f.offset.tolist(),
                "offset_rpy_deg": np.degrees(f.offset_rpy).tolist(),
            }
            for f in model.frames
        ],
    }


def default_model_path() -> str:
    """Path of the packaged quadruped-with-grippers model."""
    return str(importlib.resources.files("quadwbc").joinpath("data/go1_grippers.yaml"))
