"""Scripted command sources for reproducible runs.

A script file is a YAML list of timestamped entries. Each entry becomes
a UserCommand that takes effect at its timestamp and stays active until
the next one. Example:

    - t: 0.0
      mode: locomotion
      twist: [0.15, 0.0, 0.0]
    - t: 4.0
      mode: single_gripper
      side: right
      eef:
        right: {pos: [0.4, -0.15, 0.25], rpy: [0.0, 0.3, 0.0]}
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import yaml

from .. import math3d as m3
from ..model import FramePose
from .types import STAND_HEIGHT, OperationMode, UserCommand


def _parse_eef(raw: dict) -> dict:
    out = {}
    for key, val in raw.items():
        if key == "foot":
            out["foot"] = np.asarray(val["pos"] if isinstance(val, dict)
                                     else val, dtype=float).reshape(3)
            continue
        pos = np.asarray(val["pos"], dtype=float).reshape(3)
        rpy = np.asarray(val.get("rpy", (0.0, 0.0, 0.0)),
                         dtype=float).reshape(3)
        out[key] = FramePose(pos=pos, rot=m3.rpy_to_mat(rpy))
    return out


def parse_command(entry: dict) -> UserCommand:
    """Build a UserCommand from one script entry (sans timestamp)."""
    known = {"t", "mode", "side", "twist", "torso_pose", "height",
             "roll", "pitch", "eef", "gripper"}
    unknown = set(entry) - known
    if unknown:
        raise ValueError(f"unknown script fields: {sorted(unknown)}")
    mode = entry.get("mode")
    return UserCommand(
        mode_request=OperationMode(mode) if mode is not None else None,
        side=entry.get("side", "right"),
        torso_twist=(np.asarray(entry["twist"], dtype=float).reshape(3)
                     if "twist" in entry else None),
        torso_pose_target=(np.asarray(entry["torso_pose"],
                                      dtype=float).reshape(6)
                           if "torso_pose" in entry else None),
        height=float(entry.get("height", STAND_HEIGHT)),
        roll=float(entry.get("roll", 0.0)),
        pitch=float(entry.get("pitch", 0.0)),
        eef_targets=_parse_eef(entry.get("eef", {})),
        gripper_opening=np.asarray(entry.get("gripper", (0.0, 0.0)),
                                   dtype=float).reshape(2),
    )


def load_script(path) -> list[tuple[float, UserCommand]]:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError("script must be a non-empty list of entries")
    out = []
    last_t = -np.inf
    for entry in raw:
        t = float(entry["t"])
        if t < 0 or t <= last_t:
            raise ValueError("script timestamps must be non-negative "
                             "and strictly increasing")
        last_t = t
        out.append((t, parse_command(entry)))
    return out


class ScriptSource:
    """Replays a loaded script; command(t) is the latest entry at or
    before t, or a neutral hold before the first timestamp."""

    def __init__(self, entries: list[tuple[float, UserCommand]]):
        if not entries:
            raise ValueError("empty script")
        self.entries = entries
        self._idx = -1
        self._consumed = -1

    @property
    def duration(self) -> float:
        return self.entries[-1][0]

    def command(self, t: float) -> UserCommand:
        while (self._idx + 1 < len(self.entries)
               and self.entries[self._idx + 1][0] <= t):
            self._idx += 1
        if self._idx < 0:
            return UserCommand()
        cmd = self.entries[self._idx][1]
        # a mode request is consumed once; repeating it every tick would
        # spam the FSM with duplicate requests during transitions
        if self._consumed == self._idx:
            return replace(cmd, mode_request=None)
        self._consumed = self._idx
        return cmd
